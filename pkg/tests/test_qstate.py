import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clobs.errors import InvalidArgument
from clobs.qstate import (DensityEvolution, ObservableCoeffs, TransitionBasis, as_hermitian,
                          backward_evolve, basis_to_dense, collapse_probabilities, commutator,
                          dense_to_basis, expect, make_P, make_X, matrix_power,
                          project_state, psi_at, rho_at, rho_time_avg)
from clobs.spectrum import Spectrum, make_harmonic, make_two_ladders

spectra = st.lists(st.floats(0, 10, allow_nan=False), min_size=2, max_size=7).map(
    lambda w: Spectrum(sorted(w)))


def _expm_diag(s, t):
    return np.diag(np.exp(-1j * s.omega * t))


def test_basis_layout():
    b = TransitionBasis(3)
    assert len(b) == 6
    assert b.labels[:3] == [("x", 0, 1), ("x", 0, 2), ("x", 1, 2)]
    assert b.labels[3:] == [("p", 0, 1), ("p", 0, 2), ("p", 1, 2)]
    stack = b.dense_stack()
    np.testing.assert_array_equal(stack[0], [[0, 1, 0], [1, 0, 0], [0, 0, 0]])
    np.testing.assert_array_equal(stack[3], [[0, -1j, 0], [1j, 0, 0], [0, 0, 0]])
    assert b.index("p", 2, 1) == 5
    with pytest.raises(InvalidArgument):
        b.index("y", 0, 1)


def test_basis_is_hermitian_and_trace_orthogonal():
    stack = TransitionBasis(5).dense_stack()
    np.testing.assert_array_equal(stack, stack.conj().transpose(0, 2, 1))
    gram = np.einsum("iab,jba->ij", stack, stack).real
    np.testing.assert_allclose(gram, 2 * np.eye(len(stack)))


@settings(max_examples=40, deadline=None)
@given(s=spectra, t=st.floats(-20, 20))
def test_rho_matches_unitary_evolution(s, t):
    ev = DensityEvolution(s)
    psi = _expm_diag(s, t) @ ev.initial_state()
    np.testing.assert_allclose(rho_at(ev, t), np.outer(psi, psi.conj()), atol=1e-13)
    rho = rho_at(ev, t)
    assert np.trace(rho).real == pytest.approx(1.0)
    np.testing.assert_allclose(rho @ rho, rho, atol=1e-12)


def test_vectorized_psi():
    ev = DensityEvolution(make_harmonic(4))
    ts = np.array([0.0, 0.3, 1.7])
    np.testing.assert_allclose(psi_at(ev, ts)[2], psi_at(ev, 1.7))


def test_rho_time_avg_against_riemann_sum():
    s = Spectrum([0.0, 0.7, 2.1])
    ev = DensityEvolution(s)
    ts = np.linspace(1.0, 6.0, 200_001)
    brute = np.trapezoid(rho_at(ev, ts), ts, axis=0) / 5.0
    np.testing.assert_allclose(rho_time_avg(ev, 5.0, t0=1.0), brute, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 6), seed=st.integers(0, 1000))
def test_coefficient_round_trip(n, seed):
    b = TransitionBasis(n)
    a = ObservableCoeffs(b, np.random.default_rng(seed).normal(size=len(b)))
    A = basis_to_dense(b, a)
    np.testing.assert_allclose(A, A.conj().T)
    np.testing.assert_allclose(dense_to_basis(b, A).coeffs, a.coeffs)


def test_dense_to_basis_rejects_diagonal():
    with pytest.raises(InvalidArgument):
        dense_to_basis(TransitionBasis(2), np.eye(2))


def test_coeffs_are_read_only():
    a = ObservableCoeffs(TransitionBasis(2), [1.0, 0.0])
    with pytest.raises(ValueError):
        a.coeffs[0] = 2.0


def test_as_hermitian_rejects():
    with pytest.raises(InvalidArgument):
        as_hermitian([[0, 1], [0, 0]])
    with pytest.raises(InvalidArgument):
        as_hermitian(np.eye(3), dim=2)


def test_X_and_P_on_harmonic():
    s = make_harmonic(4)
    X = basis_to_dense(s, make_X(s))
    P = basis_to_dense(s, make_P(s))
    np.testing.assert_array_equal(X, np.diag([1, 1, 1], 1) + np.diag([1, 1, 1], -1))
    np.testing.assert_array_equal(P, -1j * np.diag([1, 1, 1], 1) + 1j * np.diag([1, 1, 1], -1))


def test_X_on_two_ladders_is_direct_sum():
    s = make_two_ladders(3, 1.0, 1.5)
    X = basis_to_dense(s, make_X(s))
    for label in ("H1", "H2"):
        idx = s.levels_with_label(label)
        block = X[np.ix_(idx, idx)]
        np.testing.assert_array_equal(block, np.diag([1, 1], 1) + np.diag([1, 1], -1))
    assert np.abs(X).sum() == 8


def test_commutator_corners_small():
    s = make_harmonic(5)
    C = commutator(basis_to_dense(s, make_X(s)), basis_to_dense(s, make_P(s)))
    np.testing.assert_allclose(np.diag(C), [2j, 0, 0, 0, -2j])
    np.testing.assert_allclose(C - np.diag(np.diag(C)), 0)


@settings(max_examples=30, deadline=None)
@given(s=spectra, t=st.floats(-10, 10), seed=st.integers(0, 1000))
def test_expect_matches_dense_trace(s, t, seed):
    b = TransitionBasis(s.n_levels)
    A = basis_to_dense(b, ObservableCoeffs(b, np.random.default_rng(seed).normal(size=len(b))))
    ev = DensityEvolution(s)
    assert expect(ev, A, t) == pytest.approx(np.trace(A @ rho_at(ev, t)).real, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(s=spectra, t=st.floats(-10, 10), shift=st.floats(-10, 10))
def test_backward_evolution_shifts_time(s, t, shift):
    ev = DensityEvolution(s)
    b = TransitionBasis(s.n_levels)
    A = basis_to_dense(b, ObservableCoeffs(b, np.arange(len(b), dtype=float)))
    U = _expm_diag(s, shift)
    np.testing.assert_allclose(backward_evolve(s, A, shift), U @ A @ U.conj().T, atol=1e-12)
    assert expect(ev, backward_evolve(s, A, shift), t + shift) == pytest.approx(
        expect(ev, A, t), abs=1e-10)


def test_matrix_power():
    A = np.array([[0, 1], [1, 0]], dtype=complex)
    np.testing.assert_array_equal(matrix_power(A, 2), np.eye(2))
    with pytest.raises(InvalidArgument):
        matrix_power(A, -1)


def test_projection_and_collapse():
    s = make_two_ladders(3, 1.0, 1.5)
    ev = project_state(DensityEvolution(s), s.levels_with_label("H1"))
    assert ev.n_levels == 3
    np.testing.assert_allclose(np.linalg.norm(ev.initial_state()), 1.0)
    assert collapse_probabilities(s, [[0, 2, 4], [1, 3, 5]]) == [0.5, 0.5]
    assert collapse_probabilities(s, [[0], [1, 2, 3, 4, 5]]) == pytest.approx([1 / 6, 5 / 6])
    with pytest.raises(InvalidArgument):
        collapse_probabilities(s, [[0, 1], [1, 2, 3, 4, 5]])
    with pytest.raises(InvalidArgument):
        collapse_probabilities(s, [[0, 1]])
