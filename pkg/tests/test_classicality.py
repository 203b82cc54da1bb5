import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clobs import classicality as cl
from clobs.errors import InvalidArgument, UndefinedValue, ZeroMeanViolation
from clobs.qstate import (DensityEvolution, ObservableCoeffs, TransitionBasis, backward_evolve,
                          basis_to_dense, make_P, make_X, project_state, rho_at)
from clobs.spectrum import Spectrum, make_harmonic
from clobs.verify import oracle_averaged

spectra = st.lists(st.floats(0, 5, allow_nan=False), min_size=2, max_size=6,
                   unique=True).map(lambda w: Spectrum(sorted(w)))


def _random_op(n, seed):
    b = TransitionBasis(n)
    return basis_to_dense(b, ObservableCoeffs(b, np.random.default_rng(seed).normal(size=len(b))))


def test_instantaneous_matches_dense_formula():
    s = make_harmonic(5)
    ev = DensityEvolution(s)
    A = _random_op(5, 1)
    for t in (0.0, 0.4, 3.3):
        rho = rho_at(ev, t)
        expected = np.trace(A @ rho).real ** 2 / np.trace(A @ A @ rho).real
        assert cl.instantaneous(ev, A, t) == pytest.approx(expected, rel=1e-12)


def test_instantaneous_undefined_for_zero_operator():
    ev = DensityEvolution(make_harmonic(3))
    with pytest.raises(UndefinedValue):
        cl.instantaneous(ev, np.zeros((3, 3)), 0.0)
    with pytest.raises(UndefinedValue):
        cl.averaged(ev, np.zeros((3, 3)), 1.0)


def test_qubit_sigma_x_over_whole_periods():
    # <sigma_x>(t) = cos t and sigma_x^2 = 1, so the average is mean(cos^2) = 1/2
    s = make_harmonic(2)
    ev = DensityEvolution(s)
    X = basis_to_dense(s, make_X(s))
    assert cl.averaged(ev, X, 2 * math.pi * 7) == pytest.approx(0.5, abs=1e-14)
    assert cl.averaged(ev, X, 2 * math.pi * 7, mode="quadrature") == pytest.approx(0.5, abs=1e-9)


def test_identity_is_fully_classical():
    ev = DensityEvolution(make_harmonic(4))
    assert cl.averaged(ev, np.eye(4), 3.7) == pytest.approx(1.0)


@settings(max_examples=20, deadline=None)
@given(s=spectra, seed=st.integers(0, 1000), T=st.floats(0.5, 40), t0=st.floats(-5, 5))
def test_closed_form_matches_adaptive_quadrature(s, seed, T, t0):
    ev = DensityEvolution(s)
    A = _random_op(s.n_levels, seed)
    a = cl.averaged(ev, A, T, t0=t0)
    b = cl.averaged(ev, A, T, mode="quadrature", t0=t0)
    assert a == pytest.approx(b, rel=1e-6)
    assert -1e-12 <= a <= 1 + 1e-12


def test_closed_form_matches_oracle():
    s = Spectrum([0.0, 0.37, 1.1, 1.9, 2.05])
    ev = DensityEvolution(s)
    A = _random_op(5, 3)
    assert cl.averaged(ev, A, 25.0) == pytest.approx(oracle_averaged(ev, A, 25.0), rel=1e-7)


def test_unknown_mode():
    with pytest.raises(InvalidArgument):
        cl.averaged(DensityEvolution(make_harmonic(2)), np.eye(2), 1.0, mode="simpson")


@settings(max_examples=20, deadline=None)
@given(s=spectra, seed=st.integers(0, 1000), shift=st.floats(-50, 50))
def test_window_covariance(s, seed, shift):
    ev = DensityEvolution(s)
    A = _random_op(s.n_levels, seed)
    base = cl.averaged(ev, A, 13.0)
    moved = cl.averaged(ev, backward_evolve(s, A, shift), 13.0, t0=shift)
    assert moved == pytest.approx(base, rel=1e-9)


def test_snr_from_classicality():
    assert cl.snr_from_classicality(0.9375) == pytest.approx(4.0)
    assert cl.snr_from_classicality(1.0) == math.inf
    with pytest.raises(InvalidArgument):
        cl.snr_from_classicality(-0.1)


def test_snr_direct_identity(harmonic16):
    # For zero-mean operators signal/noise = C / (1 - C) by definition
    s, ev, T, _, res = harmonic16
    for k in res.dynamic_indices[:5]:
        c = res.eigenvalues[k]
        assert cl.snr_direct(ev, res.operator(k), T) == pytest.approx(
            math.sqrt(c / (1 - c)), rel=1e-9)


def test_snr_direct_rejects_nonzero_mean():
    s = make_harmonic(3)
    ev = DensityEvolution(s)
    X = basis_to_dense(s, make_X(s))
    with pytest.raises(ZeroMeanViolation):
        cl.snr_direct(ev, X, 1.0)


def test_harmonic_x_trace_oscillates_below_initial_value():
    s = make_harmonic(8)
    ev = DensityEvolution(s)
    table = cl.trace_series(ev, {"X": basis_to_dense(s, make_X(s))}, 2 * math.pi, math.pi / 100)
    c = table.column("C_X")
    assert c.max() <= c[0] + 1e-12
    assert c[50] == pytest.approx(0.0, abs=1e-20)  # t = pi / 2
    assert c[100] == pytest.approx(c[0])


def test_projected_pooled_classicality_is_constant(cat):
    ev = project_state(DensityEvolution(cat), cat.levels_with_label("H1"))
    sub = ev.spectrum
    ts = np.linspace(0, 100, 501)
    c = cl.pooled_classicality(ev, basis_to_dense(sub, make_X(sub)),
                               basis_to_dense(sub, make_P(sub)), ts)
    np.testing.assert_allclose(c, 7 / 8, atol=1e-12)


def test_full_cat_pooled_classicality_revives(cat):
    ev = DensityEvolution(cat)
    obs = {"X": basis_to_dense(cat, make_X(cat)), "P": basis_to_dense(cat, make_P(cat))}
    table = cl.trace_series(ev, obs, 300, 0.05, pairs=[("X", "P")])
    assert table.columns == ["t", "C_X", "C_P", "C_sym", "C_mean"]
    assert cl.revival_time(table) == pytest.approx(2 * math.pi / 0.05, abs=0.1)


def test_trace_csv_round_trip(tmp_path):
    s = make_harmonic(4)
    ev = DensityEvolution(s)
    obs = {"X": basis_to_dense(s, make_X(s)), "P": basis_to_dense(s, make_P(s))}
    table = cl.trace_series(ev, obs, 1.0, 0.1, pairs=[("X", "P"), ("P", "X")])
    assert "C_sym_XP" in table.columns and "C_mean_PX" in table.columns
    path = tmp_path / "t.csv"
    table.to_csv(path)
    back = cl.TraceTable.from_csv(path)
    assert back.columns == table.columns
    np.testing.assert_array_equal(back.data, table.data)
    rows = path.read_text().strip().splitlines()
    assert {len(r.split(",")) for r in rows} == {len(table.columns)}


def test_time_grid():
    np.testing.assert_allclose(cl.time_grid(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(InvalidArgument):
        cl.time_grid(1.0, 0.0)


def test_revival_time_synthetic():
    t = np.linspace(0, 20, 2001)
    y = 0.5 + 0.5 * np.cos(t)
    table = cl.TraceTable(["t", "C_sym"], np.column_stack([t, y]))
    assert cl.revival_time(table) == pytest.approx(2 * math.pi, abs=0.01)
    flat = cl.TraceTable(["t", "C_sym"], np.column_stack([t, np.ones_like(t)]))
    assert cl.revival_time(flat) is None
    decay = cl.TraceTable(["t", "C_sym"], np.column_stack([t, np.exp(-t)]))
    assert cl.revival_time(decay) is None
