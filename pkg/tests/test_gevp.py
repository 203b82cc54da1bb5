import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clobs import classicality, gevp
from clobs.errors import IllConditionedBasis, InvalidArgument
from clobs.qstate import DensityEvolution, TransitionBasis, rho_time_avg
from clobs.spectrum import Spectrum, large_window, make_degenerate, make_harmonic
from clobs.verify import oracle_R

spectra = st.lists(st.floats(0, 4, allow_nan=False), min_size=2, max_size=6,
                   unique=True).map(lambda w: Spectrum(sorted(w)))


def test_M_matches_dense_traces():
    s = Spectrum([0.0, 0.5, 1.3, 2.2])
    ev = DensityEvolution(s)
    basis = TransitionBasis(4)
    B = basis.dense_stack()
    rbar = rho_time_avg(ev, 7.0)
    dense = np.einsum("iab,jbc,ca->ij", B, B, rbar).real
    np.testing.assert_allclose(gevp.build_M(ev, 7.0), dense, atol=1e-14)


def test_R_matches_oracle_and_quadrature():
    s = Spectrum([0.0, 0.5, 1.3, 2.2])
    ev = DensityEvolution(s)
    R = gevp.build_R(ev, 30.0)
    np.testing.assert_allclose(R, oracle_R(ev, 30.0), atol=1e-9)
    np.testing.assert_allclose(R, gevp.build_R(ev, 30.0, mode="quadrature"), atol=1e-10)


def test_build_R_validates():
    ev = DensityEvolution(make_harmonic(3))
    with pytest.raises(InvalidArgument):
        gevp.build_R(ev, -1.0)
    with pytest.raises(InvalidArgument):
        gevp.build_R(ev, 1.0, mode="fast")


@settings(max_examples=25, deadline=None)
@given(s=spectra, T=st.floats(0.5, 100))
def test_solution_properties(s, T):
    ev = DensityEvolution(s)
    gm = gevp.build(ev, T)
    res = gevp.solve(gm)
    assert np.all(np.diff(res.eigenvalues) <= 1e-12)
    assert res.raw_eigenvalues.min() >= -1e-9 and res.raw_eigenvalues.max() <= 1 + 1e-9
    V = res.eigenvectors
    np.testing.assert_allclose(V.T @ gm.M @ V, np.eye(V.shape[1]), atol=1e-8)
    scale = np.linalg.norm(gm.R, 2) + np.linalg.norm(gm.M, 2)
    assert res.residual_max <= 1e-10 * scale
    # no direction beats the leading eigenvalue
    a = np.random.default_rng(0).normal(size=(len(gm.basis), 20))
    rayleigh = np.einsum("ik,ij,jk->k", a, gm.R, a) / np.einsum("ik,ij,jk->k", a, gm.M, a)
    assert rayleigh.max() <= res.raw_eigenvalues[0] + 1e-9


def test_eigenvalue_is_averaged_classicality(harmonic16):
    s, ev, T, gm, res = harmonic16
    for k in range(4):
        assert classicality.averaged(ev, res.operator(k), T) == pytest.approx(
            res.eigenvalues[k], abs=1e-12)


def test_harmonic_leading_pairs(harmonic16):
    res = harmonic16[4]
    np.testing.assert_allclose(res.eigenvalues[:6], [15 / 16] * 2 + [14 / 16] * 2 + [13 / 16] * 2,
                               atol=1e-9)
    assert not res.static[:6].any()
    assert gevp.check_orthogonality(res, harmonic16[1]) <= 1e-10 * np.linalg.norm(harmonic16[3].M, 2)


def test_jacobi_agrees_with_lapack(harmonic16):
    gm = harmonic16[3]
    a = gevp.solve(gm)
    b = gevp.solve(gm, method="jacobi")
    np.testing.assert_allclose(a.eigenvalues, b.eigenvalues, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 12), seed=st.integers(0, 10_000))
def test_jacobi_eigh(n, seed):
    A = np.random.default_rng(seed).normal(size=(n, n))
    A = A + A.T
    vals, vecs = gevp.jacobi_eigh(A)
    np.testing.assert_allclose(vals, np.linalg.eigvalsh(A), atol=1e-10)
    np.testing.assert_allclose(vecs.T @ vecs, np.eye(n), atol=1e-10)
    np.testing.assert_allclose(A @ vecs, vecs * vals, atol=1e-9)


def test_degenerate_spectrum_deflates():
    s = make_degenerate(8, 2)
    ev = DensityEvolution(s)
    res = gevp.solve(gevp.build(ev, large_window(s)))
    assert res.null_directions.shape[0] == 56
    assert res.static[0] and res.eigenvalues[0] == pytest.approx(1.0)
    np.testing.assert_allclose(res.leading_dynamic(2), [0.875, 0.875], atol=1e-9)


def test_null_overlap_raises():
    with pytest.raises(IllConditionedBasis) as info:
        gevp.generalized_eigh(np.eye(2), np.zeros((2, 2)))
    assert info.value.directions.shape == (2, 2)


def test_unknown_method(harmonic16):
    with pytest.raises(InvalidArgument):
        gevp.solve(harmonic16[3], method="qr")


def test_to_dict_is_json(harmonic16):
    d = harmonic16[4].to_dict(top_k=3)
    text = json.dumps(d)
    back = json.loads(text)
    assert len(back["eigenvectors"]) == 3 and back["eigenvalues"][0] == pytest.approx(0.9375)
    assert back["eigenvectors"][0]["basis"][0] == ["x", 0, 1]
