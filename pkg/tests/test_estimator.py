import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from clobs import gevp
from clobs.errors import InvalidArgument
from clobs.estimator import ClassicalObservableFinder
from clobs.qstate import DensityEvolution
from clobs.spectrum import make_harmonic


@pytest.fixture(scope="module")
def fitted():
    return ClassicalObservableFinder(n_components=4).fit(make_harmonic(6))


def test_params_and_clone():
    est = ClassicalObservableFinder(T=5.0, method="jacobi")
    assert est.get_params()["T"] == 5.0
    twin = clone(est).set_params(n_components=3)
    assert twin.n_components == 3 and twin.method == "jacobi"


def test_fit_matches_solver(fitted):
    s = make_harmonic(6)
    res = gevp.solve(gevp.build(DensityEvolution(s), fitted.T_))
    np.testing.assert_allclose(fitted.classicalities_, res.eigenvalues[:4])
    assert fitted.components_.shape == (4, 30)
    assert fitted.static_mask_.shape == (4,) and len(fitted.blocks_) == 5


def test_fit_from_array():
    est = ClassicalObservableFinder(T=40.0).fit(np.array([0.0, 1.0, 2.5]))
    assert est.spectrum_.omegas == (0.0, 1.0, 2.5) and est.n_features_in_ == 6


def test_transform_is_m_orthonormal(fitted):
    np.testing.assert_allclose(fitted.transform(fitted.components_), np.eye(4), atol=1e-9)


def test_inverse_transform_recovers_components(fitted):
    Z = fitted.transform(fitted.components_[:2])
    np.testing.assert_allclose(fitted.inverse_transform(Z), fitted.components_[:2], atol=1e-9)


def test_score_samples_are_classicalities(fitted):
    np.testing.assert_allclose(fitted.score_samples(fitted.components_),
                               fitted.classicalities_, atol=1e-10)


def test_validation(fitted):
    with pytest.raises(NotFittedError):
        ClassicalObservableFinder().transform(np.zeros((1, 30)))
    with pytest.raises(InvalidArgument):
        fitted.transform(np.zeros((1, 7)))
    with pytest.raises(InvalidArgument):
        ClassicalObservableFinder(n_components=0).fit(make_harmonic(3))
    with pytest.raises(InvalidArgument):
        ClassicalObservableFinder().fit(np.zeros((2, 2)))
