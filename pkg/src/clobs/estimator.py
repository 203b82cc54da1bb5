"""scikit-learn style facade over the generalized eigenproblem.

``fit`` takes a spectrum and learns the classical eigen-operators;
``transform`` maps observables, given as coefficient rows over the
transition basis, onto those eigen-operators.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import gevp, ladders
from .errors import InvalidArgument
from .qstate import DensityEvolution
from .spectrum import Spectrum, large_window


class ClassicalObservableFinder(TransformerMixin, BaseEstimator):
    """Maximally classical observables of the equal-weight state.

    Parameters
    ----------
    T : float, optional
        Window length. Defaults to ``periods`` periods of the slowest
        level spacing.
    mode : {"closed-form", "quadrature"}
        How the window averages are evaluated.
    n_components : int, optional
        Number of eigen-operators kept, by descending classicality.
    method : {"lapack", "jacobi"}
        Eigensolver for the reduced standard problem.
    periods : float
        Periods used for the default window.
    """

    def __init__(self, T=None, mode="closed-form", n_components=None, method="lapack",
                 periods=1e4):
        self.T = T
        self.mode = mode
        self.n_components = n_components
        self.method = method
        self.periods = periods

    def fit(self, X, y=None):
        """Solve for the eigen-operators of a spectrum.

        ``X`` is a :class:`Spectrum` or a 1-D array of sorted level frequencies.
        """
        if isinstance(X, Spectrum):
            spectrum = X
        else:
            omegas = check_array(X, ensure_2d=False, dtype=float)
            if omegas.ndim != 1:
                raise InvalidArgument("expected a 1-D array of level frequencies")
            spectrum = Spectrum(tuple(omegas.tolist()))
        if spectrum.n_levels < 2:
            raise InvalidArgument("need at least 2 levels")
        T = large_window(spectrum, self.periods) if self.T is None else float(self.T)

        ev = DensityEvolution(spectrum)
        gm = gevp.build(ev, T, self.mode)
        result = gevp.solve(gm, self.method)
        k = len(result) if self.n_components is None else int(self.n_components)
        if not 1 <= k <= len(result):
            raise InvalidArgument(f"n_components must lie in [1, {len(result)}]")

        self.spectrum_ = spectrum
        self.T_ = T
        self.gevp_ = gm
        self.result_ = result
        self.basis_ = gm.basis
        self.n_features_in_ = len(gm.basis)
        self.classicalities_ = result.eigenvalues[:k]
        self.components_ = result.eigenvectors[:, :k].T
        self.static_mask_ = result.static[:k]
        self.residuals_ = result.residuals[:k]
        self.blocks_ = ladders.predict_classicality(
            spectrum, ladders.cluster_transitions(spectrum, T))
        return self

    def _validate(self, A):
        check_is_fitted(self)
        A = check_array(A, dtype=float)
        if A.shape[1] != self.n_features_in_:
            raise InvalidArgument(
                f"expected {self.n_features_in_} basis coefficients, got {A.shape[1]}")
        return A

    def transform(self, X):
        """Coordinates of observables along the eigen-operators (M inner products)."""
        A = self._validate(X)
        return A @ self.gevp_.M @ self.components_.T

    def inverse_transform(self, X):
        Z = check_array(X, dtype=float)
        check_is_fitted(self)
        return Z @ self.components_

    def score_samples(self, X):
        """Window-averaged classicality of each observable row, ``a R a / a M a``."""
        A = self._validate(X)
        num = np.einsum("ki,ij,kj->k", A, self.gevp_.R, A)
        den = np.einsum("ki,ij,kj->k", A, self.gevp_.M, A)
        return num / den
