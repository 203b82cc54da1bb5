"""Generalized eigenproblem ``R a = C M a`` for maximally classical observables.

``R`` collects window-averaged products of basis expectation values and
``M`` the symmetrized second moments in the window-averaged state. Their
generalized eigenvalues are the classicalities of the eigen-operators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg

from . import quadrature
from .errors import IllConditionedBasis, InvalidArgument
from .qstate import (DensityEvolution, ObservableCoeffs, TransitionBasis,
                     basis_to_dense, psi_at, rho_time_avg, window_average_phase)

DEFLATION_RTOL = 1e-10
PIVOT_RTOL = 1e-12
JACOBI_TOL = 1e-13
DEGENERATE_GAP = 1e-9


@dataclass(frozen=True)
class GevpMatrices:
    R: np.ndarray
    M: np.ndarray
    basis: TransitionBasis
    T: float
    t0: float = 0.0
    means: Optional[np.ndarray] = None

    def __post_init__(self):
        D = len(self.basis)
        for name in ("R", "M"):
            A = getattr(self, name)
            if A.shape != (D, D):
                raise InvalidArgument(f"{name} has shape {A.shape}, basis size is {D}")


def _basis_frequencies(ev: DensityEvolution, basis: TransitionBasis) -> np.ndarray:
    w = ev.omega
    return w[basis.n] - w[basis.m]


def build_M(ev: DensityEvolution, T: float, t0: float = 0.0,
            basis: Optional[TransitionBasis] = None) -> np.ndarray:
    """``M_ij = Re Tr[B_i B_j rhobar]`` from the dyad structure of the basis."""
    basis = basis or TransitionBasis(ev.n_levels)
    rbar = rho_time_avg(ev, T, t0)
    rows, cols, w = basis.dyads()
    D = len(basis)
    out = np.zeros((D, D), dtype=complex)
    # (c_e |r_e><s_e|)(c_f |r_f><s_f|) = c_e c_f delta(s_e, r_f) |r_e><s_f|
    for e in range(2):
        for f in range(2):
            match = cols[:, e][:, None] == rows[:, f][None, :]
            vals = rbar[cols[:, f][None, :], rows[:, e][:, None]]
            out += np.where(match, w[:, e][:, None] * w[:, f][None, :] * vals, 0)
    M = out.real
    return (M + M.T) / 2


def expectation_table(ev: DensityEvolution, basis: TransitionBasis, ts) -> np.ndarray:
    """``Tr[B_i rho(t)]`` for all basis operators; shape ``(len(ts), D)``."""
    psi = psi_at(ev, ts)
    coh = psi[:, basis.m].conj() * psi[:, basis.n]
    # Tr[x rho] = 2 Re(psi_m^* psi_n); Tr[p rho] = 2 Im(psi_m^* psi_n)
    return 2 * np.where(basis.is_p, coh.imag, coh.real)


def build_R(ev: DensityEvolution, T: float, mode: str = "closed-form",
            t0: float = 0.0, basis: Optional[TransitionBasis] = None,
            rtol: float = 1e-10) -> np.ndarray:
    """Window average of ``Tr[B_i rho] Tr[B_j rho]``.

    The closed form writes each expectation as ``(2/N) cos(d t)`` (x-type)
    or ``-(2/N) sin(d t)`` (p-type) with ``d`` the transition frequency,
    and averages the products with exact exponential integrals.
    """
    if not T > 0:
        raise InvalidArgument("window length must be positive")
    basis = basis or TransitionBasis(ev.n_levels)
    if mode == "quadrature":
        d = _basis_frequencies(ev, basis)
        max_freq = 2 * max(float(np.abs(d).max()), 1e-12)

        def accumulate(ts, weights):
            e = expectation_table(ev, basis, ts)
            return (e * weights[:, None]).T @ e

        R = quadrature.window_mean(accumulate, t0, T, max_freq, rtol=rtol)
        return (R + R.T) / 2
    if mode != "closed-form":
        raise InvalidArgument(f"unknown mode {mode!r}; use 'closed-form' or 'quadrature'")

    d = _basis_frequencies(ev, basis)
    a = d[:, None]
    b = d[None, :]
    E_minus = window_average_phase(a - b, T, t0)
    E_plus = window_average_phase(a + b, T, t0)
    E_ba = window_average_phase(b - a, T, t0)
    cos_cos = 0.5 * (E_minus.real + E_plus.real)
    sin_sin = 0.5 * (E_minus.real - E_plus.real)
    # mean of cos(a t) sin(b t)
    cos_sin = 0.5 * (E_plus.imag + E_ba.imag)
    p_i = basis.is_p[:, None]
    p_j = basis.is_p[None, :]
    R = np.where(~p_i & ~p_j, cos_cos,
                 np.where(p_i & p_j, sin_sin,
                          np.where(~p_i & p_j, -cos_sin, -cos_sin.T)))
    R = R * (2 / ev.n_levels) ** 2
    return (R + R.T) / 2


def basis_means(ev: DensityEvolution, T: float, t0: float = 0.0,
                basis: Optional[TransitionBasis] = None) -> np.ndarray:
    """Window-averaged expectation ``Tr[B_i rhobar]`` of every basis operator."""
    basis = basis or TransitionBasis(ev.n_levels)
    rbar = rho_time_avg(ev, T, t0)
    z = rbar[basis.n, basis.m]
    return 2 * np.where(basis.is_p, z.imag, z.real)


def build(ev: DensityEvolution, T: float, mode: str = "closed-form",
          t0: float = 0.0) -> GevpMatrices:
    basis = TransitionBasis(ev.n_levels)
    return GevpMatrices(build_R(ev, T, mode, t0, basis), build_M(ev, T, t0, basis),
                        basis, T, t0, basis_means(ev, T, t0, basis))


def jacobi_eigh(A: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100):
    """Cyclic Jacobi eigen-decomposition of a real symmetric matrix.

    Sweeps over all ``(p, q)`` pairs until the off-diagonal Frobenius norm
    falls below ``tol`` times the Frobenius norm of ``A``. Returns
    ascending eigenvalues and column eigenvectors.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1 / math.hypot(1.0, t)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                Vp = V[:, p].copy()
                V[:, p] = c * Vp - s * V[:, q]
                V[:, q] = s * Vp + c * V[:, q]
    else:
        raise ArithmeticError("Jacobi iteration did not converge")
    vals = np.diag(A).copy()
    order = np.argsort(vals)
    return vals[order], V[:, order]


@dataclass
class ClassicalitySpectrum:
    """Generalized eigenpairs sorted by descending classicality.

    ``eigenvectors[:, k]`` holds the M-orthonormal coefficients of the
    ``k``-th eigen-operator. ``mean_fraction[k]`` is the share of its
    classicality carried by its constant expectation value,
    ``Tr[A rhobar]^2 / Tr[A^2 rhobar]`` divided by the eigenvalue; a
    share above one half marks a static (identity-like) direction.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    raw_eigenvalues: np.ndarray
    basis: TransitionBasis
    T: float
    mean_fraction: np.ndarray
    null_directions: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def static(self) -> np.ndarray:
        return self.mean_fraction > 0.5

    @property
    def dynamic_indices(self) -> np.ndarray:
        return np.flatnonzero(~self.static)

    def leading_dynamic(self, k: int = 1) -> np.ndarray:
        return self.eigenvalues[self.dynamic_indices[:k]]

    def coeffs(self, k: int) -> ObservableCoeffs:
        return ObservableCoeffs(self.basis, self.eigenvectors[:, k])

    def operator(self, k: int) -> np.ndarray:
        return basis_to_dense(self.basis, self.coeffs(k))

    @property
    def residual_max(self) -> float:
        return float(self.residuals.max(initial=0.0))

    def to_dict(self, top_k: Optional[int] = None) -> dict:
        k = len(self) if top_k is None else min(top_k, len(self))
        labels = [list(lab) for lab in self.basis.labels]
        return {
            "T": self.T,
            "eigenvalues": self.eigenvalues[:k].tolist(),
            "static": self.static[:k].tolist(),
            "residual_max": self.residual_max,
            "deflated": int(self.null_directions.shape[0]),
            "eigenvectors": [
                {"basis": labels, "coeffs": self.eigenvectors[:, i].tolist()}
                for i in range(k)
            ],
        }


def _deflate(M: np.ndarray):
    mu, U = np.linalg.eigh(M)
    norm = max(abs(mu).max(initial=0.0), 1e-300)
    keep = mu > DEFLATION_RTOL * norm
    return U[:, keep], U[:, ~keep].T


def generalized_eigh(R: np.ndarray, M: np.ndarray, method: str = "lapack"):
    """Eigenpairs of ``R a = c M a`` after deflating the null space of ``M``.

    Returns ``(values, vectors, null)`` with values descending, vectors
    M-orthonormal in columns and ``null`` the deflated directions as rows.
    """
    Q, null = _deflate(M)
    if Q.shape[1] == 0:
        raise IllConditionedBasis("M has no non-null direction", null)
    deflated = null.shape[0] > 0
    Mr = Q.T @ M @ Q if deflated else M
    Rr = Q.T @ R @ Q if deflated else R
    Mr = (Mr + Mr.T) / 2
    diag = np.diag(Mr)
    weak = diag <= PIVOT_RTOL * diag.max()
    try:
        if weak.any():
            raise np.linalg.LinAlgError("small pivot")
        L = np.linalg.cholesky(Mr)
    except np.linalg.LinAlgError:
        directions = (Q[:, weak].T if deflated else np.eye(len(diag))[weak])
        raise IllConditionedBasis(
            "overlap matrix M is numerically singular after deflation", directions) from None
    Linv_R = linalg.solve_triangular(L, Rr, lower=True)
    C = linalg.solve_triangular(L, Linv_R.T, lower=True)
    C = (C + C.T) / 2
    if method == "lapack":
        vals, Y = np.linalg.eigh(C)
    elif method == "jacobi":
        vals, Y = jacobi_eigh(C)
    else:
        raise InvalidArgument(f"unknown method {method!r}; use 'lapack' or 'jacobi'")
    vecs = linalg.solve_triangular(L.T, Y, lower=False)
    if deflated:
        vecs = Q @ vecs
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order], null


def solve(gm: GevpMatrices, method: str = "lapack") -> ClassicalitySpectrum:
    """All generalized eigenpairs of ``R a = C M a``.

    Directions where ``M`` is numerically null are removed first and
    reported in ``null_directions``. The remaining problem is reduced to
    standard form through a Cholesky factor of ``M`` and solved with
    LAPACK (``method="lapack"``) or cyclic Jacobi rotations
    (``method="jacobi"``).
    """
    R, M = gm.R, gm.M
    raw, vecs, null = generalized_eigh(R, M, method)

    unit = vecs / np.linalg.norm(vecs, axis=0)
    resid = np.linalg.norm(R @ unit - (M @ unit) * raw, axis=0)

    if gm.means is not None:
        mean_sq = (gm.means @ vecs) ** 2 / np.einsum("ik,ij,jk->k", vecs, M, vecs)
        frac = np.where(raw > 1e-12, mean_sq / np.maximum(raw, 1e-12), 0.0)
    else:
        frac = np.zeros_like(raw)
    return ClassicalitySpectrum(
        eigenvalues=np.clip(raw, 0.0, 1.0),
        eigenvectors=vecs,
        residuals=resid,
        raw_eigenvalues=raw,
        basis=gm.basis,
        T=gm.T,
        mean_fraction=frac,
        null_directions=null,
    )


def check_orthogonality(spec: ClassicalitySpectrum, ev: DensityEvolution,
                        T: Optional[float] = None, t0: float = 0.0) -> float:
    """Largest ``|1/2 Tr[(A_m A_n + A_n A_m) rhobar]|`` over eigenpairs with distinct eigenvalues.

    Operators are rebuilt as dense matrices and traced directly, so the
    check does not reuse the assembled ``M``.
    """
    T = spec.T if T is None else T
    rbar = rho_time_avg(ev, T, t0)
    stack = spec.basis.dense_stack()
    ops = np.einsum("iab,ik->kab", stack, spec.eigenvectors)
    K = len(spec)
    left = ops.reshape(K, -1)
    right = (ops @ rbar).transpose(0, 2, 1).reshape(K, -1)
    gram = (left @ right.T).real
    gram = (gram + gram.T) / 2
    vals = spec.raw_eigenvalues
    distinct = np.abs(vals[:, None] - vals[None, :]) > DEGENERATE_GAP
    if not distinct.any():
        return 0.0
    return float(np.abs(gram[distinct]).max())
