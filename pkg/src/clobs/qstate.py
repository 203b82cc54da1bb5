"""Equal-weight state dynamics, the transition operator basis and dense algebra.

The initial state has equal real overlaps ``1/sqrt(N)`` with every level,
so the density matrix evolves in closed form as

    rho_kl(t) = exp(-i t (w_k - w_l)) / N.

Dense operators are plain complex ``(N, N)`` numpy arrays.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument
from .spectrum import Spectrum

HERMITIAN_ATOL = 1e-12


def as_hermitian(A, dim: int | None = None, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    """Validate and return ``A`` as a complex Hermitian matrix."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {A.shape}")
    if dim is not None and A.shape[0] != dim:
        raise InvalidArgument(f"operator dimension {A.shape[0]} does not match {dim} levels")
    scale = max(1.0, float(np.abs(A).max(initial=0.0)))
    if not np.allclose(A, A.conj().T, rtol=0, atol=atol * scale):
        raise InvalidArgument("operator is not Hermitian")
    return A


def _check_square(A, B):
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgument(f"dimension mismatch: {A.shape} vs {B.shape}")
    return A, B


class TransitionBasis:
    """Hermitian basis ``x_{m,n}``, ``p_{m,n}`` over the level pairs ``m < n``.

    ``x_{m,n} = |m><n| + |n><m|`` and ``p_{m,n} = -i(|m><n| - |n><m|)``.
    All x-type operators come first, then all p-type, each block in
    lexicographic ``(m, n)`` order.
    """

    def __init__(self, n_levels: int):
        if n_levels < 2:
            raise InvalidArgument("the transition basis needs at least 2 levels")
        self.n_levels = n_levels
        pairs = list(itertools.combinations(range(n_levels), 2))
        self.pairs = pairs
        self.n_pairs = len(pairs)
        self.labels = [("x", m, n) for m, n in pairs] + [("p", m, n) for m, n in pairs]
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        pm = np.array(pairs, dtype=int)
        self.m = np.concatenate([pm[:, 0], pm[:, 0]])
        self.n = np.concatenate([pm[:, 1], pm[:, 1]])
        self.is_p = np.arange(2 * len(pairs)) >= len(pairs)

    @classmethod
    def for_spectrum(cls, s: Spectrum) -> "TransitionBasis":
        return cls(s.n_levels)

    def __len__(self):
        return len(self.labels)

    def __eq__(self, other):
        return isinstance(other, TransitionBasis) and other.n_levels == self.n_levels

    def __hash__(self):
        return hash(("TransitionBasis", self.n_levels))

    def index(self, kind: str, m: int, n: int) -> int:
        if m > n:
            m, n = n, m
        try:
            return self._index[(kind, m, n)]
        except KeyError:
            raise InvalidArgument(f"no basis operator {kind}_{{{m},{n}}}") from None

    def dyads(self):
        """Each operator as two weighted dyads ``c |r><s|``.

        Returns ``(rows, cols, weights)`` of shape ``(D, 2)``: operator ``i``
        equals ``sum_e weights[i, e] |rows[i, e]><cols[i, e]|``.
        """
        rows = np.stack([self.m, self.n], axis=1)
        cols = np.stack([self.n, self.m], axis=1)
        w = np.ones((len(self), 2), dtype=complex)
        w[self.is_p, 0] = -1j
        w[self.is_p, 1] = 1j
        return rows, cols, w

    def dense_stack(self) -> np.ndarray:
        """All basis operators as a ``(D, N, N)`` array."""
        N = self.n_levels
        out = np.zeros((len(self), N, N), dtype=complex)
        rows, cols, w = self.dyads()
        idx = np.arange(len(self))
        for e in range(2):
            out[idx, rows[:, e], cols[:, e]] = w[:, e]
        return out


@dataclass(frozen=True)
class ObservableCoeffs:
    """Real coefficients of ``A = sum_i a_i B_i`` over a :class:`TransitionBasis`."""

    basis: TransitionBasis
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).copy()
        if c.shape != (len(self.basis),):
            raise InvalidArgument(
                f"expected {len(self.basis)} coefficients, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise InvalidArgument("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def nonzero_labels(self):
        return [self.basis.labels[i] for i in np.flatnonzero(self.coeffs)]


@dataclass(frozen=True)
class DensityEvolution:
    """Closed evolution of the equal-weight pure state under ``spectrum``."""

    spectrum: Spectrum

    @property
    def n_levels(self) -> int:
        return self.spectrum.n_levels

    @property
    def omega(self) -> np.ndarray:
        return self.spectrum.omega

    def initial_state(self) -> np.ndarray:
        N = self.n_levels
        return np.full(N, 1 / np.sqrt(N), dtype=complex)


def psi_at(ev: DensityEvolution, t) -> np.ndarray:
    """State vector(s) at time(s) ``t``; shape ``(N,)`` or ``(len(t), N)``."""
    t = np.asarray(t, dtype=float)
    phase = np.exp(-1j * np.multiply.outer(t, ev.omega))
    return phase / np.sqrt(ev.n_levels)


def rho_at(ev: DensityEvolution, t) -> np.ndarray:
    """Density matrix at time ``t`` (a stack of matrices for array ``t``)."""
    psi = psi_at(ev, t)
    return psi[..., :, None] * psi[..., None, :].conj()


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def window_average_phase(nu, T: float, t0: float = 0.0):
    """``(1/T) int_{t0}^{t0+T} exp(i nu t) dt`` for array ``nu``."""
    nu = np.asarray(nu, dtype=float)
    return np.exp(1j * nu * (t0 + T / 2)) * _sinc(nu * T / 2)


def rho_time_avg(ev: DensityEvolution, T: float, t0: float = 0.0) -> np.ndarray:
    """Density matrix averaged over the window ``[t0, t0 + T]``."""
    if not T > 0:
        raise InvalidArgument("window length must be positive")
    w = ev.omega
    delta = w[:, None] - w[None, :]
    out = window_average_phase(-delta, T, t0) / ev.n_levels
    np.fill_diagonal(out, 1 / ev.n_levels)
    return out


def basis_to_dense(s: Spectrum | TransitionBasis, a: ObservableCoeffs) -> np.ndarray:
    basis = s if isinstance(s, TransitionBasis) else TransitionBasis.for_spectrum(s)
    if a.basis != basis:
        raise InvalidArgument("coefficient basis does not match the spectrum")
    N = basis.n_levels
    out = np.zeros((N, N), dtype=complex)
    rows, cols, w = basis.dyads()
    for e in range(2):
        np.add.at(out, (rows[:, e], cols[:, e]), w[:, e] * a.coeffs)
    return out


def dense_to_basis(basis: TransitionBasis, A, atol: float = 1e-10) -> ObservableCoeffs:
    """Coefficients of the off-diagonal part of Hermitian ``A``.

    Raises when ``A`` has a diagonal component, which the basis cannot hold.
    """
    A = as_hermitian(A, basis.n_levels)
    if np.abs(np.diag(A)).max() > atol * max(1.0, np.abs(A).max()):
        raise InvalidArgument("operator has diagonal entries outside the transition basis")
    upper = A[basis.m, basis.n]
    coeffs = np.where(basis.is_p, -upper.imag, upper.real)
    return ObservableCoeffs(basis, coeffs)


def _ladder_neighbours(s: Spectrum) -> list[tuple[int, int]]:
    if s.n_levels < 2:
        raise InvalidArgument("ladder operators need at least 2 levels")
    if s.labels is None:
        return [(k, k + 1) for k in range(s.n_levels - 1)]
    pairs = []
    for label in dict.fromkeys(s.labels):
        idx = s.levels_with_label(label)
        pairs += list(zip(idx, idx[1:]))
    return sorted(pairs)


def _ladder_coeffs(s: Spectrum, kind: str) -> ObservableCoeffs:
    basis = TransitionBasis.for_spectrum(s)
    c = np.zeros(len(basis))
    for m, n in _ladder_neighbours(s):
        c[basis.index(kind, m, n)] = 1.0
    return ObservableCoeffs(basis, c)


def make_X(s: Spectrum) -> ObservableCoeffs:
    """Unit coefficients on nearest-neighbour x-transitions.

    Neighbours follow index order, or the order within each label group
    for labelled spectra, so two ladders give ``X1 (+) X2``.
    """
    return _ladder_coeffs(s, "x")


def make_P(s: Spectrum) -> ObservableCoeffs:
    return _ladder_coeffs(s, "p")


def expect(ev: DensityEvolution, A, t):
    """``Tr[A rho(t)]``; vectorized over array ``t``."""
    A = as_hermitian(A, ev.n_levels)
    psi = psi_at(ev, t)
    val = np.einsum("...i,ij,...j->...", psi.conj(), A, psi)
    return val.real if np.ndim(val) else float(val.real)


def commutator(A, B) -> np.ndarray:
    A, B = _check_square(A, B)
    return A @ B - B @ A


def matrix_power(A, n: int) -> np.ndarray:
    if n < 0:
        raise InvalidArgument("power must be non-negative")
    return np.linalg.matrix_power(np.asarray(A, dtype=complex), n)


def backward_evolve(s: Spectrum, A, t: float) -> np.ndarray:
    """Heisenberg backward evolution ``exp(-iHt) A exp(iHt)``."""
    A = as_hermitian(A, s.n_levels)
    w = s.omega
    return np.exp(-1j * (w[:, None] - w[None, :]) * t) * A


def project_state(ev: DensityEvolution, keep: Iterable[int]) -> DensityEvolution:
    """Renormalized projection onto the levels ``keep``."""
    keep = list(keep)
    if not keep:
        raise InvalidArgument("projection needs a non-empty level set")
    return DensityEvolution(ev.spectrum.subset(keep))


def collapse_probabilities(s: Spectrum, partition: Sequence[Iterable[int]]) -> list[float]:
    """Collapse probability per part, proportional to the part's dimension."""
    parts = [set(int(k) for k in p) for p in partition]
    seen = set()
    for p in parts:
        if not p or p & seen:
            raise InvalidArgument("partition parts must be non-empty and disjoint")
        seen |= p
    if seen != set(range(s.n_levels)):
        raise InvalidArgument("partition does not cover every level")
    return [len(p) / s.n_levels for p in parts]
