"""Classicality functionals, signal-to-noise ratios and time traces.

The instantaneous classicality of a Hermitian operator ``A`` is

    C(A, t) = Tr[A rho(t)]^2 / Tr[A^2 rho(t)]

and the window-averaged classicality divides the time integrals of the
numerator and denominator over ``[t0, t0 + T]``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from . import quadrature
from .errors import InvalidArgument, UndefinedValue, ZeroMeanViolation
from .qstate import (DensityEvolution, as_hermitian, psi_at, rho_time_avg,
                     window_average_phase)

ZERO_MEAN_RTOL = 1e-8
QUADRATURE_RTOL = 1e-8
_TINY = 1e-15
_FREQ_CHUNK = 1024


def _moments_at(ev: DensityEvolution, A: np.ndarray, t):
    psi = psi_at(ev, t)
    Apsi = psi @ A.T
    first = np.einsum("...i,...i->...", psi.conj(), Apsi).real
    second = np.einsum("...i,...i->...", Apsi.conj(), Apsi).real
    return first, second


def instantaneous(ev: DensityEvolution, A, t):
    """Classicality at time ``t`` (vectorized over array ``t``)."""
    A = as_hermitian(A, ev.n_levels)
    first, second = _moments_at(ev, A, t)
    scale = max(1.0, float(np.abs(A).max()) ** 2)
    if np.any(second <= _TINY * scale):
        raise UndefinedValue("operator has zero second moment in this state")
    return first ** 2 / second


def _expectation_spectrum(ev: DensityEvolution, A: np.ndarray):
    """Write ``Tr[A rho(t)] = sum_f a_f exp(i f t)`` and return ``(f, a_f)``."""
    w = ev.omega
    # rho_kl A_lk picks frequency -(w_k - w_l)
    nu = (w[None, :] - w[:, None]).ravel()
    amp = (A.T / ev.n_levels).ravel()
    keep = amp != 0
    freqs, inverse = np.unique(nu[keep], return_inverse=True)
    amps = np.zeros(freqs.shape, dtype=complex)
    np.add.at(amps, inverse, amp[keep])
    return freqs, amps


def mean_square_expectation(ev: DensityEvolution, A, T: float, t0: float = 0.0) -> float:
    """Closed-form window mean of ``Tr[A rho(t)]^2``."""
    A = as_hermitian(A, ev.n_levels)
    freqs, amps = _expectation_spectrum(ev, A)
    total = 0.0 + 0.0j
    for start in range(0, len(freqs), _FREQ_CHUNK):
        f = freqs[start:start + _FREQ_CHUNK]
        a = amps[start:start + _FREQ_CHUNK]
        phase = window_average_phase(f[:, None] + freqs[None, :], T, t0)
        total += a @ phase @ amps
    return float(total.real)


def mean_second_moment(ev: DensityEvolution, A, T: float, t0: float = 0.0) -> float:
    """Closed-form window mean of ``Tr[A^2 rho(t)] = Tr[A^2 rhobar]``."""
    A = as_hermitian(A, ev.n_levels)
    rbar = rho_time_avg(ev, T, t0)
    return float(np.einsum("ij,ji->", A @ A, rbar).real)


def _quadrature_moments(ev: DensityEvolution, A: np.ndarray, T: float, t0: float,
                        rtol: float = QUADRATURE_RTOL):
    w = ev.omega
    max_freq = 2 * max(float(w.max() - w.min()), 1e-12)

    def accumulate(ts, weights):
        first, second = _moments_at(ev, A, ts)
        return np.array([weights @ first ** 2, weights @ second])

    signal, power = quadrature.window_mean(accumulate, t0, T, max_freq, rtol=rtol)
    return float(signal), float(power)


def window_moments(ev: DensityEvolution, A, T: float, t0: float = 0.0,
                   mode: str = "closed-form") -> tuple[float, float]:
    """Window means of ``Tr[A rho]^2`` and ``Tr[A^2 rho]``."""
    if not T > 0:
        raise InvalidArgument("window length must be positive")
    A = as_hermitian(A, ev.n_levels)
    if mode == "closed-form":
        return mean_square_expectation(ev, A, T, t0), mean_second_moment(ev, A, T, t0)
    if mode == "quadrature":
        return _quadrature_moments(ev, A, T, t0)
    raise InvalidArgument(f"unknown mode {mode!r}; use 'closed-form' or 'quadrature'")


def averaged(ev: DensityEvolution, A, T: float, mode: str = "closed-form",
             t0: float = 0.0) -> float:
    """Window-averaged classicality of ``A`` over ``[t0, t0 + T]``."""
    signal, power = window_moments(ev, A, T, t0, mode)
    scale = max(1.0, float(np.abs(np.asarray(A)).max()) ** 2)
    if power <= _TINY * scale:
        raise UndefinedValue("operator has zero time-averaged second moment")
    return signal / power


def snr_from_classicality(cbar: float) -> float:
    """Signal-to-quantum-noise ratio ``1 / sqrt(1 - cbar)``; ``inf`` at ``cbar >= 1``."""
    if cbar < 0:
        raise InvalidArgument("classicality cannot be negative")
    if cbar >= 1:
        return math.inf
    return 1 / math.sqrt(1 - cbar)


def snr_direct(ev: DensityEvolution, A, T: float, mode: str = "closed-form",
               t0: float = 0.0) -> float:
    """SNR from its definition as a ratio of time integrals.

    ``sqrt( int <A>^2 dt / int (<A^2> - <A>^2) dt )``, defined for operators
    whose window-averaged expectation vanishes.
    """
    A = as_hermitian(A, ev.n_levels)
    signal, power = window_moments(ev, A, T, t0, mode)
    mean = float(np.einsum("ij,ji->", A, rho_time_avg(ev, T, t0)).real)
    if abs(mean) > ZERO_MEAN_RTOL * math.sqrt(max(signal, 0.0)) or signal <= 0:
        raise ZeroMeanViolation(
            f"time-averaged expectation {mean:.3e} is not zero "
            f"(rms expectation {math.sqrt(max(signal, 0.0)):.3e})")
    noise = power - signal
    if noise <= 0:
        return math.inf
    return math.sqrt(signal / noise)


@dataclass
class TraceTable:
    """Uniformly sampled classicality traces; ``data[:, 0]`` is time."""

    columns: list
    data: np.ndarray
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise InvalidArgument(f"trace has no column {name!r}") from None

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.columns)
            for row in self.data:
                writer.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "TraceTable":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        return cls(rows[0], np.array(rows[1:], dtype=float).reshape(-1, len(rows[0])))


def time_grid(t_max: float, dt: float) -> np.ndarray:
    if not dt > 0:
        raise InvalidArgument("time step must be positive")
    if t_max < 0:
        raise InvalidArgument("t_max must be non-negative")
    n = int(math.floor(t_max / dt + 1e-9)) + 1
    return dt * np.arange(n)


def pooled_classicality(ev: DensityEvolution, A, B, t):
    """``(<A>^2 + <B>^2) / (<A^2> + <B^2>)`` at time(s) ``t``."""
    A = as_hermitian(A, ev.n_levels)
    B = as_hermitian(B, ev.n_levels)
    fa, sa = _moments_at(ev, A, t)
    fb, sb = _moments_at(ev, B, t)
    return (fa ** 2 + fb ** 2) / (sa + sb)


def trace_series(ev: DensityEvolution, observables: Mapping[str, np.ndarray],
                 t_max: float, dt: float,
                 pairs: Optional[Sequence[tuple[str, str]]] = None) -> TraceTable:
    """Instantaneous classicality of each observable on a uniform time grid.

    For each ``(a, b)`` in ``pairs`` two extra columns follow: ``C_sym``,
    the pooled ratio of summed squared expectations to summed second
    moments, and ``C_mean``, the plain mean ``(C_a + C_b) / 2``. Column
    names get an ``_ab`` suffix when more than one pair is requested.
    """
    ts = time_grid(t_max, dt)
    columns = ["t"]
    cols = [ts]
    inst = {}
    for name, A in observables.items():
        inst[name] = instantaneous(ev, A, ts)
        columns.append(f"C_{name}")
        cols.append(inst[name])
    pairs = list(pairs or [])
    for a, b in pairs:
        suffix = "" if len(pairs) == 1 else f"_{a}{b}"
        columns += [f"C_sym{suffix}", f"C_mean{suffix}"]
        cols.append(pooled_classicality(ev, observables[a], observables[b], ts))
        cols.append((inst[a] + inst[b]) / 2)
    return TraceTable(columns, np.column_stack(cols))


def revival_time(trace: TraceTable, tolerance: float = 1e-3,
                 column: Optional[str] = None) -> Optional[float]:
    """Time at which a decayed trace first returns to its initial value.

    The trace must first drop below ``initial - 2 * tolerance``. The
    revival is the sample of largest value within the first subsequent
    run of samples lying within ``tolerance`` of the initial value.
    Returns ``None`` when the trace never drops or never comes back.
    """
    if column is None:
        column = "C_sym" if "C_sym" in trace.columns else trace.columns[-1]
    y = trace.column(column)
    t = trace.t
    if y.size < 2:
        return None
    y0 = y[0]
    dropped = np.flatnonzero(y < y0 - 2 * tolerance)
    if dropped.size == 0:
        return None
    back = np.flatnonzero(y[dropped[0]:] >= y0 - tolerance)
    if back.size == 0:
        return None
    start = dropped[0] + back[0]
    stop = start
    while stop + 1 < y.size and y[stop + 1] >= y0 - tolerance:
        stop += 1
    peak = start + int(np.argmax(y[start:stop + 1]))
    return float(t[peak])
