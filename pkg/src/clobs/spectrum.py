"""Hamiltonian spectra: construction, transitions and JSON serialization.

A spectrum is the only physical input of the package. Levels are indexed
from 0 and carry angular frequencies (rad/time) in ascending order.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import InvalidArgument, ResourceExhausted

LADDER_LABELS = ("H1", "H2")


@dataclass(frozen=True)
class Spectrum:
    """Ordered level frequencies with optional labels and energy window.

    Parameters
    ----------
    omegas : sequence of float
        Level angular frequencies, ascending. Ties encode degeneracy.
    labels : sequence of str, optional
        One tag per level (e.g. ladder membership ``"H1"``/``"H2"``).
    window : (E, dE), optional
        Energy-window annotation. Metadata only; nothing depends on it.
    """

    omegas: tuple
    labels: Optional[tuple] = None
    window: Optional[tuple] = None

    def __post_init__(self):
        omegas = tuple(float(w) for w in self.omegas)
        if len(omegas) < 1:
            raise InvalidArgument("a spectrum needs at least one level")
        if not all(math.isfinite(w) for w in omegas):
            raise InvalidArgument("level frequencies must be finite")
        if any(b < a for a, b in zip(omegas, omegas[1:])):
            raise InvalidArgument("level frequencies must be sorted ascending")
        object.__setattr__(self, "omegas", omegas)
        if self.labels is not None:
            labels = tuple(str(l) for l in self.labels)
            if len(labels) != len(omegas):
                raise InvalidArgument("need exactly one label per level")
            object.__setattr__(self, "labels", labels)
        if self.window is not None:
            E, dE = (float(v) for v in self.window)
            if not (math.isfinite(E) and math.isfinite(dE)):
                raise InvalidArgument("window must be finite")
            object.__setattr__(self, "window", (E, dE))

    @property
    def n_levels(self) -> int:
        return len(self.omegas)

    def __len__(self):
        return len(self.omegas)

    @property
    def omega(self) -> np.ndarray:
        """Frequencies as a float array (a fresh copy)."""
        return np.array(self.omegas, dtype=float)

    def levels_with_label(self, label: str) -> list[int]:
        if self.labels is None:
            raise InvalidArgument("spectrum has no labels")
        idx = [k for k, l in enumerate(self.labels) if l == label]
        if not idx:
            raise InvalidArgument(f"no level carries label {label!r}")
        return idx

    def subset(self, keep: Sequence[int]) -> "Spectrum":
        """Restriction to the levels ``keep`` (re-indexed from 0)."""
        keep = sorted(set(int(k) for k in keep))
        if not keep:
            raise InvalidArgument("cannot restrict to an empty level set")
        if keep[0] < 0 or keep[-1] >= self.n_levels:
            raise InvalidArgument("level index out of range")
        labels = None if self.labels is None else [self.labels[k] for k in keep]
        return Spectrum([self.omegas[k] for k in keep], labels, self.window)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        out = {"omegas": list(self.omegas)}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        if self.window is not None:
            out["window"] = {"E": self.window[0], "dE": self.window[1]}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Spectrum":
        if not isinstance(data, dict) or "omegas" not in data:
            raise InvalidArgument("spectrum JSON needs an 'omegas' array")
        try:
            omegas = [float(w) for w in data["omegas"]]
        except (TypeError, ValueError) as exc:
            raise InvalidArgument(f"omegas must be numbers: {exc}") from None
        if len(omegas) < 2:
            raise InvalidArgument("a spectrum file needs at least two levels")
        window = data.get("window")
        if window is not None:
            try:
                window = (float(window["E"]), float(window["dE"]))
            except (KeyError, TypeError, ValueError):
                raise InvalidArgument("window must be {'E': float, 'dE': float}") from None
        return cls(omegas, data.get("labels"), window)

    def to_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_json(cls, path) -> "Spectrum":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(data)


class Transition(NamedTuple):
    m: int
    n: int
    freq: float


def make_harmonic(levels: int, omega: float = 1.0, offset: float = 0.0) -> Spectrum:
    if levels < 2:
        raise InvalidArgument("a harmonic ladder needs at least 2 levels")
    if not omega > 0:
        raise InvalidArgument("ladder spacing must be positive")
    return Spectrum([offset + k * omega for k in range(levels)])


def make_two_ladders(levels_each: int, omega1: float, omega2: float,
                     first_rung: int = 1) -> Spectrum:
    """Direct sum of two harmonic ladders with spacings ``omega1``/``omega2``.

    Rungs ``first_rung .. first_rung + levels_each - 1`` are placed at
    ``k * omega``. With ``first_rung=0`` both ladders share a degenerate
    ground level at zero frequency. The default of 1 keeps the two
    ladders free of accidental degeneracies.
    """
    if levels_each < 2:
        raise InvalidArgument("each ladder needs at least 2 levels")
    if not (omega1 > 0 and omega2 > 0):
        raise InvalidArgument("ladder spacings must be positive")
    if omega1 == omega2:
        raise InvalidArgument("equal ladder spacings give a single degenerate ladder")
    if first_rung < 0:
        raise InvalidArgument("first_rung must be non-negative")
    rungs = range(first_rung, first_rung + levels_each)
    levels = [(k * omega1, LADDER_LABELS[0]) for k in rungs]
    levels += [(k * omega2, LADDER_LABELS[1]) for k in rungs]
    # stable sort keeps H1 before H2 on exact ties
    levels.sort(key=lambda item: item[0])
    return Spectrum([w for w, _ in levels], [l for _, l in levels])


def make_degenerate(distinct_levels: int, degeneracy: int, omega: float = 1.0) -> Spectrum:
    if distinct_levels < 2 or degeneracy < 1:
        raise InvalidArgument("need distinct_levels >= 2 and degeneracy >= 1")
    if not omega > 0:
        raise InvalidArgument("level spacing must be positive")
    return Spectrum([k * omega for k in range(distinct_levels) for _ in range(degeneracy)])


def _resonances_ok(omegas: np.ndarray, min_gap: float) -> bool:
    freqs = np.array([omegas[n] - omegas[m]
                      for m, n in itertools.combinations(range(len(omegas)), 2)])
    diff = np.abs(freqs[:, None] - freqs[None, :])
    np.fill_diagonal(diff, np.inf)
    return bool(np.all(diff > min_gap))


def make_generic(levels: int, seed: int, min_gap: float = 0.01,
                 max_tries: int = 1_000_000) -> Spectrum:
    """Random spectrum without resonant transition pairs.

    Gaps are drawn uniformly from ``[10 * min_gap, 1]`` and the draw is
    rejected until every pair of distinct transitions differs in
    frequency by more than ``min_gap``.
    """
    if levels < 2:
        raise InvalidArgument("need at least 2 levels")
    if not (0 < min_gap < 0.1):
        raise InvalidArgument("min_gap must lie in (0, 0.1)")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        gaps = rng.uniform(10 * min_gap, 1.0, size=levels - 1)
        omegas = np.concatenate([[0.0], np.cumsum(gaps)])
        if _resonances_ok(omegas, min_gap):
            return Spectrum(omegas.tolist())
    raise ResourceExhausted(
        f"no non-resonant {levels}-level spectrum found in {max_tries} draws")


def transitions(s: Spectrum) -> list[Transition]:
    """All level pairs ``m < n`` in lexicographic order."""
    w = s.omegas
    return [Transition(m, n, w[n] - w[m])
            for m, n in itertools.combinations(range(len(w)), 2)]


def heisenberg_resolution(T: float) -> float:
    """Frequency resolution ``2 pi / T`` of an observation window ``T``."""
    if not T > 0:
        raise InvalidArgument("window length must be positive")
    return 2 * math.pi / T


def large_window(s: Spectrum, periods: float = 1e4) -> float:
    """``periods`` times the longest nearest-level period of ``s``."""
    gaps = np.diff(s.omega)
    gaps = gaps[gaps > 0]
    if gaps.size == 0:
        raise InvalidArgument("spectrum has no non-zero level spacing")
    return periods * 2 * math.pi / gaps.min()


def degeneracy_groups(s: Spectrum, tol: float) -> list[list[int]]:
    """Partition levels into runs whose consecutive gaps are below ``tol``.

    ``tol=0`` groups exactly repeated frequencies only.
    """
    w = s.omegas
    groups = [[0]]
    for k in range(1, len(w)):
        if w[k] - w[k - 1] < tol or w[k] == w[k - 1]:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def detect_degeneracy(s: Spectrum, T: float) -> list[list[int]]:
    """Groups of levels treated as exactly degenerate for an ingested spectrum.

    Uses a threshold of ``1e-3`` times the Heisenberg resolution.
    """
    return degeneracy_groups(s, 1e-3 * heisenberg_resolution(T))
