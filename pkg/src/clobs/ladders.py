"""Resonance blocks, ladder subspaces and the branching tree.

Levels closer than the Heisenberg resolution ``2 pi / T`` cannot be told
apart within a window ``T`` and are merged into effective levels first.
Transitions between effective levels are then clustered by frequency.
Each resolved block of ``N_b`` transitions between effective levels of
common multiplicity ``g`` supports one in-phase observable with
classicality ``N_b / (N g)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgument, UnsupportedConfiguration
from .gevp import GevpMatrices, generalized_eigh
from .qstate import ObservableCoeffs, TransitionBasis, collapse_probabilities
from .spectrum import Spectrum, degeneracy_groups, heisenberg_resolution, transitions


@dataclass(frozen=True)
class LevelGroup:
    levels: tuple
    center: float

    @property
    def size(self) -> int:
        return len(self.levels)


def level_groups(s: Spectrum, T: float) -> list[LevelGroup]:
    """Effective levels: runs of levels whose consecutive gaps are below ``2 pi / T``."""
    w = s.omegas
    return [LevelGroup(tuple(g), float(np.mean([w[k] for k in g])))
            for g in degeneracy_groups(s, heisenberg_resolution(T))]


@dataclass
class TransitionBlock:
    """Transitions that are mutually resonant within the window's resolution.

    ``span`` is the range of effective frequencies (differences of
    effective-level centres) covered by the members. A block is
    ``resolved`` when that range is narrower than the resolution, i.e.
    the members are resonant with each other and not only chained; a
    static block counts as resolved only for exact degeneracies.
    ``multiplicities`` are the sizes of the effective levels the block
    connects; ``static`` blocks join levels inside one effective level.
    """

    members: list
    center_freq: float
    span: tuple
    static: bool
    multiplicities: tuple
    resolved: bool

    @property
    def size(self) -> int:
        return len(self.members)

    def levels(self) -> set:
        return {k for t in self.members for k in (t.m, t.n)}


def _single_linkage(values: np.ndarray, threshold: float) -> list[np.ndarray]:
    order = np.argsort(values, kind="stable")
    if order.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(values[order]) >= threshold) + 1
    return np.split(order, breaks)


def cluster_transitions(s: Spectrum, T: float) -> list[TransitionBlock]:
    """Group all transitions into resonance blocks, sorted by centre frequency."""
    delta = heisenberg_resolution(T)
    groups = level_groups(s, T)
    gid = np.empty(s.n_levels, dtype=int)
    for i, g in enumerate(groups):
        gid[list(g.levels)] = i
    trans = transitions(s)
    static = [t for t in trans if gid[t.m] == gid[t.n]]
    dynamic = [t for t in trans if gid[t.m] != gid[t.n]]
    eff = np.array([groups[gid[t.n]].center - groups[gid[t.m]].center for t in dynamic])

    blocks = []
    if static:
        freqs = [t.freq for t in static]
        blocks.append(TransitionBlock(
            members=static,
            center_freq=float(np.mean(freqs)),
            span=(0.0, 0.0),
            static=True,
            multiplicities=tuple(sorted({groups[gid[t.m]].size for t in static})),
            resolved=max(freqs) == 0.0,
        ))
    for idx in _single_linkage(eff, delta):
        idx = sorted(idx)
        members = [dynamic[i] for i in idx]
        lo, hi = float(eff[idx].min()), float(eff[idx].max())
        sizes = {groups[gid[k]].size for t in members for k in (t.m, t.n)}
        blocks.append(TransitionBlock(
            members=members,
            center_freq=float(np.mean([t.freq for t in members])),
            span=(lo, hi),
            static=False,
            multiplicities=tuple(sorted(sizes)),
            resolved=bool(hi - lo < delta),
        ))
    blocks.sort(key=lambda b: b.center_freq)
    return blocks


@dataclass
class BlockPrediction:
    block: TransitionBlock
    cbar: float
    in_phase: ObservableCoeffs


def predict_classicality(s: Spectrum, blocks: Sequence[TransitionBlock]) -> list[BlockPrediction]:
    """Block-theory classicality for each block with its in-phase observable.

    Dynamic blocks predict ``N_b / (N g)``. A static block predicts the
    population share of the merged levels it connects, which is the
    classicality of the identity restricted to them. Unresolved blocks
    (chains wider than the resolution) are capped at 1.
    """
    N = s.n_levels
    basis = TransitionBasis(N)
    out = []
    for b in blocks:
        if b.static:
            cbar = len(b.levels()) / N
        else:
            if len(b.multiplicities) != 1:
                raise UnsupportedConfiguration(
                    f"block at frequency {b.center_freq:.6g} connects levels of "
                    f"different multiplicities {b.multiplicities}")
            g = b.multiplicities[0]
            cbar = min(1.0, b.size / (N * g))
        coeffs = np.zeros(len(basis))
        for t in b.members:
            coeffs[basis.index("x", t.m, t.n)] = 1.0
        out.append(BlockPrediction(b, cbar, ObservableCoeffs(basis, coeffs)))
    return out


def block_indices(basis: TransitionBasis, block: TransitionBlock) -> np.ndarray:
    return np.array([basis.index(kind, t.m, t.n)
                     for kind in ("x", "p") for t in block.members])


def block_eigenvalue(gm: GevpMatrices, block: TransitionBlock) -> float:
    """Leading classicality of the generalized problem restricted to a block."""
    idx = block_indices(gm.basis, block)
    vals, _, _ = generalized_eigh(gm.R[np.ix_(idx, idx)], gm.M[np.ix_(idx, idx)])
    return float(vals[0])


def split_gap(blocks: Sequence[TransitionBlock]) -> float:
    """Smallest gap between the effective-frequency ranges of neighbouring dynamic blocks."""
    spans = sorted(b.span for b in blocks if not b.static)
    gaps = [b[0] - a[1] for a, b in zip(spans, spans[1:])]
    return min(gaps) if gaps else float("inf")


def block_tolerance(blocks: Sequence[TransitionBlock], T: float, floor: float = 1e-2) -> float:
    gap = split_gap(blocks)
    return max(floor, 8 * np.pi / (gap * T)) if gap > 0 else float("inf")


def blocks_to_json(predictions: Sequence[BlockPrediction]) -> list[dict]:
    return [{"center_freq": float(p.block.center_freq), "size": p.block.size,
             "predicted_cbar": float(p.cbar), "static": bool(p.block.static),
             "resolved": bool(p.block.resolved)}
            for p in predictions]


# -- ladder subspaces ---------------------------------------------------------

def _grow_chain(groups, free, start, nxt, delta):
    chain = [start, nxt]
    gaps = [groups[nxt].center - groups[start].center]
    size = groups[start].size
    while True:
        gap = gaps[0]
        target = groups[chain[-1]].center + gap
        best, best_err = None, delta
        for j in free:
            if j in chain or groups[j].size != size:
                continue
            err = abs(groups[j].center - target)
            if err < best_err:
                best, best_err = j, err
        if best is None:
            return chain
        new_gap = groups[best].center - groups[chain[-1]].center
        if max(gaps + [new_gap]) - min(gaps + [new_gap]) >= delta:
            return chain
        chain.append(best)
        gaps.append(new_gap)


def find_ladder_subspaces(s: Spectrum, T: float) -> list[list[int]]:
    """Greedy partition of the levels into harmonic ladders at resolution ``2 pi / T``.

    Starting from the lowest unassigned effective level, every partner of
    equal multiplicity seeds an arithmetic progression whose gaps agree
    pairwise within the resolution; the longest progression (smallest
    gap on ties) becomes a part. Progressions need three effective
    levels, except when the spectrum has only two. Unmatched levels form
    singleton parts.
    """
    delta = heisenberg_resolution(T)
    groups = level_groups(s, T)
    free = list(range(len(groups)))
    parts = []
    while free:
        start = free[0]
        best = [start]
        for nxt in free[1:]:
            if groups[nxt].size != groups[start].size:
                continue
            chain = _grow_chain(groups, free, start, nxt, delta)
            if len(chain) > len(best):
                best = chain
        if len(best) < 3 and not (len(best) == 2 and len(groups) == 2):
            best = [start]
        parts.append(sorted(k for g in best for k in groups[g].levels))
        free = [g for g in free if g not in best]
    parts.sort(key=lambda p: p[0])
    return parts


@dataclass
class BranchNode:
    levels: list
    window: tuple
    children: list = field(default_factory=list)
    probabilities: Optional[list] = None

    def leaves(self) -> list["BranchNode"]:
        if not self.children:
            return [self]
        return [leaf for c in self.children for leaf in c.leaves()]

    def to_dict(self) -> dict:
        out = {"levels": list(self.levels), "window": list(self.window),
               "children": [c.to_dict() for c in self.children]}
        if self.probabilities is not None:
            out["collapse_probabilities"] = list(self.probabilities)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BranchNode":
        return cls(list(data["levels"]), tuple(data["window"]),
                   [cls.from_dict(c) for c in data.get("children", [])],
                   data.get("collapse_probabilities"))


def branching_tree(s: Spectrum, windows: Sequence[float]) -> BranchNode:
    """Hierarchy of ladder subspaces as the observation window grows.

    The root holds every level from the first window on. At each later
    window a node's levels are re-partitioned into ladders; the node
    branches when the partition has more than one part. Node windows tile
    time: a node is valid on ``(T_created, T_last_unsplit]``.
    """
    windows = [float(w) for w in windows]
    if not windows:
        raise InvalidArgument("need at least one window")
    if any(w <= 0 for w in windows) or any(b <= a for a, b in zip(windows, windows[1:])):
        raise InvalidArgument("windows must be positive and strictly ascending")

    def grow(levels: list[int], lo: float, first: int) -> BranchNode:
        sub = s.subset(levels)
        for j in range(first, len(windows)):
            parts = find_ladder_subspaces(sub, windows[j]) if len(levels) > 1 else [[0]]
            if len(parts) > 1:
                node = BranchNode(levels, (lo, windows[j - 1]))
                node.probabilities = collapse_probabilities(sub, parts)
                node.children = [grow([levels[k] for k in p], windows[j - 1], j + 1)
                                 for p in parts]
                return node
        return BranchNode(levels, (lo, windows[-1]))

    return grow(list(range(s.n_levels)), 0.0, 1)
