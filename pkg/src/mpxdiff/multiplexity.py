"""Multiplexing scores, the local dominance partial order, and two-layer profiles.

Scores are computed on OR-symmetrized layers (matching how elicited village
networks are coded); the dominance order operates on the directed graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .multigraph import MultiGraph, layer_set, symmetrize_graph


class IsolatedNodeError(ValueError):
    """Raised when a score is requested for a node with no neighbors."""


@dataclass(frozen=True, order=True)
class Profile:
    """Two-layer connection profile: neighbor counts on A only, B only, both."""

    dA: int
    dB: int
    dAB: int

    def __post_init__(self):
        if min(self.dA, self.dB, self.dAB) < 0:
            raise ValueError("profile counts must be nonnegative")


@dataclass(frozen=True)
class DominanceMove:
    """One de-multiplexing step at node i: layer ``layer`` moves from donor j to recipient k."""

    i: int
    donor: int
    recipient: int
    layer: int

    def __post_init__(self):
        if self.donor == self.recipient or self.i in (self.donor, self.recipient):
            raise ValueError("move endpoints must be three distinct nodes")


class ProfileDistribution:
    """Finite-support probability distribution over two-layer profiles."""

    def __init__(self, masses: dict[Profile, float], tol: float = 1e-12):
        total = math.fsum(masses.values())
        if abs(total - 1.0) > tol:
            raise ValueError(f"profile masses sum to {total!r}, not 1 within {tol}")
        for p, m in masses.items():
            if m < 0:
                raise ValueError(f"negative mass {m} at {p}")
        self._masses = {p: m for p, m in masses.items() if m > 0}

    def mass(self, p: Profile) -> float:
        return self._masses.get(p, 0.0)

    def support(self) -> list[Profile]:
        return sorted(self._masses)

    def items(self) -> Iterator[tuple[Profile, float]]:
        return iter(sorted(self._masses.items()))

    def __eq__(self, other):
        return isinstance(other, ProfileDistribution) and self._masses == other._masses

    def __repr__(self):
        inner = ", ".join(f"({p.dA},{p.dB},{p.dAB}): {m:g}" for p, m in self.items())
        return f"ProfileDistribution({{{inner}}})"


def multiplexing_score(g: MultiGraph, i: int) -> float:
    """Average fraction of layers shared with each neighbor, on symmetrized layers.

    Ranges over [1/L, 1]; raises IsolatedNodeError when node i has no neighbors
    (the score is undefined there, and callers decide how to exclude).
    """
    scores = _node_scores(symmetrize_graph(g))
    if np.isnan(scores[i]):
        raise IsolatedNodeError(f"node {i} has no neighbors; multiplexing score undefined")
    return float(scores[i])


def village_score(g: MultiGraph) -> float:
    """Mean multiplexing score over the village's non-isolated nodes."""
    scores = _node_scores(symmetrize_graph(g))
    defined = scores[~np.isnan(scores)]
    if defined.size == 0:
        raise IsolatedNodeError("all nodes are isolated; village score undefined")
    return float(defined.mean())


def node_scores(g: MultiGraph) -> np.ndarray:
    """Per-node multiplexing scores (NaN for isolated nodes)."""
    return _node_scores(symmetrize_graph(g))


def _node_scores(g_sym: MultiGraph) -> np.ndarray:
    total = g_sym.adjacency.sum(axis=0, dtype=np.float64)  # per-pair layer counts
    neighbor_counts = (total > 0).sum(axis=1)
    with np.errstate(invalid="ignore"):
        scores = (total.sum(axis=1) / g_sym.layer_count) / neighbor_counts
    scores[neighbor_counts == 0] = np.nan
    return scores


def high_mpx_flags(scores: Sequence[float]) -> np.ndarray:
    """0/1 indicator per village: strictly above the sample median."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("need at least one village score")
    return (arr > np.median(arr)).astype(np.int64)


def total_multiplexity_index(g: MultiGraph) -> int:
    """Sum of squared layer-set sizes over ordered node pairs.

    Strictly decreases along every dominance move, which certifies the order
    is acyclic.
    """
    counts = g.adjacency.sum(axis=0, dtype=np.int64)
    return int((counts ** 2).sum())


def is_dominance_move(g: MultiGraph, g_hat: MultiGraph) -> DominanceMove | None:
    """Return the unique single move showing g_hat is less multiplexed than g, if any.

    Checks the three conditions: one edge of some layer moved from (i, donor)
    to (i, recipient); the recipient's prior layer set a strict subset of the
    donor's minus the moved layer; everything else identical.
    """
    if g.node_count != g_hat.node_count or g.layer_names != g_hat.layer_names:
        raise ValueError("graphs must share node universe and layer names")
    removed = (g.adjacency == 1) & (g_hat.adjacency == 0)
    added = (g.adjacency == 0) & (g_hat.adjacency == 1)
    rem_idx = np.argwhere(removed)
    add_idx = np.argwhere(added)
    if len(rem_idx) != 1 or len(add_idx) != 1:
        return None
    l_rem, i_rem, j = rem_idx[0].tolist()
    l_add, i_add, k = add_idx[0].tolist()
    if l_rem != l_add or i_rem != i_add or j == k:
        return None
    i, layer = i_rem, l_rem
    donor_set = layer_set(g, i, j)
    recipient_set = layer_set(g, i, k)
    if not recipient_set < (donor_set - {layer}):
        return None
    return DominanceMove(i=i, donor=j, recipient=k, layer=layer)


def enumerate_demultiplexing_moves(g: MultiGraph, i: int) -> list[tuple[DominanceMove, MultiGraph]]:
    """All single dominance moves at node i, each paired with the resulting graph."""
    g._check_node(i)
    out = []
    sets = {j: layer_set(g, i, j) for j in range(g.node_count) if j != i}
    for j, donor_set in sets.items():
        if len(donor_set) < 2:
            continue  # donor minus one layer cannot strictly contain anything
        for layer in sorted(donor_set):
            rest = donor_set - {layer}
            for k, recipient_set in sets.items():
                if k == j or layer in recipient_set:
                    continue
                if recipient_set < rest:
                    move = DominanceMove(i=i, donor=j, recipient=k, layer=layer)
                    out.append((move, apply_move(g, move)))
    return out


def apply_move(g: MultiGraph, move: DominanceMove) -> MultiGraph:
    """Graph with the move's layer reassigned from donor to recipient."""
    if not g.adjacency[move.layer, move.i, move.donor]:
        raise ValueError("move's donor edge is absent")
    if g.adjacency[move.layer, move.i, move.recipient]:
        raise ValueError("move's recipient edge already present")
    adj = g.adjacency.copy()
    adj[move.layer, move.i, move.donor] = 0
    adj[move.layer, move.i, move.recipient] = 1
    return MultiGraph(node_count=g.node_count, layer_names=g.layer_names, adjacency=adj)


def profile(g: MultiGraph, i: int, layer_a: str, layer_b: str) -> Profile:
    """Node i's two-layer profile, consulting exactly the two named layers."""
    g._check_node(i)
    a = g.layer(layer_a)[i].astype(bool)
    b = g.layer(layer_b)[i].astype(bool)
    return Profile(dA=int((a & ~b).sum()), dB=int((b & ~a).sum()), dAB=int((a & b).sum()))


def profile_distribution(g: MultiGraph, layer_a: str, layer_b: str) -> ProfileDistribution:
    """Empirical distribution of two-layer profiles over all nodes."""
    counts: dict[Profile, int] = {}
    for i in range(g.node_count):
        p = profile(g, i, layer_a, layer_b)
        counts[p] = counts.get(p, 0) + 1
    n = g.node_count
    return ProfileDistribution({p: c / n for p, c in counts.items()})


def demultiplex_distribution(dist: ProfileDistribution, at: Profile,
                             mass: float) -> ProfileDistribution:
    """Move probability mass from ``at`` to its split profile (dA+1, dB+1, dAB-1)."""
    if at.dAB < 1:
        raise ValueError("profile has no multiplexed link to split")
    if not (0 < mass <= dist.mass(at) + 1e-15):
        raise ValueError(f"mass {mass} unavailable at {at} (has {dist.mass(at)})")
    mass = min(mass, dist.mass(at))
    target = Profile(dA=at.dA + 1, dB=at.dB + 1, dAB=at.dAB - 1)
    masses = {p: m for p, m in dist.items()}
    masses[at] = masses.get(at, 0.0) - mass
    masses[target] = masses.get(target, 0.0) + mass
    return ProfileDistribution(masses)


def find_demultiplex_move(p_more: ProfileDistribution,
                          p_less: ProfileDistribution) -> tuple[Profile, float] | None:
    """If p_less equals p_more after exactly one demultiplexing move, return (at, mass)."""
    diffs = {}
    for p in set(p_more.support()) | set(p_less.support()):
        d = p_less.mass(p) - p_more.mass(p)
        if abs(d) > 1e-15:
            diffs[p] = d
    if len(diffs) != 2:
        return None
    (p1, d1), (p2, d2) = sorted(diffs.items())
    if abs(d1 + d2) > 1e-12:
        return None
    at, target, moved = (p1, p2, d2) if d1 < 0 else (p2, p1, d1)
    if moved <= 0:
        return None
    if (target.dA, target.dB, target.dAB) != (at.dA + 1, at.dB + 1, at.dAB - 1):
        return None
    return at, moved


# ---------------------------------------------------------------------------
# ProfileDistribution file format: header `dA,dB,dAB,prob`, one profile per row.
# ---------------------------------------------------------------------------

PROFILE_HEADER = "dA,dB,dAB,prob"


def read_profile_file(path) -> ProfileDistribution:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0] != PROFILE_HEADER:
        raise ValueError(f"expected header {PROFILE_HEADER!r}")
    masses: dict[Profile, float] = {}
    for ln in lines[1:]:
        da, db, dab, prob = ln.split(",")
        p = Profile(int(da), int(db), int(dab))
        masses[p] = masses.get(p, 0.0) + float(prob)
    return ProfileDistribution(masses, tol=1e-9)


def write_profile_file(path, dist: ProfileDistribution) -> None:
    rows = [PROFILE_HEADER]
    rows += [f"{p.dA},{p.dB},{p.dAB},{m!r}" for p, m in dist.items()]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
