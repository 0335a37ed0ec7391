"""Randomized numerical checks of the four diffusion-ordering propositions.

Each driver samples configurations (graph pairs one dominance move apart, or
profile distributions one demultiplexing move apart), runs the exact oracles
or the mean-field solver from :mod:`mpxdiff.meanfield`, and returns one
report per configuration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .meanfield import (PropositionReport, solve_steady_state,
                        verify_complex_individual, verify_simple_individual,
                        verify_sis_ordering)
from .multigraph import MultiGraph
from .multiplexity import Profile, ProfileDistribution, demultiplex_distribution
from .transmission import TransmissionModel

TWO_LAYERS = ("A", "B")


def _pair_with_move(rng: np.random.Generator, extra_neighbors: int,
                    min_extra_links: int = 0) -> tuple[MultiGraph, MultiGraph, int]:
    """Random two-layer graph pair that differs by one dominance move at node 0.

    Node 0 is linked to node 1 on both layers and to node 2 on none; the move
    reassigns one of those layers to node 2. Extra neighbors get nonempty
    random layer sets until at least ``min_extra_links`` additional links
    exist.
    """
    n = 3 + extra_neighbors
    adj = np.zeros((2, n, n), dtype=np.uint8)
    adj[:, 0, 1] = 1
    while True:
        for v in range(3, n):
            choice = rng.integers(1, 4)  # 1: layer A, 2: layer B, 3: both
            adj[0, 0, v] = choice & 1
            adj[1, 0, v] = (choice >> 1) & 1
        if adj[:, 0, 3:].sum() >= min_extra_links:
            break
    g = MultiGraph(node_count=n, layer_names=TWO_LAYERS, adjacency=adj)
    moved_layer = int(rng.integers(0, 2))
    hat = adj.copy()
    hat[moved_layer, 0, 1] = 0
    hat[moved_layer, 0, 2] = 1
    g_hat = MultiGraph(node_count=n, layer_names=TWO_LAYERS, adjacency=hat)
    return g, g_hat, 0


def check_prop1(samples: int, seed: int, boundary_every: int = 5) -> list[PropositionReport]:
    """Simple-contagion individual iff across random rates and Frechet-feasible joints.

    Every ``boundary_every``-th sample pins the joint exactly at the
    correlation-condition boundary f2 = rho*qA*qB, where the two infection
    probabilities must coincide.
    """
    rng = np.random.default_rng(seed)
    reports = []
    while len(reports) < samples:
        qa, qb, rho = rng.uniform(0.05, 0.95, size=3)
        lo, hi = max(0.0, qa + qb - 1.0), min(qa, qb)
        want_boundary = len(reports) % boundary_every == boundary_every - 1
        if want_boundary:
            f2 = rho * qa * qb
            if not (lo <= f2 <= hi):
                continue  # boundary value infeasible for these rates; resample
        else:
            f2 = rng.uniform(lo, hi)
        model = TransmissionModel({"A": qa, "B": qb}, f2={("A", "B"): f2})
        g, g_hat, i = _pair_with_move(rng, extra_neighbors=int(rng.integers(0, 4)))
        reports.append(verify_simple_individual(g, g_hat, i, rho, model))
    return reports


def check_prop3(samples: int, seed: int, tau: int = 2, rate_low: float = 0.02,
                rate_high: float = 0.95) -> list[tuple[PropositionReport, PropositionReport]]:
    """Complex-contagion regime check: each sampled structure is evaluated at both corners."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(samples):
        extra = int(rng.integers(1, 5))
        g, g_hat, i = _pair_with_move(rng, extra_neighbors=extra,
                                      min_extra_links=tau - 1)
        low_model = TransmissionModel({"A": rate_low, "B": rate_low})
        high_model = TransmissionModel({"A": rate_high, "B": rate_high})
        low = verify_complex_individual(g, g_hat, i, rate_low, low_model, tau, regime="low")
        high = verify_complex_individual(g, g_hat, i, rate_high, high_model, tau, regime="high")
        out.append((low, high))
    return out


def random_positive_distribution(rng: np.random.Generator, delta: float,
                                 model: TransmissionModel, tau: int = 1,
                                 max_tries: int = 200) -> ProfileDistribution | None:
    """Profile distribution with a positive steady state, or None after max_tries."""
    for _ in range(max_tries):
        support_size = int(rng.integers(2, 5))
        profiles = set()
        while len(profiles) < support_size:
            profiles.add(Profile(int(rng.integers(0, 4)), int(rng.integers(0, 4)),
                                 int(rng.integers(0, 4))))
        profiles = sorted(profiles)
        if not any(p.dAB >= 1 for p in profiles):
            continue
        masses = rng.dirichlet(np.ones(len(profiles)))
        if min(masses) < 0.05:
            continue
        dist = ProfileDistribution(dict(zip(profiles, masses)))
        if solve_steady_state(dist, delta, model, tau=tau).rho > 0:
            return dist
    return None


def check_prop2(samples: int, seed: int) -> list[PropositionReport]:
    """Population-level simple-contagion ordering under independent transmission."""
    rng = np.random.default_rng(seed)
    reports = []
    while len(reports) < samples:
        qa, qb = rng.uniform(0.2, 0.8, size=2)
        delta = rng.uniform(0.1, 0.7)
        model = TransmissionModel({"A": qa, "B": qb})
        dist = random_positive_distribution(rng, delta, model)
        if dist is None:
            continue
        eligible = [p for p in dist.support() if p.dAB >= 1 and dist.mass(p) > 0]
        if not eligible:
            continue
        at = eligible[int(rng.integers(0, len(eligible)))]
        mass = dist.mass(at) * rng.uniform(0.5, 1.0)
        dist_prime = demultiplex_distribution(dist, at, mass)
        report = verify_sis_ordering(dist, dist_prime, delta, model, tau=1)
        if not report.conclusive:
            continue
        reports.append(report)
    return reports


@dataclass(frozen=True)
class Prop4Cell:
    q: float
    delta: float
    report: PropositionReport


def check_prop4(q_values, delta_values, regime: str, seed: int, tau: int = 2,
                dist: ProfileDistribution | None = None,
                move_at: Profile | None = None) -> list[Prop4Cell]:
    """Complex-contagion population ordering over a (q, delta) grid.

    Uses a fixed distribution whose profiles all have more than tau
    layer-links; cells where either steady state vanishes come back
    inconclusive rather than judged.
    """
    if dist is None:
        dist, move_at = default_prop4_distribution()
    elif move_at is None:
        raise ValueError("provide move_at together with dist")
    cells = []
    for q in q_values:
        for delta in delta_values:
            model = TransmissionModel({"A": float(q), "B": float(q)})
            dist_prime = demultiplex_distribution(dist, move_at, dist.mass(move_at) / 2)
            report = verify_sis_ordering(dist, dist_prime, float(delta), model,
                                         tau=tau, regime=regime)
            cells.append(Prop4Cell(q=float(q), delta=float(delta), report=report))
    return cells


def default_prop4_distribution() -> tuple[ProfileDistribution, Profile]:
    """Well-connected two-profile population used by the complex-contagion grid checks.

    Connectivity is heavy enough that low transmission rates still sustain a
    positive steady state across a band of recovery rates, which is where the
    low-rate ordering is visible.
    """
    dist = ProfileDistribution({Profile(0, 0, 6): 0.5, Profile(1, 1, 5): 0.5})
    return dist, Profile(0, 0, 6)


PROP4_LOW_GRID = ((0.09, 0.10, 0.11), (0.06, 0.08, 0.10, 0.12, 0.14))
PROP4_HIGH_GRID = ((0.75, 0.80, 0.85, 0.90), (0.05, 0.10, 0.15, 0.20))


def prop4_delta_scan(dist: ProfileDistribution, move_at: Profile, q: float,
                     deltas, tau: int = 2,
                     seed_mass_fraction: float = 0.5) -> dict[str, tuple[float, float] | None]:
    """Widest contiguous delta sub-ranges where each ordering holds.

    Returns the extremes of the runs where the multiplexed distribution
    diffuses more ('more_mpx_higher') and less ('less_mpx_higher');
    inconclusive cells break runs.
    """
    model = TransmissionModel({"A": q, "B": q})
    dist_prime = demultiplex_distribution(dist, move_at,
                                          dist.mass(move_at) * seed_mass_fraction)
    orderings = []
    for delta in deltas:
        state = solve_steady_state(dist, float(delta), model, tau=tau)
        state_p = solve_steady_state(dist_prime, float(delta), model, tau=tau)
        if state.rho == 0 or state_p.rho == 0:
            orderings.append(None)
        elif state.rho > state_p.rho:
            orderings.append("more_mpx_higher")
        elif state.rho < state_p.rho:
            orderings.append("less_mpx_higher")
        else:
            orderings.append("tie")
    result: dict[str, tuple[float, float] | None] = {}
    for label in ("more_mpx_higher", "less_mpx_higher"):
        best = None
        start = None
        deltas = list(deltas)
        for idx, mark in enumerate(orderings + [None]):
            if mark == label and start is None:
                start = idx
            elif mark != label and start is not None:
                span = (float(deltas[start]), float(deltas[idx - 1]))
                if best is None or span[1] - span[0] > best[1] - best[0]:
                    best = span
                start = None
        result[label] = best
    return result
