"""Diffusion centrality with walk-length and decay defaults taken from the graph.

Default parameterization: T = diameter of the layer, q = 1 / (largest
eigenvalue of the layer), so scores approximate expected communication reach.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .multigraph import MultiGraph, symmetrize


@dataclass(frozen=True)
class CentralityVector:
    scores: np.ndarray
    q: float
    T: int
    layer: str = ""


def spectral_radius(adj: np.ndarray, tol: float = 1e-10, max_iters: int = 10 ** 5) -> float:
    """Largest-magnitude eigenvalue estimate by power iteration from the ones vector.

    Returns 0 for edgeless graphs; warns and returns the last estimate if the
    norm-ratio sequence has not settled within max_iters.
    """
    a = np.asarray(adj, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("adjacency must be square")
    n = a.shape[0]
    if n == 0 or not a.any():
        return 0.0
    v = np.ones(n)
    est = 0.0
    for _ in range(max_iters):
        w = a @ v
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            return 0.0  # nilpotent: every long walk dies out
        new_est = norm / float(np.linalg.norm(v))
        v = w / norm
        if abs(new_est - est) < tol:
            return new_est
        est = new_est
    warnings.warn(f"power iteration did not converge within {max_iters} iterations; "
                  f"returning last estimate {est:.6g}")
    return est


def diameter(adj: np.ndarray) -> int:
    """Longest shortest path over the largest component of the symmetrized graph.

    Runs a simultaneous breadth-first expansion from every node (one boolean
    matrix product per distance level), then reads the eccentricities off the
    largest component.
    """
    a = symmetrize(np.asarray(adj)).astype(bool)
    n = a.shape[0]
    if n == 0 or not a.any():
        return 0
    a_f = a.astype(np.float64)
    covered = np.eye(n, dtype=bool) | a
    dist = np.zeros((n, n), dtype=np.int64)
    dist[a] = 1
    frontier = a.copy()
    level = 1
    while True:
        nxt = ((frontier.astype(np.float64) @ a_f) > 0) & ~covered
        if not nxt.any():
            break
        level += 1
        dist[nxt] = level
        covered |= nxt
        frontier = nxt
    component = covered[int(np.argmax(covered.sum(axis=1)))]
    members = np.flatnonzero(component)
    return int(dist[np.ix_(members, members)].max())


def diffusion_centrality(adj: np.ndarray, q: float, T: int) -> CentralityVector:
    """Walk-counting centrality: node j's score is [sum_{t=1..T} (q*adj)^t 1]_j.

    Computed with T repeated matrix-vector products; never forms matrix powers.
    """
    if q <= 0:
        raise ValueError("q must be positive")
    if T < 1:
        raise ValueError("T must be a positive integer")
    a = np.asarray(adj, dtype=np.float64)
    v = np.ones(a.shape[0])
    acc = np.zeros(a.shape[0])
    for _ in range(T):
        v = q * (a @ v)
        acc += v
    return CentralityVector(scores=acc, q=float(q), T=int(T))


def layer_centrality(g: MultiGraph, layer: str, q: float | None = None,
                     T: int | None = None, symmetric: bool = False) -> CentralityVector:
    """Diffusion centrality of every node in one layer, defaults from the layer itself.

    q defaults to 1/spectral_radius and T to the layer diameter. An edgeless
    layer (spectral radius 0) yields all-zero scores with a warning.
    """
    adj = g.layer(layer)
    if symmetric:
        adj = symmetrize(adj)
    if q is None:
        lam = spectral_radius(adj)
        if lam == 0.0:
            warnings.warn(f"layer {layer!r} has spectral radius 0; "
                          "diffusion centrality set to zero for all nodes")
            return CentralityVector(scores=np.zeros(g.node_count), q=0.0, T=0, layer=layer)
        q = 1.0 / lam
    if T is None:
        T = max(diameter(adj), 1)
    result = diffusion_centrality(adj, q=q, T=T)
    return CentralityVector(scores=result.scores, q=result.q, T=result.T, layer=layer)


def seed_set_dc(g: MultiGraph, layer: str, seeds, q: float | None = None,
                T: int | None = None, symmetric: bool = False) -> float:
    """Sum of the seed nodes' diffusion centralities in one layer."""
    seed_list = sorted(set(int(s) for s in seeds))
    if not seed_list:
        raise ValueError("seed set must be nonempty")
    for s in seed_list:
        g._check_node(s)
    vec = layer_centrality(g, layer, q=q, T=T, symmetric=symmetric)
    return float(vec.scores[seed_list].sum())
