"""Random multiplex village generators for simulations and pipeline studies.

Layers are directed random graphs with lognormal node propensities (Chung-Lu
style draws), so degrees are heterogeneous and seed placement matters.
Correlated layers come from either copying a fraction of a base layer's edges
(direct control of edge overlap at fixed density) or from sharing part of the
propensity factor (correlated hubs, independent edges).
"""

from __future__ import annotations

import numpy as np

from .multigraph import MultiGraph, from_layers


def er_directed(n: int, mean_out_degree: float, rng: np.random.Generator) -> np.ndarray:
    """Directed random graph with i.i.d. links and no self-loops."""
    if n < 2:
        raise ValueError("need at least two nodes")
    p = min(mean_out_degree / (n - 1), 1.0)
    a = (rng.random((n, n)) < p).astype(np.uint8)
    np.fill_diagonal(a, 0)
    return a


def lognormal_weights(n: int, cv: float, rng: np.random.Generator,
                      mix: np.ndarray | None = None, loading: float = 0.0) -> np.ndarray:
    """Mean-one lognormal propensities with coefficient of variation ``cv``.

    With ``mix`` and ``loading`` the underlying normal is a factor blend
    loading*mix + sqrt(1-loading^2)*own, which correlates weights across
    layers without tying their link draws together.
    """
    sigma = np.sqrt(np.log(1.0 + cv * cv))
    own = rng.standard_normal(n)
    z = own if mix is None else loading * mix + np.sqrt(1.0 - loading ** 2) * own
    return np.exp(sigma * z - sigma * sigma / 2.0)


def weighted_directed(n: int, mean_out_degree: float, weights: np.ndarray,
                      rng: np.random.Generator) -> np.ndarray:
    """Directed graph with link probability proportional to w_i * w_j."""
    cross = weights.sum() ** 2 - (weights * weights).sum()
    p = np.outer(weights, weights) * (mean_out_degree * n / cross)
    np.fill_diagonal(p, 0.0)
    a = (rng.random((n, n)) < np.clip(p, 0.0, 1.0)).astype(np.uint8)
    np.fill_diagonal(a, 0)
    return a


def heterogeneous_directed(n: int, mean_out_degree: float, rng: np.random.Generator,
                           cv: float = 1.2) -> np.ndarray:
    """Directed random graph with lognormal node propensities."""
    if n < 2:
        raise ValueError("need at least two nodes")
    return weighted_directed(n, mean_out_degree, lognormal_weights(n, cv, rng), rng)


def overlapping_layer(base: np.ndarray, overlap: float, mean_out_degree: float,
                      rng: np.random.Generator,
                      weights: np.ndarray | None = None) -> np.ndarray:
    """Layer sharing roughly ``overlap`` of its edges with ``base``.

    The result has round(mean_out_degree * n) directed edges: a uniform sample
    of base edges forms the shared part; the rest are fresh non-base pairs,
    drawn proportionally to w_i * w_j when ``weights`` is given (keeping the
    fresh part on the same hub structure as the base) and uniformly otherwise.
    """
    base = np.asarray(base, dtype=np.uint8)
    n = base.shape[0]
    if not (0.0 <= overlap <= 1.0):
        raise ValueError("overlap must lie in [0, 1]")
    target = int(round(mean_out_degree * n))
    base_rows, base_cols = np.nonzero(base)
    n_shared = min(int(round(overlap * target)), base_rows.size, target)

    out = np.zeros_like(base)
    if n_shared > 0:
        pick = rng.choice(base_rows.size, size=n_shared, replace=False)
        out[base_rows[pick], base_cols[pick]] = 1

    n_fresh = target - n_shared
    if n_fresh > 0:
        candidates = np.flatnonzero(~np.eye(n, dtype=bool) & (base == 0) & (out == 0))
        n_fresh = min(n_fresh, candidates.size)
        if weights is None:
            pick = rng.choice(candidates.size, size=n_fresh, replace=False)
        else:
            rows, cols = np.unravel_index(candidates, out.shape)
            probs = weights[rows] * weights[cols]
            probs = probs / probs.sum()
            pick = rng.choice(candidates.size, size=n_fresh, replace=False, p=probs)
        out[np.unravel_index(candidates[pick], out.shape)] = 1
    return out


def village_triple(n: int, rng: np.random.Generator, base_deg: float = 8.0,
                   indep_deg: float = 6.0, overlap_deg: float = 5.0,
                   overlap: float = 0.7) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Three layers for a degree-matched comparison pair.

    A1 is the base layer; A2 an independent, denser alternative; A3 a sparser
    layer overlapping A1. Pairing A1 with A3 therefore produces the more
    multiplexed network, and pairing with pruned A2 the less multiplexed one
    at matched density.
    """
    if indep_deg <= overlap_deg:
        raise ValueError("the independent layer must be denser than the overlapping one "
                         "so that pruning equalizes out-degrees")
    a1 = er_directed(n, base_deg, rng)
    a2 = er_directed(n, indep_deg, rng)
    a3 = overlapping_layer(a1, overlap, overlap_deg, rng)
    return a1, a2, a3


def two_layer_village(n: int, rng: np.random.Generator, deg_a: float = 6.0,
                      deg_b: float = 5.0, overlap: float = 0.0,
                      names: tuple[str, str] = ("advice", "social"),
                      cv: float = 1.5) -> MultiGraph:
    """Two-layer village whose multiplexing level is set by the overlap knob.

    Both layers follow one shared propensity vector, so high- and low-overlap
    villages have the same hub structure and differ only in how much their
    link sets coincide.
    """
    w = lognormal_weights(n, cv, rng)
    a = weighted_directed(n, deg_a, w, rng)
    b = overlapping_layer(a, overlap, deg_b, rng, weights=w)
    return from_layers({names[0]: a, names[1]: b})


def rct_village(n: int, rng: np.random.Generator,
                names: tuple[str, ...] = ("advice", "social", "kerorice"),
                degs: tuple[float, ...] = (5.0, 6.0, 5.0),
                weight_corr: float = 0.35, cv: float = 1.6) -> MultiGraph:
    """Multi-layer village with correlated-but-distinct layers.

    Each layer's propensities load on a common factor with weight
    ``weight_corr`` and its links are drawn independently given them, so
    layers share hubs only partially and each carries its own reach
    structure.
    """
    common = rng.standard_normal(n)
    layers = {}
    for name, deg in zip(names, degs):
        w = lognormal_weights(n, cv, rng, mix=common, loading=weight_corr)
        layers[name] = weighted_directed(n, deg, w, rng)
    return from_layers(layers)
