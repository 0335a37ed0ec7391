"""Descriptive layer statistics, dyad-level correlations, PCA, and the backbone.

Everything here works on OR-symmetrized layers and unordered household pairs.
Correlations and PCA use the sample (ddof=1) convention; degree dispersion
within a village is the population standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .multigraph import MultiGraph, symmetrize


@dataclass(frozen=True)
class LayerStats:
    layer: str
    mean_degree: float
    degree_sd: float
    density: float
    triangles: int
    clustering: float


@dataclass(frozen=True)
class DyadMatrix:
    """0/1 link indicators per unordered pair (rows) and layer (columns)."""

    matrix: np.ndarray
    layer_names: tuple[str, ...]
    village_sizes: tuple[int, ...]

    def __post_init__(self):
        expected = sum(n * (n - 1) // 2 for n in self.village_sizes)
        if self.matrix.shape != (expected, len(self.layer_names)):
            raise ValueError(f"dyad matrix shape {self.matrix.shape} does not match "
                             f"{expected} pairs x {len(self.layer_names)} layers")


@dataclass(frozen=True)
class PcaResult:
    eigenvalues: np.ndarray          # descending, clamped at 0
    loadings: np.ndarray             # column k = loading vector of component k
    explained: np.ndarray            # shares, sum to 1
    standardized: bool


def layer_stats(g: MultiGraph, layer: str) -> LayerStats:
    """Degree, density, triangle, and clustering summary of one symmetrized layer."""
    a = symmetrize(g.layer(layer))
    n = g.node_count
    degrees = a.sum(axis=1).astype(np.float64)
    edges = int(a.sum()) // 2
    density = edges / (n * (n - 1) / 2) if n > 1 else 0.0
    a64 = a.astype(np.int64)
    triangles = int(np.trace(a64 @ a64 @ a64)) // 6
    triples = int((degrees * (degrees - 1) / 2).sum())
    clustering = 3.0 * triangles / triples if triples > 0 else 0.0
    return LayerStats(layer=layer, mean_degree=float(degrees.mean()),
                      degree_sd=float(degrees.std(ddof=0)), density=float(density),
                      triangles=triangles, clustering=float(clustering))


def dyad_vector(layer: np.ndarray) -> np.ndarray:
    """Upper-triangle (i < j) 0/1 entries of a symmetrized layer."""
    a = symmetrize(layer)
    iu = np.triu_indices(a.shape[0], k=1)
    return a[iu].astype(np.float64)


def build_dyad_matrix(graphs: Iterable[MultiGraph]) -> DyadMatrix:
    """Stack per-village dyad indicators into one pooled observation matrix."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one village")
    names = graphs[0].layer_names
    for g in graphs:
        if g.layer_names != names:
            raise ValueError("all villages must share the same layer list")
    blocks = []
    for g in graphs:
        cols = [dyad_vector(g.layer(name)) for name in names]
        blocks.append(np.column_stack(cols))
    return DyadMatrix(matrix=np.vstack(blocks), layer_names=names,
                      village_sizes=tuple(g.node_count for g in graphs))


def layer_correlation(g: MultiGraph) -> np.ndarray:
    """Pearson correlation of the 0/1 dyad indicators across layers.

    Zero-variance layers produce NaN off-diagonal entries; the diagonal is 1.
    """
    if g.layer_count < 2:
        raise ValueError("need at least two layers to correlate")
    d = build_dyad_matrix([g]).matrix
    centered = d - d.mean(axis=0)
    sd = d.std(axis=0, ddof=1)
    cov = centered.T @ centered / (d.shape[0] - 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = cov / np.outer(sd, sd)
    corr[~np.isfinite(corr)] = np.nan
    np.fill_diagonal(corr, 1.0)
    return corr


def pca_dyads(d: DyadMatrix, standardize: bool = True) -> PcaResult:
    """Eigendecomposition of the dyad-column covariance.

    Columns are always centered; with ``standardize`` they are also scaled to
    unit sample variance (zero-variance columns are left unscaled). The sign
    of each loading vector is fixed so its largest-magnitude entry is
    positive.
    """
    x = d.matrix.astype(np.float64)
    if x.shape[0] < len(d.layer_names):
        raise ValueError("need at least as many dyads as layers")
    x = x - x.mean(axis=0)
    if standardize:
        sd = x.std(axis=0, ddof=1)
        sd[sd == 0] = 1.0
        x = x / sd
    cov = x.T @ x / (x.shape[0] - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = np.clip(eigvals[order], 0.0, None)
    eigvecs = eigvecs[:, order]
    for k in range(eigvecs.shape[1]):
        pivot = int(np.argmax(np.abs(eigvecs[:, k])))
        if eigvecs[pivot, k] < 0:
            eigvecs[:, k] = -eigvecs[:, k]
    total = eigvals.sum()
    explained = eigvals / total if total > 0 else np.zeros_like(eigvals)
    return PcaResult(eigenvalues=eigvals, loadings=eigvecs, explained=explained,
                     standardized=standardize)


def backbone(g: MultiGraph, K: int, standardize: bool = True) -> np.ndarray:
    """Weighted dyad graph projecting multiplex links onto the top K components.

    Entry (i, j) is sum_k w_k * (sum_l g_l[i,j] * loading_kl) with
    eigenvalue-proportional weights w_k = lambda_k / sum_{j<=K} lambda_j.
    """
    if not (1 <= K <= g.layer_count):
        raise ValueError(f"K must lie in [1, {g.layer_count}]")
    pca = pca_dyads(build_dyad_matrix([g]), standardize=standardize)
    lam = pca.eigenvalues[:K]
    total = lam.sum()
    weights = lam / total if total > 0 else np.full(K, 1.0 / K)
    layers = np.stack([symmetrize(g.layer(name)) for name in g.layer_names]).astype(np.float64)
    z = np.zeros((g.node_count, g.node_count))
    for k in range(K):
        projection = np.tensordot(pca.loadings[:, k], layers, axes=(0, 0))
        z += weights[k] * projection
    return z
