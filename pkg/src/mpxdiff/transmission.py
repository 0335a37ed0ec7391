"""Per-contact transmission models over layer sets.

A model carries one marginal transmission probability per layer and, for each
two-layer set, the joint probability of transmitting on both layers at once.
Layer sets of size three or more are supported only under independence.
"""

from __future__ import annotations

import warnings
from typing import Iterable, Sequence

import numpy as np


class TransmissionModel:
    """Marginals q per layer plus pairwise both-transmit joints.

    Pairwise joints default to independence (f2 = qA*qB). A joint may be given
    directly as ``f2`` or through a correlation coefficient ``corr`` via
    f2 = qA*qB + corr*sqrt(qA(1-qA)*qB(1-qB)), clipped to the Frechet bounds
    with a warning if needed.
    """

    def __init__(self, marginals: dict[str, float] | Sequence[float],
                 f2: dict[tuple[str, str], float] | None = None,
                 corr: dict[tuple[str, str], float] | None = None):
        if not isinstance(marginals, dict):
            marginals = {f"layer{l}": q for l, q in enumerate(marginals)}
        self.layer_names: tuple[str, ...] = tuple(marginals.keys())
        self._q = np.array([float(marginals[name]) for name in self.layer_names])
        if np.any(self._q <= 0.0) or np.any(self._q >= 1.0):
            raise ValueError("marginal transmission probabilities must lie strictly in (0, 1)")

        self._index = {name: l for l, name in enumerate(self.layer_names)}
        self._joints: dict[frozenset[int], float] = {}
        for pair, value in (f2 or {}).items():
            self._set_joint(pair, float(value))
        for pair, c in (corr or {}).items():
            ia, ib = self._pair_indices(pair)
            qa, qb = self._q[ia], self._q[ib]
            val = qa * qb + float(c) * np.sqrt(qa * (1 - qa) * qb * (1 - qb))
            self._set_joint(pair, val, clip=True)

    def _pair_indices(self, pair: Iterable) -> tuple[int, int]:
        a, b = pair
        ia = self._index[a] if isinstance(a, str) else int(a)
        ib = self._index[b] if isinstance(b, str) else int(b)
        if ia == ib or not (0 <= ia < len(self._q)) or not (0 <= ib < len(self._q)):
            raise ValueError(f"invalid layer pair {pair!r}")
        return ia, ib

    def _set_joint(self, pair, value: float, clip: bool = False) -> None:
        ia, ib = self._pair_indices(pair)
        lo, hi = self.frechet_bounds(ia, ib)
        if clip and not (lo <= value <= hi):
            warnings.warn(f"joint for pair {pair!r} clipped from {value:.6g} into "
                          f"Frechet bounds [{lo:.6g}, {hi:.6g}]")
            value = min(max(value, lo), hi)
        if not (lo - 1e-12 <= value <= hi + 1e-12):
            raise ValueError(f"joint {value} for pair {pair!r} violates Frechet bounds "
                             f"[{lo}, {hi}]")
        self._joints[frozenset((ia, ib))] = min(max(value, lo), hi)

    def q(self, layer: int | str) -> float:
        l = self._index[layer] if isinstance(layer, str) else int(layer)
        return float(self._q[l])

    def frechet_bounds(self, a: int | str, b: int | str) -> tuple[float, float]:
        ia, ib = self._pair_indices((a, b))
        qa, qb = self._q[ia], self._q[ib]
        return max(0.0, qa + qb - 1.0), min(qa, qb)

    def joint(self, a: int | str, b: int | str) -> float:
        """P(both layers transmit) for a pair; independence product when unset."""
        ia, ib = self._pair_indices((a, b))
        key = frozenset((ia, ib))
        if key in self._joints:
            return self._joints[key]
        return float(self._q[ia] * self._q[ib])

    def is_independent_pair(self, a: int | str, b: int | str) -> bool:
        ia, ib = self._pair_indices((a, b))
        key = frozenset((ia, ib))
        return key not in self._joints or \
            abs(self._joints[key] - self._q[ia] * self._q[ib]) < 1e-15

    def two_layer_params(self) -> tuple[float, float, float]:
        """(qA, qB, f2) for a model with exactly two layers."""
        if len(self._q) != 2:
            raise ValueError("this operation needs a model with exactly two layers")
        return float(self._q[0]), float(self._q[1]), self.joint(0, 1)

    def __repr__(self):
        qs = ", ".join(f"{n}={q:g}" for n, q in zip(self.layer_names, self._q))
        return f"TransmissionModel({qs}, joints={len(self._joints)})"


def independent_model(q: float | Sequence[float], layers: Sequence[str] | int = 2) -> TransmissionModel:
    """Convenience constructor: independent transmission, scalar or per-layer q."""
    if isinstance(layers, int):
        layers = tuple(f"layer{l}" for l in range(layers))
    if np.isscalar(q):
        q = [float(q)] * len(layers)
    return TransmissionModel(dict(zip(layers, q)))


def transmission_pmf(model: TransmissionModel, layers: Iterable[int | str]) -> np.ndarray:
    """Probability vector over transmission counts 0..|layers| for one contact.

    Two-layer sets use the stored joint; larger sets require independence
    across every pair in the set.
    """
    idx = [model._index[l] if isinstance(l, str) else int(l) for l in layers]
    if len(set(idx)) != len(idx):
        raise ValueError("layer set contains duplicates")
    if len(idx) == 0:
        raise ValueError("layer set must be nonempty")
    if len(idx) == 1:
        q = model.q(idx[0])
        return np.array([1.0 - q, q])
    if len(idx) == 2:
        qa, qb = model.q(idx[0]), model.q(idx[1])
        f2 = model.joint(idx[0], idx[1])
        pmf = np.array([1.0 - qa - qb + f2, qa + qb - 2.0 * f2, f2])
        return np.clip(pmf, 0.0, None)
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            if not model.is_independent_pair(idx[a], idx[b]):
                raise ValueError("correlated joints are unsupported for layer sets of size >= 3")
    pmf = np.array([1.0])
    for l in idx:
        q = model.q(l)
        pmf = np.convolve(pmf, [1.0 - q, q])
    return pmf


def no_transmission_prob(model: TransmissionModel, layers: Iterable[int | str]) -> float:
    """Probability that a contact over the given layer set transmits nothing."""
    return float(transmission_pmf(model, layers)[0])


def sample_transmissions(model: TransmissionModel, layers: Iterable[int | str],
                         rng: np.random.Generator) -> int:
    """Draw one transmission count from the contact's pmf (inverse CDF on one uniform)."""
    pmf = transmission_pmf(model, layers)
    return int(np.searchsorted(np.cumsum(pmf), rng.random(), side="right"))


def corr_condition(model: TransmissionModel, rho: float,
                   pair: tuple[int | str, int | str] | None = None) -> bool:
    """Whether transmission is not too negatively correlated: qA*qB*rho <= f2."""
    if not (0.0 <= rho <= 1.0):
        raise ValueError("rho must lie in [0, 1]")
    if pair is None:
        if len(model.layer_names) != 2:
            raise ValueError("pass an explicit pair for models with more than two layers")
        pair = (0, 1)
    qa, qb = model.q(pair[0]), model.q(pair[1])
    return qa * qb * rho <= model.joint(*pair)
