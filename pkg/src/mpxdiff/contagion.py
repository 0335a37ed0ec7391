"""Stochastic SIS threshold contagion on multilayer graphs.

The update is synchronous: susceptible nodes count transmissions from
currently infected neighbors (at most one per layer per neighbor) and become
infected when the count reaches the threshold; nodes infected at the start of
the period recover with the recovery probability. Newly infected nodes are
not recovery-eligible in their infection period, and exposure counts reset
every period.

Randomness layout for grid experiments, derived from one master seed via
numpy SeedSequence spawn keys:

    (0, village)                        pair construction (pruning)
    (1, village, cell, rep)             seed-set draw, shared by both pair members
    (2, village, cell, rep, member)     transmission/recovery draws

so paired runs start from identical seed sets while their transmission
randomness stays independent.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache
from itertools import product

import numpy as np
from scipy import stats as _stats

from .multigraph import MultiGraph, aggregate, from_layers
from .multiplexity import village_score
from .transmission import TransmissionModel, transmission_pmf


@dataclass(frozen=True)
class SimConfig:
    """Parameters of one contagion run; ``model`` may be a scalar q for all layers."""

    tau: int = 1
    delta: float = 0.5
    model: TransmissionModel | float = 0.3
    seed_count: int | None = None           # default floor(sqrt(n))
    max_iters: int = 1000
    convergence_tol: float = 1e-8
    stabilization_iters: int = 100
    rng_seed: int = 0

    def __post_init__(self):
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError("delta must lie in [0, 1]")
        if self.convergence_tol <= 0:
            raise ValueError("convergence_tol must be positive")
        if isinstance(self.model, float) and not (0.0 < self.model < 1.0):
            raise ValueError("scalar transmission probability must lie strictly in (0, 1)")


@dataclass(frozen=True)
class SimResult:
    steady_share: float
    trajectory: np.ndarray
    converged: bool
    periods_run: int
    seeds: tuple[int, ...]
    ever_infected_count: int


def simulate(g: MultiGraph, cfg: SimConfig, seeds=None, horizon: int | None = None) -> SimResult:
    """Run one SIS contagion and return the steady-state share.

    Seeds default to a uniform draw without replacement of size
    floor(sqrt(n)). The loop breaks when the infected share changes by less
    than the convergence tolerance between consecutive periods (or at
    max_iters), then runs the stabilization window and averages it. With
    ``horizon`` set, exactly that many periods run instead and the final
    share is reported; this serves outcome counting at a fixed time.
    """
    n = g.node_count
    ss = np.random.SeedSequence(cfg.rng_seed)
    seed_ss, trans_ss = ss.spawn(2)
    if seeds is None:
        k = cfg.seed_count if cfg.seed_count is not None else math.isqrt(n)
        if k > n:
            raise ValueError(f"seed_count {k} exceeds node count {n}")
        seeds = np.random.default_rng(seed_ss).choice(n, size=k, replace=False)
    seeds = sorted(set(int(s) for s in seeds))
    if any(s < 0 or s >= n for s in seeds):
        raise ValueError("seed ids out of range")
    if len(seeds) > n:
        raise ValueError("seed set exceeds node count")

    rng = np.random.default_rng(trans_ss)
    stepper = _make_stepper(g, cfg)

    state = np.zeros(n, dtype=bool)
    state[seeds] = True
    ever = state.copy()
    trajectory: list[float] = []
    share_prev = state.mean()

    if horizon is not None:
        for _ in range(horizon):
            if state.any():
                state = stepper(state, rng)
                ever |= state
            trajectory.append(state.mean())
        return SimResult(steady_share=float(trajectory[-1]) if trajectory else float(share_prev),
                         trajectory=np.array(trajectory), converged=False,
                         periods_run=len(trajectory), seeds=tuple(seeds),
                         ever_infected_count=int(ever.sum()))

    converged = False
    periods = 0
    for _ in range(cfg.max_iters):
        if not state.any():
            share = 0.0
        else:
            state = stepper(state, rng)
            ever |= state
            share = float(state.mean())
        trajectory.append(share)
        periods += 1
        if abs(share - share_prev) < cfg.convergence_tol:
            converged = True
            break
        share_prev = share

    window: list[float] = []
    for _ in range(cfg.stabilization_iters):
        if state.any():
            state = stepper(state, rng)
            ever |= state
        window.append(float(state.mean()))
    trajectory.extend(window)

    steady = float(np.mean(window)) if window else float(share_prev)
    return SimResult(steady_share=steady, trajectory=np.array(trajectory),
                     converged=converged, periods_run=periods, seeds=tuple(seeds),
                     ever_infected_count=int(ever.sum()))


# ---------------------------------------------------------------------------
# Period steppers
# ---------------------------------------------------------------------------

def _make_stepper(g: MultiGraph, cfg: SimConfig):
    model = cfg.model
    if isinstance(model, (int, float)):
        return _uniform_stepper(g, float(model), cfg.tau, cfg.delta)
    if not isinstance(model, TransmissionModel):
        raise TypeError("model must be a TransmissionModel or a scalar q")
    if model.layer_names != g.layer_names:
        raise ValueError("model layers must match graph layers")
    qs = {model.q(l) for l in range(len(model.layer_names))}
    all_indep = all(model.is_independent_pair(a, b)
                    for a in range(g.layer_count) for b in range(a + 1, g.layer_count))
    if len(qs) == 1 and all_indep:
        return _uniform_stepper(g, qs.pop(), cfg.tau, cfg.delta)
    return _general_stepper(g, model, cfg.tau, cfg.delta)


def _uniform_stepper(g: MultiGraph, q: float, tau: int, delta: float):
    """Fast path: same q on every layer, independent transmissions.

    The total transmission count to node i is Binomial(active links, q), so a
    per-node threshold-probability table plus one uniform draw per node
    reproduces the exposure rule exactly. Uniforms are drawn in blocks to
    amortize generator overhead (consumption order is fixed, so runs stay
    deterministic for a given seed).
    """
    a_total = aggregate(g, "total").astype(np.float32)
    m_max = int(a_total.sum(axis=1).max()) if g.node_count else 0
    table = np.asarray(_binom_tail_table(m_max, q, tau))
    n = g.node_count
    block = 64
    buffer: list = [None, block]

    def step(state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if buffer[1] >= block:
            buffer[0] = rng.random((block, n))
            buffer[1] = 0
        u = buffer[0][buffer[1]]
        buffer[1] += 1
        m = (a_total @ state.astype(np.float32)).astype(np.intp)
        return np.where(state, u >= delta, u < table[m])

    return step


@lru_cache(maxsize=4096)
def _binom_tail_table(m_max: int, q: float, tau: int) -> tuple:
    """table[m] = P(Binomial(m, q) >= tau) for m = 0..m_max."""
    m = np.arange(m_max + 1)
    if tau == 1:
        tail = 1.0 - (1.0 - q) ** m
    elif tau == 2:
        tail = 1.0 - (1.0 - q) ** m - m * q * (1.0 - q) ** np.maximum(m - 1, 0)
        tail[m < 2] = 0.0
    else:
        tail = _stats.binom.sf(tau - 1, m, q)
        tail[m < tau] = 0.0
    return tuple(np.clip(tail, 0.0, 1.0))


def _general_stepper(g: MultiGraph, model: TransmissionModel, tau: int, delta: float):
    """Layer-set-resolved path: per-pair transmission counts follow the joint pmf."""
    counts = g.adjacency.sum(axis=0)
    classes: list[tuple[np.ndarray, np.ndarray]] = []
    layer_stack = g.adjacency.astype(bool)
    for subset_mask in range(1, 2 ** g.layer_count):
        members = [l for l in range(g.layer_count) if subset_mask >> l & 1]
        in_all = np.logical_and.reduce([layer_stack[l] for l in members])
        exact = in_all & (counts == len(members))
        if exact.any():
            pmf = transmission_pmf(model, members)
            classes.append((exact.astype(np.float64), pmf))

    def step(state: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        n = state.shape[0]
        exposures = np.zeros(n, dtype=np.int64)
        s = state.astype(np.float64)
        for mat, pmf in classes:
            active = (mat @ s).astype(np.int64)
            exposures += _sample_count_sums(active, pmf, rng)
        u = rng.random(n)
        return np.where(state, u >= delta, exposures >= tau)

    return step


def _sample_count_sums(n_contacts: np.ndarray, pmf: np.ndarray,
                       rng: np.random.Generator) -> np.ndarray:
    """Sum of n_contacts[i] iid draws from pmf, vectorized over i.

    Sequential conditional binomials over the pmf categories (the standard
    multinomial decomposition).
    """
    total = np.zeros_like(n_contacts)
    remaining = n_contacts.copy()
    prob_left = 1.0
    for k, p_k in enumerate(pmf[:-1]):
        if prob_left <= 0:
            break
        draws = rng.binomial(remaining, min(max(p_k / prob_left, 0.0), 1.0))
        total += k * draws
        remaining -= draws
        prob_left -= p_k
    total += (len(pmf) - 1) * remaining
    return total


# ---------------------------------------------------------------------------
# Degree-matched comparison pairs and the grid experiment
# ---------------------------------------------------------------------------

PAIR_LAYERS = ("common", "varying")


def build_comparison_pair(a1: np.ndarray, a2: np.ndarray, a3: np.ndarray,
                          rng: np.random.Generator) -> tuple[MultiGraph, MultiGraph]:
    """Combine a base layer with two degree-matched alternatives.

    The denser of (a2, a3) is pruned by removing directed edges uniformly at
    random until its edge count matches the sparser's. Returns (g, g_prime):
    g pairs a1 with the unpruned sparser layer, g_prime pairs a1 with the
    pruned one, so both second layers have equal average out-degree.
    """
    a1, a2, a3 = (np.asarray(a, dtype=np.uint8) for a in (a1, a2, a3))
    if not (a1.shape == a2.shape == a3.shape) or a1.ndim != 2:
        raise ValueError("layers must be square matrices of equal shape")
    e2, e3 = int(a2.sum()), int(a3.sum())
    denser, sparser = (a2, a3) if e2 >= e3 else (a3, a2)
    pruned = denser.copy()
    excess = int(denser.sum()) - int(sparser.sum())
    if excess > 0:
        rows, cols = np.nonzero(pruned)
        drop = rng.choice(rows.size, size=excess, replace=False)
        pruned[rows[drop], cols[drop]] = 0
    g = from_layers([a1, sparser], PAIR_LAYERS)
    g_prime = from_layers([a1, pruned], PAIR_LAYERS)
    return g, g_prime


@dataclass(frozen=True)
class GridResult:
    """Raw per-run records of a (q, delta) grid experiment plus aggregations."""

    tau: int
    q_values: tuple[float, ...]
    delta_values: tuple[float, ...]
    records: np.ndarray  # structured: q, delta, village, rep, share_more, share_less

    @staticmethod
    def outcome(share_more: np.ndarray, share_less: np.ndarray) -> np.ndarray:
        """1 when the more multiplexed run diffused strictly more, ties count half."""
        return np.where(share_more > share_less, 1.0,
                        np.where(share_more < share_less, 0.0, 0.5))

    def cell_table(self, bins: int = 10) -> list[dict]:
        """Rows per (cell, prevalence decile): the grid-results file contents."""
        rows = []
        edges = np.linspace(0.0, 1.0, bins + 1)
        r = self.records
        prevalence = (r["share_more"] + r["share_less"]) / 2.0
        outcomes = self.outcome(r["share_more"], r["share_less"])
        bin_idx = np.clip(np.digitize(prevalence, edges) - 1, 0, bins - 1)
        for q in self.q_values:
            for delta in self.delta_values:
                in_cell = (r["q"] == q) & (r["delta"] == delta)
                for b in range(bins):
                    mask = in_cell & (bin_idx == b)
                    count = int(mask.sum())
                    if count == 0:
                        continue
                    rows.append({
                        "q": q, "delta": delta, "tau": self.tau,
                        "prevalence_bin": f"{edges[b]:.1f}-{edges[b + 1]:.1f}",
                        "frac_mpx_higher": float(outcomes[mask].mean()),
                        "mean_prevalence": float(prevalence[mask].mean()),
                        "n_runs": count,
                    })
        return rows

    def cell_summary(self) -> list[dict]:
        """Per-cell pooled fraction and mean prevalence (all bins together)."""
        rows = []
        r = self.records
        prevalence = (r["share_more"] + r["share_less"]) / 2.0
        outcomes = self.outcome(r["share_more"], r["share_less"])
        for q in self.q_values:
            for delta in self.delta_values:
                mask = (r["q"] == q) & (r["delta"] == delta)
                rows.append({
                    "q": q, "delta": delta, "tau": self.tau,
                    "frac_mpx_higher": float(outcomes[mask].mean()),
                    "mean_prevalence": float(prevalence[mask].mean()),
                    "n_wins": int((r["share_more"][mask] > r["share_less"][mask]).sum()),
                    "n_losses": int((r["share_more"][mask] < r["share_less"][mask]).sum()),
                    "n_runs": int(mask.sum()),
                })
        return rows

    def bin_summary(self, bins: int = 10) -> list[dict]:
        """Pooled across cells, by prevalence bin."""
        rows = []
        edges = np.linspace(0.0, 1.0, bins + 1)
        r = self.records
        prevalence = (r["share_more"] + r["share_less"]) / 2.0
        outcomes = self.outcome(r["share_more"], r["share_less"])
        bin_idx = np.clip(np.digitize(prevalence, edges) - 1, 0, bins - 1)
        for b in range(bins):
            mask = bin_idx == b
            if not mask.any():
                continue
            rows.append({
                "prevalence_bin": f"{edges[b]:.1f}-{edges[b + 1]:.1f}",
                "bin_low": float(edges[b]), "bin_high": float(edges[b + 1]),
                "frac_mpx_higher": float(outcomes[mask].mean()),
                "mean_prevalence": float(prevalence[mask].mean()),
                "n_wins": int((r["share_more"][mask] > r["share_less"][mask]).sum()),
                "n_losses": int((r["share_more"][mask] < r["share_less"][mask]).sum()),
                "n_runs": int(mask.sum()),
            })
        return rows


_RECORD_DTYPE = np.dtype([("q", np.float64), ("delta", np.float64),
                          ("village", np.int64), ("rep", np.int64),
                          ("share_more", np.float64), ("share_less", np.float64)])


def run_grid(villages, q_grid, delta_grid, tau: int, reps: int, master_seed: int,
             workers: int | None = None, seed_count: int | None = None) -> GridResult:
    """Paired contagion runs over a (q, delta) grid for every village triple.

    Each village is a triple of single-layer adjacency arrays; pairs are built
    once per village with the pair-construction stream, and the more
    multiplexed member is identified by its village multiplexing score.
    Deterministic for a fixed master seed, regardless of worker count.
    """
    q_values = tuple(float(q) for q in q_grid)
    delta_values = tuple(float(d) for d in delta_grid)
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if not q_values or not delta_values:
        raise ValueError("grid must be nonempty")
    villages = list(villages)
    tasks = [(v_idx, triple, q_values, delta_values, tau, reps, master_seed, seed_count)
             for v_idx, triple in enumerate(villages)]
    if workers is not None and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_village_task, tasks))
    else:
        chunks = [_village_task(t) for t in tasks]
    records = np.concatenate(chunks) if chunks else np.empty(0, dtype=_RECORD_DTYPE)
    records.sort(order=["village", "q", "delta", "rep"])
    return GridResult(tau=tau, q_values=q_values, delta_values=delta_values,
                      records=records)


def _village_task(args) -> np.ndarray:
    v_idx, triple, q_values, delta_values, tau, reps, master_seed, seed_count = args
    pair_rng = np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(0, v_idx)))
    g, g_prime = build_comparison_pair(*triple, rng=pair_rng)
    score_g, score_gp = village_score(g), village_score(g_prime)
    more, less = (g, g_prime) if score_g >= score_gp else (g_prime, g)
    n = more.node_count
    k = seed_count if seed_count is not None else math.isqrt(n)

    out = np.empty(len(q_values) * len(delta_values) * reps, dtype=_RECORD_DTYPE)
    row = 0
    for ci, (q, delta) in enumerate(product(q_values, delta_values)):
        cfg = SimConfig(tau=tau, delta=delta, model=q, seed_count=k)
        for rep in range(reps):
            seed_rng = np.random.default_rng(
                np.random.SeedSequence(master_seed, spawn_key=(1, v_idx, ci, rep)))
            seeds = seed_rng.choice(n, size=k, replace=False)
            shares = []
            for member in range(2):
                run_seed = int(np.random.SeedSequence(
                    master_seed, spawn_key=(2, v_idx, ci, rep, member)
                ).generate_state(1, np.uint64)[0])
                result = simulate(more if member == 0 else less,
                                  replace(cfg, rng_seed=run_seed), seeds=seeds)
                shares.append(result.steady_share)
            out[row] = (q, delta, v_idx, rep, shares[0], shares[1])
            row += 1
    return out


GRID_HEADER = "q,delta,tau,prevalence_bin,frac_mpx_higher,mean_prevalence,n_runs"


def write_grid_file(path, result: GridResult, bins: int = 10) -> None:
    rows = [GRID_HEADER]
    for r in result.cell_table(bins):
        rows.append(f"{r['q']:g},{r['delta']:g},{r['tau']},{r['prevalence_bin']},"
                    f"{r['frac_mpx_higher']:.6f},{r['mean_prevalence']:.6f},{r['n_runs']}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(rows) + "\n")
