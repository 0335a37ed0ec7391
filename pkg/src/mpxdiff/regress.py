"""OLS with robust errors, Puffer-preconditioned LASSO, and the synthetic-RCT pipeline.

The LASSO objective is (1/2n)||y - X b||^2 + penalty * sum_j w_j |b_j| with
per-column weights w_j in {0, 1}; control columns are never penalized.
Preconditioning replaces (X, y) by (FX, Fy) with F = U diag(1/s) U' from the
singular decomposition, which makes the columns exactly orthonormal so the
LASSO selects consistently even when the raw columns are highly correlated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _stats

from . import centrality, contagion, multiplexity, synth
from .multigraph import MultiGraph, from_layers
from .transmission import TransmissionModel


@dataclass(frozen=True)
class DesignMatrix:
    """Named regression design; ``penalized`` marks columns the LASSO may drop."""

    names: tuple[str, ...]
    X: np.ndarray
    penalized: tuple[bool, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ValueError("column names must be unique")
        if self.X.ndim != 2 or self.X.shape[1] != len(self.names):
            raise ValueError("X shape does not match column names")
        if len(self.penalized) != len(self.names):
            raise ValueError("penalized flags must match columns")

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.names.index(name)]

    def select(self, names) -> "DesignMatrix":
        idx = [self.names.index(n) for n in names]
        return DesignMatrix(names=tuple(self.names[i] for i in idx),
                            X=self.X[:, idx],
                            penalized=tuple(self.penalized[i] for i in idx))


def design_matrix(columns: dict[str, np.ndarray], penalized=(),
                  intercept: bool = True) -> DesignMatrix:
    """Assemble a DesignMatrix from named column vectors."""
    names = (("const",) if intercept else ()) + tuple(columns.keys())
    cols = []
    if intercept:
        first = next(iter(columns.values()))
        cols.append(np.ones(len(first)))
    cols.extend(np.asarray(v, dtype=np.float64) for v in columns.values())
    flags = tuple(n in penalized for n in names)
    return DesignMatrix(names=names, X=np.column_stack(cols), penalized=flags)


def standardize(x: np.ndarray) -> np.ndarray:
    """Mean-zero, unit-variance scaling; constant columns map to zeros."""
    x = np.asarray(x, dtype=np.float64)
    sd = x.std()
    if sd == 0:
        return x - x.mean()
    return (x - x.mean()) / sd


@dataclass(frozen=True)
class RegressionResult:
    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray | None = None
    pvalues: np.ndarray | None = None
    r2: float | None = None
    nobs: int = 0
    # LASSO-path fields
    penalties: np.ndarray | None = None
    coef_path: np.ndarray | None = None          # (n_penalties, p)
    active_sets: tuple[tuple[str, ...], ...] | None = None
    converged: tuple[bool, ...] | None = None

    def coef_of(self, name: str) -> float:
        return float(self.coef[self.names.index(name)])


def ols(y: np.ndarray, design: DesignMatrix) -> RegressionResult:
    """Least squares with HC1 heteroskedasticity-robust standard errors."""
    X = design.X
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n <= p:
        raise ValueError(f"need more observations than columns ({n} <= {p})")
    if np.linalg.matrix_rank(X) < p:
        raise ValueError("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta

    bread = np.linalg.pinv(X.T @ X)
    meat = (X * resid[:, None] ** 2).T @ X
    cov = bread @ meat @ bread * (n / (n - p))
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        tvals = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    pvals = 2.0 * _stats.t.sf(np.abs(tvals), df=n - p)

    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid ** 2).sum()) / ss_tot if ss_tot > 0 else 0.0
    return RegressionResult(names=design.names, coef=beta, se=se, pvalues=pvals,
                            r2=r2, nobs=n)


def puffer_transform(design: DesignMatrix, y: np.ndarray) -> tuple[DesignMatrix, np.ndarray]:
    """Precondition (X, y) so the transformed columns are exactly orthonormal."""
    X = design.X
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if n < p:
        raise ValueError("preconditioning requires at least as many rows as columns")
    u, s, vt = np.linalg.svd(X, full_matrices=False)
    if s[-1] <= s[0] * 1e-12 or s[-1] == 0:
        raise ValueError("design matrix is rank deficient")
    fx = u @ vt
    fy = u @ ((u.T @ y) / s)
    return DesignMatrix(names=design.names, X=fx, penalized=design.penalized), fy


def lambda_max(design: DesignMatrix, y: np.ndarray) -> float:
    """Smallest penalty at which every penalized coefficient is zero."""
    y = np.asarray(y, dtype=np.float64)
    pen = np.array(design.penalized)
    if not pen.any():
        raise ValueError("no penalized columns")
    if pen.all():
        resid = y
    else:
        base = design.X[:, ~pen]
        gamma, *_ = np.linalg.lstsq(base, y, rcond=None)
        resid = y - base @ gamma
    n = len(y)
    return float(np.max(np.abs(design.X[:, pen].T @ resid)) / n)


def default_penalty_grid(design: DesignMatrix, y: np.ndarray,
                         num: int = 100, ratio: float = 1e-3) -> np.ndarray:
    lam = lambda_max(design, y)
    if lam <= 0.0:  # outcome orthogonal to every penalized column
        return np.zeros(num)
    return np.geomspace(lam, lam * ratio, num)


def lasso_path(design: DesignMatrix, y: np.ndarray, penalties=None,
               tol: float = 1e-9, max_sweeps: int = 50_000) -> RegressionResult:
    """Coordinate descent down a descending penalty grid with warm starts.

    Unpenalized columns are refit freely at every penalty. The recorded active
    set per penalty lists the penalized columns with nonzero coefficients.
    """
    X = design.X
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if penalties is None:
        penalties = default_penalty_grid(design, y)
    penalties = np.sort(np.asarray(penalties, dtype=np.float64))[::-1]
    weights = np.array(design.penalized, dtype=np.float64)
    col_sq = (X ** 2).sum(axis=0) / n

    beta = np.zeros(p)
    coef_path = np.zeros((len(penalties), p))
    active_sets: list[tuple[str, ...]] = []
    converged_flags: list[bool] = []
    resid = y - X @ beta
    for k, lam in enumerate(penalties):
        ok = False
        for _ in range(max_sweeps):
            max_delta = 0.0
            for j in range(p):
                if col_sq[j] == 0.0:
                    continue
                old = beta[j]
                rho = (X[:, j] @ resid) / n + col_sq[j] * old
                new = _soft_threshold(rho, lam * weights[j]) / col_sq[j]
                if new != old:
                    beta[j] = new
                    resid -= X[:, j] * (new - old)
                    max_delta = max(max_delta, abs(new - old))
            if max_delta < tol:
                ok = True
                break
        coef_path[k] = beta
        active_sets.append(tuple(name for j, name in enumerate(design.names)
                                 if design.penalized[j] and beta[j] != 0.0))
        converged_flags.append(ok)
    return RegressionResult(names=design.names, coef=coef_path[-1].copy(), nobs=n,
                            penalties=penalties, coef_path=coef_path,
                            active_sets=tuple(active_sets),
                            converged=tuple(converged_flags))


def _soft_threshold(value: float, threshold: float) -> float:
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def last_survivor(path: RegressionResult) -> str | None:
    """Penalized column that stays active at the highest penalty with any selection."""
    if path.active_sets is None:
        raise ValueError("result carries no selection path")
    for k, active in enumerate(path.active_sets):
        if active:
            if len(active) == 1:
                return active[0]
            coefs = {name: abs(path.coef_path[k][path.names.index(name)]) for name in active}
            return max(coefs, key=coefs.get)
    return None


def post_lasso_ols(design: DesignMatrix, y: np.ndarray, active_set) -> RegressionResult:
    """OLS on the selected penalized columns, controls always retained."""
    active = [n for n in design.names
              if n in set(active_set) and design.penalized[design.names.index(n)]]
    if not active:
        raise ValueError("active set selects no penalized columns")
    keep = [n for n, pen in zip(design.names, design.penalized) if not pen] + active
    return ols(y, design.select(keep))


def interaction_regression(y: np.ndarray, dc: np.ndarray, high_mpx: np.ndarray,
                           controls: dict[str, np.ndarray] | None = None) -> RegressionResult:
    """OLS of the outcome on centrality, the high-multiplexing dummy, and their product."""
    y = np.asarray(y, dtype=np.float64)
    dc = np.asarray(dc, dtype=np.float64)
    flags = np.asarray(high_mpx, dtype=np.float64)
    if len({len(y), len(dc), len(flags)}) != 1:
        raise ValueError("inputs must have equal length")
    if np.all(flags == flags[0]):
        raise ValueError("high-multiplexing flag is degenerate (one level); "
                         "the interaction column cannot be identified")
    cols = {"dc": dc, "high_mpx": flags, "dc_x_high_mpx": dc * flags}
    for name, v in (controls or {}).items():
        cols[name] = np.asarray(v, dtype=np.float64)
    return ols(y, design_matrix(cols))


# ---------------------------------------------------------------------------
# Synthetic-RCT pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SynthRctConfig:
    villages: int = 68
    n_min: int = 150
    n_max: int = 250
    layer_model: str = "advice_driven"   # 'advice_driven' | 'mpx_contrast'
    q: float = 0.1
    delta: float = 0.3
    tau: int = 1
    worlds: int = 1
    seed: int = 0
    horizon: int = 12
    transmission_corr: float = 0.0       # cross-layer correlation of transmissions
    standardize_controls: bool = False

    def __post_init__(self):
        if self.layer_model not in ("advice_driven", "mpx_contrast"):
            raise ValueError(f"unknown layer_model {self.layer_model!r}")
        if self.villages < 8:
            raise ValueError("need at least 8 villages for the regressions")
        if not (2 <= self.n_min <= self.n_max):
            raise ValueError("invalid village size range")
        if self.worlds < 1 or self.horizon < 1:
            raise ValueError("worlds and horizon must be positive")
        if not (0.0 <= self.transmission_corr < 1.0):
            raise ValueError("transmission_corr must lie in [0, 1)")


@dataclass(frozen=True)
class WorldResult:
    index: int
    layer_names: tuple[str, ...]
    outcomes: np.ndarray
    seed_counts: np.ndarray
    household_counts: np.ndarray
    village_scores: np.ndarray
    high_mpx: np.ndarray
    design: DesignMatrix
    per_layer_ols: dict[str, RegressionResult]
    lasso: RegressionResult
    post_lasso: RegressionResult | None
    survivor: str | None
    interaction: RegressionResult | None


@dataclass(frozen=True)
class SynthRctResult:
    config: SynthRctConfig
    worlds: tuple[WorldResult, ...]


def synth_rct(config: SynthRctConfig, workers: int | None = None) -> SynthRctResult:
    """Generate villages, run seeded diffusions, and replay the regression pipeline.

    Per world: villages are drawn from the configured layer model, 3 or 5
    seeds are placed uniformly at random, a contagion runs for the configured
    horizon, and the outcome is the number of ever-infected non-seed
    households. Layer-wise seed-set diffusion centralities (standardized)
    enter single-layer OLS, a Puffer-preconditioned LASSO over all layers,
    post-LASSO OLS on the top survivor, and, when the layer model varies
    multiplexing, the centrality-by-multiplexing interaction regression.
    Worlds are independent given the master seed, so they parallelize.
    """
    tasks = [(config, w) for w in range(config.worlds)]
    if workers is not None and workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as pool:
            worlds = tuple(pool.map(_world_task, tasks))
    else:
        worlds = tuple(_world_task(t) for t in tasks)
    return SynthRctResult(config=config, worlds=worlds)


def _world_task(task) -> "WorldResult":
    return _run_world(*task)


def _run_world(cfg: SynthRctConfig, w: int) -> WorldResult:
    master = np.random.SeedSequence(cfg.seed, spawn_key=(w,))
    gen_rng = np.random.default_rng(master.spawn(1)[0])

    if cfg.layer_model == "advice_driven":
        layer_names = ("advice", "social", "kerorice")
    else:
        layer_names = ("advice", "social")

    outcomes = np.zeros(cfg.villages)
    seed_counts = np.zeros(cfg.villages, dtype=np.int64)
    households = np.zeros(cfg.villages, dtype=np.int64)
    scores = np.zeros(cfg.villages)
    dc = {name: np.zeros(cfg.villages) for name in layer_names}

    for v in range(cfg.villages):
        n = int(gen_rng.integers(cfg.n_min, cfg.n_max + 1))
        if cfg.layer_model == "advice_driven":
            village = synth.rct_village(n, gen_rng, names=layer_names)
            diffusion = from_layers({"advice": village.layer("advice")})
        else:
            overlap = 0.85 if v % 2 == 0 else 0.05
            village = synth.two_layer_village(n, gen_rng, overlap=overlap,
                                              names=layer_names)
            diffusion = village

        n_seeds = int(gen_rng.choice([3, 5]))
        seeds = gen_rng.choice(n, size=n_seeds, replace=False)
        run_seed = int(np.random.SeedSequence(cfg.seed, spawn_key=(w, v)).
                       generate_state(1, np.uint64)[0])
        if cfg.transmission_corr > 0.0 and diffusion.layer_count == 2:
            pair = (diffusion.layer_names[0], diffusion.layer_names[1])
            model = TransmissionModel({name: cfg.q for name in diffusion.layer_names},
                                      corr={pair: cfg.transmission_corr})
        else:
            model = cfg.q
        sim_cfg = contagion.SimConfig(tau=cfg.tau, delta=cfg.delta, model=model,
                                      rng_seed=run_seed)
        result = contagion.simulate(diffusion, sim_cfg, seeds=seeds, horizon=cfg.horizon)

        outcomes[v] = result.ever_infected_count - n_seeds
        seed_counts[v] = n_seeds
        households[v] = n
        scores[v] = multiplexity.village_score(village)
        for name in layer_names:
            dc[name][v] = centrality.seed_set_dc(village, name, seeds)

    high = multiplexity.high_mpx_flags(scores)

    # Controls: household count and its powers on a tame scale, plus the seed dummy.
    n_scaled = households / households.mean()
    controls = {"hh": n_scaled, "hh2": n_scaled ** 2, "hh3": n_scaled ** 3,
                "seeds5": (seed_counts == 5).astype(np.float64)}
    if cfg.standardize_controls:
        controls = {k: standardize(v) if k != "seeds5" else v for k, v in controls.items()}

    dc_std = {name: standardize(dc[name]) for name in layer_names}
    design = design_matrix({**dc_std, **controls}, penalized=layer_names)

    per_layer = {}
    for name in layer_names:
        single = design_matrix({name: dc_std[name], **controls})
        per_layer[name] = ols(outcomes, single)

    fx, fy = puffer_transform(design, outcomes)
    path = lasso_path(fx, fy)
    survivor = last_survivor(path)
    post = post_lasso_ols(design, outcomes, (survivor,)) if survivor else None

    interaction = None
    if cfg.layer_model == "mpx_contrast":
        interaction = interaction_regression(outcomes, dc_std["advice"], high, controls)

    return WorldResult(index=w, layer_names=layer_names, outcomes=outcomes,
                       seed_counts=seed_counts, household_counts=households,
                       village_scores=scores, high_mpx=high, design=design,
                       per_layer_ols=per_layer, lasso=path, post_lasso=post,
                       survivor=survivor, interaction=interaction)
