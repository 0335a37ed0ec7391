"""Release-gating checks, one per criterion, each printed as a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``. The two comparison-grid
replications are the slow part; everything else finishes in seconds.
"""

import os
import time

import numpy as np
import pytest
from scipy import stats as sstats

from mpxdiff.centrality import diffusion_centrality, seed_set_dc, spectral_radius
from mpxdiff.contagion import run_grid
from mpxdiff.meanfield import solve_steady_state
from mpxdiff.multigraph import MultiGraph, from_layers, layer_set
from mpxdiff.multiplexity import (Profile, ProfileDistribution,
                                  enumerate_demultiplexing_moves,
                                  multiplexing_score, total_multiplexity_index)
from mpxdiff.regress import (DesignMatrix, SynthRctConfig, lasso_path, ols,
                             puffer_transform, synth_rct)
from mpxdiff.transmission import TransmissionModel
from mpxdiff.synth import village_triple
from mpxdiff.verify import (PROP4_HIGH_GRID, PROP4_LOW_GRID, check_prop1,
                            check_prop2, check_prop3, check_prop4)

WORKERS = os.cpu_count() or 1


def report(number: int, ok: bool, detail: str, elapsed: float) -> None:
    status = "PASS" if ok else "FAIL"
    print(f"\n[criterion {number:2d}] {status} — {detail} ({elapsed:.1f}s)")


def test_criterion_01_prop1_individual_iff():
    start = time.time()
    reports = check_prop1(500, seed=101, boundary_every=5)
    elapsed = time.time() - start
    all_match = all(r.passed for r in reports)
    boundary = [r for r in reports if "boundary=True" in r.condition]
    boundary_ok = bool(boundary) and all(abs(r.margin) <= 1e-12 for r in boundary)
    ok = all_match and boundary_ok and elapsed < 30
    report(1, ok, f"Prop 1 iff on 500 configs: {sum(r.passed for r in reports)}/500 "
                  f"match, {len(boundary)} boundary cases equal within 1e-12", elapsed)
    assert all_match
    assert boundary_ok
    assert elapsed < 30


def test_criterion_02_prop2_population_ordering():
    start = time.time()
    reports = check_prop2(200, seed=102)
    elapsed = time.time() - start
    ordered = all(r.passed and r.margin > 1e-9 for r in reports)
    residuals_ok = all(max(r.details["residuals"]) < 1e-10 for r in reports)
    ok = ordered and residuals_ok and elapsed < 60
    report(2, ok, f"Prop 2 on 200 demultiplexing moves: min margin "
                  f"{min(r.margin for r in reports):.2e}, max residual "
                  f"{max(max(r.details['residuals']) for r in reports):.1e}", elapsed)
    assert ordered
    assert residuals_ok
    assert elapsed < 60


def test_criterion_03_prop3_regimes():
    start = time.time()
    pairs = check_prop3(100, seed=103, rate_low=0.02, rate_high=0.95)
    elapsed = time.time() - start
    low_ok = all(low.passed and low.margin < -1e-12 for low, _ in pairs)
    high_ok = all(high.passed and high.margin > 1e-12 for _, high in pairs)
    ok = low_ok and high_ok and elapsed < 60
    report(3, ok, "Prop 3 exact oracle, 100 structures: multiplexed strictly more "
                  "likely at rates 0.02, strictly less at 0.95", elapsed)
    assert low_ok
    assert high_ok
    assert elapsed < 60


def test_criterion_04_prop4_regimes():
    start = time.time()
    low_cells = check_prop4(*PROP4_LOW_GRID, regime="low", seed=104)
    high_cells = check_prop4(*PROP4_HIGH_GRID, regime="high", seed=104)
    elapsed = time.time() - start
    low_conclusive = [c for c in low_cells if c.report.conclusive]
    high_conclusive = [c for c in high_cells if c.report.conclusive]
    low_ok = len(low_conclusive) >= 10 and all(c.report.passed for c in low_conclusive)
    high_ok = len(high_conclusive) >= 10 and all(c.report.passed for c in high_conclusive)
    ok = low_ok and high_ok and elapsed < 120
    report(4, ok, f"Prop 4 mean-field: low grid {len(low_conclusive)} conclusive "
                  f"cells all multiplexed-higher; high grid {len(high_conclusive)} "
                  "all split-higher", elapsed)
    assert low_ok
    assert high_ok
    assert elapsed < 120


GRID = (0.1, 0.2, 0.3, 0.4, 0.5)
GRID_REPS = 200


def grid_villages():
    return [village_triple(200, np.random.default_rng(20250 + v)) for v in range(30)]


@pytest.mark.slow
def test_criterion_05_fig5a_simple_contagion():
    start = time.time()
    result = run_grid(grid_villages(), GRID, GRID, tau=1, reps=GRID_REPS,
                      master_seed=505, workers=WORKERS)
    elapsed = time.time() - start
    failures = []
    live_cells = 0
    for cell in result.cell_summary():
        if cell["mean_prevalence"] <= 0.05:
            continue
        live_cells += 1
        trials = cell["n_wins"] + cell["n_losses"]
        test = sstats.binomtest(cell["n_wins"], trials, 0.5, alternative="less")
        if not (cell["frac_mpx_higher"] < 0.5 and test.pvalue < 0.01):
            failures.append((cell["q"], cell["delta"], cell["frac_mpx_higher"],
                             test.pvalue))
    ok = live_cells > 0 and not failures
    report(5, ok, f"simple contagion grid: {live_cells} live cells, all fractions "
                  f"< 0.5 at alpha=0.01{'' if not failures else f'; failures={failures}'}",
           elapsed)
    assert live_cells > 0
    assert not failures, failures


@pytest.mark.slow
def test_criterion_06_fig5b_complex_contagion():
    start = time.time()
    result = run_grid(grid_villages(), GRID, GRID, tau=2, reps=GRID_REPS,
                      master_seed=606, workers=WORKERS)
    elapsed = time.time() - start
    bins = result.bin_summary()
    low = [b for b in bins if b["bin_high"] <= 0.2 + 1e-9]
    high = [b for b in bins if b["bin_low"] >= 0.6 - 1e-9]
    low_wins = sum(b["n_wins"] for b in low)
    low_losses = sum(b["n_losses"] for b in low)
    high_wins = sum(b["n_wins"] for b in high)
    high_losses = sum(b["n_losses"] for b in high)
    low_test = sstats.binomtest(low_wins, low_wins + low_losses, 0.5,
                                alternative="greater")
    high_test = sstats.binomtest(high_wins, high_wins + high_losses, 0.5,
                                 alternative="less")
    low_frac = low_wins / (low_wins + low_losses)
    high_frac = high_wins / (high_wins + high_losses)
    ok = (low_frac > 0.5 and low_test.pvalue < 0.01
          and high_frac < 0.5 and high_test.pvalue < 0.01)
    report(6, ok, f"complex contagion grid: low-prevalence pooled fraction "
                  f"{low_frac:.3f} > 0.5, high-prevalence {high_frac:.3f} < 0.5 "
                  f"(p={low_test.pvalue:.1e}, {high_test.pvalue:.1e})", elapsed)
    assert low_frac > 0.5 and low_test.pvalue < 0.01
    assert high_frac < 0.5 and high_test.pvalue < 0.01


def fig3a():
    adj = np.zeros((3, 5, 5), dtype=np.uint8)
    adj[0, 0, 1] = adj[1, 0, 1] = adj[2, 0, 1] = 1
    adj[0, 0, 2] = adj[1, 0, 2] = 1
    return MultiGraph(5, ("red", "green", "blue"), adj)


def test_criterion_07_multiplexity_index_descent():
    start = time.time()
    g = fig3a()
    fixture_ok = total_multiplexity_index(g) == 13
    moves = enumerate_demultiplexing_moves(g, 0)
    target = None
    for move, res in moves:
        if move.donor == 2 and move.recipient == 3 and move.layer == 0:
            target = res
    fixture_ok &= target is not None and total_multiplexity_index(target) == 11

    rng = np.random.default_rng(707)
    checked = 0
    descent_ok = True
    while checked < 1000:
        adj = (rng.random((3, 6, 6)) < 0.4).astype(np.uint8)
        for l in range(3):
            np.fill_diagonal(adj[l], 0)
        graph = MultiGraph(6, ("a", "b", "c"), adj)
        for move, res in enumerate_demultiplexing_moves(graph, int(rng.integers(0, 6))):
            descent_ok &= (total_multiplexity_index(res)
                           < total_multiplexity_index(graph))
            checked += 1
            if checked >= 1000:
                break
    elapsed = time.time() - start
    ok = fixture_ok and descent_ok
    report(7, ok, f"index descent on {checked} generated moves, fixture 13 -> 11",
           elapsed)
    assert fixture_ok
    assert descent_ok


def test_criterion_08_diffusion_centrality_goldens():
    start = time.time()
    path3 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.uint8)
    g = from_layers({"advice": path3})
    center = seed_set_dc(g, "advice", [1])
    center_ok = abs(center - (1 + np.sqrt(2))) < 1e-12
    lam = spectral_radius(np.ones((5, 5)) - np.eye(5))
    lam_ok = abs(lam - 4.0) < 1e-8
    elapsed = time.time() - start
    ok = center_ok and lam_ok
    report(8, ok, f"path center DC={center:.12f} (target 1+sqrt2), lambda(K5)={lam:.9f}",
           elapsed)
    assert center_ok
    assert lam_ok


def test_criterion_09_meanfield_closed_forms():
    start = time.time()
    dist = ProfileDistribution({Profile(1, 0, 0): 1.0})
    m1 = TransmissionModel({"A": 0.5, "B": 0.3})
    state = solve_steady_state(dist, 0.25, m1)
    positive_ok = abs(state.rho - 0.5) < 1e-10
    m2 = TransmissionModel({"A": 0.1, "B": 0.3})
    zero_ok = solve_steady_state(dist, 0.9, m2).rho == 0.0
    elapsed = time.time() - start
    ok = positive_ok and zero_ok
    report(9, ok, f"point-mass fixed points: rho={state.rho:.12f} (target 0.5), "
                  "subcritical exactly 0", elapsed)
    assert positive_ok
    assert zero_ok


def test_criterion_10_puffer_lasso_numerics():
    start = time.time()
    rng = np.random.default_rng(1010)

    gram_ok = True
    for _ in range(5):
        X = rng.standard_normal((68, 9))
        X[:, 1:] = 0.8 * X[:, [0]] + 0.4 * X[:, 1:]   # strongly correlated columns
        d = DesignMatrix(names=tuple(f"c{i}" for i in range(9)), X=X,
                         penalized=(True,) * 9)
        fx, _ = puffer_transform(d, rng.standard_normal(68))
        gram_ok &= np.abs(fx.X.T @ fx.X - np.eye(9)).max() < 1e-8

    n, p = 64, 6
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    Xo = Q[:, :p] * np.sqrt(n)
    do = DesignMatrix(names=tuple(f"v{i}" for i in range(p)), X=Xo,
                      penalized=(True,) * p)
    y = rng.standard_normal(n)
    lam = 0.09
    res = lasso_path(do, y, penalties=[lam])
    rho = Xo.T @ y / n
    target = np.sign(rho) * np.maximum(np.abs(rho) - lam, 0.0)
    soft_ok = np.abs(res.coef - target).max() < 1e-6

    res0 = lasso_path(do, y, penalties=[0.0])
    beta, *_ = np.linalg.lstsq(Xo, y, rcond=None)
    ols_ok = np.abs(res0.coef - beta).max() < 1e-6

    elapsed = time.time() - start
    ok = gram_ok and soft_ok and ols_ok
    report(10, ok, "puffer gram within 1e-8, orthonormal soft-threshold within "
                   "1e-6, penalty-0 equals OLS within 1e-6", elapsed)
    assert gram_ok
    assert soft_ok
    assert ols_ok


@pytest.mark.slow
def test_criterion_11_synthetic_rct_analogues():
    start = time.time()
    advice_cfg = SynthRctConfig(villages=68, n_min=150, n_max=250,
                                layer_model="advice_driven", q=0.1, delta=0.3,
                                tau=1, worlds=50, seed=1111, horizon=12)
    advice_worlds = synth_rct(advice_cfg, workers=WORKERS).worlds
    n_advice = sum(w.survivor == "advice" for w in advice_worlds)

    mpx_cfg = SynthRctConfig(villages=150, n_min=150, n_max=250,
                             layer_model="mpx_contrast", q=0.02, delta=0.0,
                             tau=1, worlds=50, seed=2222, horizon=10,
                             transmission_corr=0.9)
    mpx_worlds = synth_rct(mpx_cfg, workers=WORKERS).worlds
    betas = np.array([w.interaction.coef_of("dc_x_high_mpx") for w in mpx_worlds])
    n_negative = int((betas < 0).sum())
    sign_test = sstats.binomtest(n_negative, len(betas), 0.5, alternative="greater")

    elapsed = time.time() - start
    survivor_ok = n_advice >= 40
    interaction_ok = betas.mean() < 0 and sign_test.pvalue < 0.05
    ok = survivor_ok and interaction_ok and elapsed < 600
    report(11, ok, f"synthetic RCT: advice last survivor in {n_advice}/50 worlds; "
                   f"interaction beta mean {betas.mean():.2f}, {n_negative}/50 "
                   f"negative (sign test p={sign_test.pvalue:.1e})", elapsed)
    assert survivor_ok
    assert interaction_ok
    assert elapsed < 600


def test_criterion_12_multiplexing_score_identities():
    start = time.time()
    full = np.ones((3, 4, 4), dtype=np.uint8)
    for l in range(3):
        np.fill_diagonal(full[l], 0)
    full_ok = multiplexing_score(MultiGraph(4, ("a", "b", "c"), full), 0) == 1.0

    ring = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=np.uint8)
    single = from_layers([ring, np.zeros_like(ring), np.zeros_like(ring),
                          np.zeros_like(ring)])
    single_ok = multiplexing_score(single, 1) == 0.25

    mixed = np.zeros((4, 3, 3), dtype=np.uint8)
    for l in (0, 1):
        mixed[l, 0, 1] = mixed[l, 1, 0] = 1
    mixed[0, 0, 2] = mixed[0, 2, 0] = 1
    mixed_ok = multiplexing_score(MultiGraph(3, ("a", "b", "c", "d"), mixed), 0) == 0.375

    elapsed = time.time() - start
    ok = full_ok and single_ok and mixed_ok
    report(12, ok, "score identities: full -> 1, single-layer -> 1/L, "
                   "mixed fixture -> 0.375 exactly", elapsed)
    assert full_ok
    assert single_ok
    assert mixed_ok
