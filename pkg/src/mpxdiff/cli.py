"""Command-line entry point wiring the library into reproducible runs.

Every subcommand writes plain comma-separated tables plus a manifest.json
recording the resolved configuration, master seed, input digests, and tool
version. Outputs are written atomically (write-then-rename), and stochastic
subcommands refuse to run without an explicit seed.

Config files are flat ``key = value`` text; '#' starts a comment. Dotted keys
address transmission-model entries, e.g. ``q.advice = 0.3`` or
``f2.advice.social = 0.12``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, centrality, contagion, meanfield, multiplexity
from . import regress, stats, verify
from .multigraph import MultiGraph, read_edge_file
from .multiplexity import read_profile_file
from .transmission import TransmissionModel


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpxdiff",
        description="Multiplex-network diffusion: scores, contagion simulation, "
                    "mean-field checks, centrality, and the synthetic-RCT pipeline.")
    parser.add_argument("--version", action="version", version=f"mpxdiff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_edges_flags(p):
        p.add_argument("--edges", required=True, help="edge-list file")
        p.add_argument("--layers", help="comma-separated ordered layer labels "
                                        "(overrides the file manifest)")
        p.add_argument("--nodes", type=int, help="node count (overrides the file manifest)")

    p = sub.add_parser("stats", help="per-layer descriptive statistics and correlations")
    add_edges_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("mpx", help="multiplexing scores and high-multiplexing flags")
    add_edges_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mpx)

    p = sub.add_parser("centrality", help="diffusion centrality for one layer")
    add_edges_flags(p)
    p.add_argument("--layer", required=True)
    p.add_argument("--village", help="village label (defaults to the only one)")
    p.add_argument("--q", type=float, help="walk decay (default 1/spectral radius)")
    p.add_argument("--T", type=int, help="walk length (default layer diameter)")
    p.add_argument("--seeds", help="comma-separated seed nodes; adds a seed-set total")
    p.add_argument("--symmetric", action="store_true", help="symmetrize the layer first")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_centrality)

    p = sub.add_parser("backbone", help="PCA backbone weighted dyad graph")
    add_edges_flags(p)
    p.add_argument("--k", type=int, required=True, help="number of principal components")
    p.add_argument("--village", help="village label (defaults to the only one)")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_backbone)

    p = sub.add_parser("simulate", help="SIS threshold contagion replications")
    add_edges_flags(p)
    p.add_argument("--config", required=True, help="keys: tau, delta, q or q.<layer> "
                                                   "(+ f2/corr pairs), seed_count")
    p.add_argument("--village", help="village label (defaults to the only one)")
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("grid", help="paired comparison grid over (q, delta)")
    p.add_argument("--config", required=True,
                   help="keys: tau, q_grid, delta_grid, reps, villages_path, seed")
    p.add_argument("--seed", type=int, help="master seed (or config key 'seed')")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("meanfield", help="two-layer mean-field steady state")
    p.add_argument("--profiles", required=True, help="profile-distribution file")
    p.add_argument("--config", required=True,
                   help="keys: q.A, q.B, optional f2.A.B or corr.A.B, delta, tau")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_meanfield)

    p = sub.add_parser("verify", help="numerical checks of the diffusion propositions")
    p.add_argument("--prop", type=int, required=True, choices=(1, 2, 3, 4))
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, help="master seed (required)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("synth-rct", help="synthetic-RCT regression pipeline")
    p.add_argument("--config", required=True,
                   help="keys: villages, n_min, n_max, layer_model, q, delta, tau, "
                        "worlds, horizon, transmission_corr, seed")
    p.add_argument("--seed", type=int, help="master seed (or config key 'seed')")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth_rct)

    return parser


# ---------------------------------------------------------------------------
# Shared plumbing
# ---------------------------------------------------------------------------

def parse_config(path) -> dict[str, str]:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(path: str, header: str, rows) -> None:
    atomic_write(path, "\n".join([header] + [str(r) for r in rows]) + "\n")


def fmt(x) -> str:
    """repr of a float value, stripped of numpy scalar wrappers."""
    return repr(float(x))


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: str, command: str, config: dict, seed, inputs) -> None:
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "inputs": {path: sha256_file(path) for path in inputs},
        "version": __version__,
    }
    atomic_write(os.path.join(out_dir, "manifest.json"),
                 json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_graphs(args) -> dict[str, MultiGraph]:
    layers = tuple(args.layers.split(",")) if args.layers else None
    return read_edge_file(args.edges, node_count=args.nodes, layers=layers)


def pick_village(graphs: dict[str, MultiGraph], label) -> tuple[str, MultiGraph]:
    if label is not None:
        if label not in graphs:
            raise KeyError(f"village {label!r} not in file (has {sorted(graphs)})")
        return label, graphs[label]
    if len(graphs) != 1:
        raise ValueError(f"file has {len(graphs)} villages; pass --village")
    return next(iter(graphs.items()))


def model_from_config(cfg: dict[str, str], layer_names) -> TransmissionModel | float:
    """Build a transmission model from dotted config keys, or return scalar q."""
    marginals = {}
    for name in layer_names:
        if f"q.{name}" in cfg:
            marginals[name] = float(cfg[f"q.{name}"])
    if not marginals:
        if "q" not in cfg:
            raise ValueError("config needs 'q' or per-layer 'q.<layer>' keys")
        return float(cfg["q"])
    if len(marginals) != len(layer_names):
        missing = [n for n in layer_names if n not in marginals]
        raise ValueError(f"missing marginal keys for layers: {missing}")
    f2, corr = {}, {}
    for key, value in cfg.items():
        parts = key.split(".")
        if len(parts) == 3 and parts[0] in ("f2", "corr"):
            pair = (parts[1], parts[2])
            (f2 if parts[0] == "f2" else corr)[pair] = float(value)
    return TransmissionModel(marginals, f2=f2 or None, corr=corr or None)


def require_seed(args, cfg: dict[str, str] | None = None) -> int:
    if args.seed is not None:
        return int(args.seed)
    if cfg is not None and "seed" in cfg:
        return int(cfg["seed"])
    raise ValueError("a master seed is required: pass --seed (or a 'seed' config key)")


def ensure_out(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_stats(args) -> int:
    out = ensure_out(args)
    graphs = load_graphs(args)
    rows = []
    for village, g in sorted(graphs.items()):
        for name in g.layer_names:
            s = stats.layer_stats(g, name)
            rows.append(f"{village},{name},{s.mean_degree:.6f},{s.degree_sd:.6f},"
                        f"{s.density:.6f},{s.triangles},{s.clustering:.6f}")
    write_table(os.path.join(out, "stats.csv"),
                "village,layer,mean_degree,degree_sd,density,triangles,clustering", rows)

    corr_rows = []
    for village, g in sorted(graphs.items()):
        if g.layer_count < 2:
            continue
        corr = stats.layer_correlation(g)
        for i, a in enumerate(g.layer_names):
            for j, b in enumerate(g.layer_names):
                corr_rows.append(f"{village},{a},{b},{corr[i, j]:.6f}")
    write_table(os.path.join(out, "correlations.csv"),
                "village,layer_a,layer_b,corr", corr_rows)
    write_manifest(out, "stats", {"edges": args.edges}, None, [args.edges])
    return 0


def cmd_mpx(args) -> int:
    out = ensure_out(args)
    graphs = load_graphs(args)
    villages = sorted(graphs)
    scores = [multiplexity.village_score(graphs[v]) for v in villages]
    flags = multiplexity.high_mpx_flags(scores)
    rows = [f"{v},{s:.6f},{f}" for v, s, f in zip(villages, scores, flags)]
    write_table(os.path.join(out, "mpx.csv"), "village,score,high_mpx", rows)
    write_manifest(out, "mpx", {"edges": args.edges}, None, [args.edges])
    return 0


def cmd_centrality(args) -> int:
    out = ensure_out(args)
    graphs = load_graphs(args)
    village, g = pick_village(graphs, args.village)
    adj = g.layer(args.layer)
    if args.symmetric:
        from .multigraph import symmetrize
        adj = symmetrize(adj)
    lam = centrality.spectral_radius(adj)
    diam = centrality.diameter(adj)
    vec = centrality.layer_centrality(g, args.layer, q=args.q, T=args.T,
                                      symmetric=args.symmetric)
    rows = [f"{node},{fmt(score)}" for node, score in enumerate(vec.scores)]
    write_table(os.path.join(out, "centrality.csv"), "node,score", rows)
    summary = (f"village={village} layer={args.layer} q={fmt(vec.q)} T={vec.T} "
               f"lambda={fmt(lam)} diameter={diam}")
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",")]
        total = float(vec.scores[sorted(set(seeds))].sum())
        summary += f" seed_set_dc={fmt(total)}"
    print(summary)
    write_manifest(out, "centrality",
                   {"edges": args.edges, "layer": args.layer, "village": village,
                    "q": vec.q, "T": vec.T, "lambda": lam, "diameter": diam,
                    "seeds": args.seeds, "symmetric": args.symmetric},
                   None, [args.edges])
    return 0


def cmd_backbone(args) -> int:
    out = ensure_out(args)
    graphs = load_graphs(args)
    village, g = pick_village(graphs, args.village)
    z = stats.backbone(g, args.k, standardize=not args.no_standardize)
    rows = []
    for i in range(g.node_count):
        for j in range(i + 1, g.node_count):
            if z[i, j] != 0.0:
                rows.append(f"{i},{j},{fmt(z[i, j])}")
    write_table(os.path.join(out, "backbone.csv"), "src,dst,weight", rows)
    write_manifest(out, "backbone",
                   {"edges": args.edges, "village": village, "k": args.k,
                    "standardize": not args.no_standardize}, None, [args.edges])
    return 0


def cmd_simulate(args) -> int:
    out = ensure_out(args)
    cfg_raw = parse_config(args.config)
    seed = require_seed(args, cfg_raw)
    graphs = load_graphs(args)
    village, g = pick_village(graphs, args.village)
    model = model_from_config(cfg_raw, g.layer_names)
    sim_cfg = contagion.SimConfig(
        tau=int(cfg_raw.get("tau", 1)),
        delta=float(cfg_raw.get("delta", 0.5)),
        model=model,
        seed_count=int(cfg_raw["seed_count"]) if "seed_count" in cfg_raw else None,
        max_iters=int(cfg_raw.get("max_iters", 1000)),
        convergence_tol=float(cfg_raw.get("convergence_tol", 1e-8)),
        stabilization_iters=int(cfg_raw.get("stabilization_iters", 100)),
    )
    tasks = []
    for rep in range(args.reps):
        rep_seed = int(np.random.SeedSequence(seed, spawn_key=(rep,))
                       .generate_state(1, np.uint64)[0])
        tasks.append((g, _replace_seed(sim_cfg, rep_seed), rep))
    if args.workers and args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_simulate_task, tasks))
    else:
        results = [_simulate_task(t) for t in tasks]
    rows = [f"{rep},{fmt(share)},{periods},{conv},{ever}"
            for rep, share, periods, conv, ever in results]
    write_table(os.path.join(out, "simulate.csv"),
                "rep,steady_share,periods,converged,ever_infected", rows)
    write_manifest(out, "simulate", dict(cfg_raw, reps=args.reps, village=village),
                   seed, [args.edges, args.config])
    return 0


def _replace_seed(cfg: contagion.SimConfig, seed: int) -> contagion.SimConfig:
    from dataclasses import replace
    return replace(cfg, rng_seed=seed)


def _simulate_task(task):
    g, cfg, rep = task
    result = contagion.simulate(g, cfg)
    return (rep, result.steady_share, result.periods_run,
            int(result.converged), result.ever_infected_count)


def cmd_grid(args) -> int:
    out = ensure_out(args)
    cfg = parse_config(args.config)
    seed = require_seed(args, cfg)
    villages_path = cfg["villages_path"]
    graphs = read_edge_file(villages_path)
    triples = []
    for village in sorted(graphs):
        g = graphs[village]
        if g.layer_count < 3:
            raise ValueError(f"village {village!r} has {g.layer_count} layers; "
                             "grid pairing needs at least three")
        by_degree = sorted(g.layer_names,
                           key=lambda name: int(g.layer(name).sum()), reverse=True)
        triples.append(tuple(g.layer(name) for name in by_degree[:3]))
    result = contagion.run_grid(
        triples,
        q_grid=_parse_grid(cfg["q_grid"]),
        delta_grid=_parse_grid(cfg["delta_grid"]),
        tau=int(cfg.get("tau", 1)),
        reps=int(cfg.get("reps", 1)),
        master_seed=seed,
        workers=args.workers,
    )
    contagion.write_grid_file(os.path.join(out, "grid.csv"), result)
    write_manifest(out, "grid", dict(cfg), seed, [args.config, villages_path])
    return 0


def _parse_grid(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def cmd_meanfield(args) -> int:
    out = ensure_out(args)
    cfg = parse_config(args.config)
    dist = read_profile_file(args.profiles)
    layer_names = sorted({key.split(".", 1)[1] for key in cfg if key.startswith("q.")})
    if len(layer_names) != 2:
        raise ValueError("meanfield needs exactly two q.<layer> keys")
    model = model_from_config(cfg, layer_names)
    state = meanfield.solve_steady_state(dist, float(cfg["delta"]), model,
                                         tau=int(cfg.get("tau", 1)))
    write_table(os.path.join(out, "steady.csv"), "rho,residual,iterations",
                [f"{fmt(state.rho)},{fmt(state.residual)},{state.iterations}"])
    rows = [f"{p.dA},{p.dB},{p.dAB},{fmt(rate)}" for p, rate in sorted(state.per_profile.items())]
    write_table(os.path.join(out, "profile_rates.csv"), "dA,dB,dAB,rate", rows)
    print(f"rho={fmt(state.rho)} residual={fmt(state.residual)} iterations={state.iterations}")
    write_manifest(out, "meanfield", dict(cfg), None, [args.profiles, args.config])
    return 0


def cmd_verify(args) -> int:
    out = ensure_out(args)
    seed = require_seed(args)
    rows = []
    all_pass = True

    def record(index, label, report, extra=""):
        nonlocal all_pass
        if report.conclusive and report.passed is not None:
            status = "PASS" if report.passed else "FAIL"
            all_pass &= report.passed
        else:
            status = "INCONCLUSIVE"
        print(f"[{status}] prop{args.prop} {label}{extra}: {report.condition} "
              f"ordering={report.ordering} margin={report.margin:.3e}")
        rows.append(f"{index},{label},{report.proposition},{status},"
                    f"{report.ordering},{fmt(report.margin)}")

    if args.prop == 1:
        for i, rep in enumerate(verify.check_prop1(args.samples, seed)):
            record(i, f"sample{i}", rep)
    elif args.prop == 2:
        for i, rep in enumerate(verify.check_prop2(args.samples, seed)):
            record(i, f"sample{i}", rep)
    elif args.prop == 3:
        for i, (low, high) in enumerate(verify.check_prop3(args.samples, seed)):
            record(i, f"sample{i}-low", low)
            record(i, f"sample{i}-high", high)
    else:
        for cell in verify.check_prop4(*verify.PROP4_LOW_GRID, regime="low", seed=seed):
            record(0, "low", cell.report, extra=f" q={cell.q} delta={cell.delta}")
        for cell in verify.check_prop4(*verify.PROP4_HIGH_GRID, regime="high", seed=seed):
            record(0, "high", cell.report, extra=f" q={cell.q} delta={cell.delta}")

    write_table(os.path.join(out, "report.csv"),
                "index,label,proposition,status,ordering,margin", rows)
    write_manifest(out, "verify", {"prop": args.prop, "samples": args.samples},
                   seed, [])
    return 0 if all_pass else 1


def cmd_synth_rct(args) -> int:
    out = ensure_out(args)
    cfg_raw = parse_config(args.config)
    seed = require_seed(args, cfg_raw)
    cfg = regress.SynthRctConfig(
        villages=int(cfg_raw.get("villages", 68)),
        n_min=int(cfg_raw.get("n_min", 150)),
        n_max=int(cfg_raw.get("n_max", 250)),
        layer_model=cfg_raw.get("layer_model", "advice_driven"),
        q=float(cfg_raw.get("q", 0.1)),
        delta=float(cfg_raw.get("delta", 0.3)),
        tau=int(cfg_raw.get("tau", 1)),
        worlds=int(cfg_raw.get("worlds", 1)),
        seed=seed,
        horizon=int(cfg_raw.get("horizon", 12)),
        transmission_corr=float(cfg_raw.get("transmission_corr", 0.0)),
        standardize_controls=cfg_raw.get("standardize_controls", "false").lower() == "true",
    )
    result = regress.synth_rct(cfg, workers=args.workers)
    for world in result.worlds:
        world_dir = os.path.join(out, f"world_{world.index:03d}")
        os.makedirs(world_dir, exist_ok=True)
        write_world_files(world_dir, world)
    write_manifest(out, "synth-rct", dict(cfg_raw), seed, [args.config])
    survivors = [w.survivor or "-" for w in result.worlds]
    print(f"worlds={len(result.worlds)} survivors={','.join(survivors)}")
    return 0


def write_world_files(world_dir: str, world: regress.WorldResult) -> None:
    rows = [f"{v},{world.household_counts[v]},{world.seed_counts[v]},"
            f"{fmt(world.village_scores[v])},{world.high_mpx[v]},{fmt(world.outcomes[v])}"
            for v in range(len(world.outcomes))]
    write_table(os.path.join(world_dir, "outcomes.csv"),
                "village,households,seeds,mpx_score,high_mpx,calls", rows)

    design = world.design
    header = ",".join(design.names)
    rows = [",".join(fmt(x) for x in design.X[i]) for i in range(design.X.shape[0])]
    write_table(os.path.join(world_dir, "design.csv"), header, rows)

    path = world.lasso
    header = "penalty," + ",".join(path.names) + ",active"
    rows = []
    for k, lam in enumerate(path.penalties):
        coefs = ",".join(fmt(c) for c in path.coef_path[k])
        active = ";".join(path.active_sets[k])
        rows.append(f"{fmt(lam)},{coefs},{active}")
    write_table(os.path.join(world_dir, "lasso_path.csv"), header, rows)

    rows = []
    def add_result(model_name, res):
        if res is None:
            return
        for name, coef, se, pval in zip(res.names, res.coef, res.se, res.pvalues):
            rows.append(f"{model_name},{name},{fmt(coef)},{fmt(se)},{fmt(pval)},{fmt(res.r2)}")
    for layer, res in world.per_layer_ols.items():
        add_result(f"ols_{layer}", res)
    add_result("post_lasso", world.post_lasso)
    add_result("interaction", world.interaction)
    write_table(os.path.join(world_dir, "ols.csv"),
                "model,term,coef,se,pvalue,r2", rows)


if __name__ == "__main__":
    sys.exit(main())
