"""Command line entry point: run, score, truth, plot-data.

Exit codes: 0 success, 1 numeric failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from ..benchmarks import UnknownBenchmark, benchmark_names, get_benchmark
from ..benchmarks.truth import BudgetError, Optimum, brute_force_optimum
from .config import ConfigError, RunConfig
from .loop import RunError, RunTrace, run_bo
from .scoring import LEVELS, RankError, ToleranceSpec, check_convergence, composite_score, rank_models

log = logging.getLogger("mixbo")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2
CONFIG_NAME = "config.json"


class UsageError(Exception):
    pass


def _benchmark_name(args) -> str:
    name = args.benchmark
    if name == "bs":
        if args.dims is None or args.pattern is None:
            raise UsageError("benchmark 'bs' needs --dims and --pattern")
        return f"bs_{args.dims}d_{args.pattern}"
    return name


def _config_from_args(args) -> RunConfig:
    if args.config:
        cfg = RunConfig.load(args.config)
        if args.out is not None:
            cfg.output_dir = args.out
        return cfg
    if not args.benchmark or not args.preset:
        raise UsageError("run needs --config or both --benchmark and --preset")
    data = {"benchmark": _benchmark_name(args), "preset": args.preset, "seeds": args.seeds,
            "penalty": not args.no_penalty, "maf": args.maf, "noise_sd": args.noise_sd,
            "record_time": args.record_time}
    for key in ("init_points", "iter_budget", "maf_threshold"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.out is not None:
        data["output_dir"] = args.out
    return RunConfig.from_dict(data)


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    run_dir = Path(cfg.output_dir) / cfg.run_label
    run_dir.mkdir(parents=True, exist_ok=True)
    cfg.dump(run_dir / CONFIG_NAME)
    bench = cfg.bench
    truth = bench.truth()

    def one(seed):
        try:
            return seed, run_bo(cfg, seed, truth=truth, bench=bench), None
        except RunError as exc:
            return seed, exc.trace, exc

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        results = sorted(pool.map(one, cfg.seeds), key=lambda r: r[0])
    status = EXIT_OK
    for seed, trace, err in results:
        trace.write(run_dir / f"seed_{seed}.csv", cfg.record_time)
        if err is not None:
            log.error("%s (partial trace written)", err)
            status = EXIT_NUMERIC
    print(f"{len(results)} trace(s) written to {run_dir}")
    return status


def _run_dirs(roots):
    dirs = set()
    for root in roots:
        root = Path(root)
        if (root / CONFIG_NAME).is_file():
            dirs.add(root)
        dirs.update(p.parent for p in root.rglob(CONFIG_NAME))
    if not dirs:
        raise UsageError(f"no run directories (containing {CONFIG_NAME}) under {', '.join(map(str, roots))}")
    return sorted(dirs)


def _traces(run_dir: Path):
    paths = sorted(run_dir.glob("seed_*.csv"), key=lambda p: int(p.stem.split("_")[1]))
    return [RunTrace.read(p) for p in paths]


def _load_truths(path):
    if path is None:
        return {}
    with open(path) as fh:
        return {k: Optimum.from_dict(v) for k, v in json.load(fh).items()}


def cmd_score(args) -> int:
    truths = _load_truths(args.truth)
    levels = LEVELS if args.tolerance == "all" else (args.tolerance,)
    rows = []
    for run_dir in _run_dirs(args.runs):
        cfg = RunConfig.load(run_dir / CONFIG_NAME)
        bench = cfg.bench
        truth = truths.get(cfg.benchmark) or bench.truth()
        traces = _traces(run_dir)
        if not traces:
            continue
        model = cfg.run_label.split("__", 1)[1]
        for level in levels:
            tol = ToleranceSpec.for_benchmark(bench.tolerance_key, level)
            its = [check_convergence(t, tol, truth, bench.space) for t in traces]
            cs = composite_score(its)
            rows.append({"benchmark": cfg.benchmark, "tolerance": level, "model": model, **cs.to_dict(),
                         "iterations": its})
    rows.sort(key=lambda r: (r["benchmark"], LEVELS.index(r["tolerance"]), r["model"]))
    ranks = {}
    for level in levels:
        table = {}
        for r in rows:
            if r["tolerance"] == level:
                table.setdefault(r["model"], {})[r["benchmark"]] = r["score"]
        try:
            ranks[level] = [row.to_dict() for row in rank_models(table, partial=args.partial)]
        except RankError as exc:
            raise UsageError(str(exc)) from None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "scores.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["benchmark", "tolerance", "model", "converged", "total", "mean_iteration", "score"])
        for r in rows:
            mu = "---" if r["mean_iteration"] is None else f"{r['mean_iteration']:.2f}"
            w.writerow([r["benchmark"], r["tolerance"], r["model"], r["converged"], r["total"], mu, f"{r['score']:.6f}"])
    with open(out / "ranks.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tolerance", "model", "mean_rank", "median_rank", "min_rank", "max_rank", "num_ranks"])
        for level, table in ranks.items():
            for r in table:
                w.writerow([level, r["model"], f"{r['mean_rank']:.3f}", r["median_rank"], r["min_rank"],
                            r["max_rank"], r["num_ranks"]])
    with open(out / "scores.json", "w") as fh:
        json.dump({"scores": rows, "ranks": ranks}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for r in rows:
        mu = "---" if r["mean_iteration"] is None else f"{r['mean_iteration']:.2f}"
        print(f"{r['benchmark']:<12} {r['tolerance']:<7} {r['model']:<40} {r['converged']:>3} {mu:>7} {r['score']:.6f}")
    return EXIT_OK


def cmd_truth(args) -> int:
    names = benchmark_names() if args.benchmark == "all" else [args.benchmark]
    out = {}
    if args.out and Path(args.out).is_file():
        with open(args.out) as fh:
            out = json.load(fh)
    for name in names:
        bench = get_benchmark(name)
        if args.brute_force:
            try:
                opt = brute_force_optimum(bench, bench.space, grid_density=args.grid, budget=args.budget)
            except BudgetError as exc:
                log.error("%s: %s", name, exc)
                return EXIT_NUMERIC
        else:
            opt = bench.truth()
        out[name] = opt.to_dict()
        print(f"{name}: value={opt.value!r} candidate={opt.candidate} range={opt.y_range!r}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


def cmd_plot_data(args) -> int:
    rows = []
    for run_dir in _run_dirs(args.runs):
        traces = _traces(run_dir)
        if not traces:
            continue
        label = run_dir.name
        by_iter = {}
        for t in traces:
            for r in t.records:
                by_iter.setdefault(r.iter, []).append(r.regret)
        for it in sorted(by_iter):
            vals = by_iter[it]
            mean = statistics.fmean(vals)
            sd = statistics.stdev(vals) if len(vals) > 1 else 0.0
            rows.append([label, it, len(vals), mean, sd, mean - sd, mean + sd, statistics.median(vals)])
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "iter", "n", "mean_regret", "sd", "lower", "upper", "median_regret"])
        for row in rows:
            w.writerow([row[0], row[1], row[2], *(repr(float(v)) for v in row[3:])])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixbo", description="Mixed-variable Bayesian optimization benchmarks")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run BO seeds and write trace CSVs")
    run.add_argument("--config", help="JSON run configuration")
    run.add_argument("--benchmark", help="bs, bs_<d>d_<family>, dust1 or dust2")
    run.add_argument("--dims", type=int)
    run.add_argument("--pattern", choices=("ci", "id", "ii", "dd"))
    run.add_argument("--preset", help="<ei|lcb>_<kernel preset> or SOBOL_off")
    run.add_argument("--seeds", default="0..9")
    run.add_argument("--init-points", type=int)
    run.add_argument("--iter-budget", type=int)
    run.add_argument("--no-penalty", action="store_true")
    run.add_argument("--maf", action="store_true")
    run.add_argument("--maf-threshold", type=float)
    run.add_argument("--noise-sd", type=float, default=0.0)
    run.add_argument("--record-time", action="store_true", help="fill the seconds column (breaks byte-identity)")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--workers", type=int, default=1)
    run.set_defaults(func=cmd_run)

    score = sub.add_parser("score", help="convergence, composite scores and rank tables")
    score.add_argument("runs", nargs="+", help="run directories or roots containing them")
    score.add_argument("--tolerance", choices=(*LEVELS, "all"), default="medium")
    score.add_argument("--truth", help="optima JSON written by the truth command")
    score.add_argument("--partial", action="store_true", help="rank models over differing variant sets")
    score.add_argument("--out", default="scores")
    score.set_defaults(func=cmd_score)

    truth = sub.add_parser("truth", help="compute ground-truth optima")
    truth.add_argument("--benchmark", default="all")
    truth.add_argument("--brute-force", action="store_true", help="grid search instead of the analytic optimum")
    truth.add_argument("--grid", type=int, default=101)
    truth.add_argument("--budget", type=int, default=5_000_000, help="maximum objective evaluations per benchmark")
    truth.add_argument("--out", help="JSON file to create or update")
    truth.set_defaults(func=cmd_truth)

    plot = sub.add_parser("plot-data", help="per-iteration regret mean and band")
    plot.add_argument("runs", nargs="+")
    plot.add_argument("--out")
    plot.set_defaults(func=cmd_plot_data)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnknownBenchmark as exc:
        print(f"error: unknown benchmark {exc.args[0]!r}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
