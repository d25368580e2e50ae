"""Command-line surface: generate, evaluate, benchmark, report."""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np
import sklearn

from . import __version__, generators
from .data_model import TripDataset, load_csv, save_csv
from .pipeline import BenchmarkConfig, ConfigError, evaluate_many, fit_generator, parse_config
from .scoring import build_scorecard, rank_models, scorecard_csv

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _load_config(path: str) -> BenchmarkConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_config(data)


def _load_splits(cfg: BenchmarkConfig):
    train = load_csv(cfg.train_csv, role="train")
    holdout = load_csv(cfg.holdout_csv, role="holdout")
    test = load_csv(cfg.test_csv, role="holdout")
    return train, holdout, test


def _json_dump(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_outputs(out_dir: Path, cfg: BenchmarkConfig, results, failures) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    raw = {name: ev.indicators for name, ev in results.items()}
    cards = {}
    leaderboards = {}
    if raw:
        cards = build_scorecard(raw, constant_score=cfg.constant_score,
                                normalize_record_score=cfg.normalize_record_score)
        leaderboards = {dim: rank_models(cards, dim) for dim in ("R", "P", "U", "overall")}

    report = {
        "tripbench_version": __version__,
        "config": cfg.to_dict(),
        "models": {
            name: {"indicators": ev.indicators.to_dict(), **ev.detail}
            for name, ev in sorted(results.items())
        },
        "failures": dict(sorted(failures.items())),
        "scorecard": {name: card.to_dict() for name, card in sorted(cards.items())},
        "leaderboard": leaderboards,
    }
    _json_dump(report, out_dir / "report.json")

    if cards:
        (out_dir / "scorecard.csv").write_text(scorecard_csv(cards), encoding="utf-8")
        lines = [f"leaderboard by overall score ({len(cards)} models)"]
        for rank, name in enumerate(leaderboards["overall"], start=1):
            c = cards[name]
            lines.append(f"{rank}. {name}: overall={c.overall:.4f} "
                         f"R={c.R:.4f} P={c.P:.4f} U={c.U:.4f}")
        (out_dir / "leaderboard.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    for name, ev in sorted(results.items()):
        _json_dump(ev.plot_data["mia_distributions"], out_dir / f"mia_scores_{name}.json")
        _json_dump(ev.plot_data["pca_centroids"], out_dir / f"pca_centroids_{name}.json")
        _json_dump(ev.plot_data["divergence_tables"], out_dir / f"divergence_{name}.json")
    return report


def cmd_generate(args) -> int:
    cfg = _load_config(args.config)
    specs = {m.name: (i, m) for i, m in enumerate(cfg.models)}
    if args.model not in specs:
        by_kind = [m for m in cfg.models if m.kind == args.model]
        if len(by_kind) == 1:
            spec = by_kind[0]
            index = cfg.models.index(spec)
        else:
            print(f"error: unknown model {args.model!r}; configured models: "
                  f"{sorted(specs)} (valid kinds: {list(generators.GENERATOR_KINDS)})",
                  file=sys.stderr)
            return EXIT_USAGE
    else:
        index, spec = specs[args.model]
    train = load_csv(cfg.train_csv, role="train")
    seed = args.seed if args.seed is not None else cfg.seed
    model = fit_generator(spec, train, cfg, model_index=index)
    n = args.n if args.n is not None else len(train)
    syn = generators.sample(model, n, seed=seed + index, source_label=spec.name)
    save_csv(syn, args.out)
    print(f"fitted {spec.kind} on {len(train)} train rows; "
          f"wrote {n} synthetic rows to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    train, holdout, test = _load_splits(cfg)
    synthetic: dict[str, TripDataset] = {}
    failures: dict[str, str] = {}
    for path in args.synthetic:
        name = Path(path).stem
        try:
            synthetic[name] = load_csv(path, role="synthetic")
        except Exception as exc:
            failures[name] = f"{type(exc).__name__}: {exc}"
    results, eval_failures = evaluate_many(synthetic, train, holdout, test, cfg,
                                           jobs=args.jobs)
    failures.update(eval_failures)
    out_dir = Path(args.out if args.out else cfg.out_dir)
    _write_outputs(out_dir, cfg, results, failures)
    print(f"evaluated {len(results)} model(s), {len(failures)} failure(s); "
          f"report in {out_dir}", file=sys.stderr)
    if not results and failures:
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_benchmark(args) -> int:
    cfg = _load_config(args.config)
    if not cfg.models:
        print("error: benchmark config lists zero models", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(args.out if args.out else cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, holdout, test = _load_splits(cfg)
    n_samples = cfg.n_samples if cfg.n_samples is not None else len(train)
    seed = args.seed if args.seed is not None else cfg.seed

    synthetic: dict[str, TripDataset] = {}
    failures: dict[str, str] = {}
    timings: dict[str, float] = {}
    for i, spec in enumerate(cfg.models):
        t0 = time.perf_counter()
        try:
            model = fit_generator(spec, train, cfg, model_index=i)
            syn = generators.sample(model, n_samples, seed=seed + 1000 * (i + 1),
                                    source_label=spec.name)
            save_csv(syn, out_dir / f"synthetic_{spec.name}.csv")
            synthetic[spec.name] = syn
        except Exception as exc:
            failures[spec.name] = f"{type(exc).__name__}: {exc}"
        timings[f"fit_sample_{spec.name}"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    results, eval_failures = evaluate_many(synthetic, train, holdout, test, cfg,
                                           jobs=args.jobs)
    failures.update(eval_failures)
    timings["evaluate"] = time.perf_counter() - t0
    _write_outputs(out_dir, cfg, results, failures)

    manifest = {
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "timings_seconds": {k: round(v, 3) for k, v in timings.items()},
        "seed": seed,
        "n_samples": n_samples,
        "versions": {
            "tripbench": __version__,
            "numpy": np.__version__,
            "scikit-learn": sklearn.__version__,
            "python": sys.version.split()[0],
        },
    }
    _json_dump(manifest, out_dir / "manifest.json")
    print(f"benchmark complete: {len(results)} model(s) scored, "
          f"{len(failures)} failure(s); outputs in {out_dir}", file=sys.stderr)
    if not results and failures:
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args) -> int:
    with open(args.report, encoding="utf-8") as fh:
        report = json.load(fh)
    cards = report.get("scorecard", {})
    order = report.get("leaderboard", {}).get(args.dimension, sorted(cards))
    print(f"ranking by {args.dimension}:")
    for rank, name in enumerate(order, start=1):
        c = cards[name]
        print(f"{rank}. {name}: overall={c['overall']:.4f} "
              f"R={c['R']:.4f} P={c['P']:.4f} U={c['U']:.4f}")
    if report.get("failures"):
        print("failures:")
        for name, msg in report["failures"].items():
            print(f"  {name}: {msg}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tripbench",
        description="benchmark synthetic trip data for representativeness, privacy, utility")
    parser.add_argument("--version", action="version", version=f"tripbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="fit a generator and write synthetic CSV")
    p_gen.add_argument("--config", required=True)
    p_gen.add_argument("--model", required=True, help="configured model name or kind")
    p_gen.add_argument("--n", type=int, default=None, help="rows to generate (default: |train|)")
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.set_defaults(func=cmd_generate)

    p_eval = sub.add_parser("evaluate", help="score synthetic CSVs against the real splits")
    p_eval.add_argument("--config", required=True)
    p_eval.add_argument("--out", default=None, help="output directory (default: config out_dir)")
    p_eval.add_argument("--jobs", type=int, default=1)
    p_eval.add_argument("synthetic", nargs="+", help="synthetic CSV paths")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("benchmark", help="fit, sample, and evaluate all configured models")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--seed", type=int, default=None)
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.set_defaults(func=cmd_benchmark)

    p_rep = sub.add_parser("report", help="print the leaderboard from a report.json")
    p_rep.add_argument("report")
    p_rep.add_argument("--dimension", choices=["R", "P", "U", "overall"], default="overall")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
