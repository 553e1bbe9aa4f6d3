"""Command-line entry points.

Subcommands: ``train``, ``importance``, ``recommend``, ``predict``,
``benchmark``.  Exit codes: 0 on success, 2 on validation failures
(invalid values, schema mismatches, bad arguments), 3 on I/O failures
(missing, unreadable, or corrupt files).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import forest as forest_mod
from .bo import AcquisitionMode, AcquisitionParams
from .benchmark import benchmark
from .dataset import load_csv, to_matrix
from .encoding import build_schema
from .errors import DlrecError, LoadFailure, ValidationFailure
from .importance import confirm_components, permutation_importance, write_report, write_scores_csv
from .pipeline import predict_config, recommend, train_predictor, write_report as write_rec_report
from .space import default_space, load_aliases, load_space

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3

logger = logging.getLogger(__name__)


def _space_and_aliases(space_path: str | None):
    if space_path is None:
        return default_space(), {}
    return load_space(space_path), load_aliases(space_path)


def _cmd_train(args: argparse.Namespace) -> int:
    space, aliases = _space_and_aliases(args.space)
    ds = load_csv(args.data, space, aliases)
    schema = build_schema(space)
    model, tuner = train_predictor(ds, schema, seed=args.seed, folds=args.folds, n_jobs=args.jobs)
    forest_mod.save(model, args.out)
    best = tuner.cv_mse[(tuner.best_n_estimators, tuner.best_max_depth)]
    print(
        f"trained on {len(ds.records)} records: n_estimators={tuner.best_n_estimators} "
        f"max_depth={tuner.best_max_depth} cv_mse={best:.4f} -> {args.out}"
    )
    return EXIT_OK


def _cmd_importance(args: argparse.Namespace) -> int:
    space, aliases = _space_and_aliases(args.space)
    ds = load_csv(args.data, space, aliases)
    schema = build_schema(space)
    model = forest_mod.load(args.model)
    if model.schema_fingerprint is not None and model.schema_fingerprint != schema.fingerprint():
        raise forest_mod.ShapeError("model was trained against a different encoding schema")
    X, y = to_matrix(ds, schema)
    report = permutation_importance(model, X, y, schema, repeats=args.repeats, seed=args.seed)
    top = confirm_components(report, top_n=args.top_n)
    scores = dict(report.per_component)
    for name in top:
        print(f"{name}\t{max(scores[name], 0.0):.6f}")
    if args.out:
        write_report(report, args.out)
    if args.scores_csv:
        write_scores_csv(report, args.scores_csv)
    return EXIT_OK


def _cmd_recommend(args: argparse.Namespace) -> int:
    if args.components and args.auto:
        raise ValidationFailure("--auto and --components are mutually exclusive")
    mode = "manual" if args.components else "auto"
    manual = [c.strip() for c in args.components.split(",")] if args.components else None
    fixed = None
    if args.fixed:
        space, _ = _space_and_aliases(args.space)
        from .space import load_config

        fixed = load_config(args.fixed, space)
    params = AcquisitionParams(alpha=args.alpha, beta=args.beta, p=args.p)
    report = recommend(
        dataset_path=args.data,
        space_path=args.space,
        mode=mode,
        manual_components=manual,
        fixed=fixed,
        params=params,
        budget=args.budget,
        n_init=args.n_init,
        seed=args.seed,
        top_n=args.top_n,
        history_path=args.history,
        n_jobs=args.jobs,
    )
    space, _ = _space_and_aliases(args.space)
    write_rec_report(report, space, args.out)
    print(
        f"searched {', '.join(report.searched_components)}; "
        f"predicted top-1 {report.predicted_top1:.2f}% -> {args.out}"
    )
    return EXIT_OK


def _cmd_predict(args: argparse.Namespace) -> int:
    value = predict_config(args.model, args.config, args.space)
    print(f"{value:.2f}")
    return EXIT_OK


def _cmd_benchmark(args: argparse.Namespace) -> int:
    summary = benchmark(
        function=args.fn,
        mode=AcquisitionMode(args.acq),
        repeats=args.repeats,
        t=args.budget,
        n_init=args.n_init,
        seed=args.seed,
        no_omega=args.no_omega,
        compare_random=not args.no_random_baseline,
    )
    line = (
        f"{summary.function} {summary.mode.value}"
        f"{' (no omega)' if summary.no_omega else ''}: "
        f"median gap {summary.median_gap:.4g}, IQR {summary.iqr_gap:.4g}"
    )
    if summary.random_median_gap is not None:
        line += f", paired random median gap {summary.random_median_gap:.4g}"
    print(line)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(summary.to_dict(), fh, indent=2)
        print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlrec",
        description="Recommend deep-learning system components and predict Top-1 accuracy without training runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit the grid-tuned accuracy predictor")
    p.add_argument("--data", required=True, help="component dataset CSV")
    p.add_argument("--space", default=None, help="search-space YAML (default: bundled 27-component space)")
    p.add_argument("--out", required=True, help="model file to write (.npz)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn_impl=_cmd_train)

    p = sub.add_parser("importance", help="rank components by permutation importance")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--space", default=None)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--top-n", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="full report YAML")
    p.add_argument("--scores-csv", default=None, help="bar-chart data file (component, score)")
    p.set_defaults(fn_impl=_cmd_importance)

    p = sub.add_parser("recommend", help="end-to-end component recommendation")
    p.add_argument("--data", required=True)
    p.add_argument("--space", default=None)
    p.add_argument("--auto", action="store_true", help="confirm components automatically (default)")
    p.add_argument("--components", default=None, help="comma-separated component names to search")
    p.add_argument("--fixed", default=None, help="YAML file pinning non-searched components")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--budget", type=int, default=60)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--top-n", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--history", default=None, help="JSONL evaluation history")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True, help="recommendation report YAML")
    p.set_defaults(fn_impl=_cmd_recommend)

    p = sub.add_parser("predict", help="predict Top-1 accuracy for a stored configuration")
    p.add_argument("--model", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--space", default=None)
    p.set_defaults(fn_impl=_cmd_predict)

    p = sub.add_parser("benchmark", help="compare acquisition modes on synthetic functions")
    p.add_argument("--fn", choices=["sphere", "branin", "rastrigin"], required=True)
    p.add_argument("--acq", choices=[m.value for m in AcquisitionMode], default="gammaei")
    p.add_argument("--no-omega", action="store_true", help="disable the random-exploration schedule")
    p.add_argument("--repeats", type=int, default=20)
    p.add_argument("--budget", type=int, default=100)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-random-baseline", action="store_true")
    p.add_argument("--out", default=None, help="JSON summary path")
    p.set_defaults(fn_impl=_cmd_benchmark)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn_impl(args)
    except ValidationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except LoadFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DlrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
