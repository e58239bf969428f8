import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Any

import httpx
from pydantic import ValidationError
from sqlmodel import Session
from tenacity import RetryError

from palm.config import get_settings
from palm.database import get_engine, init_db
from palm.datastreams import BUILTIN_SPECS, load_dataset
from palm.errors import ConfigError, PalmError
from palm.fetcher import DatasetFetcher
from palm.harness import (
    SUITES,
    SWEEP_PRESETS,
    SweepGrid,
    build_run_config,
    experiment_suite,
    run_experiment,
    sensitivity_sweep,
    sweep_table,
)
from palm.schemas import FORMAT_VERSION, FuzzyOrder, LearningMode, MetricReport, RunConfig
from palm.snapshot import render_rules, restore, rule_table

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_CONFIG = 2

# flag name -> ModelConfig field
MODEL_FLAGS = {
    "order": "fuzzy_order",
    "learning": "learning",
    "gamma": "gamma",
    "b1": "b1",
    "b2": "b2",
    "c1": "c1",
    "c2": "c2",
    "beta": "beta",
    "lr": "lr",
    "force": "force",
}


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", help=f"built-in ({', '.join(BUILTIN_SPECS)}) or spec JSON")
    parser.add_argument("--order", choices=[o.value for o in FuzzyOrder])
    parser.add_argument("--learning", choices=[m.value for m in LearningMode])
    parser.add_argument("--recurrent", action="store_true", default=None)
    for name in ("gamma", "b1", "b2", "c1", "c2", "beta", "lr"):
        parser.add_argument(f"--{name}", type=float)
    parser.add_argument("--force", action="store_true", default=None,
                        help="accept hyperparameters outside the published ranges")
    parser.add_argument("--config", type=Path, help="RunConfig JSON file; flags override it")
    parser.add_argument("--out", help="output directory for run artifacts")
    parser.add_argument("--train-limit", type=int)
    parser.add_argument("--test-limit", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="palm", description="Evolving hyperplane fuzzy regression")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train and test one configuration")
    _add_model_flags(run)
    run.add_argument("--name")

    sweep = sub.add_parser("sweep", help="one-at-a-time b1/b2 sensitivity sweep")
    _add_model_flags(sweep)
    sweep.add_argument("--preset", choices=list(SWEEP_PRESETS), default="box-jenkins-tight")
    sweep.add_argument("--b1-grid", type=float, nargs="*")
    sweep.add_argument("--b2-grid", type=float, nargs="*")
    sweep.add_argument("--workers", type=int)

    suite = sub.add_parser("suite", help="all four configurations on a named dataset suite")
    suite.add_argument("name", choices=list(SUITES))
    suite.add_argument("--out")
    suite.add_argument("--workers", type=int)
    suite.add_argument("--train-limit", type=int)

    gen = sub.add_parser("gen", help="write a dataset as a lag-structured CSV")
    gen.add_argument("dataset")
    gen.add_argument("--out", type=Path)

    inspect = sub.add_parser("inspect", help="print the rule table of a saved model")
    inspect.add_argument("model", type=Path)
    inspect.add_argument("--rules", action="store_true", help="IF-THEN form")

    fetch = sub.add_parser("fetch", help="download a benchmark CSV into the data directory")
    fetch.add_argument("url")
    fetch.add_argument("filename")
    fetch.add_argument("--force", action="store_true")

    serve = sub.add_parser("serve", help="serve the run ledger over HTTP")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _read_config_file(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    try:
        raw = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if raw.get("format_version", FORMAT_VERSION) != FORMAT_VERSION:
        raise ConfigError(f"unsupported run config version {raw.get('format_version')}")
    return raw


def _model_overrides(args: argparse.Namespace, base: dict[str, Any]) -> dict[str, Any]:
    overrides = dict(base)
    for flag, field in MODEL_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field] = value
    if args.recurrent:
        overrides["recurrent"] = True
    return overrides


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    raw = _read_config_file(args.config)
    dataset = args.dataset or raw.get("dataset")
    if not dataset:
        raise ConfigError("no dataset given (use --dataset or a config file)")
    return build_run_config(
        dataset,
        _model_overrides(args, raw.get("model", {})),
        output_dir=args.out or raw.get("output_dir"),
        name=getattr(args, "name", None) or raw.get("name"),
        train_limit=args.train_limit or raw.get("train_limit"),
        test_limit=args.test_limit or raw.get("test_limit"),
    )


def _summary(report: MetricReport) -> str:
    return (
        f"{report.run_name}: RMSE={report.rmse:.4f} NDEI={report.ndei:.4f} "
        f"NRMSE={report.nrmse:.4f} rules={report.rule_count} params={report.param_count} "
        f"time={report.exec_time:.2f}s"
    )


def _ledger_session() -> Session:
    engine = get_engine()
    init_db(engine)
    return Session(engine)


def cmd_run(args: argparse.Namespace) -> int:
    config = run_config_from_args(args)
    with _ledger_session() as session:
        report = run_experiment(config, session)
    print(_summary(report))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    preset = SWEEP_PRESETS[args.preset]
    if args.dataset is None and args.config is None:
        args.dataset = preset.dataset
    if args.order is None:
        args.order = FuzzyOrder.TYPE2.value
    if args.learning is None:
        args.learning = LearningMode.GLOBAL.value
    base = run_config_from_args(args)
    grid = SweepGrid(
        dataset=base.dataset,
        base_b1=args.b1 if args.b1 is not None else preset.base_b1,
        base_b2=args.b2 if args.b2 is not None else preset.base_b2,
        b1_grid=tuple(args.b1_grid) if args.b1_grid is not None else preset.b1_grid,
        b2_grid=tuple(args.b2_grid) if args.b2_grid is not None else preset.b2_grid,
    )
    workers = args.workers or get_settings().workers
    with _ledger_session() as session:
        rows = sensitivity_sweep(base, grid, workers=workers, session=session, out_root=args.out)
    table = sweep_table(rows)
    print(table.to_string(index=False))
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        table.to_csv(Path(args.out) / "sweep.csv", index=False)
    return EXIT_OK


def cmd_suite(args: argparse.Namespace) -> int:
    workers = args.workers or get_settings().workers
    with _ledger_session() as session:
        result = experiment_suite(
            args.name, out_dir=args.out, workers=workers, train_limit=args.train_limit, session=session
        )
    for report in result.reports:
        print(_summary(report))
    for dataset in result.skipped:
        print(f"skipped {dataset}: dataset unavailable", file=sys.stderr)
    for name in result.failures:
        print(f"failed {name}", file=sys.stderr)
    return EXIT_OK if result.complete else EXIT_RUN_FAILED


def cmd_gen(args: argparse.Namespace) -> int:
    split = load_dataset(args.dataset)
    frame = split.to_frame()
    frame = frame[[*split.input_columns, "y", "phase", "k"]]
    out = args.out or Path(f"{split.spec.name}.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)
    print(f"wrote {len(split.train)} train + {len(split.test)} test rows to {out}")
    return EXIT_OK


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        payload = args.model.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read model {args.model}: {exc}") from exc
    model = restore(payload)
    lines = render_rules(model) if args.rules else rule_table(model)
    print("\n".join(lines))
    return EXIT_OK


def cmd_fetch(args: argparse.Namespace) -> int:
    try:
        dest = asyncio.run(DatasetFetcher().download(args.url, args.filename, force=args.force))
    except (httpx.HTTPError, RetryError) as exc:
        print(f"error: download failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED
    print(f"saved {dest}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("palm.main:app", host=args.host, port=args.port)
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "suite": cmd_suite,
    "gen": cmd_gen,
    "inspect": cmd_inspect,
    "fetch": cmd_fetch,
    "serve": cmd_serve,
}


def _validation_message(exc: ValidationError) -> str:
    return "; ".join(
        f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=get_settings().log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {_validation_message(exc)}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PalmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILED
