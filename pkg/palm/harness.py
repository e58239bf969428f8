"""Experiment runs, sensitivity sweeps and suites, with the run ledger kept up to date."""

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from importlib.resources import files
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
import pandas as pd
from sqlmodel import Session

from palm.config import get_settings
from palm.datastreams import load_dataset, resolve_spec
from palm.engine import RunTrace, predict_stream, train_stream
from palm.errors import ConfigError, MetricsError, PalmError
from palm.models import RunKind, RunRecord, RunStatus
from palm.schemas import (
    HYPERPARAMETER_RANGES,
    FuzzyOrder,
    LearningMode,
    MetricReport,
    ModelConfig,
    RunConfig,
    SweepRow,
)
from palm.snapshot import snapshot

log = logging.getLogger(__name__)

CONFIGURATIONS: list[tuple[FuzzyOrder, LearningMode]] = [
    (FuzzyOrder.TYPE1, LearningMode.LOCAL),
    (FuzzyOrder.TYPE1, LearningMode.GLOBAL),
    (FuzzyOrder.TYPE2, LearningMode.LOCAL),
    (FuzzyOrder.TYPE2, LearningMode.GLOBAL),
]

SUITES: dict[str, list[str]] = {
    "synthetic": ["box-jenkins", "mackey-glass", "nonlinear-sysid"],
    "real-world": ["quadcopter", "helicopter", "sp500"],
    "desk": ["gas-furnace-standin", "mackey-glass", "nonlinear-sysid"],
}


class Metrics(NamedTuple):
    mse: float
    rmse: float
    ndei: float
    nrmse: float


def compute_metrics(predictions: np.ndarray, targets: np.ndarray) -> Metrics:
    predictions = np.asarray(predictions, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if predictions.shape != targets.shape or targets.size == 0:
        raise MetricsError("predictions and targets must be non-empty and of equal length")
    std = float(np.std(targets))
    if std == 0.0:
        raise MetricsError("targets have zero variance; NDEI is undefined")
    mse = float(np.mean((targets - predictions) ** 2))
    rmse = float(np.sqrt(mse))
    return Metrics(mse=mse, rmse=rmse, ndei=rmse / std, nrmse=float(np.sqrt(mse / std)))


@lru_cache
def load_ledger() -> dict[str, Any]:
    return json.loads(files("palm").joinpath("hyperparameters.json").read_text())


def ledger_overrides(dataset: str, label: str) -> dict[str, Any]:
    ledger = load_ledger()
    return {**ledger["defaults"], **ledger["datasets"].get(dataset, {}).get(label, {})}


def build_model_config(dataset: str, overrides: dict[str, Any] | None = None) -> ModelConfig:
    """Ledger values for the dataset/configuration, then explicit overrides."""
    spec = resolve_spec(dataset)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    order = FuzzyOrder(overrides.get("fuzzy_order", FuzzyOrder.TYPE1))
    learning = LearningMode(overrides.get("learning", LearningMode.LOCAL))
    merged = {**ledger_overrides(spec.name, f"{order.value}-{learning.value}"), **overrides}
    if merged.get("recurrent") and not merged.get("feedback_slots"):
        merged["feedback_slots"] = spec.feedback_slots()
    return ModelConfig.model_validate(merged)


def build_run_config(dataset: str, overrides: dict[str, Any] | None = None, **fields: Any) -> RunConfig:
    return RunConfig(dataset=dataset, model=build_model_config(dataset, overrides), **fields)


def execute_run(config: RunConfig, out_root: str | Path | None = None) -> MetricReport:
    """Train on the training split, score the test split, write report, trace and model."""
    split = load_dataset(
        config.dataset, train_limit=config.train_limit, test_limit=config.test_limit
    )
    start = time.perf_counter()
    model, trace = train_stream(config.model, split.samples("train"))
    test_trace = predict_stream(model, split.samples("test"), recurrent=config.model.recurrent)
    exec_time = time.perf_counter() - start
    metrics = compute_metrics(*test_trace.scored())

    out_dir = Path(config.output_dir or out_root or get_settings().output_dir) / config.run_name
    out_dir.mkdir(parents=True, exist_ok=True)
    full = RunTrace()
    full.extend(trace)
    full.extend(test_trace)
    trace_path = out_dir / "trace.csv"
    full.to_frame().to_csv(trace_path, index=False)
    (out_dir / "model.json").write_text(snapshot(model))

    report = MetricReport(
        run_name=config.run_name,
        dataset=config.dataset,
        rmse=metrics.rmse,
        ndei=metrics.ndei,
        nrmse=metrics.nrmse,
        rule_count=model.rule_count,
        param_count=model.param_count,
        train_samples=len(trace),
        test_samples=len(test_trace),
        exec_time=exec_time,
        config=config,
        trace_path=str(trace_path),
    )
    (out_dir / "report.json").write_text(report.model_dump_json(indent=2))
    log.info(
        f"{config.run_name}: RMSE {metrics.rmse:.4f} NDEI {metrics.ndei:.4f} "
        f"rules {model.rule_count} params {model.param_count} ({exec_time:.2f}s)"
    )
    return report


def _open_record(session: Session | None, config: RunConfig, kind: RunKind) -> RunRecord:
    record = RunRecord(
        name=config.run_name,
        kind=kind,
        dataset=config.dataset,
        fuzzy_order=config.model.fuzzy_order.value,
        learning=config.model.learning.value,
        recurrent=config.model.recurrent,
        status=RunStatus.RUNNING,
    )
    if session is not None:
        session.add(record)
        session.commit()
        session.refresh(record)
    return record


def _close_record(
    session: Session | None, record: RunRecord, outcome: MetricReport | BaseException
) -> None:
    record.finished_at = datetime.utcnow()
    if isinstance(outcome, MetricReport):
        record.status = RunStatus.SUCCESS
        record.rmse = outcome.rmse
        record.ndei = outcome.ndei
        record.nrmse = outcome.nrmse
        record.rule_count = outcome.rule_count
        record.param_count = outcome.param_count
        record.train_samples = outcome.train_samples
        record.test_samples = outcome.test_samples
        record.exec_time = outcome.exec_time
        record.trace_path = outcome.trace_path
        if outcome.trace_path:
            record.report_path = str(Path(outcome.trace_path).with_name("report.json"))
    else:
        record.status = RunStatus.FAILED
        record.error_message = str(outcome)
    if session is not None:
        session.commit()


def run_experiment(
    config: RunConfig,
    session: Session | None = None,
    kind: RunKind = RunKind.SINGLE,
    out_root: str | Path | None = None,
) -> MetricReport:
    record = _open_record(session, config, kind)
    try:
        report = execute_run(config, out_root)
    except Exception as exc:
        _close_record(session, record, exc)
        raise
    _close_record(session, record, report)
    return report


def _run_batch(
    configs: list[RunConfig],
    workers: int,
    session: Session | None,
    kind: RunKind,
    out_root: str | Path | None,
) -> list[MetricReport | Exception]:
    """Run independent jobs, in a process pool when workers > 1; ledger writes stay here."""
    records = [_open_record(session, config, kind) for config in configs]
    outcomes: list[MetricReport | Exception] = []
    if workers <= 1 or len(configs) <= 1:
        for config in configs:
            try:
                outcomes.append(execute_run(config, out_root))
            except Exception as exc:
                outcomes.append(exc)
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(configs))) as pool:
            futures = [pool.submit(execute_run, config, out_root) for config in configs]
            for future in futures:
                try:
                    outcomes.append(future.result())
                except Exception as exc:
                    outcomes.append(exc)
    for record, outcome in zip(records, outcomes):
        _close_record(session, record, outcome)
    return outcomes


@dataclass(frozen=True)
class SweepGrid:
    dataset: str
    base_b1: float
    base_b2: float
    b1_grid: tuple[float, ...] = ()
    b2_grid: tuple[float, ...] = ()


SWEEP_PRESETS: dict[str, SweepGrid] = {
    "box-jenkins-tight": SweepGrid(
        dataset="box-jenkins",
        base_b1=0.020,
        base_b2=0.055,
        b2_grid=(0.052, 0.053, 0.054, 0.055),
        b1_grid=(0.020, 0.022, 0.024, 0.026),
    ),
    "box-jenkins-loose": SweepGrid(
        dataset="box-jenkins",
        base_b1=0.035,
        base_b2=0.050,
        b2_grid=(0.044, 0.046, 0.048, 0.050),
        b1_grid=(0.031, 0.033, 0.035, 0.037),
    ),
}


def sweep_points(grid: SweepGrid) -> list[tuple[str, float, float]]:
    """One-at-a-time points: b2 varied at the base b1, then b1 varied at the base b2."""
    return [("b2", grid.base_b1, b2) for b2 in grid.b2_grid] + [
        ("b1", b1, grid.base_b2) for b1 in grid.b1_grid
    ]


def sensitivity_sweep(
    base: RunConfig,
    grid: SweepGrid,
    workers: int = 1,
    session: Session | None = None,
    out_root: str | Path | None = None,
) -> list[SweepRow]:
    points = sweep_points(grid)
    if not points:
        return []
    low, high = HYPERPARAMETER_RANGES["b1"]
    configs = []
    for varied, b1, b2 in points:
        if not base.model.force and not (low <= b1 <= high and low <= b2 <= high):
            raise ConfigError(f"sweep point b1={b1}, b2={b2} outside [{low}, {high}]")
        model = ModelConfig.model_validate({**base.model.model_dump(), "b1": b1, "b2": b2})
        configs.append(
            base.model_copy(
                update={"model": model, "name": f"{base.run_name}-b1_{b1:g}-b2_{b2:g}"}
            )
        )
    log.info(f"sweep over {len(configs)} points on {base.dataset}")
    outcomes = _run_batch(configs, workers, session, RunKind.SWEEP, out_root)
    rows = []
    for (varied, b1, b2), outcome in zip(points, outcomes):
        if isinstance(outcome, Exception):
            raise PalmError(f"sweep point b1={b1:g}, b2={b2:g} failed: {outcome}") from outcome
        rows.append(
            SweepRow(
                b1=b1,
                b2=b2,
                varied=varied,
                nrmse=outcome.nrmse,
                ndei=outcome.ndei,
                exec_time=outcome.exec_time,
                rules=outcome.rule_count,
            )
        )
    return rows


def sweep_table(rows: list[SweepRow]) -> pd.DataFrame:
    return pd.DataFrame(
        [row.model_dump() for row in rows],
        columns=["varied", "b1", "b2", "nrmse", "ndei", "exec_time", "rules"],
    )


def dataset_available(dataset: str, data_dir: str | Path | None = None) -> bool:
    spec = resolve_spec(dataset)
    if spec.source != "csv":
        return True
    path = Path(spec.path)
    if not path.is_absolute():
        path = Path(data_dir or get_settings().data_dir) / path
    return path.is_file()


@dataclass
class SuiteResult:
    name: str
    reports: list[MetricReport] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not self.skipped and not self.failures


def experiment_suite(
    name: str,
    out_dir: str | Path | None = None,
    workers: int = 1,
    train_limit: int | None = None,
    session: Session | None = None,
    data_dir: str | Path | None = None,
) -> SuiteResult:
    """Every configuration on every dataset of a named suite."""
    if name not in SUITES:
        raise ConfigError(f"unknown suite '{name}' (known: {', '.join(SUITES)})")
    result = SuiteResult(name)
    configs = []
    for dataset in SUITES[name]:
        if not dataset_available(dataset, data_dir):
            log.warning(f"suite {name}: {dataset} is unavailable, skipping")
            result.skipped.append(dataset)
            continue
        for order, learning in CONFIGURATIONS:
            configs.append(
                build_run_config(
                    dataset,
                    {"fuzzy_order": order, "learning": learning},
                    train_limit=train_limit,
                )
            )
    log.info(f"suite {name}: {len(configs)} runs")
    for config, outcome in zip(
        configs, _run_batch(configs, workers, session, RunKind.SUITE, out_dir)
    ):
        if isinstance(outcome, Exception):
            log.error(f"suite {name}: {config.run_name} failed: {outcome}")
            result.failures.append(config.run_name)
        else:
            result.reports.append(outcome)
    return result
