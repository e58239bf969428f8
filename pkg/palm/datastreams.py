"""Benchmark streams: synthetic generators, CSV loading, lagging and splits."""

import json
import logging
from collections.abc import Iterator
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from palm.config import get_settings
from palm.errors import DatasetError
from palm.fuzzy.types import StreamSample
from palm.schemas import DatasetSpec, LagSlot, TargetSlot

log = logging.getLogger(__name__)

MG_HISTORY = 1.2


def _slots(column: str, lags: list[int]) -> list[LagSlot]:
    return [LagSlot(column=column, lag=lag) for lag in lags]


BUILTIN_SPECS: dict[str, DatasetSpec] = {
    spec.name: spec
    for spec in [
        DatasetSpec(
            name="mackey-glass",
            source="mackey-glass",
            inputs=_slots("y", [0, 6, 12, 18]),
            target=TargetSlot(column="y", lead=85),
            train_start=201,
            train_count=3000,
            test_start=5001,
            test_count=500,
        ),
        DatasetSpec(
            name="nonlinear-sysid",
            source="nonlinear-sysid",
            inputs=[LagSlot(column="y"), LagSlot(column="u")],
            target=TargetSlot(column="y", lead=1),
            train_count=50000,
            test_count=200,
        ),
        DatasetSpec(
            name="nonlinear-sysid-full",
            source="nonlinear-sysid",
            inputs=[*_slots("y", list(range(11))), LagSlot(column="u")],
            target=TargetSlot(column="y", lead=1),
            train_count=50000,
            test_count=200,
        ),
        DatasetSpec(
            name="box-jenkins",
            source="csv",
            path="box_jenkins.csv",
            inputs=[LagSlot(column="u", lag=4), LagSlot(column="y", lag=1)],
            target=TargetSlot(column="y"),
            train_count=200,
            test_count=90,
            normalize=True,
        ),
        DatasetSpec(
            name="gas-furnace-standin",
            source="gas-furnace-standin",
            inputs=[LagSlot(column="u", lag=4), LagSlot(column="y", lag=1)],
            target=TargetSlot(column="y"),
            train_count=200,
            test_count=90,
            normalize=True,
        ),
        DatasetSpec(
            name="helicopter",
            source="csv",
            path="helicopter.csv",
            inputs=[LagSlot(column="y"), LagSlot(column="u")],
            target=TargetSlot(column="y", lead=1),
            train_count=3600,
            normalize=True,
        ),
        DatasetSpec(
            name="quadcopter",
            source="csv",
            path="quadcopter.csv",
            inputs=[LagSlot(column="y", lag=6), LagSlot(column="u")],
            target=TargetSlot(column="y"),
            train_fraction=0.6,
            normalize=True,
        ),
        DatasetSpec(
            name="sp500",
            source="csv",
            path="sp500.csv",
            inputs=_slots("y", [0, 1, 2, 3, 4]),
            target=TargetSlot(column="y", lead=1),
            train_count=14893,
            mirror=True,
            normalize=True,
        ),
    ]
}


def mackey_glass_series(
    length: int,
    a: float = 0.1,
    b: float = 0.2,
    delay: float = 85.0,
    step: float = 1.0,
    history: float = MG_HISTORY,
) -> np.ndarray:
    """RK4 solution of dy/dt = b*y(t-delay)/(1 + y(t-delay)^10) - a*y(t) on a uniform grid.

    The delayed value at the half step is interpolated linearly between grid points;
    y(t) = history for t <= 0.
    """
    lag = int(round(delay / step))
    if not np.isclose(lag * step, delay):
        raise DatasetError("delay must be a multiple of the integration step")

    def f(y: float, y_delayed: float) -> float:
        return b * y_delayed / (1.0 + y_delayed**10) - a * y

    y = np.empty(length)
    y[0] = history

    def delayed(i: int) -> float:
        return history if i < 0 else y[i]

    for i in range(length - 1):
        if lag == 0:
            k1 = f(y[i], y[i])
            mid = y[i] + 0.5 * step * k1
            k2 = f(mid, mid)
            mid = y[i] + 0.5 * step * k2
            k3 = f(mid, mid)
            end = y[i] + step * k3
            k4 = f(end, end)
        else:
            d0, d1 = delayed(i - lag), delayed(i - lag + 1)
            d_half = 0.5 * (d0 + d1)
            k1 = f(y[i], d0)
            k2 = f(y[i] + 0.5 * step * k1, d_half)
            k3 = f(y[i] + 0.5 * step * k2, d_half)
            k4 = f(y[i] + step * k3, d1)
        y[i + 1] = y[i] + step * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return y


def nonlinear_series(length: int) -> pd.DataFrame:
    """y(k+1) = y(k)/(1 + y(k)^2) + u(k)^3 with u(k) = sin(2*pi*k/100), y(0) = 0."""
    k = np.arange(length)
    u = np.sin(2 * np.pi * k / 100)
    y = np.zeros(length)
    for i in range(length - 1):
        y[i + 1] = y[i] / (1 + y[i] ** 2) + u[i] ** 3
    return pd.DataFrame({"u": u, "y": y})


def gas_furnace_standin(length: int = 296, seed: int = 296) -> pd.DataFrame:
    """Two-column (u, y) series with a gas-furnace-like lag structure.

    The output innovation is white noise from a fixed seed, so the series is
    reproducible and carries no slow component the lagged inputs cannot explain.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    u = np.sin(2 * np.pi * t / 37) + 0.5 * np.sin(2 * np.pi * t / 13 + 0.4)
    innovation = 0.05 * rng.standard_normal(length)
    y = np.zeros(length)
    y[0] = 0.5
    for i in range(1, length):
        driven = u[i - 4] if i >= 4 else 0.0
        y[i] = 0.6 * y[i - 1] - 0.35 * driven + 0.1 * np.tanh(y[i - 1] * driven) + innovation[i]
    return pd.DataFrame({"u": u, "y": y})



@dataclass
class StreamSplit:
    spec: DatasetSpec
    train: pd.DataFrame
    test: pd.DataFrame

    @property
    def input_columns(self) -> list[str]:
        return [f"x{i + 1}" for i in range(self.spec.n_inputs)]

    def samples(self, phase: str = "train") -> Iterator[StreamSample]:
        frame = self.train if phase == "train" else self.test
        columns = self.input_columns
        for x, y, k in zip(frame[columns].to_numpy(), frame["y"].to_numpy(), frame["k"].to_numpy()):
            yield StreamSample.from_inputs(x, y, int(k))

    def to_frame(self) -> pd.DataFrame:
        return pd.concat(
            [self.train.assign(phase="train"), self.test.assign(phase="test")],
            ignore_index=True,
        )


def normalize_frame(frame: pd.DataFrame) -> pd.DataFrame:
    low, high = frame.min(), frame.max()
    span = (high - low).replace(0.0, 1.0)
    return (frame - low) / span


def mirror_frame(frame: pd.DataFrame) -> pd.DataFrame:
    return pd.concat([frame, frame.iloc[::-1]], ignore_index=True)


def lag_frame(frame: pd.DataFrame, spec: DatasetSpec) -> pd.DataFrame:
    """One row per time index t: inputs col[t - lag], target col[t + lead], k = t."""
    needed = {slot.column for slot in spec.inputs} | {spec.target.column}
    missing = sorted(needed - set(frame.columns))
    if missing:
        raise DatasetError(f"{spec.name}: missing columns {missing}")
    lead = spec.target.lead
    start, stop = spec.max_lag, len(frame) - lead
    if stop - start < 1:
        raise DatasetError(
            f"{spec.name}: {len(frame)} rows are not enough for lag {spec.max_lag} and lead {lead}"
        )
    t = np.arange(start, stop)
    columns = {
        f"x{i + 1}": frame[slot.column].to_numpy()[t - slot.lag]
        for i, slot in enumerate(spec.inputs)
    }
    columns["y"] = frame[spec.target.column].to_numpy()[t + lead]
    columns["k"] = t
    return pd.DataFrame(columns)


def split_frame(
    lagged: pd.DataFrame,
    spec: DatasetSpec,
    train_limit: int | None = None,
    test_limit: int | None = None,
) -> StreamSplit:
    pool = lagged if spec.train_start is None else lagged[lagged["k"] >= spec.train_start]
    n_train = spec.train_count or int(spec.train_fraction * len(pool))
    train = pool.iloc[:n_train]
    if len(train) < n_train or n_train == 0:
        raise DatasetError(f"{spec.name}: need {n_train} training samples, have {len(train)}")
    if spec.test_start is not None:
        rest = lagged[lagged["k"] >= spec.test_start]
    else:
        rest = lagged[lagged["k"] > train["k"].iloc[-1]]
    test = rest if spec.test_count is None else rest.iloc[: spec.test_count]
    if spec.test_count is not None and len(test) < spec.test_count:
        raise DatasetError(f"{spec.name}: need {spec.test_count} test samples, have {len(test)}")
    if train_limit is not None:
        train = train.iloc[:train_limit]
    if test_limit is not None:
        test = test.iloc[:test_limit]
    return StreamSplit(spec, train.reset_index(drop=True), test.reset_index(drop=True))


def _required_length(spec: DatasetSpec) -> int:
    train_start = spec.train_start if spec.train_start is not None else spec.max_lag
    end = (spec.test_start or train_start + (spec.train_count or 0)) + (spec.test_count or 0)
    return max(end, train_start + (spec.train_count or 0)) + spec.target.lead + 1


def read_csv_frame(path: Path, name: str) -> pd.DataFrame:
    if not path.is_file():
        raise DatasetError(f"{name}: file {path} not found")
    try:
        frame = pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetError(f"{name}: cannot parse {path}: {exc}") from exc
    frame.columns = [str(c).strip() for c in frame.columns]
    try:
        return frame.apply(pd.to_numeric, errors="raise").astype(float)
    except (ValueError, TypeError) as exc:
        raise DatasetError(f"{name}: non-numeric cell in {path}: {exc}") from exc


def source_frame(spec: DatasetSpec, data_dir: str | Path | None = None) -> pd.DataFrame:
    if spec.source == "mackey-glass":
        frame = pd.DataFrame({"y": mackey_glass_series(_required_length(spec))})
    elif spec.source == "nonlinear-sysid":
        frame = nonlinear_series(_required_length(spec))
    elif spec.source == "gas-furnace-standin":
        frame = gas_furnace_standin()
    else:
        path = Path(spec.path)
        if not path.is_absolute():
            path = Path(data_dir or get_settings().data_dir) / path
        frame = read_csv_frame(path, spec.name)
    if spec.mirror:
        frame = mirror_frame(frame)
    if spec.normalize:
        frame = normalize_frame(frame)
    return frame


def load_csv_stream(
    path: str | Path,
    spec: DatasetSpec,
    train_limit: int | None = None,
    test_limit: int | None = None,
) -> StreamSplit:
    frame = read_csv_frame(Path(path), spec.name)
    if spec.mirror:
        frame = mirror_frame(frame)
    if spec.normalize:
        frame = normalize_frame(frame)
    return split_frame(lag_frame(frame, spec), spec, train_limit, test_limit)


def gen_mackey_glass(spec: DatasetSpec | None = None) -> StreamSplit:
    spec = spec or BUILTIN_SPECS["mackey-glass"]
    return split_frame(lag_frame(source_frame(spec), spec), spec)


def gen_nonlinear_sysid(spec: DatasetSpec | None = None) -> StreamSplit:
    spec = spec or BUILTIN_SPECS["nonlinear-sysid"]
    return split_frame(lag_frame(source_frame(spec), spec), spec)


def gen_gas_furnace_standin(spec: DatasetSpec | None = None) -> StreamSplit:
    spec = spec or BUILTIN_SPECS["gas-furnace-standin"]
    return split_frame(lag_frame(source_frame(spec), spec), spec)


def resolve_spec(dataset: str) -> DatasetSpec:
    """A built-in dataset name or the path of a DatasetSpec JSON file."""
    if dataset in BUILTIN_SPECS:
        return BUILTIN_SPECS[dataset]
    path = Path(dataset)
    if path.suffix == ".json" and path.is_file():
        try:
            spec = DatasetSpec.model_validate(json.loads(path.read_text()))
        except (json.JSONDecodeError, ValidationError) as exc:
            raise DatasetError(f"invalid dataset spec {path}: {exc}") from exc
        if spec.path and not Path(spec.path).is_absolute():
            spec = spec.model_copy(update={"path": str(path.parent / spec.path)})
        return spec
    raise DatasetError(f"unknown dataset '{dataset}' (built-ins: {', '.join(sorted(BUILTIN_SPECS))})")


def load_dataset(
    dataset: str,
    data_dir: str | Path | None = None,
    train_limit: int | None = None,
    test_limit: int | None = None,
) -> StreamSplit:
    spec = resolve_spec(dataset)
    split = split_frame(lag_frame(source_frame(spec, data_dir), spec), spec, train_limit, test_limit)
    log.info(f"{spec.name}: {len(split.train)} train / {len(split.test)} test samples")
    return split
