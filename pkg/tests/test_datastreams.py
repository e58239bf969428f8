import json

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError
from scipy.integrate import solve_ivp

from palm.datastreams import (
    BUILTIN_SPECS,
    gas_furnace_standin,
    gen_gas_furnace_standin,
    gen_mackey_glass,
    lag_frame,
    load_csv_stream,
    load_dataset,
    mackey_glass_series,
    mirror_frame,
    nonlinear_series,
    normalize_frame,
    read_csv_frame,
    resolve_spec,
    split_frame,
)
from palm.errors import DatasetError
from palm.schemas import DatasetSpec, LagSlot, TargetSlot


def _spec(**overrides) -> DatasetSpec:
    fields = {
        "name": "toy",
        "source": "csv",
        "path": "toy.csv",
        "inputs": [LagSlot(column="u", lag=2), LagSlot(column="y")],
        "target": TargetSlot(column="y", lead=1),
        "train_count": 4,
        "test_count": 2,
    }
    fields.update(overrides)
    return DatasetSpec(**fields)


def _toy_frame(rows: int = 10) -> pd.DataFrame:
    return pd.DataFrame({"u": 10.0 + np.arange(rows), "y": np.arange(rows, dtype=float)})


class TestGenerators:
    def test_mackey_glass_starts_from_history(self) -> None:
        series = mackey_glass_series(400)
        assert series.shape == (400,)
        assert series[0] == pytest.approx(1.2)
        assert np.all(np.isfinite(series))
        assert 0.0 < series.min() and series.max() < 2.0

    def test_mackey_glass_without_delay_matches_ode_solver(self) -> None:
        step = 0.5
        series = mackey_glass_series(41, delay=0.0, step=step)
        times = step * np.arange(41)
        reference = solve_ivp(
            lambda t, y: 0.2 * y / (1 + y**10) - 0.1 * y,
            (0.0, times[-1]),
            [1.2],
            t_eval=times,
            rtol=1e-10,
            atol=1e-12,
        )
        np.testing.assert_allclose(series, reference.y[0], atol=1e-5)

    def test_mackey_glass_delay_must_fit_grid(self) -> None:
        with pytest.raises(DatasetError):
            mackey_glass_series(10, delay=1.5, step=1.0)

    def test_nonlinear_recursion(self) -> None:
        frame = nonlinear_series(5)
        u = np.sin(2 * np.pi * np.arange(5) / 100)
        assert list(frame.columns) == ["u", "y"]
        assert frame["y"].iloc[0] == 0.0
        assert frame["y"].iloc[1] == pytest.approx(u[0] ** 3)
        y2 = frame["y"].iloc[1]
        assert frame["y"].iloc[2] == pytest.approx(y2 / (1 + y2**2) + u[1] ** 3)

    def test_gas_furnace_standin_shape(self) -> None:
        frame = gas_furnace_standin()
        assert frame.shape == (296, 2)
        pd.testing.assert_frame_equal(frame, gas_furnace_standin())


class TestFrames:
    def test_lag_alignment(self) -> None:
        lagged = lag_frame(_toy_frame(), _spec())
        assert list(lagged.columns) == ["x1", "x2", "y", "k"]
        assert lagged["k"].tolist() == list(range(2, 9))
        first = lagged.iloc[0]
        assert first["x1"] == 10.0
        assert first["x2"] == 2.0
        assert first["y"] == 3.0

    def test_missing_column(self) -> None:
        with pytest.raises(DatasetError, match="missing columns"):
            lag_frame(_toy_frame().drop(columns="u"), _spec())

    def test_too_short(self) -> None:
        with pytest.raises(DatasetError, match="not enough"):
            lag_frame(_toy_frame(3), _spec())

    def test_normalize(self) -> None:
        frame = normalize_frame(pd.DataFrame({"a": [2.0, 4.0, 6.0], "b": [5.0, 5.0, 5.0]}))
        assert frame["a"].tolist() == [0.0, 0.5, 1.0]
        assert frame["b"].tolist() == [0.0, 0.0, 0.0]

    def test_mirror(self) -> None:
        mirrored = mirror_frame(_toy_frame(3))
        assert mirrored["y"].tolist() == [0.0, 1.0, 2.0, 2.0, 1.0, 0.0]


class TestSplit:
    def test_counts(self) -> None:
        split = split_frame(lag_frame(_toy_frame(), _spec()), _spec())
        assert split.train["k"].tolist() == [2, 3, 4, 5]
        assert split.test["k"].tolist() == [6, 7]

    def test_fraction_and_limits(self) -> None:
        spec = _spec(train_count=None, test_count=None, train_fraction=0.5)
        split = split_frame(lag_frame(_toy_frame(20), spec), spec, train_limit=3, test_limit=2)
        assert split.train["k"].tolist() == [2, 3, 4]
        assert split.test["k"].tolist() == [10, 11]

    def test_explicit_starts(self) -> None:
        spec = _spec(train_start=4, test_start=12, train_count=3, test_count=2)
        split = split_frame(lag_frame(_toy_frame(20), spec), spec)
        assert split.train["k"].tolist() == [4, 5, 6]
        assert split.test["k"].tolist() == [12, 13]

    def test_not_enough_rows(self) -> None:
        spec = _spec(train_count=50)
        with pytest.raises(DatasetError, match="training samples"):
            split_frame(lag_frame(_toy_frame(), spec), spec)

    def test_samples_are_extended(self) -> None:
        split = split_frame(lag_frame(_toy_frame(), _spec()), _spec())
        samples = list(split.samples("test"))
        assert len(samples) == 2
        assert samples[0].x_e.tolist() == [1.0, 14.0, 6.0]
        assert samples[0].y_d == 7.0
        assert samples[0].k == 6


class TestCsv:
    def test_missing_file(self, tmp_path) -> None:
        with pytest.raises(DatasetError, match="not found"):
            read_csv_frame(tmp_path / "absent.csv", "toy")

    def test_non_numeric(self, tmp_path) -> None:
        path = tmp_path / "toy.csv"
        path.write_text("u,y\n1,2\nx,3\n")
        with pytest.raises(DatasetError, match="non-numeric"):
            read_csv_frame(path, "toy")

    def test_load_csv_stream(self, tmp_path) -> None:
        path = tmp_path / "toy.csv"
        _toy_frame().to_csv(path, index=False)
        split = load_csv_stream(path, _spec())
        assert len(split.train) == 4
        assert len(split.test) == 2


class TestBuiltins:
    def test_gas_furnace_standin_protocol(self) -> None:
        split = gen_gas_furnace_standin()
        assert len(split.train) == 200
        assert len(split.test) == 90
        frame = split.to_frame()
        assert frame[["x1", "x2", "y"]].to_numpy().min() >= 0.0
        assert frame[["x1", "x2", "y"]].to_numpy().max() <= 1.0

    def test_mackey_glass_protocol(self) -> None:
        split = gen_mackey_glass()
        assert len(split.train) == 3000
        assert len(split.test) == 500
        assert split.train["k"].iloc[0] == 201
        assert split.test["k"].iloc[0] == 5001
        assert split.input_columns == ["x1", "x2", "x3", "x4"]

    def test_nonlinear_with_limits(self) -> None:
        split = load_dataset("nonlinear-sysid", train_limit=100, test_limit=20)
        assert len(split.train) == 100
        assert len(split.test) == 20
        assert split.test["k"].iloc[0] == 50000

    def test_csv_builtin_reads_data_dir(self, tmp_path) -> None:
        gas_furnace_standin().to_csv(tmp_path / "box_jenkins.csv", index=False)
        split = load_dataset("box-jenkins", data_dir=tmp_path)
        assert len(split.train) == 200
        assert len(split.test) == 90

    def test_missing_real_world_file(self, tmp_path) -> None:
        with pytest.raises(DatasetError, match="not found"):
            load_dataset("helicopter", data_dir=tmp_path)

    def test_feedback_slots(self) -> None:
        assert BUILTIN_SPECS["nonlinear-sysid"].feedback_slots() == {0: 1}
        assert BUILTIN_SPECS["box-jenkins"].feedback_slots() == {1: 1}
        assert BUILTIN_SPECS["mackey-glass"].feedback_slots() == {0: 85, 1: 91, 2: 97, 3: 103}


class TestSpecFiles:
    def test_resolve_json_spec(self, tmp_path) -> None:
        _toy_frame().to_csv(tmp_path / "toy.csv", index=False)
        spec_path = tmp_path / "toy.json"
        spec_path.write_text(_spec().model_dump_json())

        spec = resolve_spec(str(spec_path))

        assert spec.path == str(tmp_path / "toy.csv")
        assert len(load_dataset(str(spec_path)).train) == 4

    def test_invalid_json_spec(self, tmp_path) -> None:
        spec_path = tmp_path / "bad.json"
        spec_path.write_text(json.dumps({"name": "bad", "source": "csv"}))
        with pytest.raises(DatasetError, match="invalid dataset spec"):
            resolve_spec(str(spec_path))

    def test_unknown_dataset(self) -> None:
        with pytest.raises(DatasetError, match="unknown dataset"):
            resolve_spec("weather")

    @pytest.mark.parametrize(
        "overrides",
        [
            {"inputs": []},
            {"path": None},
            {"train_count": None},
            {"format_version": 2},
        ],
    )
    def test_spec_validation(self, overrides) -> None:
        with pytest.raises(ValidationError):
            _spec(**overrides)
