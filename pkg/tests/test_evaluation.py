import csv
import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covprep.config import PipelineConfig
from covprep.errors import LengthMismatch, TooFewRows, TooFewSamples, ZeroVariance
from covprep.evaluation import (
    NOT_IMPLEMENTED,
    REPORT_HEADER,
    ZERO_VARIANCE,
    EvalReport,
    ModelResult,
    SplitSpec,
    evaluate_pipeline,
    r2,
    rmse,
    rmse_variance,
    series_csv,
    split_chronological,
)
from covprep.ingest import SeriesFrame

FAST = {
    "KNN": {"n_neighbors": [3]},
    "DecisionTree": {"max_depth": [3]},
    "RandomForest": {"n_estimators": [5]},
    "GradientBoosting": {"n_estimators": [10], "learning_rate": [0.1], "max_depth": [2]},
    "MLP": {"hidden_layers": [[4]], "max_epochs": [10]},
    "Ridge": {"alpha": [0.1]},
    "Lasso": {"alpha": [0.01]},
    "ElasticNet": {"alpha": [0.01], "l1_ratio": [0.5]},
}


def toy_frame(target, rng, n=80):
    dates = np.arange(n) + np.datetime64("2022-01-01")
    return SeriesFrame(dates, {"a": rng.normal(size=n), "b": rng.normal(size=n), "y": target},
                       "TST", 1.0)


class TestMetrics:
    def test_rmse_examples(self):
        assert rmse([1, 2, 3], [1, 2, 3]) == 0.0
        assert rmse([0, 0], [3, 4]) == pytest.approx(math.sqrt(12.5))

    def test_r2_examples(self):
        assert r2([1, 2, 3], [1, 2, 3]) == 1.0
        assert r2([1, 2, 3], [2, 2, 2]) == 0.0
        assert r2([1, 2, 3], [3, 2, 1]) == pytest.approx(-3.0)

    def test_r2_constant_target(self):
        with pytest.raises(ZeroVariance):
            r2([4, 4, 4], [4, 4, 4])

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            rmse([1, 2], [1])
        with pytest.raises(TooFewSamples):
            rmse([], [])

    def test_rmse_variance_examples(self):
        assert rmse_variance(1, 2, 3) == pytest.approx(2 / 3)
        assert rmse_variance(5, 5, 5) == 0.0
        with pytest.raises(ValueError):
            rmse_variance(-1, 0, 0)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(0, 1e6), min_size=3, max_size=3), st.permutations(range(3)),
           st.floats(0.01, 100))
    def test_rmse_variance_properties(self, v, perm, c):
        base = rmse_variance(*v)
        assert rmse_variance(*(v[i] for i in perm)) == base
        assert rmse_variance(*(c * x for x in v)) == pytest.approx(c * c * base, rel=1e-9, abs=1e-9)
        assert base >= 0


class TestSplit:
    @pytest.mark.parametrize("n, sizes", [(10, (7, 1, 2)), (100, (70, 15, 15)), (1680, (1176, 252, 252))])
    def test_sizes(self, n, sizes):
        assert tuple(len(p) for p in split_chronological(n)) == sizes

    def test_three_rows_with_equal_thirds(self):
        spec = SplitSpec(1 / 3, 1 / 3, 1 / 3)
        assert tuple(len(p) for p in split_chronological(3, spec)) == (1, 1, 1)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(20, 5000))
    def test_ordered_partition(self, n):
        tr, va, te = split_chronological(n)
        assert tr.start == 0 and tr.stop == va.start and va.stop == te.start and te.stop == n

    def test_too_few(self):
        with pytest.raises(TooFewRows):
            split_chronological(2)

    @pytest.mark.parametrize("fr", [(0.7, 0.2, 0.2), (1.0, 0.0, 0.0), (0.5, 0.6, -0.1)])
    def test_bad_fractions(self, fr):
        with pytest.raises(ValueError):
            SplitSpec(*fr)


class TestEvaluate:
    def test_report_layout(self, rng):
        target = rng.normal(size=80)
        frame = toy_frame(target, rng)
        cfg = PipelineConfig(input="x", grids=FAST)
        rep = evaluate_pipeline(frame, ["a", "b"], "y", cfg)
        rows = list(csv.reader(io.StringIO(rep.to_csv())))
        assert tuple(rows[0]) == REPORT_HEADER
        assert len(rows) == 1 + 9 + 1
        assert rows[-1] == ["standard", "SVR", NOT_IMPLEMENTED, NOT_IMPLEMENTED, NOT_IMPLEMENTED]
        rmses = [float(r[2]) for r in rows[1:-1]]
        assert rmses == sorted(rmses)
        assert rep.metadata["split"]["test"] == [68, 80]

    def test_constant_test_target(self, rng):
        target = np.r_[rng.normal(size=68), np.full(12, 2.0)]
        cfg = PipelineConfig(input="x", grids=FAST, models=("OLS", "KNN"))
        rep = evaluate_pipeline(toy_frame(target, rng), ["a"], "y", cfg)
        for row in rep.rows()[:-1]:
            assert row[3] == ZERO_VARIANCE
            assert math.isfinite(float(row[2]))
        assert all(r.status == ZERO_VARIANCE for r in rep.results if r.implemented)

    def test_scaler_uses_training_rows(self, rng):
        target = rng.normal(size=80)
        frame = toy_frame(target, rng)
        cfg = PipelineConfig(input="x", grids=FAST, models=("OLS",))
        rep = evaluate_pipeline(frame, ["a", "b"], "y", cfg)
        np.testing.assert_allclose(rep.scaler.mean, frame.matrix(["a", "b"])[:56].mean(axis=0))

    def test_json_round_trip(self, rng):
        cfg = PipelineConfig(input="x", grids=FAST, models=("OLS", "Ridge"))
        rep = evaluate_pipeline(toy_frame(rng.normal(size=80), rng), ["a", "b"], "y", cfg)
        text = rep.to_json()
        assert EvalReport.from_json(text).to_json() == text

    def test_best_skips_unimplemented(self):
        rep = EvalReport("standard", [
            ModelResult("OLS", rmse={"test": 2.0}),
            ModelResult("KNN", rmse={"test": 1.0}),
            ModelResult("SVR", status=NOT_IMPLEMENTED),
        ])
        assert rep.best().kind == "KNN"
        assert rep.best_nonlinear().kind == "KNN"


def test_series_csv():
    dates = np.arange(2) + np.datetime64("2021-01-01")
    text = series_csv(dates, np.array([np.nan, 2.0]), np.array([1.5, 2.0]))
    assert text == "date,original,processed\n2021-01-01,,1.5\n2021-01-02,2.0,2.0\n"
