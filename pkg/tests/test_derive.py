import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from covprep.config import PipelineConfig
from covprep.derive import (
    DependencyGraph,
    DependencySpec,
    FormulaKind,
    build_default_graph,
    check_consistency,
    compute_new_from_total,
    compute_per_capita,
    compute_positive_rate,
    compute_smoothed7,
    compute_tests_per_case,
    compute_total_from_new,
    run_computation_processing,
)
from covprep.errors import CyclicGraph, InvalidGraph, MissingInput, NonpositivePopulation
from covprep.ingest import SeriesFrame
from covprep.pipeline import custom_preprocess

finite = arrays(np.float64, st.integers(1, 60), elements=st.floats(-1e6, 1e6))


def frame(**cols):
    n = len(next(iter(cols.values())))
    dates = np.arange(n) + np.datetime64("2021-01-01")
    return SeriesFrame(dates, cols, "TST", 1_000_000.0)


class TestFormulas:
    def test_new_from_total(self):
        np.testing.assert_array_equal(compute_new_from_total([0, 5, 7]), [0, 5, 2])
        np.testing.assert_array_equal(compute_new_from_total([4, 4, 4]), [4, 0, 0])

    def test_total_from_new(self):
        np.testing.assert_array_equal(compute_total_from_new([0, 5, 2]), [0, 5, 7])
        np.testing.assert_array_equal(compute_total_from_new(np.zeros(4)), np.zeros(4))

    @settings(max_examples=100, deadline=None)
    @given(finite)
    def test_inverse_pair(self, x):
        np.testing.assert_allclose(compute_total_from_new(compute_new_from_total(x)), x,
                                   atol=1e-9 * (1 + np.abs(x).max()))
        np.testing.assert_allclose(compute_new_from_total(compute_total_from_new(x)), x,
                                   atol=1e-9 * (1 + np.abs(x).sum()))

    def test_positive_rate_constant_ratio(self):
        assert compute_positive_rate([10] * 7, [100] * 7)[6] == pytest.approx(0.1, abs=1e-15)
        np.testing.assert_allclose(compute_positive_rate([3, 4, 5], [3, 4, 5]), 1.0)

    def test_positive_rate_skips_zero_test_days(self):
        cases = np.arange(1, 8, dtype=float)
        tests = np.array([10, 0, 10, 20, 0, 10, 40], dtype=float)
        ratios = [1 / 10, 3 / 10, 4 / 20, 6 / 10, 7 / 40]
        assert compute_positive_rate(cases, tests)[6] == pytest.approx(np.mean(ratios), abs=1e-15)

    def test_positive_rate_missing_without_tests(self):
        out = compute_positive_rate([1, 2, 3], [0, 0, 0])
        assert np.isnan(out).all()

    def test_tests_per_case(self):
        np.testing.assert_array_equal(compute_tests_per_case([0.1, 1.0]), [10.0, 1.0])
        assert np.isnan(compute_tests_per_case([0.0])[0])

    def test_smoothed(self):
        np.testing.assert_array_equal(compute_smoothed7(np.full(10, 3.5)), np.full(10, 3.5))
        assert compute_smoothed7([7, 0, 0, 0, 0, 0, 0])[6] == 1.0
        assert compute_smoothed7([3, 6, 9])[2] == 6.0

    def test_per_capita(self):
        assert compute_per_capita([5e8], 5e8, 1e6)[0] == 1e6
        assert compute_per_capita([0.0], 5e8, 1e6)[0] == 0.0
        assert compute_per_capita([1393.0], 1.393e9, 1e6)[0] == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(NonpositivePopulation):
            compute_per_capita([1.0], 0.0, 1e6)


class TestSpecsAndGraph:
    def test_spec_validation(self):
        with pytest.raises(InvalidGraph):
            DependencySpec("x", FormulaKind.PER_CAPITA, ("a",), 2, scale=10.0)
        with pytest.raises(InvalidGraph):
            DependencySpec("x", FormulaKind.POSITIVE_RATE, ("a",), 2)
        with pytest.raises(InvalidGraph):
            DependencySpec("x", FormulaKind.SMOOTHED7, ("a",), 0)

    def test_cycle_rejected(self):
        with pytest.raises(CyclicGraph):
            DependencyGraph([
                DependencySpec("a", FormulaKind.SMOOTHED7, ("b",), 1),
                DependencySpec("b", FormulaKind.SMOOTHED7, ("a",), 2),
            ])

    def test_order_must_increase(self):
        with pytest.raises(InvalidGraph):
            DependencyGraph([
                DependencySpec("a", FormulaKind.SMOOTHED7, ("raw",), 2),
                DependencySpec("b", FormulaKind.SMOOTHED7, ("a",), 2),
            ])

    def test_duplicate_target(self):
        with pytest.raises(InvalidGraph):
            DependencyGraph([
                DependencySpec("a", FormulaKind.SMOOTHED7, ("raw",), 1),
                DependencySpec("a", FormulaKind.TOTAL_FROM_NEW, ("raw",), 1),
            ])

    def test_default_graph(self):
        g = build_default_graph()
        assert len(g.specs) == 27
        assert g.order_of("total_deaths_per_million") > g.order_of("total_deaths")
        assert g.order_of("tests_per_case") > g.order_of("positive_rate")
        assert g.order_of("new_people_vaccinated") == 1
        per_capita = {
            1e6: {"new_cases_per_million", "new_deaths_per_million", "total_cases_per_million",
                  "total_deaths_per_million", "new_cases_smoothed_per_million",
                  "new_deaths_smoothed_per_million", "new_vaccinations_smoothed_per_million"},
            1e3: {"total_tests_per_thousand", "new_tests_per_thousand",
                  "new_tests_smoothed_per_thousand"},
            1e2: {"total_vaccinations_per_hundred", "people_vaccinated_per_hundred",
                  "people_fully_vaccinated_per_hundred", "total_boosters_per_hundred",
                  "new_people_vaccinated_smoothed_per_hundred"},
        }
        for scale, names in per_capita.items():
            got = {s.target for s in g.specs if s.kind is FormulaKind.PER_CAPITA and s.scale == scale}
            assert got == names
        assert len(g.targets) == len(set(g.targets))

    def test_json_round_trip_bit_exact(self):
        g = build_default_graph()
        text = g.to_json()
        assert DependencyGraph.from_json(text).to_json() == text
        assert json.loads(text)[0].keys() >= {"target", "kind", "inputs", "order"}


class TestComputation:
    def test_restores_consistency(self):
        g = DependencyGraph([DependencySpec("total", FormulaKind.TOTAL_FROM_NEW, ("new",), 2)])
        f = frame(new=np.array([1.0, 2, 3]), total=np.array([9.0, 9, 9]))
        out = run_computation_processing(f, g)
        np.testing.assert_array_equal(out["total"], [1, 3, 6])
        assert check_consistency(out, g) == {"total": 0.0}

    def test_empty_graph(self):
        f = frame(a=np.array([1.0, 2.0]))
        assert run_computation_processing(f, DependencyGraph([])).equals(f)

    def test_missing_input(self):
        g = DependencyGraph([DependencySpec("total", FormulaKind.TOTAL_FROM_NEW, ("new",), 2)])
        with pytest.raises(MissingInput):
            run_computation_processing(frame(other=np.ones(3)), g)
        with pytest.raises(MissingInput):
            run_computation_processing(frame(new=np.array([1.0, np.nan])), g)

    def test_permuting_specs_within_orders(self):
        g = build_default_graph()
        rng = np.random.default_rng(3)
        shuffled = DependencyGraph([g.specs[i] for i in rng.permutation(len(g.specs))])
        inputs = {"new_cases", "new_deaths", "new_tests", "new_vaccinations", "people_vaccinated",
                  "people_fully_vaccinated", "total_boosters"}
        f = frame(**{n: rng.integers(0, 100, 40).astype(float) for n in inputs})
        a, b = run_computation_processing(f, g), run_computation_processing(f, shuffled)
        assert sorted(a.names) == sorted(b.names)
        for name in a.names:
            np.testing.assert_array_equal(a[name], b[name])

    def test_india_custom_processing(self, india):
        cfg = PipelineConfig(input="unused")
        g = build_default_graph()
        processed, _ = custom_preprocess(india, cfg, g)
        np.testing.assert_array_equal(processed["total_deaths"],
                                      np.cumsum(processed["new_deaths"]))
        # everything that the formulas define agrees with the formulas
        recomputed = run_computation_processing(processed, g)
        for spec in g.specs:
            a, b = processed[spec.target], recomputed[spec.target]
            ok = ~np.isnan(b)
            assert np.max(np.abs(a[ok] - b[ok]), initial=0.0) < 1e-9, spec.target
        rate = processed["positive_rate"]
        tested = np.flatnonzero(processed["new_tests"] > 0)
        assert np.var(rate[tested]) > 0
        pr_ok = rate > 0
        np.testing.assert_allclose(rate[pr_ok] * processed["tests_per_case"][pr_ok], 1.0, rtol=1e-12)
