import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covprep.impute import (
    WeeklyBlock,
    detect_weekly_blocks,
    linear_extrapolate,
    linear_interpolate,
    standard_impute,
    weekly_pattern_impute,
    zero_fill,
)

nan = np.nan


def same(a, b):
    np.testing.assert_array_equal(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


class TestInterpolate:
    def test_midpoint(self):
        same(linear_interpolate([1, nan, 3]), [1, 2, 3])

    def test_unbounded_gaps_untouched(self):
        same(linear_interpolate([nan, 5, nan]), [nan, 5, nan])

    def test_run(self):
        same(linear_interpolate([0, nan, nan, 9]), [0, 3, 6, 9])

    def test_input_not_modified(self):
        x = np.array([1.0, nan, 3.0])
        linear_interpolate(x)
        assert np.isnan(x[1])


class TestExtrapolate:
    def test_leading(self):
        same(linear_extrapolate([nan, 2, 4]), [0, 2, 4])

    def test_trailing(self):
        same(linear_extrapolate([1, 3, nan]), [1, 3, 5])

    def test_all_missing(self):
        same(linear_extrapolate([nan, nan]), [nan, nan])

    def test_single_known_point_is_noop(self):
        same(linear_extrapolate([nan, 7]), [nan, 7])

    def test_constant_mode(self):
        same(linear_extrapolate([nan, 2, 4, nan, nan], mode="constant"), [2, 2, 4, 4, 4])

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            linear_extrapolate([1, 2], mode="cubic")


class TestZeroFill:
    def test_examples(self):
        same(zero_fill([nan]), [0])
        same(zero_fill(linear_interpolate([1, nan, 2])), [1, 1.5, 2])
        same(zero_fill(linear_extrapolate([nan, 7])), [0, 7])

    def test_never_overwrites(self, rng):
        x = rng.normal(size=50)
        x[rng.random(50) < 0.3] = nan
        out = zero_fill(x)
        keep = ~np.isnan(x)
        same(out[keep], x[keep])
        assert not np.isnan(out).any()

    def test_standard_impute_chain(self):
        same(standard_impute([nan, 2, nan, 6, nan]), [0, 2, 4, 6, 8])
        same(standard_impute([nan, 7, nan]), [0, 7, 0])


class TestWeeklyBlocks:
    def test_canonical_week(self):
        assert detect_weekly_blocks([0, 0, 0, 0, 0, 0, 70]) == [WeeklyBlock(0, 7, 70.0)]

    def test_no_zero_runs(self):
        assert detect_weekly_blocks([5, 6, 7]) == []

    def test_hand_scanned(self):
        blocks = detect_weekly_blocks([0, 0, 21, 0, 0, 0, 0, 0, 0, 14])
        assert blocks == [WeeklyBlock(0, 3, 21.0), WeeklyBlock(3, 7, 14.0)]

    def test_long_zero_run_keeps_last_six(self):
        blocks = detect_weekly_blocks([0] * 10 + [35])
        assert blocks == [WeeklyBlock(4, 7, 35.0)]

    def test_missing_breaks_a_run(self):
        assert detect_weekly_blocks([0, 0, nan, 0, 8]) == [WeeklyBlock(3, 2, 8.0)]

    def test_negative_report_is_not_a_block(self):
        assert detect_weekly_blocks([0, 0, 0, -5]) == []
        same(weekly_pattern_impute([0, 0, 0, -5]), [0, 0, 0, -5])


class TestWeeklyImpute:
    def test_full_week(self):
        same(weekly_pattern_impute([0, 0, 0, 0, 0, 0, 70]), [10] * 7)

    def test_partial_block(self):
        same(weekly_pattern_impute([0, 0, 21]), [7, 7, 7])

    def test_outside_blocks_unchanged(self):
        same(weekly_pattern_impute([4, 5, 0, 0, 9, 3]), [4, 5, 3, 3, 3, 3])

    def test_india_new_deaths(self, india):
        raw = india["new_deaths"]
        out = weekly_pattern_impute(raw)
        assert abs(out.sum() - raw.sum()) <= 1e-12 * abs(raw.sum())
        # every original block became a flat plateau
        for block in detect_weekly_blocks(raw):
            plateau = out[block.start_index:block.stop]
            assert np.all(plateau == plateau[0])
        # a zero run can still end where a plateau begins (the zeros before the
        # first report are longer than a week), but never in a lump-sum spike
        for block in detect_weekly_blocks(out):
            assert out[block.stop] == out[block.stop - 1]


@st.composite
def weekly_series(draw):
    """Concatenated reporting blocks: up to six zeros then a positive total."""
    parts = []
    for _ in range(draw(st.integers(1, 20))):
        zeros = draw(st.integers(0, 6))
        total = draw(st.floats(0.5, 1e6, allow_nan=False))
        parts.extend([0.0] * zeros + [total])
    return np.array(parts)


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(weekly_series())
    def test_conservation(self, x):
        out = weekly_pattern_impute(x)
        assert abs(out.sum() - x.sum()) <= 1e-12 * abs(x.sum())

    @settings(max_examples=200, deadline=None)
    @given(weekly_series())
    def test_idempotent(self, x):
        once = weekly_pattern_impute(x)
        same(weekly_pattern_impute(once), once)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-100, 100), st.floats(-10, 10), st.integers(5, 60), st.data())
    def test_line_reconstruction(self, a, b, n, data):
        t = np.arange(n, dtype=float)
        line = a + b * t
        keep = data.draw(st.lists(st.booleans(), min_size=n, max_size=n))
        keep[data.draw(st.integers(0, n // 2 - 1))] = True
        keep[data.draw(st.integers(n // 2, n - 1))] = True
        x = np.where(keep, line, nan)
        out = linear_extrapolate(linear_interpolate(x))
        np.testing.assert_allclose(out, line, atol=1e-9, rtol=0)
