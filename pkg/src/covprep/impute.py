"""Missing-value filling and weekly reporting-pattern correction.

All functions take a 1-D float vector with ``NaN`` as the missing marker and
return a new vector; inputs are never modified.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_BLOCK_LENGTH = 7


@dataclass(frozen=True)
class WeeklyBlock:
    start_index: int
    length: int
    total: float

    @property
    def stop(self) -> int:
        return self.start_index + self.length


def _as_float(series) -> np.ndarray:
    return np.array(series, dtype=np.float64)


def linear_interpolate(series) -> np.ndarray:
    """Fill interior missing runs with the straight line between their bounds.

    Leading and trailing missing values are left as they are.
    """
    out = _as_float(series)
    known = np.flatnonzero(~np.isnan(out))
    if known.size < 2:
        return out
    gaps = np.flatnonzero(np.isnan(out))
    gaps = gaps[(gaps > known[0]) & (gaps < known[-1])]
    if gaps.size:
        out[gaps] = np.interp(gaps, known, out[known])
    return out


def linear_extrapolate(series, mode: str = "linear") -> np.ndarray:
    """Fill leading/trailing missing values.

    ``mode="linear"`` extends the line through the first (last) two known
    points and is a no-op when fewer than two values are known.
    ``mode="constant"`` repeats the nearest known value instead.
    """
    if mode not in ("linear", "constant"):
        raise ValueError(f"unknown extrapolation mode {mode!r}")
    out = _as_float(series)
    known = np.flatnonzero(~np.isnan(out))
    if mode == "constant":
        if known.size:
            out[: known[0]] = out[known[0]]
            out[known[-1] + 1 :] = out[known[-1]]
        return out
    if known.size < 2:
        return out

    i0, i1 = known[0], known[1]
    if i0 > 0:
        slope = (out[i1] - out[i0]) / (i1 - i0)
        t = np.arange(i0)
        out[:i0] = out[i0] + (t - i0) * slope
    j1, j0 = known[-1], known[-2]
    if j1 < out.size - 1:
        slope = (out[j1] - out[j0]) / (j1 - j0)
        t = np.arange(j1 + 1, out.size)
        out[j1 + 1 :] = out[j1] + (t - j1) * slope
    return out


def zero_fill(series) -> np.ndarray:
    out = _as_float(series)
    out[np.isnan(out)] = 0.0
    return out


def detect_weekly_blocks(series) -> list[WeeklyBlock]:
    """Find lump-sum reports: up to six zeros followed by one positive value.

    The scan runs left to right and blocks never overlap. A run of more than
    six zeros contributes only its last six days to the block. Missing values
    break a run, negative reports are never treated as block totals, and
    blocks of length one (a report with no preceding zero) are not returned.
    """
    x = _as_float(series)
    blocks = []
    zeros = 0
    for i, v in enumerate(x):
        if np.isnan(v):
            zeros = 0
        elif v == 0.0:
            zeros += 1
        else:
            k = min(zeros, MAX_BLOCK_LENGTH - 1) + 1
            if v > 0 and k >= 2:
                blocks.append(WeeklyBlock(start_index=i - k + 1, length=k, total=float(v)))
            zeros = 0
    return blocks


def weekly_pattern_impute(series) -> np.ndarray:
    """Spread each detected block's total evenly over the days of the block.

    The sum of the series is preserved up to floating-point rounding.
    """
    out = _as_float(series)
    for block in detect_weekly_blocks(out):
        out[block.start_index : block.stop] = block.total / block.length
    return out


def standard_impute(series, extrapolation: str = "linear") -> np.ndarray:
    """Interpolate, extrapolate the tails, then zero-fill whatever is left."""
    return zero_fill(linear_extrapolate(linear_interpolate(series), mode=extrapolation))
