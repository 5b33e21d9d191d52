"""
OWID-schema CSV ingestion.

Reads the Our World in Data COVID-19 table layout (one row per
location-date), splits it per location, and builds contiguous daily
``SeriesFrame`` objects. Missing values are carried as ``NaN`` in float64
vectors; categorical columns are kept out of the numeric table and stored
alongside it so a frame can be written back to the same CSV dialect.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import hashlib
import io
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import (
    DuplicateDate,
    EmptyFile,
    EmptyRange,
    MalformedDate,
    MissingHeader,
    UnknownLocation,
)

REQUIRED_COLUMNS = ("iso_code", "location", "date", "population")
CATEGORICAL_COLUMNS = ("iso_code", "continent", "location", "tests_units")

NEW_COLUMNS = ("new_cases", "new_deaths")
INDEPENDENT_COLUMNS = (
    "new_tests",
    "new_vaccinations",
    "reproduction_rate",
    "people_vaccinated",
    "people_fully_vaccinated",
    "total_boosters",
    "stringency_index",
)

_NUMBER = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_ONE_DAY = np.timedelta64(1, "D")


class ColumnClass(enum.Enum):
    EMPTY = "Empty"
    CONSTANT = "Constant"
    VARIABLE = "Variable"


class ColumnGroup(enum.Enum):
    NEW_COLUMNS = "NewColumns"
    INDEPENDENT = "Independent"
    REMAINING = "Remaining"


def parse_number(cell: str) -> float:
    """Parse an integer, decimal or scientific-notation cell; anything else is NaN."""
    cell = cell.strip()
    if _NUMBER.match(cell):
        return float(cell)
    return float("nan")


def format_number(value: float) -> str:
    if np.isnan(value):
        return ""
    return repr(float(value))


@dataclass(frozen=True)
class SeriesFrame:
    """Date-indexed numeric table for a single location.

    ``dates`` is a ``datetime64[D]`` vector with a step of exactly one day.
    ``columns`` maps column names to float64 vectors of the same length, with
    ``NaN`` marking missing values. ``categorical`` holds the per-row text
    columns (iso_code, location, ...) that are not part of the numeric table.
    """

    dates: np.ndarray
    columns: Mapping[str, np.ndarray]
    location: str
    population: float | None = None
    categorical: Mapping[str, tuple] = field(default_factory=dict)
    source_digest: str = ""

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        object.__setattr__(self, "dates", dates)
        cols = {}
        for name, values in self.columns.items():
            arr = np.array(values, dtype=np.float64)
            if arr.shape != dates.shape:
                raise ValueError(
                    f"column {name!r} has length {arr.size}, expected {dates.size}"
                )
            arr.setflags(write=False)
            cols[name] = arr
        object.__setattr__(self, "columns", cols)
        if dates.size > 1 and not np.all(np.diff(dates) == _ONE_DAY):
            raise ValueError("dates must be contiguous with a one-day step")
        if self.population is not None and not self.population > 0:
            raise ValueError("population must be positive")

    def __len__(self):
        return int(self.dates.size)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def with_columns(self, updates: Mapping[str, np.ndarray]) -> "SeriesFrame":
        """Return a copy with columns replaced (or appended, for new names)."""
        cols = dict(self.columns)
        cols.update(updates)
        return self._replace(columns=cols)

    def drop(self, names: Iterable[str]) -> "SeriesFrame":
        names = set(names)
        return self._replace(
            columns={k: v for k, v in self.columns.items() if k not in names}
        )

    def rows(self, start: int, stop: int) -> "SeriesFrame":
        sl = slice(start, stop)
        return self._replace(
            dates=self.dates[sl],
            columns={k: v[sl] for k, v in self.columns.items()},
            categorical={k: v[sl] for k, v in self.categorical.items()},
        )

    def _replace(self, **changes) -> "SeriesFrame":
        kwargs = dict(
            dates=self.dates,
            columns=self.columns,
            location=self.location,
            population=self.population,
            categorical=self.categorical,
            source_digest=self.source_digest,
        )
        kwargs.update(changes)
        return SeriesFrame(**kwargs)

    def matrix(self, names: Iterable[str]) -> np.ndarray:
        return np.column_stack([self.columns[n] for n in names])

    def equals(self, other: "SeriesFrame") -> bool:
        """Content equality: dates, column order, bitwise values and categoricals."""
        if not isinstance(other, SeriesFrame):
            return False
        if self.location != other.location or self.population != other.population:
            return False
        if not np.array_equal(self.dates, other.dates):
            return False
        if list(self.columns) != list(other.columns):
            return False
        for name, values in self.columns.items():
            a = values.view(np.uint64)
            b = other.columns[name].view(np.uint64)
            # NaN payloads may differ; compare missing masks separately
            miss_a, miss_b = np.isnan(values), np.isnan(other.columns[name])
            if not np.array_equal(miss_a, miss_b):
                return False
            if not np.array_equal(a[~miss_a], b[~miss_b]):
                return False
        return dict(self.categorical) == dict(other.categorical)

    def to_csv(self, path: str | Path | None = None) -> str:
        """Serialize in the OWID dialect; missing values become empty fields."""
        cats = dict(self.categorical)
        for required in ("iso_code", "location"):
            cats.setdefault(required, (self.location,) * len(self))
        # OWID layout: iso_code, continent, location, date, numerics..., tests_units
        lead = [c for c in ("iso_code", "continent", "location") if c in cats]
        tail_cats = [c for c in cats if c not in lead]
        header = lead + ["date"] + self.names + tail_cats
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        cols = [self.columns[n] for n in self.names]
        for i, day in enumerate(self.dates):
            row = [cats[c][i] for c in lead]
            row.append(str(day))
            row.extend(format_number(col[i]) for col in cols)
            row.extend(cats[c][i] for c in tail_cats)
            writer.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _parse_date(cell: str, line: int) -> np.datetime64:
    try:
        return np.datetime64(dt.date.fromisoformat(cell.strip()), "D")
    except ValueError:
        raise MalformedDate(f"line {line}: unparseable date {cell!r}") from None


def _first_present(values: np.ndarray) -> float | None:
    present = values[~np.isnan(values)]
    return float(present[0]) if present.size else None


def _build_frame(location, dates, numeric, categorical, digest) -> SeriesFrame:
    order = np.argsort(dates, kind="stable")
    dates = dates[order]
    if dates.size > 1 and np.any(np.diff(dates) == np.timedelta64(0, "D")):
        dup = dates[1:][np.diff(dates) == np.timedelta64(0, "D")][0]
        raise DuplicateDate(f"{location}: duplicate date {dup}")
    numeric = {k: v[order] for k, v in numeric.items()}
    categorical = {k: [v[i] for i in order] for k, v in categorical.items()}

    full = np.arange(dates[0], dates[-1] + _ONE_DAY, _ONE_DAY) if dates.size else dates
    pos = (dates - full[0]).astype(np.int64) if dates.size else np.array([], int)
    cols = {}
    for name, values in numeric.items():
        out = np.full(full.size, np.nan)
        out[pos] = values
        cols[name] = out
    cats = {}
    for name, values in categorical.items():
        out = [""] * full.size
        for p, v in zip(pos, values):
            out[p] = v
        cats[name] = tuple(out)

    population = None
    if "population" in cols:
        population = _first_present(cols["population"])
        if population is not None and population <= 0:
            population = None
    return SeriesFrame(
        dates=full,
        columns=cols,
        location=location,
        population=population,
        categorical=cats,
        source_digest=digest,
    )


def parse_owid_csv(path: str | Path) -> dict[str, SeriesFrame]:
    """Parse an OWID-schema CSV into one contiguous frame per ``iso_code``.

    Rows are sorted by date within each location and calendar gaps are filled
    with all-missing rows. Unparseable numeric cells become missing.
    """
    raw = Path(path).read_bytes()
    digest = hashlib.sha256(raw).hexdigest()
    text = raw.decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or not any(h.strip() for h in header):
        raise EmptyFile(f"{path}: no header row")
    header = [h.strip() for h in header]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise MissingHeader(f"{path}: missing required columns {missing}")

    idx = {name: i for i, name in enumerate(header)}
    cat_names = [c for c in CATEGORICAL_COLUMNS if c in idx]
    num_names = [h for h in header if h not in CATEGORICAL_COLUMNS and h != "date"]

    by_loc: dict[str, list] = {}
    for line, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        row = row + [""] * (len(header) - len(row))
        iso = row[idx["iso_code"]].strip()
        by_loc.setdefault(iso, []).append((line, row))
    if not by_loc:
        raise EmptyFile(f"{path}: no data rows")

    frames = {}
    for iso, rows in by_loc.items():
        dates = np.array(
            [_parse_date(r[idx["date"]], line) for line, r in rows], dtype="datetime64[D]"
        )
        numeric = {
            name: np.array([parse_number(r[idx[name]]) for _, r in rows])
            for name in num_names
        }
        categorical = {name: [r[idx[name]] for _, r in rows] for name in cat_names}
        frames[iso] = _build_frame(iso, dates, numeric, categorical, digest)
    return frames


def filter_location(
    frames: Mapping[str, SeriesFrame],
    iso_code: str,
    start: dt.date | str,
    end: dt.date | str,
) -> SeriesFrame:
    """Restrict one location's frame to the inclusive range ``[start, end]``.

    The result spans the observed days that fall inside the range; interior
    days absent from the source are present as all-missing rows.
    """
    if iso_code not in frames:
        raise UnknownLocation(f"unknown location {iso_code!r}")
    lo = np.datetime64(str(start), "D")
    hi = np.datetime64(str(end), "D")
    if lo > hi:
        raise EmptyRange(f"start {lo} is after end {hi}")
    frame = frames[iso_code]
    in_range = (frame.dates >= lo) & (frame.dates <= hi)
    observed = np.zeros(len(frame), dtype=bool)
    for values in frame.columns.values():
        observed |= ~np.isnan(values)
    for values in frame.categorical.values():
        observed |= np.array([bool(v) for v in values], dtype=bool)
    hits = np.flatnonzero(in_range & observed)
    if hits.size == 0:
        raise EmptyRange(f"{iso_code}: no rows between {lo} and {hi}")
    return frame.rows(int(hits[0]), int(hits[-1]) + 1)


def classify_columns(frame: SeriesFrame) -> dict[str, ColumnClass]:
    out = {}
    for name, values in frame.columns.items():
        present = values[~np.isnan(values)]
        if present.size == 0:
            out[name] = ColumnClass.EMPTY
        elif np.all(present == present[0]):
            out[name] = ColumnClass.CONSTANT
        else:
            out[name] = ColumnClass.VARIABLE
    return out


def group_columns(frame: SeriesFrame) -> dict[str, ColumnGroup]:
    out = {}
    for name in frame.names:
        if name in NEW_COLUMNS:
            out[name] = ColumnGroup.NEW_COLUMNS
        elif name in INDEPENDENT_COLUMNS:
            out[name] = ColumnGroup.INDEPENDENT
        else:
            out[name] = ColumnGroup.REMAINING
    return out
