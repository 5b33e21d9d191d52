"""
Derived-column recomputation from declared inter-column dependencies.

Each ``DependencySpec`` says how one target column is computed from its
inputs and at which processing order it runs. ``run_computation_processing``
executes specs in ascending order (list order within an order level) and
overwrites every target, so the frame is internally consistent afterwards.
"""

from __future__ import annotations

import enum
import graphlib
import json
import logging
from dataclasses import dataclass
from importlib import resources

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CyclicGraph, InvalidGraph, MissingInput, NonpositivePopulation
from .ingest import SeriesFrame

log = logging.getLogger(__name__)

SMOOTHING_WINDOW = 7
ALLOWED_SCALES = (1e2, 1e3, 1e6)


class FormulaKind(enum.Enum):
    NEW_FROM_TOTAL = "NewFromTotal"
    TOTAL_FROM_NEW = "TotalFromNew"
    SMOOTHED7 = "Smoothed7"
    PER_CAPITA = "PerCapita"
    POSITIVE_RATE = "PositiveRate"
    TESTS_PER_CASE = "TestsPerCase"


_ARITY = {
    FormulaKind.NEW_FROM_TOTAL: 1,
    FormulaKind.TOTAL_FROM_NEW: 1,
    FormulaKind.SMOOTHED7: 1,
    FormulaKind.PER_CAPITA: 1,
    FormulaKind.POSITIVE_RATE: 2,
    FormulaKind.TESTS_PER_CASE: 1,
}
# kinds whose formula is undefined on missing input
_NEEDS_COMPLETE = {
    FormulaKind.NEW_FROM_TOTAL,
    FormulaKind.TOTAL_FROM_NEW,
    FormulaKind.SMOOTHED7,
    FormulaKind.POSITIVE_RATE,
}


# --------------------------------------------------------------------------
# formulas
# --------------------------------------------------------------------------


def compute_new_from_total(total) -> np.ndarray:
    total = np.asarray(total, dtype=np.float64)
    out = total.copy()
    out[1:] = total[1:] - total[:-1]
    return out


def compute_total_from_new(new) -> np.ndarray:
    return np.cumsum(np.asarray(new, dtype=np.float64))


def _trailing(x: np.ndarray, width: int) -> np.ndarray:
    padded = np.concatenate([np.full(width - 1, np.nan), x])
    return sliding_window_view(padded, width)


def compute_positive_rate(new_cases, new_tests) -> np.ndarray:
    """Trailing 7-day mean of the daily case/test ratio.

    Days without positive tests are left out of the mean; if no day in the
    window qualifies the result is missing.
    """
    cases = np.asarray(new_cases, dtype=np.float64)
    tests = np.asarray(new_tests, dtype=np.float64)
    if cases.shape != tests.shape:
        raise ValueError("new_cases and new_tests must have equal length")
    ratio = np.full(cases.shape, np.nan)
    ok = tests > 0
    ratio[ok] = cases[ok] / tests[ok]
    win = _trailing(ratio, SMOOTHING_WINDOW)
    valid = ~np.isnan(win)
    count = valid.sum(axis=1)
    total = np.where(valid, win, 0.0).sum(axis=1)
    out = np.full(cases.shape, np.nan)
    has = count > 0
    out[has] = total[has] / count[has]
    return out


def compute_tests_per_case(positive_rate) -> np.ndarray:
    rate = np.asarray(positive_rate, dtype=np.float64)
    out = np.full(rate.shape, np.nan)
    ok = rate > 0
    out[ok] = 1.0 / rate[ok]
    return out


def compute_smoothed7(raw) -> np.ndarray:
    """Trailing 7-day mean; the first six days average what is available."""
    raw = np.asarray(raw, dtype=np.float64)
    win = _trailing(raw, SMOOTHING_WINDOW)
    valid = ~np.isnan(win)
    return np.where(valid, win, 0.0).sum(axis=1) / valid.sum(axis=1)


def compute_per_capita(raw, population: float, scale: float) -> np.ndarray:
    if population is None or not population > 0:
        raise NonpositivePopulation(f"population must be positive, got {population}")
    return np.asarray(raw, dtype=np.float64) * scale / population


# --------------------------------------------------------------------------
# graph
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DependencySpec:
    target: str
    kind: FormulaKind
    inputs: tuple[str, ...]
    order: int
    scale: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", FormulaKind(self.kind))
        if len(self.inputs) != _ARITY[self.kind]:
            raise InvalidGraph(
                f"{self.target}: {self.kind.value} takes {_ARITY[self.kind]} inputs"
            )
        if self.kind is FormulaKind.PER_CAPITA:
            if self.scale not in ALLOWED_SCALES:
                raise InvalidGraph(f"{self.target}: scale must be one of {ALLOWED_SCALES}")
        elif self.scale is not None:
            raise InvalidGraph(f"{self.target}: scale only applies to PerCapita")
        if int(self.order) != self.order or self.order < 1:
            raise InvalidGraph(f"{self.target}: order must be a positive integer")

    def to_dict(self) -> dict:
        d = {"target": self.target, "kind": self.kind.value}
        if self.scale is not None:
            d["scale"] = self.scale
        d["inputs"] = list(self.inputs)
        d["order"] = self.order
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DependencySpec":
        scale = d.get("scale")
        return cls(
            target=d["target"],
            kind=FormulaKind(d["kind"]),
            inputs=tuple(d["inputs"]),
            order=int(d["order"]),
            scale=None if scale is None else float(scale),
        )

    def evaluate(self, columns: dict, population: float | None) -> np.ndarray:
        args = [columns[name] for name in self.inputs]
        kind = self.kind
        if kind is FormulaKind.NEW_FROM_TOTAL:
            return compute_new_from_total(*args)
        if kind is FormulaKind.TOTAL_FROM_NEW:
            return compute_total_from_new(*args)
        if kind is FormulaKind.SMOOTHED7:
            return compute_smoothed7(*args)
        if kind is FormulaKind.PER_CAPITA:
            return compute_per_capita(args[0], population, self.scale)
        if kind is FormulaKind.POSITIVE_RATE:
            return compute_positive_rate(*args)
        return compute_tests_per_case(*args)


@dataclass(frozen=True)
class DependencyGraph:
    specs: tuple[DependencySpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(self.specs))
        self.validate()

    @property
    def targets(self) -> list[str]:
        return [s.target for s in self.specs]

    def order_of(self, target: str) -> int:
        for spec in self.specs:
            if spec.target == target:
                return spec.order
        raise KeyError(target)

    def validate(self) -> None:
        targets = self.targets
        if len(set(targets)) != len(targets):
            dup = sorted({t for t in targets if targets.count(t) > 1})
            raise InvalidGraph(f"duplicate targets: {dup}")
        sorter = graphlib.TopologicalSorter()
        for spec in self.specs:
            sorter.add(spec.target, *spec.inputs)
        try:
            sorter.prepare()
        except graphlib.CycleError as exc:
            raise CyclicGraph(f"cycle among columns: {exc.args[1]}") from None
        by_target = {s.target: s for s in self.specs}
        for spec in self.specs:
            for name in spec.inputs:
                dep = by_target.get(name)
                if dep is not None and dep.order >= spec.order:
                    raise InvalidGraph(
                        f"{spec.target} (order {spec.order}) depends on "
                        f"{name} (order {dep.order})"
                    )

    def execution_order(self) -> list[DependencySpec]:
        return [s for _, s in sorted(enumerate(self.specs), key=lambda p: (p[1].order, p[0]))]

    def to_json(self) -> str:
        return json.dumps([s.to_dict() for s in self.specs], indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "DependencyGraph":
        return cls(tuple(DependencySpec.from_dict(d) for d in json.loads(text)))


def build_default_graph() -> DependencyGraph:
    """Load the shipped dependency table for the OWID derived columns."""
    text = resources.files("covprep.data").joinpath("default_graph.json").read_text("utf-8")
    return DependencyGraph.from_json(text)


def run_computation_processing(frame: SeriesFrame, graph: DependencyGraph) -> SeriesFrame:
    """Recompute every target column of ``graph`` in processing order."""
    graph.validate()
    columns = dict(frame.columns)
    produced: set[str] = set()
    for spec in graph.execution_order():
        for name in spec.inputs:
            if name not in columns:
                raise MissingInput(f"{spec.target}: input column {name!r} not in frame")
            if spec.kind in _NEEDS_COMPLETE and np.isnan(columns[name]).any():
                raise MissingInput(
                    f"{spec.target}: input column {name!r} has missing values"
                )
        columns[spec.target] = spec.evaluate(columns, frame.population)
        produced.add(spec.target)

    involved = produced | {n for s in graph.specs for n in s.inputs}
    untouched = [n for n in frame.names if n not in involved]
    if untouched:
        log.info("computation processing passed through %d columns: %s",
                 len(untouched), ", ".join(untouched))
    return frame.with_columns(columns)


def check_consistency(frame: SeriesFrame, graph: DependencyGraph) -> dict:
    """Largest absolute disagreement between each target and its formula."""
    out = {}
    for spec in graph.specs:
        expected = spec.evaluate(dict(frame.columns), frame.population)
        got = frame[spec.target]
        both = ~np.isnan(expected) & ~np.isnan(got)
        mismatch_missing = np.any(np.isnan(expected) != np.isnan(got))
        diff = float(np.max(np.abs(expected[both] - got[both]), initial=0.0))
        out[spec.target] = np.inf if mismatch_missing else diff
    return out

