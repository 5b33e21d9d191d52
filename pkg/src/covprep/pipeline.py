"""
End-to-end orchestration of the standard and custom preprocessing pipelines.

Standard: numeric columns are interpolated, extrapolated and zero-filled;
global z-score outliers are replaced by interpolation; features are selected
on the whole frame; the frame is split chronologically, standardized on the
training rows, and every model is tuned and scored.

Custom: columns are handled per group. Lump-sum reported columns are spread
over their reporting week, then interpolated; independent columns are
interpolated; both get local (rolling) z-score winsorization. Every derived
column is then recomputed from its inputs through the dependency graph. The
frame is split first, features are selected on the training rows only, and
scaling and evaluation follow as in the standard pipeline.

Each stage writes its artifacts before the next stage starts, so a failure
leaves the earlier artifacts in place.
"""

from __future__ import annotations

import contextlib
import csv
import io
import json
import logging
import math
import shutil
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import impute, outlier
from .config import PipelineConfig, stage_rng
from .derive import (
    DependencyGraph,
    FormulaKind,
    build_default_graph,
    run_computation_processing,
)
from .errors import CovprepError, MissingRun, StageError
from .evaluation import (
    NOT_IMPLEMENTED,
    REPORT_HEADER,
    EvalReport,
    SplitSpec,
    evaluate_pipeline,
    series_csv,
    split_chronological,
)
from .ingest import (
    ColumnClass,
    ColumnGroup,
    SeriesFrame,
    classify_columns,
    filter_location,
    group_columns,
    parse_owid_csv,
)
from .models import NONLINEAR_KINDS
from .select import FeatureMatrix, SelectionTrace, iterative_feature_selection

log = logging.getLogger(__name__)


@dataclass
class RunResult:
    pipeline: str
    out_dir: Path
    raw: SeriesFrame
    processed: SeriesFrame
    features: list[str]
    trace: SelectionTrace
    report: EvalReport
    outliers: dict = field(default_factory=dict)


@contextlib.contextmanager
def stage(name: str):
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except (CovprepError, ValueError, KeyError, OSError) as exc:
        raise StageError(name, exc) from exc


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def load_frame(config: PipelineConfig) -> SeriesFrame:
    if config.input is None:
        raise ValueError("no input file configured")
    frames = parse_owid_csv(config.input)
    return filter_location(frames, config.location, config.start, config.end)


def excluded_features(config: PipelineConfig, graph: DependencyGraph) -> set[str]:
    """Columns that are only a rescaling of the target on the same row."""
    if config.exclude_features is not None:
        return set(config.exclude_features)
    return {
        s.target for s in graph.specs
        if s.kind is FormulaKind.PER_CAPITA and s.inputs == (config.target,)
    }


def candidate_features(frame: SeriesFrame, config: PipelineConfig, graph: DependencyGraph) -> list[str]:
    """Variable numeric columns other than the target and its rescalings."""
    classes = classify_columns(frame)
    skip = excluded_features(config, graph) | {config.target}
    return [n for n in frame.names if classes[n] is ColumnClass.VARIABLE and n not in skip]


def _variable_columns(frame: SeriesFrame) -> list[str]:
    return [n for n, c in classify_columns(frame).items() if c is ColumnClass.VARIABLE]


def _prepare_dir(config: PipelineConfig, pipeline: str) -> Path:
    out = Path(config.out) / pipeline
    if out.exists():
        shutil.rmtree(out)
    out.mkdir(parents=True)
    return out


def _write_outliers(out: Path, reports: dict) -> None:
    for name, rep in reports.items():
        _write(out / "outliers" / f"{name}.json", rep.to_json())


def _write_series(out: Path, raw: SeriesFrame, processed: SeriesFrame, names) -> None:
    for name in names:
        original = raw[name] if name in raw else np.full(len(raw), np.nan)
        _write(out / "series" / f"{name}.csv", series_csv(raw.dates, original, processed[name]))


def _run_metadata(config: PipelineConfig, pipeline: str, raw: SeriesFrame) -> dict:
    cfg = config.to_dict()
    cfg.pop("out")
    cfg["pipeline"] = pipeline
    if cfg["input"] is not None:
        cfg["input"] = Path(cfg["input"]).name
    return {
        "pipeline": pipeline,
        "source_digest": raw.source_digest,
        "location": raw.location,
        "rows": len(raw),
        "first_date": str(raw.dates[0]),
        "last_date": str(raw.dates[-1]),
        "config": cfg,
    }


def _evaluate(out, config, pipeline, processed, features, raw) -> EvalReport:
    with stage("evaluate"):
        report = evaluate_pipeline(processed, features, config.target, config, pipeline)
        report.metadata["run"] = _run_metadata(config, pipeline, raw)
        _write(out / "report.csv", report.to_csv())
        _write(out / "report.json", report.to_json())
    with stage("export"):
        _write_series(out, raw, processed, [config.target, *features])
    return report


def standard_preprocess(raw: SeriesFrame, config: PipelineConfig) -> tuple[SeriesFrame, dict]:
    """Imputation and global outlier replacement of every variable column."""
    variable = _variable_columns(raw)
    columns = {n: impute.standard_impute(raw[n], config.extrapolation) for n in raw.names}
    reports = {}
    method = outlier.Replacement(config.standard_replacement)
    for name in variable:
        idx = outlier.global_zscore_outliers(columns[name], config.z_th)
        if method is outlier.Replacement.INTERPOLATION:
            columns[name] = outlier.replace_by_interpolation(columns[name], idx, config.extrapolation)
        else:
            columns[name] = outlier.winsorize_local(columns[name], idx, config.window, config.z_th)
        reports[name] = outlier.OutlierReport(
            column=name, indices=idx, method=outlier.Method.GLOBAL,
            replaced_with=method, threshold=config.z_th,
        )
    return raw.with_columns(columns), reports


def custom_preprocess(raw: SeriesFrame, config: PipelineConfig,
                      graph: DependencyGraph) -> tuple[SeriesFrame, dict]:
    """Group-wise imputation and local outlier processing, then derived-column recomputation."""
    groups = group_columns(raw)
    variable = set(_variable_columns(raw))
    method = outlier.Replacement(config.custom_replacement)
    columns = {}
    reports = {}
    for name in raw.names:
        group = groups[name]
        if group is ColumnGroup.REMAINING:
            continue
        x = raw[name]
        if group is ColumnGroup.NEW_COLUMNS:
            x = impute.weekly_pattern_impute(x)
        x = impute.zero_fill(impute.linear_interpolate(x))
        if name in variable:
            idx = outlier.rolling_zscore_outliers(x, config.window, config.z_th)
            if method is outlier.Replacement.WINSORIZE:
                x = outlier.winsorize_local(x, idx, config.window, config.z_th)
            else:
                x = outlier.replace_by_interpolation(x, idx, config.extrapolation)
            reports[name] = outlier.OutlierReport(
                column=name, indices=idx, method=outlier.Method.LOCAL,
                replaced_with=method, threshold=config.z_th, window=config.window,
            )
        columns[name] = x
    frame = run_computation_processing(raw.with_columns(columns), graph)
    # formulas leave gaps where they are undefined (e.g. no tests on a day)
    filled = {n: impute.zero_fill(impute.linear_interpolate(frame[n])) for n in frame.names
              if groups.get(n, ColumnGroup.REMAINING) is ColumnGroup.REMAINING}
    return frame.with_columns(filled), reports


def _select(fm: FeatureMatrix, config: PipelineConfig, fit_rows: str) -> tuple[list[str], SelectionTrace]:
    features, trace = iterative_feature_selection(
        fm, vif_th=config.vif_th, corr_th=config.corr_th, seed=stage_rng(config.seed, "select"),
        pfi_repeats=config.pfi_repeats, mi_k=config.mi_k,
    )
    trace.metadata = {"fit_rows": fit_rows, "n_rows": int(fm.X.shape[0]), "target": config.target,
                      "vif_th": config.vif_th, "corr_th": config.corr_th, "seed": config.seed}
    return features, trace


def select_on_train(processed: SeriesFrame, config: PipelineConfig,
                    graph: DependencyGraph) -> tuple[list[str], SelectionTrace]:
    """Feature selection that sees only the training split, candidates included."""
    tr, _, _ = split_chronological(len(processed), SplitSpec(*config.split))
    train = processed.rows(tr.start, tr.stop)
    names = candidate_features(train, config, graph)
    fm = FeatureMatrix(names, train.matrix(names), train[config.target])
    return _select(fm, config, "train")


def run_standard(config: PipelineConfig) -> RunResult:
    config = config.replace(pipeline="standard")
    out = _prepare_dir(config, "standard")
    graph = build_default_graph()
    with stage("ingest"):
        raw = load_frame(config)
    with stage("preprocess"):
        processed, reports = standard_preprocess(raw, config)
        _write_outliers(out, reports)
        _write(out / "processed.csv", processed.to_csv())
    with stage("select"):
        names = candidate_features(processed, config, graph)
        fm = FeatureMatrix(names, processed.matrix(names), processed[config.target])
        features, trace = _select(fm, config, "all")
        _write(out / "selection_trace.json", trace.to_json())
    report = _evaluate(out, config, "standard", processed, features, raw)
    return RunResult("standard", out, raw, processed, features, trace, report, reports)


def run_custom(config: PipelineConfig) -> RunResult:
    config = config.replace(pipeline="custom")
    out = _prepare_dir(config, "custom")
    graph = build_default_graph()
    with stage("ingest"):
        raw = load_frame(config)
    with stage("preprocess"):
        processed, reports = custom_preprocess(raw, config, graph)
        _write_outliers(out, reports)
        _write(out / "graph.json", graph.to_json())
        _write(out / "processed.csv", processed.to_csv())
    with stage("select"):
        features, trace = select_on_train(processed, config, graph)
        _write(out / "selection_trace.json", trace.to_json())
    report = _evaluate(out, config, "custom", processed, features, raw)
    return RunResult("custom", out, raw, processed, features, trace, report, reports)


def run(config: PipelineConfig, pipeline: str | None = None) -> RunResult:
    pipeline = pipeline or config.pipeline
    return run_standard(config) if pipeline == "standard" else run_custom(config)


# --------------------------------------------------------------------------
# comparison
# --------------------------------------------------------------------------


def _ratio(a: float, b: float) -> float | None:
    """``a / b`` with 0/0 read as 1."""
    if math.isnan(a) or math.isnan(b):
        return None
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b


def compare_reports(standard: EvalReport, custom: EvalReport) -> dict:
    """Per-model ratios custom / standard of test RMSE and RMSE variance."""
    std = {r.kind: r for r in standard.results if r.implemented}
    cus = {r.kind: r for r in custom.results if r.implemented}
    models = []
    for kind in (r.kind for r in standard.results if r.kind in cus and r.implemented):
        s, c = std[kind], cus[kind]
        models.append({
            "model": s.model,
            "rmse_ratio": _ratio(c.test_rmse, s.test_rmse),
            "rmse_variance_ratio": _ratio(c.rmse_variance, s.rmse_variance),
        })

    def best(rep: EvalReport, kinds=None) -> dict:
        r = rep.best(kinds)
        return {"model": r.model, "test_rmse": r.test_rmse, "rmse_variance": r.rmse_variance}

    return {
        "models": models,
        "best": {"standard": best(standard), "custom": best(custom)},
        "best_nonlinear": {"standard": best(standard, NONLINEAR_KINDS),
                           "custom": best(custom, NONLINEAR_KINDS)},
    }


def _fmt_ratio(v) -> str:
    return "n/a" if v is None else ("inf" if math.isinf(v) else f"{v:.3f}")


def summary_markdown(standard: EvalReport, custom: EvalReport, traces: dict, delta: dict) -> str:
    lines = ["# Pipeline comparison", "", "## Model performance", ""]
    lines.append("| " + " | ".join(REPORT_HEADER) + " |")
    lines.append("|" + "---|" * len(REPORT_HEADER))
    for rep in (standard, custom):
        for row in rep.rows():
            lines.append("| " + " | ".join(row) + " |")
    lines += ["", "## Selected features", "",
              "| Pipeline | Features | Combined Importance | VIF |", "|---|---|---|---|"]
    for name in ("standard", "custom"):
        trace = traces[name]
        records = sorted(trace.final_records(), key=lambda r: -r.combined)
        for rec in records:
            vif = "inf" if math.isinf(rec.vif) else f"{rec.vif:.3f}"
            lines.append(f"| {name.capitalize()} | {rec.feature} | {rec.combined:.3f} | {vif} |")
    lines += ["", "## Custom relative to standard", "",
              "| Model | Test RMSE ratio | RMSE Variance ratio |", "|---|---|---|"]
    for m in delta["models"]:
        lines.append(f"| {m['model']} | {_fmt_ratio(m['rmse_ratio'])} | "
                     f"{_fmt_ratio(m['rmse_variance_ratio'])} |")
    lines.append("")
    for name in ("standard", "custom"):
        b = delta["best"][name]
        bn = delta["best_nonlinear"][name]
        lines.append(f"- Best {name} model: {b['model']} (test RMSE {b['test_rmse']:.3f}); "
                     f"best nonlinear: {bn['model']} (test RMSE {bn['test_rmse']:.3f}, "
                     f"RMSE variance {bn['rmse_variance']:.3f})")
    return "\n".join(lines) + "\n"


def _load_run(out: Path, pipeline: str) -> tuple[EvalReport, SelectionTrace]:
    report_path = out / pipeline / "report.json"
    trace_path = out / pipeline / "selection_trace.json"
    if not report_path.exists() or not trace_path.exists():
        raise MissingRun(f"no completed {pipeline} run under {out}")
    report = EvalReport.from_json(report_path.read_text(encoding="utf-8"))
    trace = SelectionTrace.from_json(trace_path.read_text(encoding="utf-8"))
    return report, trace


def compare(config: PipelineConfig) -> dict:
    """Merge the two finished runs under ``config.out`` into comparison artifacts."""
    out = Path(config.out)
    with stage("compare"):
        std_report, std_trace = _load_run(out, "standard")
        cus_report, cus_trace = _load_run(out, "custom")
        delta = compare_reports(std_report, cus_report)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(REPORT_HEADER)
        w.writerows(std_report.rows())
        w.writerows(cus_report.rows())
        _write(out / "compare.csv", buf.getvalue())
        _write(out / "compare.json", _json(delta))
        _write(out / "summary.md", summary_markdown(
            std_report, cus_report, {"standard": std_trace, "custom": cus_trace}, delta))
    return delta


__all__ = [
    "NOT_IMPLEMENTED",
    "RunResult",
    "candidate_features",
    "compare",
    "compare_reports",
    "custom_preprocess",
    "excluded_features",
    "load_frame",
    "run",
    "run_custom",
    "run_standard",
    "select_on_train",
    "standard_preprocess",
    "summary_markdown",
]
