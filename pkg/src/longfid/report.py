"""Serialization of computed metrics into series documents and charts.

Every (variable, metric) pair becomes one JSON document holding both sides'
series plus the parameters that produced them; simple profile metrics also
get a delimiter-separated table.  Charts are rendered from those same
documents, so the render subcommand can rebuild every figure from an
emitted report directory, and every number in a chart exists in a series
document.  All writes are atomic (temp file + rename) and byte-deterministic
for identical inputs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .covariance import (
    RankVariabilityDistribution,
    TransitionProfile,
    VarianceDecomposition,
    VariogramSeries,
)
from .data_model import TimeGrid
from .errors import DataError
from .individual import TrajectoryPanel
from .marginal import ProfileSeries
from .measurement import MeasurementReport, ScoreStats
from .svg import BLUE, ORANGE, PALETTE, AreaStack, Box, Line, Panel, Points, render_figure

ORIGINAL = "original"
SYNTHETIC = "synthetic"
_SIDE_COLOR = {ORIGINAL: BLUE, SYNTHETIC: ORANGE}


# -- JSON documents ----------------------------------------------------------


def _clean(obj):
    """Recursively convert numpy scalars/arrays and NaN for JSON emission."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def grid_doc(grid: TimeGrid) -> dict:
    return {
        "t_min": grid.t_min,
        "t_max": grid.t_max,
        "step": grid.step,
        "n_points": grid.n_points,
    }


def grid_points_from_doc(doc: Mapping) -> np.ndarray:
    return doc["t_min"] + doc["step"] * np.arange(doc["n_points"], dtype=np.float64)


def profile_pair_doc(
    variable_id: str,
    metric: str,
    original: ProfileSeries,
    synthetic: ProfileSeries,
    extra: dict | None = None,
) -> dict:
    def side(series: ProfileSeries) -> dict:
        doc = {"values": series.values}
        if series.ess is not None:
            doc["ess"] = series.ess
            doc["low_support"] = series.low_support().tolist()
        return doc

    doc = {
        "variable": variable_id,
        "metric": metric,
        "params": dict(original.params),
        "grid": grid_doc(original.grid),
        ORIGINAL: side(original),
        SYNTHETIC: side(synthetic),
    }
    if original.columns is not None:
        doc["columns"] = list(original.columns)
    if extra:
        doc.update(extra)
    return _clean(doc)


def variogram_pair_doc(
    variable_id: str,
    metric: str,
    original: VariogramSeries,
    synthetic: VariogramSeries,
    decomposition: dict[str, VarianceDecomposition] | None = None,
) -> dict:
    def side(series: VariogramSeries) -> dict:
        return {
            "gamma": series.gamma,
            "n_pairs": series.n_pairs,
            "n_subjects_used": series.n_subjects_used,
            "n_subjects_skipped": series.n_subjects_skipped,
        }

    doc = {
        "variable": variable_id,
        "metric": metric,
        "params": dict(original.params),
        "lags": original.lags,
        ORIGINAL: side(original),
        SYNTHETIC: side(synthetic),
    }
    if decomposition:
        doc["decomposition"] = {
            side_name: {
                "nugget": d.nugget,
                "sill": d.sill,
                "between_subject": d.between_subject,
                "total_variance": d.total_variance,
                "note": "valid under stationarity",
            }
            for side_name, d in decomposition.items()
        }
    return _clean(doc)


def rank_pair_doc(
    variable_id: str,
    metric: str,
    original: RankVariabilityDistribution,
    synthetic: RankVariabilityDistribution,
) -> dict:
    def side(dist: RankVariabilityDistribution) -> dict:
        return {
            "values": dist.values,
            "n_subjects": len(dist.values),
            "n_excluded": dist.n_excluded,
        }

    return _clean(
        {
            "variable": variable_id,
            "metric": metric,
            "params": dict(original.params),
            "q_count": original.q_count,
            ORIGINAL: side(original),
            SYNTHETIC: side(synthetic),
        }
    )


def transition_pair_doc(
    variable_id: str,
    metric: str,
    original: TransitionProfile,
    synthetic: TransitionProfile,
) -> dict:
    def side(profile: TransitionProfile) -> dict:
        return {
            "probs": profile.probs,  # NaN -> null marks undefined rows
            "pair_counts": profile.pair_counts,
        }

    return _clean(
        {
            "variable": variable_id,
            "metric": metric,
            "params": dict(original.params),
            "grid": grid_doc(original.grid),
            "classes": list(original.classes),
            ORIGINAL: side(original),
            SYNTHETIC: side(synthetic),
        }
    )


def trajectories_doc(
    variable_id: str,
    metric: str,
    original: TrajectoryPanel,
    synthetic: TrajectoryPanel,
) -> dict:
    def side(panel: TrajectoryPanel) -> dict:
        return {
            "strata": list(panel.strata),
            "per_stratum": panel.per_stratum,
            "seed": panel.seed,
            "series": {
                label: [
                    {
                        "subject": sample.subject_id,
                        "times": sample.times,
                        "values": sample.values,
                    }
                    for sample in samples
                ]
                for label, samples in panel.series.items()
            },
        }

    return _clean(
        {
            "variable": variable_id,
            "metric": metric,
            ORIGINAL: side(original),
            SYNTHETIC: side(synthetic),
        }
    )


def outliers_doc(variable_id: str, metric: str, original, synthetic, params) -> dict:
    return _clean(
        {
            "variable": variable_id,
            "metric": metric,
            "params": params,
            ORIGINAL: [list(o) for o in original],
            SYNTHETIC: [list(o) for o in synthetic],
        }
    )


def _stats_doc(stats: ScoreStats) -> dict:
    return {"mean": stats.mean, "sd": stats.sd}


def measurement_doc(report: MeasurementReport) -> dict:
    return _clean(
        {
            "variable": report.variable_id,
            "metric": "measurement",
            "params": {
                "iterations": report.iterations,
                "subsample_size": report.subsample_size,
                "seed": report.seed,
                "epsilon": report.epsilon,
            },
            "similarity": _stats_doc(report.scores.similarity),
            "frobenius": _stats_doc(report.scores.frobenius),
            "dropout_divergence": _stats_doc(report.scores.dropout_divergence),
            "reference": {
                "similarity": _stats_doc(report.reference.similarity),
                "frobenius": _stats_doc(report.reference.frobenius),
                "dropout_divergence": _stats_doc(report.reference.dropout_divergence),
            },
        }
    )


# -- report container --------------------------------------------------------


@dataclass
class VariableReport:
    variable_id: str
    kind: str
    documents: dict[str, dict] = field(default_factory=dict)  # metric stem -> doc


@dataclass
class ComparisonReport:
    config: dict
    run_id: str
    variables: dict[str, VariableReport] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)

    def summary(self) -> dict:
        per_variable = {}
        for var, vrep in sorted(self.variables.items()):
            doc = vrep.documents.get("measurement")
            if doc is None:
                continue
            per_variable[var] = {
                key: {
                    "value": doc[key]["mean"],
                    "reference": doc["reference"][key]["mean"],
                    "sd": doc[key]["sd"],
                    "reference_sd": doc["reference"][key]["sd"],
                }
                for key in ("similarity", "frobenius", "dropout_divergence")
            }
        return _clean(
            {
                "run_id": self.run_id,
                "config": self.config,
                "measurement": per_variable,
                "failures": dict(sorted(self.failures.items())),
            }
        )


# -- file emission -----------------------------------------------------------


def _atomic_write(path: Path, data: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(data, encoding="utf-8")
    os.replace(tmp, path)


def _json_dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _csv_for_doc(doc: dict) -> str | None:
    """Flat time/value table for grid-indexed profile documents."""
    if "grid" not in doc or ORIGINAL not in doc or "values" not in doc[ORIGINAL]:
        return None
    points = grid_points_from_doc(doc["grid"])
    orig = doc[ORIGINAL]["values"]
    syn = doc[SYNTHETIC]["values"]
    columns = doc.get("columns")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if orig and isinstance(orig[0], list):
        names = columns or [str(i) for i in range(len(orig[0]))]
        writer.writerow(
            ["time"]
            + [f"original_{c}" for c in names]
            + [f"synthetic_{c}" for c in names]
        )
        for i, t in enumerate(points):
            writer.writerow([repr(float(t))] + [repr(v) for v in orig[i]] + [repr(v) for v in syn[i]])
    else:
        writer.writerow(["time", "original", "synthetic"])
        for i, t in enumerate(points):
            writer.writerow([repr(float(t)), repr(orig[i]), repr(syn[i])])
    return buf.getvalue()


def emit_series(report: ComparisonReport, directory) -> list[Path]:
    """Write one JSON document per (variable, metric) plus summary.json."""
    root = Path(directory) / report.run_id
    root.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for var, vrep in sorted(report.variables.items()):
        vdir = root / var
        vdir.mkdir(parents=True, exist_ok=True)
        for stem, doc in sorted(vrep.documents.items()):
            path = vdir / f"{stem}.json"
            _atomic_write(path, _json_dumps(doc))
            written.append(path)
            table = _csv_for_doc(doc)
            if table is not None:
                csv_path = vdir / f"{stem}.csv"
                _atomic_write(csv_path, table)
                written.append(csv_path)
    summary_path = root / "summary.json"
    _atomic_write(summary_path, _json_dumps(report.summary()))
    written.append(summary_path)
    return written


# -- charts ------------------------------------------------------------------


def _side_panels(doc: dict, build, overlay: bool) -> list[Panel]:
    """One panel per side, or a single overlaid panel."""
    if overlay:
        panel = build(ORIGINAL, f"{doc['variable']}")
        extra = build(SYNTHETIC, "")
        panel.lines += extra.lines
        panel.points += extra.points
        panel.areas += extra.areas
        panel.boxes += extra.boxes
        return [panel]
    return [
        build(ORIGINAL, f"{doc['variable']} - original"),
        build(SYNTHETIC, f"{doc['variable']} - synthetic"),
    ]


def _profile_chart(mean_doc, quant_doc, outlier_doc, overlay, shared_y) -> str:
    points = grid_points_from_doc(mean_doc["grid"])
    q_columns = quant_doc.get("columns", []) if quant_doc else []

    def build(side: str, title: str) -> Panel:
        color = _SIDE_COLOR[side]
        panel = Panel(title=title, x_label="time", y_label="value")
        low = mean_doc[side].get("low_support")
        if low and any(low):
            panel.shade_x = [float(points[i]) for i, flag in enumerate(low) if flag]
            panel.shade_halfwidth = mean_doc["grid"]["step"] / 2.0
        if quant_doc:
            qvals = np.asarray(quant_doc[side]["values"], dtype=float)
            for qi, name in enumerate(q_columns):
                panel.lines.append(
                    Line(points, qvals[:, qi], color=color, width=0.8, dash="4,3",
                         label=f"{side} quantiles" if qi == 0 else None)
                )
        panel.lines.append(
            Line(points, np.asarray(mean_doc[side]["values"], dtype=float),
                 color=color, width=2.0, label=f"{side} mean")
        )
        if outlier_doc is not None:
            pts = outlier_doc[side]
            if pts:
                arr = np.asarray([[p[1], p[2]] for p in pts], dtype=float)
                panel.points.append(
                    Points(arr[:, 0], arr[:, 1], color=color, radius=1.6,
                           label=f"{side} outliers")
                )
        return panel

    return render_figure(_side_panels(mean_doc, build, overlay), shared_y=shared_y)


def _dispersion_chart(var_doc, vario_doc, overlay, shared_y) -> str:
    points = grid_points_from_doc(var_doc["grid"])
    lags = np.asarray(vario_doc["lags"], dtype=float)

    def build(side: str, title: str) -> Panel:
        solid = _SIDE_COLOR[side]
        panel = Panel(title=title, x_label="time / lag", y_label="variability")
        panel.lines.append(
            Line(points, np.asarray(var_doc[side]["values"], dtype=float),
                 color=solid, width=1.8, label=f"{side} variance")
        )
        panel.lines.append(
            Line(lags, np.asarray(vario_doc[side]["gamma"], dtype=float),
                 color=solid, width=1.8, dash="6,3", label=f"{side} variogram")
        )
        return panel

    return render_figure(_side_panels(var_doc, build, overlay), shared_y=shared_y)


def _gaussian_kde_trace(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return np.zeros(1), np.zeros(1)
    sd = float(np.std(v))
    iqr = float(np.subtract(*np.percentile(v, [75, 25])))
    scale = min(sd, iqr / 1.34) if iqr > 0 else sd
    bw = 0.9 * scale * v.size ** (-0.2) if scale > 0 else max(abs(v[0]), 1.0) * 0.01
    xs = np.linspace(v.min() - 3 * bw, v.max() + 3 * bw, 121)
    dens = np.exp(-((xs[:, None] - v[None, :]) ** 2) / (2 * bw * bw)).sum(axis=1)
    dens /= v.size * bw * math.sqrt(2 * math.pi)
    return xs, dens


def _box_stats(values: np.ndarray) -> tuple[float, float, float, float, float]:
    q1, med, q3 = (float(q) for q in np.percentile(values, [25, 50, 75]))
    iqr = q3 - q1
    lo = float(values[values >= q1 - 1.5 * iqr].min())
    hi = float(values[values <= q3 + 1.5 * iqr].max())
    return lo, q1, med, q3, hi


def _rank_chart(doc) -> str:
    box_panel = Panel(title=f"{doc['variable']} rank-order variability",
                      y_label="drift", x_categories=[ORIGINAL, SYNTHETIC])
    density_panel = Panel(title="distribution", x_label="drift", y_label="density")
    for pos, side in enumerate((ORIGINAL, SYNTHETIC)):
        values = np.asarray(doc[side]["values"], dtype=float)
        color = _SIDE_COLOR[side]
        if values.size:
            lo, q1, med, q3, hi = _box_stats(values)
            box_panel.boxes.append(
                Box(position=float(pos), low=lo, q1=q1, median=med, q3=q3,
                    high=hi, color=color, label=side)
            )
            xs, dens = _gaussian_kde_trace(values)
            density_panel.lines.append(Line(xs, dens, color=color, label=side))
    return render_figure([box_panel, density_panel], shared_y=False)


def _class_chart(doc, overlay, shared_y) -> str:
    points = grid_points_from_doc(doc["grid"])
    classes = doc["classes"]
    colors = [PALETTE[i % len(PALETTE)] for i in range(len(classes))]

    def build(side: str, title: str) -> Panel:
        panel = Panel(title=title, x_label="time", y_label="proportion")
        values = np.asarray(doc[side]["values"], dtype=float)
        panel.areas.append(
            AreaStack(points, values, colors=colors, labels=list(classes))
        )
        return panel

    # Overlaying stacked areas is unreadable; class charts stay side by side.
    return render_figure(_side_panels(doc, build, overlay=False), shared_y=shared_y)


def _transition_charts(doc, shared_y) -> dict[str, str]:
    points = grid_points_from_doc(doc["grid"])
    classes = doc["classes"]
    colors = [PALETTE[i % len(PALETTE)] for i in range(len(classes))]
    charts: dict[str, str] = {}
    for ai, source in enumerate(classes):
        def build(side: str, title: str, ai=ai) -> Panel:
            panel = Panel(title=title, x_label="time", y_label="probability")
            probs = doc[side]["probs"]
            rows = np.asarray(
                [
                    [np.nan if cell is None else cell for cell in probs[t][ai]]
                    for t in range(len(points))
                ],
                dtype=float,
            )
            panel.areas.append(AreaStack(points, rows, colors=colors, labels=list(classes)))
            return panel

        charts[f"from_{source}"] = render_figure(
            _side_panels(doc, build, overlay=False), shared_y=shared_y
        )
    return charts


def _trajectory_chart(doc) -> str:
    panels: list[Panel] = []
    strata = doc[ORIGINAL]["strata"]
    for side in (ORIGINAL, SYNTHETIC):
        for label in strata:
            panel = Panel(title=f"{side} group {label}", x_label="time", y_label="value")
            for entry in doc[side]["series"].get(label, []):
                times = np.asarray(entry["times"], dtype=float)
                values = np.asarray(entry["values"], dtype=float)
                if len(times) == 1:
                    panel.points.append(
                        Points(times, values, color=_SIDE_COLOR[side], radius=2.0)
                    )
                else:
                    panel.lines.append(
                        Line(times, values, color=_SIDE_COLOR[side], width=0.9)
                    )
            panels.append(panel)
    return render_figure(
        panels,
        panel_width=230.0,
        panel_height=190.0,
        columns=len(strata),
        shared_y=True,
        title=f"{doc['variable']} trajectories by baseline group",
    )


def _density_chart(doc, followup_doc) -> str:
    points = grid_points_from_doc(doc["grid"])
    density_panel = Panel(
        title=f"{doc['variable']} measurement density", x_label="time", y_label="share"
    )
    for side in (ORIGINAL, SYNTHETIC):
        density_panel.lines.append(
            Line(points, np.asarray(doc[side]["values"], dtype=float),
                 color=_SIDE_COLOR[side], label=side)
        )
    panels = [density_panel]
    if followup_doc is not None:
        fu_points = grid_points_from_doc(followup_doc["grid"])
        panel = Panel(title="subjects under follow-up", x_label="time", y_label="proportion")
        for side in (ORIGINAL, SYNTHETIC):
            counts = np.asarray(followup_doc[side]["values"], dtype=float)
            n = followup_doc[side].get("n_subjects") or max(counts.max(), 1.0)
            panel.lines.append(
                Line(fu_points, counts / n, color=_SIDE_COLOR[side], label=side)
            )
        panels.append(panel)
    return render_figure(panels, shared_y=False)


def render_charts(
    report: ComparisonReport,
    directory,
    overlay: bool = False,
    shared_y: bool = True,
) -> list[Path]:
    """Render every chart for every variable; returns written paths."""
    root = Path(directory) / report.run_id
    written: list[Path] = []

    def write(vdir: Path, stem: str, svg_text: str) -> None:
        path = vdir / f"{stem}.svg"
        _atomic_write(path, svg_text)
        written.append(path)

    for var, vrep in sorted(report.variables.items()):
        vdir = root / var
        vdir.mkdir(parents=True, exist_ok=True)
        docs = vrep.documents
        stems = sorted(docs)
        mean_stems = [s for s in stems if s.startswith("mean_h")]
        for stem in mean_stems:
            suffix = stem.removeprefix("mean_")
            quant = docs.get(f"quantiles_{suffix}")
            write(vdir, f"profile_{suffix}",
                  _profile_chart(docs[stem], quant, None, overlay, shared_y))
            out_doc = docs.get(f"outliers_{suffix}")
            if quant is not None and out_doc is not None:
                write(vdir, f"profile_outliers_{suffix}",
                      _profile_chart(docs[stem], quant, out_doc, overlay, shared_y))
        for stem in [s for s in stems if s.startswith("variance_h")]:
            suffix = stem.removeprefix("variance_")
            vario = docs.get(f"variogram_{suffix}")
            if vario is not None:
                write(vdir, f"dispersion_{suffix}",
                      _dispersion_chart(docs[stem], vario, overlay, shared_y))
        for stem in [s for s in stems if s.startswith("rank_variability_h")]:
            write(vdir, stem.replace("rank_variability", "rank"), _rank_chart(docs[stem]))
        for stem in [s for s in stems if s.startswith("class_proportions_h")]:
            suffix = stem.removeprefix("class_proportions_")
            write(vdir, f"classes_{suffix}", _class_chart(docs[stem], overlay, shared_y))
        for stem in [s for s in stems if s.startswith("transitions_h")]:
            for name, svg_text in _transition_charts(docs[stem], shared_y).items():
                write(vdir, f"{stem}_{name}", svg_text)
        if "trajectories" in docs:
            write(vdir, "trajectories", _trajectory_chart(docs["trajectories"]))
        if "measurement_density" in docs:
            write(vdir, "measurement_density",
                  _density_chart(docs["measurement_density"], docs.get("followup")))
    return written


def load_report(directory, run_id: str | None = None) -> ComparisonReport:
    """Reconstruct a report from an emitted directory (for re-rendering)."""
    root = Path(directory)
    if run_id is None:
        if (root / "summary.json").exists():
            run_id = root.name
            root = root.parent
        else:
            candidates = sorted(p.name for p in root.iterdir() if (p / "summary.json").exists())
            if not candidates:
                raise DataError(f"no emitted report found under {root}")
            run_id = candidates[-1]
    base = root / run_id
    summary = json.loads((base / "summary.json").read_text(encoding="utf-8"))
    report = ComparisonReport(config=summary.get("config", {}), run_id=run_id)
    report.failures = summary.get("failures", {})
    for vdir in sorted(p for p in base.iterdir() if p.is_dir()):
        vrep = VariableReport(variable_id=vdir.name, kind="")
        for doc_path in sorted(vdir.glob("*.json")):
            vrep.documents[doc_path.stem] = json.loads(doc_path.read_text(encoding="utf-8"))
        report.variables[vdir.name] = vrep
    return report
