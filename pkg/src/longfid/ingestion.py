"""Parsing, validation, and pairing of long-format datasets.

The on-disk format is delimiter-separated text with a header row and four
columns (subject id, variable id, time, value), plus a sidecar spec document
declaring each variable's kind, class set, and grid step.  When no spec is
given, kinds are inferred: a variable whose values all parse as finite reals
is continuous, anything else is discrete with lexicographically ordered
observed labels.  Inference is logged.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import yaml

from .data_model import (
    CONTINUOUS,
    DISCRETE,
    LongDataset,
    VariableSpec,
)
from .errors import ConfigurationError, DataError
from .individual import StratumAssignment

logger = logging.getLogger(__name__)

DEFAULT_SCHEMA = {
    "subject": "subject_id",
    "variable": "variable_id",
    "time": "time",
    "value": "value",
}


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {text!r}")
    return value


def _open_source(source) -> io.TextIOBase:
    if isinstance(source, (str, Path)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    return source


def parse_long_table(
    source,
    schema: Mapping[str, str] | None = None,
    specs: Mapping[str, VariableSpec] | None = None,
    delimiter: str = ",",
) -> LongDataset:
    """Parse a long-format table into a dataset.

    ``source`` may be a path, bytes, or an open text stream.  ``schema`` maps
    the logical roles subject/variable/time/value to column names.  Errors
    name the offending line (1-based, header included).
    """
    colmap = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(DEFAULT_SCHEMA)
        if unknown:
            raise ConfigurationError(f"unknown schema roles: {sorted(unknown)}")
        colmap.update(schema)

    stream = _open_source(source)
    close = isinstance(source, (str, Path, bytes))
    try:
        reader = csv.reader(stream, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("empty input: missing header row") from None
        positions = {}
        for role, column in colmap.items():
            try:
                positions[role] = header.index(column)
            except ValueError:
                raise DataError(
                    f"missing column {column!r} (for {role}) in header {header}"
                ) from None
        width = max(positions.values()) + 1

        rows: list[tuple[str, str, float, str]] = []
        bad_lines: list[tuple[int, str]] = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < width:
                bad_lines.append((line_no, f"expected >= {width} columns, got {len(row)}"))
                continue
            try:
                time = _parse_float(row[positions["time"]])
            except ValueError:
                bad_lines.append((line_no, f"bad time {row[positions['time']]!r}"))
                continue
            rows.append(
                (
                    row[positions["subject"]],
                    row[positions["variable"]],
                    time,
                    row[positions["value"]],
                )
            )
        if bad_lines:
            shown = "; ".join(f"line {n}: {msg}" for n, msg in bad_lines[:5])
            raise DataError(f"{len(bad_lines)} unparseable row(s): {shown}")
    finally:
        if close:
            stream.close()

    if specs is not None:
        known = set(specs)
        missing = {var for _, var, _, _ in rows if var not in known}
        if missing:
            raise DataError(f"unknown variable(s) without spec: {sorted(missing)}")
        final_specs = dict(specs)
    else:
        final_specs = _infer_specs(rows)

    by_var: dict[str, dict[str, tuple[list, list]]] = {v: {} for v in final_specs}
    bad_values: list[tuple[int, str]] = []
    for idx, (subject, var, time, raw) in enumerate(rows):
        spec = final_specs[var]
        if spec.is_continuous:
            try:
                value: float | str = _parse_float(raw)
            except ValueError:
                bad_values.append(
                    (idx, f"value {raw!r} for continuous variable {var!r}")
                )
                continue
        else:
            value = raw
        times, values = by_var[var].setdefault(subject, ([], []))
        times.append(time)
        values.append(value)
    if bad_values:
        shown = "; ".join(f"row {i + 1}: {m}" for i, m in bad_values[:5])
        raise DataError(f"{len(bad_values)} invalid value(s): {shown}")

    series = {
        var: {s: (np.asarray(t, dtype=np.float64), v) for s, (t, v) in per.items()}
        for var, per in by_var.items()
    }
    return LongDataset(series, final_specs)


def _infer_specs(rows) -> dict[str, VariableSpec]:
    values_by_var: dict[str, list[str]] = {}
    for _, var, _, raw in rows:
        values_by_var.setdefault(var, []).append(raw)
    specs = {}
    for var, raws in sorted(values_by_var.items()):
        try:
            for raw in raws:
                _parse_float(raw)
            specs[var] = VariableSpec(variable_id=var, kind=CONTINUOUS)
            logger.info("inferred variable %r as continuous", var)
        except ValueError:
            classes = tuple(sorted(set(raws)))
            specs[var] = VariableSpec(variable_id=var, kind=DISCRETE, classes=classes)
            logger.info(
                "inferred variable %r as discrete with %d classes", var, len(classes)
            )
    return specs


def write_long_table(dataset: LongDataset, target, delimiter: str = ",") -> None:
    """Serialize a dataset in the long format read by :func:`parse_long_table`."""
    stream = (
        open(target, "w", encoding="utf-8", newline="")
        if isinstance(target, (str, Path))
        else target
    )
    close = isinstance(target, (str, Path))
    try:
        writer = csv.writer(stream, delimiter=delimiter, lineterminator="\n")
        writer.writerow(
            [
                DEFAULT_SCHEMA["subject"],
                DEFAULT_SCHEMA["variable"],
                DEFAULT_SCHEMA["time"],
                DEFAULT_SCHEMA["value"],
            ]
        )
        for obs in dataset.iter_observations():
            value = repr(obs.value) if isinstance(obs.value, float) else obs.value
            writer.writerow([obs.subject_id, obs.variable_id, repr(obs.time), value])
    finally:
        if close:
            stream.close()


def load_variable_specs(path) -> dict[str, VariableSpec]:
    """Load the sidecar spec document (YAML or JSON by extension)."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"spec file not found: {path}")
    text = path.read_text(encoding="utf-8")
    doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(doc, dict) or "variables" not in doc:
        raise ConfigurationError(f"spec file {path} must contain a 'variables' map")
    time_unit = str(doc.get("time_unit", "hour"))
    specs = {}
    for var, entry in doc["variables"].items():
        if not isinstance(entry, dict) or "kind" not in entry:
            raise ConfigurationError(f"spec for variable {var!r} needs a 'kind'")
        specs[str(var)] = VariableSpec(
            variable_id=str(var),
            kind=str(entry["kind"]),
            classes=tuple(str(c) for c in entry.get("classes", ())),
            time_unit=str(entry.get("time_unit", time_unit)),
            grid_step=float(entry.get("grid_step", 1.0)),
        )
    return specs


def load_strata(path) -> StratumAssignment:
    """Load an external stratum file: CSV with subject_id,stratum columns."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"stratum file not found: {path}")
    by_subject: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as stream:
        reader = csv.reader(stream)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise DataError(f"stratum file {path} needs subject_id,stratum columns")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 2:
                raise DataError(f"stratum file line {line_no}: expected 2 columns")
            subject = row[0]
            if subject in by_subject:
                raise DataError(
                    f"stratum file line {line_no}: subject {subject!r} listed twice"
                )
            by_subject[subject] = row[1]
    labels = tuple(sorted(set(by_subject.values())))
    return StratumAssignment(labels=labels, by_subject=by_subject)


@dataclass(frozen=True)
class DatasetPair:
    """Original and synthetic datasets under unified variable specs.

    For discrete variables the unified class set is the union of both sides'
    class sets (declared plus observed); ``synthetic_only_classes`` and
    ``absent_in_synthetic`` flag labels observed on exactly one side, which
    is how generators that invent or drop classes show up.  Variables present
    on only one side are excluded from paired metrics and listed here.
    """

    original: LongDataset
    synthetic: LongDataset
    unified_specs: dict[str, VariableSpec] = field(default_factory=dict)
    synthetic_only_classes: dict[str, tuple[str, ...]] = field(default_factory=dict)
    absent_in_synthetic: dict[str, tuple[str, ...]] = field(default_factory=dict)
    only_original: tuple[str, ...] = ()
    only_synthetic: tuple[str, ...] = ()

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(sorted(self.unified_specs))


def _side_classes(dataset: LongDataset, var: str) -> tuple[tuple[str, ...], set[str]]:
    """Declared-order class list extended by observed labels, plus observed set."""
    declared = dataset.spec(var).classes
    observed = set(dataset.observed_labels(var))
    extra = tuple(sorted(observed - set(declared)))
    if extra:
        logger.info("variable %r: observed undeclared classes %s", var, extra)
    return declared + extra, observed


def pair_datasets(original: LongDataset, synthetic: LongDataset) -> DatasetPair:
    """Match variables by id and unify discrete class sets.

    Variables with conflicting kinds raise; variables on only one side are
    reported and excluded.  Both returned datasets carry the unified specs,
    so class profiles from either side share the same columns.
    """
    vars_o = set(original.specs)
    vars_s = set(synthetic.specs)
    shared = sorted(vars_o & vars_s)
    unified: dict[str, VariableSpec] = {}
    syn_only: dict[str, tuple[str, ...]] = {}
    absent: dict[str, tuple[str, ...]] = {}
    for var in shared:
        spec_o = original.spec(var)
        spec_s = synthetic.spec(var)
        if spec_o.kind != spec_s.kind:
            raise DataError(
                f"variable {var!r}: kind mismatch "
                f"({spec_o.kind} original vs {spec_s.kind} synthetic)"
            )
        if spec_o.is_continuous:
            unified[var] = spec_o
            continue
        classes_o, observed_o = _side_classes(original, var)
        classes_s, observed_s = _side_classes(synthetic, var)
        union = list(classes_o) + [c for c in classes_s if c not in classes_o]
        unified[var] = VariableSpec(
            variable_id=var,
            kind=DISCRETE,
            classes=tuple(union),
            time_unit=spec_o.time_unit,
            grid_step=spec_o.grid_step,
        )
        syn_extra = tuple(c for c in union if c in observed_s and c not in observed_o)
        missing = tuple(c for c in union if c in observed_o and c not in observed_s)
        if syn_extra:
            syn_only[var] = syn_extra
        if missing:
            absent[var] = missing
    only_o = tuple(sorted(vars_o - vars_s))
    only_s = tuple(sorted(vars_s - vars_o))
    for name, extras in (("original", only_o), ("synthetic", only_s)):
        if extras:
            logger.warning(
                "variables only in the %s dataset are excluded from paired "
                "metrics: %s", name, list(extras),
            )
    return DatasetPair(
        original=original.with_specs({**original.specs, **unified}),
        synthetic=synthetic.with_specs({**synthetic.specs, **unified}),
        unified_specs=unified,
        synthetic_only_classes=syn_only,
        absent_in_synthetic=absent,
        only_original=only_o,
        only_synthetic=only_s,
    )


def split_reference(
    original: LongDataset, seed: int
) -> tuple[LongDataset, LongDataset]:
    """Disjoint random halves by subject (larger half first), full spec set."""
    subjects = original.subjects
    if len(subjects) < 2:
        raise DataError("need at least 2 subjects to split a reference")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(subjects))
    cut = len(subjects) - len(subjects) // 2
    first = [subjects[i] for i in order[:cut]]
    second = [subjects[i] for i in order[cut:]]
    return original.restrict_subjects(first), original.restrict_subjects(second)
