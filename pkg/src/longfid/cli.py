"""Command-line entry point: evaluate, simulate, reference, render.

``evaluate`` runs the full metric battery on an original/synthetic pair and
writes a report directory; ``simulate`` generates ground-truth datasets from
a model document; ``reference`` computes original-vs-original baselines;
``render`` rebuilds charts from an emitted report.  A config file may supply
any flag's value; explicit flags win.

Exit codes: 0 success, 1 usage or configuration error, 2 data validation
error, 3 internal error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .covariance import (
    rank_order_variability,
    transition_profile,
    variance_decomposition,
    variance_profile,
    variogram,
)
from .data_model import (
    LongDataset,
    TimeGrid,
    build_measurement_matrix,
    build_time_grid,
)
from .errors import ConfigurationError, DataError, LongfidError
from .individual import baseline_strata, sample_trajectories
from .ingestion import (
    DatasetPair,
    load_strata,
    load_variable_specs,
    pair_datasets,
    parse_long_table,
    write_long_table,
)
from .kernel import DEFAULT_BANDWIDTH, DEFAULT_QUANTILE_LEVELS
from .marginal import (
    class_profile,
    mean_profile,
    outlier_overlay,
    quantile_profile,
    subjects_at_risk,
)
from .measurement import (
    DEFAULT_EPSILON,
    DEFAULT_ITERATIONS,
    DEFAULT_SUBSAMPLE,
    reference_protocol,
    subsample_protocol,
)
from .report import (
    ComparisonReport,
    VariableReport,
    _atomic_write,
    _json_dumps,
    emit_series,
    load_report,
    measurement_doc,
    outliers_doc,
    profile_pair_doc,
    rank_pair_doc,
    render_charts,
    trajectories_doc,
    transition_pair_doc,
    variogram_pair_doc,
)
from .simgen import (
    ContinuousModel,
    DiscreteModel,
    ObservationDesign,
    merge_datasets,
    simulate_continuous,
    simulate_discrete,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


@dataclass
class RunConfig:
    """Resolved evaluation parameters; defaults match the documented protocol."""

    original: str = ""
    synthetic: str = ""
    spec: str | None = None
    out: str = "reports"
    bandwidths: tuple[float, ...] = (DEFAULT_BANDWIDTH,)
    grid_step: float | None = None
    quantiles: tuple[float, ...] = DEFAULT_QUANTILE_LEVELS
    subsample: int = DEFAULT_SUBSAMPLE
    iterations: int = DEFAULT_ITERATIONS
    epsilon: float = DEFAULT_EPSILON
    seed: int = 0
    vars: tuple[str, ...] = ()
    exclude_vars: tuple[str, ...] = ()
    strata: str | None = None
    per_stratum: int = 20
    free_y: bool = False
    overlay: bool = False
    workers: int = 1
    delimiter: str = ","

    def validate(self) -> None:
        if not self.bandwidths or any(h <= 0 for h in self.bandwidths):
            raise ConfigurationError("bandwidths must be positive")
        if self.grid_step is not None and self.grid_step <= 0:
            raise ConfigurationError("grid step must be positive")
        if not self.quantiles or any(not 0 < q < 1 for q in self.quantiles):
            raise ConfigurationError("quantile levels must lie in (0, 1)")
        if self.subsample < 1:
            raise ConfigurationError("subsample size must be >= 1")
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon must be > 0")
        if self.per_stratum < 1:
            raise ConfigurationError("per-stratum sample size must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("worker budget must be >= 1")

    def resolved(self) -> dict:
        doc = asdict(self)
        doc["version"] = __version__
        return doc

    def run_id(self) -> str:
        doc = self.resolved()
        doc.pop("out", None)  # same inputs, different target dir: same id
        digest = hashlib.sha256(
            json.dumps(doc, sort_keys=True).encode("utf-8")
        ).hexdigest()
        return f"run-{digest[:12]}"


def _h_stem(h: float) -> str:
    return f"h{h:g}"


def _variable_seeds(master: int, variables: list[str]) -> dict[str, int]:
    children = np.random.SeedSequence(master).spawn(len(variables) * 2)
    # two independent streams per variable: measurement protocol, trajectories
    return {
        var: (int(children[2 * i].generate_state(1)[0]),
              int(children[2 * i + 1].generate_state(1)[0]))
        for i, var in enumerate(sorted(variables))
    }


def evaluate_variable(
    pair: DatasetPair,
    variable_id: str,
    config: RunConfig,
    seeds: tuple[int, int],
    external_strata=None,
) -> VariableReport:
    """All metrics for one variable, packaged as JSON-ready documents."""
    spec = pair.unified_specs[variable_id]
    step = config.grid_step if config.grid_step is not None else spec.grid_step
    orig, synth = pair.original, pair.synthetic
    grid = build_time_grid(
        orig.variable_view(variable_id).times,
        synth.variable_view(variable_id).times,
        step,
    )
    vrep = VariableReport(variable_id=variable_id, kind=spec.kind)
    docs = vrep.documents

    protocol_seed, traj_seed = seeds
    meas = subsample_protocol(
        orig,
        synth,
        variable_id,
        grid=grid,
        subsample_size=config.subsample,
        iterations=config.iterations,
        seed=protocol_seed,
        epsilon=config.epsilon,
    )
    docs["measurement"] = measurement_doc(meas)
    docs["measurement_density"] = profile_pair_doc(
        variable_id, "measurement_density",
        meas.density_original, meas.density_synthetic,
    )
    followup_o = subjects_at_risk(build_measurement_matrix(orig, variable_id, grid))
    followup_s = subjects_at_risk(build_measurement_matrix(synth, variable_id, grid))
    docs["followup"] = profile_pair_doc(
        variable_id, "followup", followup_o, followup_s,
        extra={
            "original": {"values": followup_o.values,
                         "n_subjects": len(orig.subjects)},
            "synthetic": {"values": followup_s.values,
                          "n_subjects": len(synth.subjects)},
        },
    )

    for h in config.bandwidths:
        stem = _h_stem(h)
        if spec.is_continuous:
            docs[f"mean_{stem}"] = profile_pair_doc(
                variable_id, "mean",
                mean_profile(orig, variable_id, grid, h),
                mean_profile(synth, variable_id, grid, h),
            )
            docs[f"quantiles_{stem}"] = profile_pair_doc(
                variable_id, "quantiles",
                quantile_profile(orig, variable_id, grid, h, config.quantiles),
                quantile_profile(synth, variable_id, grid, h, config.quantiles),
            )
            var_o = variance_profile(orig, variable_id, grid, h)
            var_s = variance_profile(synth, variable_id, grid, h)
            docs[f"variance_{stem}"] = profile_pair_doc(
                variable_id, "variance", var_o, var_s
            )
            q_low, q_high = min(config.quantiles), max(config.quantiles)
            docs[f"outliers_{stem}"] = outliers_doc(
                variable_id, "outliers",
                outlier_overlay(orig, variable_id, grid, h, q_low, q_high),
                outlier_overlay(synth, variable_id, grid, h, q_low, q_high),
                params={"bandwidth": h, "q_low": q_low, "q_high": q_high},
            )
            try:
                vario_o = variogram(orig, variable_id, h, grid=grid)
                vario_s = variogram(synth, variable_id, h, grid=grid)
                docs[f"variogram_{stem}"] = variogram_pair_doc(
                    variable_id, "variogram", vario_o, vario_s,
                    decomposition={
                        "original": variance_decomposition(vario_o, var_o),
                        "synthetic": variance_decomposition(vario_s, var_s),
                    },
                )
            except DataError as exc:
                logger.info("variable %s: variogram skipped (%s)", variable_id, exc)
            docs[f"rank_variability_{stem}"] = rank_pair_doc(
                variable_id, "rank_variability",
                rank_order_variability(orig, variable_id, grid, h, config.quantiles),
                rank_order_variability(synth, variable_id, grid, h, config.quantiles),
            )
        else:
            docs[f"class_proportions_{stem}"] = profile_pair_doc(
                variable_id, "class_proportions",
                class_profile(orig, variable_id, grid, h),
                class_profile(synth, variable_id, grid, h),
                extra={
                    "classes": list(spec.classes),
                    "synthetic_only_classes": list(
                        pair.synthetic_only_classes.get(variable_id, ())
                    ),
                    "absent_in_synthetic": list(
                        pair.absent_in_synthetic.get(variable_id, ())
                    ),
                },
            )
            try:
                docs[f"transitions_{stem}"] = transition_pair_doc(
                    variable_id, "transitions",
                    transition_profile(orig, variable_id, grid, h),
                    transition_profile(synth, variable_id, grid, h),
                )
            except DataError as exc:
                logger.info("variable %s: transitions skipped (%s)", variable_id, exc)

    if spec.is_continuous:
        h0 = config.bandwidths[0]

        def strata_for(dataset: LongDataset):
            if external_strata is not None and any(
                s in external_strata.by_subject for s in dataset.subjects
            ):
                return external_strata
            return baseline_strata(
                dataset, variable_id, grid, h0, boundaries=config.quantiles
            )

        docs["trajectories"] = trajectories_doc(
            variable_id, "trajectories",
            sample_trajectories(
                orig, variable_id, strata_for(orig),
                per_stratum=config.per_stratum, seed=traj_seed,
            ),
            sample_trajectories(
                synth, variable_id, strata_for(synth),
                per_stratum=config.per_stratum, seed=traj_seed,
            ),
        )
    return vrep


def _select_variables(pair: DatasetPair, config: RunConfig) -> list[str]:
    names = list(pair.variables)
    if config.vars:
        missing = set(config.vars) - set(names)
        if missing:
            raise ConfigurationError(
                f"requested variables not in the paired data: {sorted(missing)}"
            )
        names = [v for v in names if v in set(config.vars)]
    if config.exclude_vars:
        names = [v for v in names if v not in set(config.exclude_vars)]
    if not names:
        raise ConfigurationError("no variables left to evaluate after filtering")
    return names


def run_evaluate(config: RunConfig) -> tuple[ComparisonReport, Path]:
    config.validate()
    specs = load_variable_specs(config.spec) if config.spec else None
    original = parse_long_table(config.original, specs=specs, delimiter=config.delimiter)
    synthetic = parse_long_table(config.synthetic, specs=specs, delimiter=config.delimiter)
    pair = pair_datasets(original, synthetic)
    variables = _select_variables(pair, config)
    external = load_strata(config.strata) if config.strata else None
    seeds = _variable_seeds(config.seed, variables)

    report = ComparisonReport(config=config.resolved(), run_id=config.run_id())

    def one(var: str):
        try:
            return var, evaluate_variable(pair, var, config, seeds[var], external), None
        except LongfidError as exc:
            return var, None, f"{type(exc).__name__}: {exc}"

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(one, variables))
    else:
        results = [one(var) for var in variables]
    for var, vrep, failure in sorted(results, key=lambda r: r[0]):
        if failure is None:
            report.variables[var] = vrep
        else:
            logger.error("variable %s failed: %s", var, failure)
            report.failures[var] = failure

    emit_series(report, config.out)
    render_charts(report, config.out, overlay=config.overlay,
                  shared_y=not config.free_y)
    return report, Path(config.out) / report.run_id


# -- simulate ----------------------------------------------------------------


def _mean_function(doc: dict | None):
    doc = doc or {"type": "constant", "level": 0.0}
    kind = doc.get("type", "constant")
    if kind == "constant":
        level = float(doc.get("level", 0.0))
        return lambda t: np.full_like(np.asarray(t, dtype=np.float64), level)
    if kind == "linear":
        intercept = float(doc.get("intercept", 0.0))
        slope = float(doc.get("slope", 0.0))
        return lambda t: intercept + slope * np.asarray(t, dtype=np.float64)
    if kind == "sine":
        level = float(doc.get("level", 0.0))
        amplitude = float(doc.get("amplitude", 1.0))
        period = float(doc.get("period", 24.0))
        if period <= 0:
            raise ConfigurationError("sine mean: period must be > 0")
        return lambda t: level + amplitude * np.sin(
            2.0 * np.pi * np.asarray(t, dtype=np.float64) / period
        )
    raise ConfigurationError(f"unknown mean type {kind!r}")


def load_model_document(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"model document not found: {path}")
    text = path.read_text(encoding="utf-8")
    doc = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigurationError(f"model document {path} must be a mapping")
    return doc


def simulate_from_document(doc: dict, seed: int) -> LongDataset:
    """Build a multi-variable dataset from a simulation model document."""
    for key in ("subjects", "grid", "variables"):
        if key not in doc:
            raise ConfigurationError(f"model document missing field {key!r}")
    n = int(doc["subjects"])
    if n < 1:
        raise ConfigurationError("model document: subjects must be >= 1")
    gdoc = doc["grid"]
    try:
        grid = TimeGrid(float(gdoc["t_min"]), float(gdoc["t_max"]), float(gdoc["step"]))
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"model document: bad grid ({exc})") from None
    design = ObservationDesign(
        n_subjects=n,
        grid=grid,
        keep_probability=doc.get("keep_probability", 1.0),
        dropout_hazard=doc.get("dropout_hazard", 0.0),
    )
    variables = doc["variables"]
    if not variables:
        raise ConfigurationError("model document: no variables declared")
    children = np.random.SeedSequence(seed).spawn(len(variables))
    parts = []
    for (var, vdoc), child in zip(sorted(variables.items()), children):
        var_seed = int(child.generate_state(1)[0])
        kind = vdoc.get("kind")
        if kind == "continuous":
            model = ContinuousModel(
                mean=_mean_function(vdoc.get("mean")),
                nugget_var=float(vdoc.get("nugget_var", 0.0)),
                serial_var=float(vdoc.get("serial_var", 0.0)),
                serial_range=float(vdoc.get("serial_range", 1.0)),
                serial_kind=str(vdoc.get("serial_kind", "exponential")),
                intercept_var=float(vdoc.get("intercept_var", 0.0)),
            )
            parts.append(simulate_continuous(model, design, var_seed, variable_id=var))
        elif kind == "discrete":
            if "classes" not in vdoc or "transitions" not in vdoc:
                raise ConfigurationError(
                    f"discrete variable {var!r} needs 'classes' and 'transitions'"
                )
            classes = tuple(str(c) for c in vdoc["classes"])
            initial = vdoc.get("initial")
            if initial is None:
                initial = np.full(len(classes), 1.0 / len(classes))
            model = DiscreteModel(
                classes=classes,
                transitions=np.asarray(vdoc["transitions"], dtype=np.float64),
                initial=np.asarray(initial, dtype=np.float64),
            )
            parts.append(simulate_discrete(model, design, var_seed, variable_id=var))
        else:
            raise ConfigurationError(
                f"variable {var!r}: kind must be 'continuous' or 'discrete'"
            )
    return merge_datasets(parts)


def write_spec_sidecar(dataset: LongDataset, path) -> None:
    doc = {
        "variables": {
            var: (
                {"kind": spec.kind, "grid_step": spec.grid_step}
                if spec.is_continuous
                else {
                    "kind": spec.kind,
                    "grid_step": spec.grid_step,
                    "classes": list(spec.classes),
                }
            )
            for var, spec in sorted(dataset.specs.items())
        }
    }
    _atomic_write(Path(path), yaml.safe_dump(doc, sort_keys=True))


# -- argument parsing ----------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit with code 1
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(",") if part != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(part for part in text.split(",") if part != "")


def build_parser() -> _Parser:
    parser = _Parser(prog="longfid", description=__doc__)
    parser.add_argument("--version", action="version", version=f"longfid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evaluate", help="compare a synthetic dataset to its original")
    ev.add_argument("--config", help="YAML/JSON file with flag defaults")
    ev.add_argument("--original", help="original long-format table")
    ev.add_argument("--synthetic", help="synthetic long-format table")
    ev.add_argument("--spec", help="variable spec document")
    ev.add_argument("--out", help="report output directory (default: reports)")
    ev.add_argument("--bandwidth", type=_float_list, dest="bandwidths",
                    help="comma-separated smoothing bandwidths (default 6)")
    ev.add_argument("--grid-step", type=float, dest="grid_step",
                    help="override every variable's grid step")
    ev.add_argument("--quantiles", type=_float_list,
                    help="comma-separated quantile levels")
    ev.add_argument("--subsample", type=int, help="protocol subsample size")
    ev.add_argument("--iterations", type=int, help="protocol iterations")
    ev.add_argument("--epsilon", type=float, help="dropout divergence smoothing")
    ev.add_argument("--seed", type=int, help="master seed")
    ev.add_argument("--vars", type=_str_list, help="only evaluate these variables")
    ev.add_argument("--exclude-vars", type=_str_list, dest="exclude_vars")
    ev.add_argument("--strata", help="external stratum file (subject_id,stratum)")
    ev.add_argument("--per-stratum", type=int, dest="per_stratum",
                    help="trajectory subjects per stratum")
    ev.add_argument("--free-y", action="store_true", dest="free_y", default=None,
                    help="per-panel y axes instead of a shared one")
    ev.add_argument("--overlay", action="store_true", default=None,
                    help="overlay both datasets in one panel")
    ev.add_argument("--workers", type=int, help="parallel per-variable workers")
    ev.add_argument("--delimiter", help="input column delimiter (default comma)")

    sim = sub.add_parser("simulate", help="generate a ground-truth dataset")
    sim.add_argument("--model", required=True, help="model/design document")
    sim.add_argument("--out", required=True, help="output long-format table")
    sim.add_argument("--spec-out", dest="spec_out",
                     help="write the matching spec document here")
    sim.add_argument("--seed", type=int, default=0)

    ref = sub.add_parser("reference", help="original-vs-original baselines")
    ref.add_argument("--original", required=True)
    ref.add_argument("--spec")
    ref.add_argument("--out", help="write the JSON summary here (default stdout)")
    ref.add_argument("--subsample", type=int, default=DEFAULT_SUBSAMPLE)
    ref.add_argument("--iterations", type=int, default=DEFAULT_ITERATIONS)
    ref.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    ref.add_argument("--seed", type=int, default=0)
    ref.add_argument("--grid-step", type=float, dest="grid_step")
    ref.add_argument("--vars", type=_str_list)
    ref.add_argument("--delimiter", default=",")

    ren = sub.add_parser("render", help="re-render charts from an emitted report")
    ren.add_argument("--report", required=True, help="report directory")
    ren.add_argument("--run-id", dest="run_id")
    ren.add_argument("--free-y", action="store_true", dest="free_y")
    ren.add_argument("--overlay", action="store_true")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    base: dict = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigurationError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
        loaded = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
        if loaded:
            if not isinstance(loaded, dict):
                raise ConfigurationError("config file must be a mapping")
            base.update(loaded)
    config = RunConfig()
    known = set(asdict(config))
    unknown = set(base) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    for key, value in base.items():
        if key in ("bandwidths", "quantiles"):
            value = tuple(float(v) for v in value)
        elif key in ("vars", "exclude_vars"):
            value = tuple(str(v) for v in value)
        setattr(config, key, value)
    for key in known:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            setattr(config, key, flag_value)
    if not config.original or not config.synthetic:
        raise ConfigurationError("evaluate needs --original and --synthetic")
    for label, path in (("original", config.original), ("synthetic", config.synthetic)):
        if not Path(path).exists():
            raise ConfigurationError(f"{label} dataset not found: {path}")
    return config


def _cmd_evaluate(args) -> int:
    config = _config_from_args(args)
    report, out_dir = run_evaluate(config)
    print(f"report written to {out_dir}")
    if report.failures:
        for var, msg in sorted(report.failures.items()):
            print(f"FAILED {var}: {msg}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def _cmd_simulate(args) -> int:
    doc = load_model_document(args.model)
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    dataset = simulate_from_document(doc, seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_long_table(dataset, out)
    spec_out = args.spec_out or f"{args.out}.spec.yaml"
    write_spec_sidecar(dataset, spec_out)
    print(f"dataset written to {out} (spec: {spec_out})")
    return EXIT_OK


def _cmd_reference(args) -> int:
    specs = load_variable_specs(args.spec) if args.spec else None
    original = parse_long_table(args.original, specs=specs, delimiter=args.delimiter)
    names = list(original.variables)
    if args.vars:
        missing = set(args.vars) - set(names)
        if missing:
            raise ConfigurationError(f"unknown variables: {sorted(missing)}")
        names = [v for v in names if v in set(args.vars)]
    seeds = _variable_seeds(args.seed, names)
    result = {}
    for var in names:
        spec = original.spec(var)
        step = args.grid_step if args.grid_step is not None else spec.grid_step
        view = original.variable_view(var)
        grid = build_time_grid(view.times, (), step)
        block = reference_protocol(
            original, var, grid=grid,
            subsample_size=args.subsample, iterations=args.iterations,
            seed=seeds[var][0], epsilon=args.epsilon,
        )
        result[var] = {
            "similarity": {"mean": block.similarity.mean, "sd": block.similarity.sd},
            "frobenius": {"mean": block.frobenius.mean, "sd": block.frobenius.sd},
            "dropout_divergence": {
                "mean": block.dropout_divergence.mean,
                "sd": block.dropout_divergence.sd,
            },
        }
    payload = _json_dumps(
        {
            "command": "reference",
            "iterations": args.iterations,
            "subsample": args.subsample,
            "seed": args.seed,
            "reference": result,
        }
    )
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        _atomic_write(Path(args.out), payload)
        print(f"reference summary written to {args.out}")
    else:
        print(payload, end="")
    return EXIT_OK


def _cmd_render(args) -> int:
    report = load_report(args.report, run_id=args.run_id)
    base = Path(args.report)
    directory = base.parent if (base / "summary.json").exists() else base
    written = render_charts(
        report, directory, overlay=args.overlay, shared_y=not args.free_y
    )
    print(f"rendered {len(written)} chart(s) for {report.run_id}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "evaluate": _cmd_evaluate,
        "simulate": _cmd_simulate,
        "reference": _cmd_reference,
        "render": _cmd_render,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
