"""End-to-end analysis runs and deterministic report emission.

A run loads one or more subject traces (or generates a synthetic scenario),
builds branch sets for the selected source/destination pairs, applies the
requested combining policies, and writes:

- ``curves/outage_<policy>_<class>.csv`` outage probability vs sensitivity
- ``curves/cod_<policy>_<class>_<sens>dB.csv`` duration exceedance curves
- ``runs/<policy>_<class>_<subject>_<pair>_<sens>dB.csv`` per-pair runs
- ``summary.json`` headline numbers, pooled and per subject

Identical configuration and inputs produce byte-identical reports: iteration
orders are fixed, JSON keys are sorted, probabilities are rounded to 4
significant digits and dB values to 2 decimals.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Mapping, Sequence

import numpy as np

from ._validation import check_probability, check_sweep
from .branches import BranchSet, build_branches, select_pairs
from .combining import (
    DEFAULT_SWC_THRESHOLD_DB,
    CombinedSeries,
    Policy,
    combine,
    count_switches,
)
from .errors import ConfigurationError, CurveNotCrossedError
from .metrics import (
    DEFAULT_COD_THRESHOLDS_S,
    DEFAULT_SENSITIVITY_SWEEP_DB,
    DurationCurve,
    OutageCurve,
    OutageRun,
    best_case_op,
    cod_curve,
    gain_improvement_at,
    latency_exceedance,
    outage_indicator,
    outage_runs,
    pooled_outage_curve,
)
from .nodes import LinkClass, Node, classify_link, node_from_label
from .synth import ScenarioSpec, generate_scenario, load_scenario
from .trace import DEFAULT_FLOOR_DB, ChannelTraceSet, impute_missing, load_record_csv

SUMMARY_SCHEMA = "wbandiv-summary-v1"
POLICY_ORDER = (Policy.DL, Policy.SC, Policy.SWC)
CLASS_ORDER = (LinkClass.ON_BODY, LinkClass.OFF_BODY)


def policy_from_name(name: str) -> Policy:
    for policy in Policy:
        if name.lower() == policy.value.lower():
            return policy
    raise ConfigurationError(
        f"unknown policy {name!r}, expected one of {[p.value for p in Policy]}"
    )


def link_class_from_name(name: str) -> LinkClass:
    for cls in LinkClass:
        if name.lower() == cls.value.lower():
            return cls
    raise ConfigurationError(
        f"unknown link class {name!r}, expected one of {[c.value for c in LinkClass]}"
    )


def parse_pair(text: str) -> tuple[Node, Node]:
    """Parse a 'SOURCE:DEST' pair argument."""
    src, sep, dst = text.partition(":")
    if not sep:
        raise ConfigurationError(f"pair must look like SOURCE:DEST, got {text!r}")
    return node_from_label(src), node_from_label(dst)


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything a run needs; mirrors the CLI flags and config file keys."""

    inputs: tuple[Path, ...] = ()
    scenario: Path | ScenarioSpec | None = None
    seed: int | None = None
    policies: tuple[Policy, ...] = POLICY_ORDER
    pairs: tuple[tuple[Node, Node], ...] | None = None
    link_class: LinkClass | None = None
    swc_threshold_db: float = DEFAULT_SWC_THRESHOLD_DB
    sensitivity_sweep_db: tuple[float, ...] = tuple(DEFAULT_SENSITIVITY_SWEEP_DB)
    cod_sensitivities_db: tuple[float, ...] = (-86.0,)
    cod_thresholds_s: tuple[float, ...] = tuple(DEFAULT_COD_THRESHOLDS_S)
    impute_floor_db: float = DEFAULT_FLOOR_DB
    improvement_target_op: float = 0.10
    delta_ms: float = 15.0

    def validate(self) -> None:
        if bool(self.inputs) == (self.scenario is not None):
            raise ConfigurationError("give either input trace CSVs or a scenario, not both")
        if not self.policies:
            raise ConfigurationError("at least one combining policy is required")
        if len(set(self.policies)) != len(self.policies):
            raise ConfigurationError("duplicate policies in configuration")
        check_sweep(self.sensitivity_sweep_db, name="sensitivity sweep")
        check_sweep(self.cod_thresholds_s, name="duration thresholds")
        if not self.cod_sensitivities_db:
            raise ConfigurationError("at least one duration-statistics sensitivity is required")
        check_probability(self.improvement_target_op, name="improvement target")

    @property
    def ordered_policies(self) -> tuple[Policy, ...]:
        return tuple(p for p in POLICY_ORDER if p in self.policies)

    @property
    def reference_sensitivity_db(self) -> float:
        return self.cod_sensitivities_db[0]


_CONFIG_KEYS = {
    "inputs",
    "scenario",
    "seed",
    "policies",
    "pairs",
    "link_class",
    "swc_threshold_db",
    "sensitivity_sweep_db",
    "cod_sensitivities_db",
    "cod_thresholds_s",
    "impute_floor_db",
    "improvement_target_op",
    "delta_ms",
}


def config_from_dict(data: Mapping) -> AnalysisConfig:
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigurationError(f"unknown configuration key(s): {sorted(unknown)}")
    kwargs: dict = {}
    if data.get("inputs"):
        kwargs["inputs"] = tuple(Path(p) for p in data["inputs"])
    if data.get("scenario") is not None:
        sc = data["scenario"]
        kwargs["scenario"] = sc if isinstance(sc, ScenarioSpec) else Path(sc)
    if data.get("seed") is not None:
        kwargs["seed"] = int(data["seed"])
    if "policies" in data:
        kwargs["policies"] = tuple(
            p if isinstance(p, Policy) else policy_from_name(p) for p in data["policies"]
        )
    if data.get("pairs") is not None:
        kwargs["pairs"] = tuple(
            p if isinstance(p, tuple) else parse_pair(p) for p in data["pairs"]
        )
    if data.get("link_class") is not None:
        lc = data["link_class"]
        kwargs["link_class"] = lc if isinstance(lc, LinkClass) else link_class_from_name(lc)
    for key in (
        "swc_threshold_db",
        "impute_floor_db",
        "improvement_target_op",
        "delta_ms",
    ):
        if key in data:
            kwargs[key] = float(data[key])
    for key in ("sensitivity_sweep_db", "cod_sensitivities_db", "cod_thresholds_s"):
        if key in data:
            kwargs[key] = tuple(float(v) for v in data[key])
    config = AnalysisConfig(**kwargs)
    config.validate()
    return config


def load_config_file(path: Path) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    return data


# -- number formatting (fixed so golden reports are byte stable) ----------------


def fmt_prob(p: float | None) -> float | None:
    return None if p is None else float(f"{p:.4g}")


def fmt_db(x: float | None) -> float | None:
    return None if x is None else round(float(x), 2)


def fmt_rate(x: float | None) -> float | None:
    return None if x is None else float(f"{x:.4g}")


def fmt_seconds(x: float) -> float:
    return float(f"{x:.6g}")


# -- analysis -------------------------------------------------------------------


@dataclass(frozen=True)
class PairResult:
    """One combined series with its provenance."""

    subject: str
    source: Node
    dest: Node
    link_class: LinkClass
    policy: Policy
    combined: CombinedSeries

    @property
    def pair_label(self) -> str:
        return f"{self.source}-{self.dest}"


@dataclass
class AnalysisReport:
    config: AnalysisConfig
    subjects: tuple[str, ...]
    class_pairs: dict[LinkClass, list[tuple[Node, Node]]]
    results: list[PairResult]
    delta_ms: float = 15.0
    outage_curves: dict[tuple[LinkClass, Policy], OutageCurve] = field(default_factory=dict)
    cod_curves: dict[tuple[LinkClass, Policy, float], DurationCurve] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def select(
        self,
        link_class: LinkClass,
        policy: Policy,
        subject: str | None = None,
    ) -> list[PairResult]:
        return [
            r
            for r in self.results
            if r.link_class == link_class
            and r.policy == policy
            and (subject is None or r.subject == subject)
        ]


def load_trace_sets(config: AnalysisConfig) -> list[ChannelTraceSet]:
    """Load and impute every subject named by the configuration."""
    config.validate()
    if config.scenario is not None:
        spec = (
            config.scenario
            if isinstance(config.scenario, ScenarioSpec)
            else load_scenario(config.scenario)
        )
        raw = [generate_scenario(spec, config.seed)]
    else:
        raw = []
        for path in config.inputs:
            if not Path(path).exists():
                raise ConfigurationError(f"input trace {path} does not exist")
            raw.append(load_record_csv(Path(path), config.delta_ms, subject=Path(path).stem))
    return [impute_missing(ts, config.impute_floor_db) for ts in raw]


def run_analysis(config: AnalysisConfig) -> AnalysisReport:
    config.validate()
    trace_sets = load_trace_sets(config)
    deltas = {ts.delta_ms for ts in trace_sets}
    if len(deltas) > 1:
        raise ConfigurationError(f"subject traces mix sample periods: {sorted(deltas)}")
    delta_ms = deltas.pop()
    selected = select_pairs(
        list(config.pairs) if config.pairs is not None else None, config.link_class
    )
    class_pairs: dict[LinkClass, list[tuple[Node, Node]]] = {}
    for cls in CLASS_ORDER:
        members = [(s, d) for s, d in selected if classify_link(s, d) == cls]
        if members:
            class_pairs[cls] = members

    results: list[PairResult] = []
    for ts in trace_sets:
        branch_cache: dict[tuple[Node, Node], BranchSet] = {}
        for cls, members in class_pairs.items():
            for source, dest in members:
                branches = branch_cache.get((source, dest))
                if branches is None:
                    branches = branch_cache[(source, dest)] = build_branches(ts, source, dest)
                for policy in config.ordered_policies:
                    results.append(
                        PairResult(
                            ts.subject,
                            source,
                            dest,
                            cls,
                            policy,
                            combine(branches, policy, config.swc_threshold_db),
                        )
                    )

    report = AnalysisReport(
        config=config,
        subjects=tuple(ts.subject for ts in trace_sets),
        class_pairs=class_pairs,
        results=results,
        delta_ms=delta_ms,
    )
    sweep = np.asarray(config.sensitivity_sweep_db)
    for cls in class_pairs:
        for policy in config.ordered_policies:
            scope = report.select(cls, policy)
            report.outage_curves[(cls, policy)] = pooled_outage_curve(
                [r.combined.gains for r in scope], sweep, label=f"{policy}_{cls}"
            )
            for sens in config.cod_sensitivities_db:
                pooled_runs: list[OutageRun] = []
                total_slots = 0
                for r in scope:
                    ind = outage_indicator(r.combined.gains, sens)
                    pooled_runs.extend(outage_runs(ind, r.combined.delta_ms))
                    total_slots += r.combined.n_slots
                report.cod_curves[(cls, policy, sens)] = cod_curve(
                    pooled_runs,
                    total_slots * delta_ms / 1000.0,
                    np.asarray(config.cod_thresholds_s),
                    sensitivity_db=sens,
                    label=f"{policy}_{cls}_{sens:g}dB",
                )
    report.summary = _build_summary(report)
    return report


def _scope_stats(report: AnalysisReport, cls: LinkClass, policy: Policy, subject: str | None) -> dict:
    config = report.config
    scope = report.select(cls, policy, subject)
    gains = [r.combined.gains for r in scope]
    curve = pooled_outage_curve(gains, np.asarray(config.sensitivity_sweep_db))
    sens = config.reference_sensitivity_db
    runs: list[OutageRun] = []
    total_slots = 0
    switches = 0
    switch_time_s = 0.0
    for r in scope:
        ind = outage_indicator(r.combined.gains, sens)
        runs.extend(outage_runs(ind, r.combined.delta_ms))
        total_slots += r.combined.n_slots
        switches += count_switches(r.combined)
        if r.combined.n_slots >= 2:
            switch_time_s += (r.combined.n_slots - 1) * r.combined.delta_ms / 1000.0
    total_time_s = total_slots * report.delta_ms / 1000.0
    outage_slots = sum(r.length_slots for r in runs)

    try:
        bc_op = best_case_op(curve)
    except ConfigurationError:
        bc_op = None

    improvement = None
    if policy is not Policy.DL and Policy.DL in config.policies:
        dl_scope = report.select(cls, Policy.DL, subject)
        dl_curve = pooled_outage_curve(
            [r.combined.gains for r in dl_scope], np.asarray(config.sensitivity_sweep_db)
        )
        try:
            improvement = gain_improvement_at(curve, dl_curve, config.improvement_target_op)
        except CurveNotCrossedError:
            improvement = None

    return {
        "best_case_op": fmt_prob(bc_op),
        "op_at_reference": fmt_prob(outage_slots / total_slots if total_slots else None),
        "cod_gt_10s": fmt_prob(latency_exceedance(runs, total_time_s, 10.0)),
        "cod_gt_125ms": fmt_prob(latency_exceedance(runs, total_time_s, 0.125)),
        "switching_rate_per_s": fmt_rate(switches / switch_time_s if switch_time_s else None),
        "improvement_db_at_target_op": fmt_db(improvement),
    }


def _build_summary(report: AnalysisReport) -> dict:
    config = report.config

    def scoped(subject: str | None) -> dict:
        return {
            cls.value: {
                policy.value: _scope_stats(report, cls, policy, subject)
                for policy in config.ordered_policies
            }
            for cls in report.class_pairs
        }

    curves = {
        "outage": {
            curve.label: {
                "x_db": [fmt_db(x) for x in curve.sensitivities_db],
                "y": [fmt_prob(y) for y in curve.probabilities],
            }
            for curve in report.outage_curves.values()
        },
        "cod": {
            curve.label: {
                "sensitivity_db": fmt_db(curve.sensitivity_db),
                "x_s": [fmt_seconds(x) for x in curve.thresholds_s],
                "y": [fmt_prob(y) for y in curve.fractions],
            }
            for curve in report.cod_curves.values()
        },
    }

    return {
        "schema": SUMMARY_SCHEMA,
        "curves": curves,
        "config": {
            "subjects": list(report.subjects),
            "policies": [p.value for p in config.ordered_policies],
            "pairs": {
                cls.value: [f"{s}->{d}" for s, d in members]
                for cls, members in report.class_pairs.items()
            },
            "swc_threshold_db": fmt_db(config.swc_threshold_db),
            "impute_floor_db": fmt_db(config.impute_floor_db),
            "delta_ms": report.delta_ms,
            "sensitivity_sweep_db": [fmt_db(s) for s in config.sensitivity_sweep_db],
            "cod_sensitivities_db": [fmt_db(s) for s in config.cod_sensitivities_db],
            "reference_sensitivity_db": fmt_db(config.reference_sensitivity_db),
            "improvement_target_op": fmt_prob(config.improvement_target_op),
            "seed": config.seed,
        },
        "pooled": scoped(None),
        "per_subject": {subject: scoped(subject) for subject in sorted(set(report.subjects))},
    }


# -- writers ---------------------------------------------------------------------


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]", "_", name) or "_"


def _write_curve_csv(dest: IO[str], xs, ys, label: str, x_fmt: str) -> None:
    dest.write("x,y,label\n")
    for x, y in zip(xs, ys):
        dest.write(f"{x:{x_fmt}},{y:.4g},{label}\n")


def write_report(report: AnalysisReport, out_dir: Path) -> None:
    """Write curves, per-pair runs and summary.json under ``out_dir``."""
    out_dir = Path(out_dir)
    (out_dir / "curves").mkdir(parents=True, exist_ok=True)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)

    for (cls, policy), curve in report.outage_curves.items():
        path = out_dir / "curves" / f"outage_{policy}_{cls}.csv"
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            _write_curve_csv(
                fh, curve.sensitivities_db, curve.probabilities, curve.label, ".2f"
            )

    for (cls, policy, sens), curve in report.cod_curves.items():
        path = out_dir / "curves" / f"cod_{policy}_{cls}_{sens:g}dB.csv"
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            _write_curve_csv(fh, curve.thresholds_s, curve.fractions, curve.label, ".6g")

    for sens in report.config.cod_sensitivities_db:
        for result in report.results:
            ind = outage_indicator(result.combined.gains, sens)
            runs = outage_runs(ind, result.combined.delta_ms)
            name = (
                f"{result.policy}_{result.link_class}_{_sanitize(result.subject)}"
                f"_{result.pair_label}_{sens:g}dB.csv"
            )
            with (out_dir / "runs" / name).open("w", encoding="utf-8", newline="\n") as fh:
                fh.write("start_slot,length_slots,duration_s\n")
                for run in runs:
                    fh.write(f"{run.start_slot},{run.length_slots},{run.duration_s:.6g}\n")

    summary_path = out_dir / "summary.json"
    summary_path.write_text(
        json.dumps(report.summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


# -- switching-threshold sweep ----------------------------------------------------


@dataclass(frozen=True)
class ThresholdSweepRow:
    threshold_db: float
    outage_probability: float
    switching_rate_per_s: float


def run_threshold_sweep(
    config: AnalysisConfig,
    thresholds_db: Sequence[float],
    sensitivity_db: float | None = None,
) -> list[ThresholdSweepRow]:
    """Pooled SwC outage probability and switching rate per threshold.

    Rows come back in the given threshold order; the pool covers every
    selected pair of every subject.
    """
    config.validate()
    if Policy.SWC not in config.policies:
        raise ConfigurationError("threshold sweep needs the SwC policy enabled")
    thresholds = [float(t) for t in thresholds_db]
    if not thresholds:
        raise ConfigurationError("threshold list must not be empty")
    sens = config.reference_sensitivity_db if sensitivity_db is None else float(sensitivity_db)

    trace_sets = load_trace_sets(config)
    selected = select_pairs(
        list(config.pairs) if config.pairs is not None else None, config.link_class
    )
    branch_sets = [
        build_branches(ts, source, dest) for ts in trace_sets for source, dest in selected
    ]
    rows = []
    for threshold in thresholds:
        outage_slots = 0
        total_slots = 0
        switches = 0
        switch_time_s = 0.0
        for branches in branch_sets:
            combined = combine(branches, Policy.SWC, threshold)
            outage_slots += int(np.count_nonzero(outage_indicator(combined.gains, sens)))
            total_slots += combined.n_slots
            switches += count_switches(combined)
            if combined.n_slots >= 2:
                switch_time_s += (combined.n_slots - 1) * combined.delta_ms / 1000.0
        rows.append(
            ThresholdSweepRow(
                threshold,
                outage_slots / total_slots,
                switches / switch_time_s if switch_time_s else 0.0,
            )
        )
    return rows


def write_threshold_sweep(rows: Sequence[ThresholdSweepRow], dest: IO[str]) -> None:
    dest.write("threshold_db,outage_probability,switching_rate_per_s\n")
    for row in rows:
        dest.write(
            f"{row.threshold_db:.2f},{row.outage_probability:.4g},"
            f"{row.switching_rate_per_s:.4g}\n"
        )
