"""Outage statistics: probability curves, run lengths, duration exceedance.

A slot is in outage when its gain falls strictly below the receive
sensitivity; a run is a maximal stretch of consecutive outage slots.
Duration-exceedance curves report the fraction of total observed time spent
inside runs longer than a threshold, so the value at threshold 0 equals the
outage probability at the same sensitivity.

Pooling across pairs and subjects is time weighted (slot counts are summed
before dividing) and runs never span pair or subject boundaries, since the
underlying traces are distinct physical channels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._validation import check_gain_series, check_probability, check_sweep
from .branches import build_branches, select_pairs
from .combining import CombinedSeries, Policy, combine, DEFAULT_SWC_THRESHOLD_DB
from .errors import (
    ConfigurationError,
    CurveNotCrossedError,
    EmptySelectionError,
    UndefinedMetricError,
)
from .nodes import LinkClass, Node
from .trace import ChannelTraceSet

DEFAULT_SENSITIVITY_SWEEP_DB = np.arange(-100.0, -59.0, 1.0)
DEFAULT_COD_THRESHOLDS_S = np.logspace(np.log10(0.015), 3.0, 50)


# -- curves -------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class OutageCurve:
    """Outage probability versus receive sensitivity."""

    sensitivities_db: np.ndarray
    probabilities: np.ndarray
    label: str = ""

    def __post_init__(self):
        sens = check_sweep(self.sensitivities_db, name="sensitivities")
        probs = np.asarray(self.probabilities, dtype=np.float64)
        if probs.shape != sens.shape:
            raise ValueError("sensitivities and probabilities must have equal length")
        if probs.size:
            if probs.min() < 0.0 or probs.max() > 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
            if np.any(np.diff(probs) < 0):
                raise ValueError("outage probability cannot decrease with sensitivity")
        sens.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "sensitivities_db", sens)
        object.__setattr__(self, "probabilities", probs)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.sensitivities_db.tolist(), self.probabilities.tolist()))


@dataclass(frozen=True, eq=False)
class DurationCurve:
    """Fraction of time inside outage runs longer than each threshold."""

    thresholds_s: np.ndarray
    fractions: np.ndarray
    sensitivity_db: float | None = None
    label: str = ""

    def __post_init__(self):
        thr = check_sweep(self.thresholds_s, name="duration thresholds")
        frac = np.asarray(self.fractions, dtype=np.float64)
        if frac.shape != thr.shape:
            raise ValueError("thresholds and fractions must have equal length")
        if frac.size:
            if frac.min() < 0.0 or frac.max() > 1.0:
                raise ValueError("fractions must lie in [0, 1]")
            if np.any(np.diff(frac) > 0):
                raise ValueError("time fraction cannot increase with the duration threshold")
        thr.setflags(write=False)
        frac.setflags(write=False)
        object.__setattr__(self, "thresholds_s", thr)
        object.__setattr__(self, "fractions", frac)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.thresholds_s.tolist(), self.fractions.tolist()))


# -- outage indicators and probability ---------------------------------------


def outage_indicator(series, sensitivity_db: float) -> np.ndarray:
    """Boolean outage mask: gain strictly below the sensitivity.

    A slot whose gain equals the sensitivity exactly is decodable.
    """
    series = check_gain_series(series)
    return series < float(sensitivity_db)


def outage_probability(series, sensitivity_db: float) -> float:
    series = check_gain_series(series)
    if series.size == 0:
        raise UndefinedMetricError("outage probability is undefined on an empty series")
    return float(np.count_nonzero(series < float(sensitivity_db))) / series.size


def _pooled_counts(gain_arrays: Sequence[np.ndarray], sweep: np.ndarray) -> tuple[np.ndarray, int]:
    counts = np.zeros(len(sweep), dtype=np.int64)
    total = 0
    for arr in gain_arrays:
        arr = check_gain_series(arr)
        counts += np.searchsorted(np.sort(arr), sweep, side="left")
        total += arr.size
    return counts, total


def pooled_outage_curve(
    gain_arrays: Sequence[np.ndarray], sweep=None, label: str = ""
) -> OutageCurve:
    """Time-weighted outage curve over several gain series (pairs, subjects)."""
    sweep = check_sweep(sweep if sweep is not None else DEFAULT_SENSITIVITY_SWEEP_DB)
    counts, total = _pooled_counts(gain_arrays, sweep)
    if total == 0:
        raise UndefinedMetricError("outage curve is undefined without any slots")
    return OutageCurve(sweep, counts / total, label)


def outage_curve(series, sweep=None, label: str = "") -> OutageCurve:
    """Outage probability at each sensitivity of a strictly increasing sweep."""
    return pooled_outage_curve([series], sweep, label)


# -- sensitivity crossings ----------------------------------------------------


def sensitivity_at(curve: OutageCurve, p: float) -> float:
    """Leftmost sensitivity where the linearly interpolated curve reaches p."""
    p = check_probability(p, name="target outage probability")
    y = curve.probabilities
    x = curve.sensitivities_db
    if y.size == 0 or p < y[0] or p > y[-1]:
        raise CurveNotCrossedError(
            f"curve {curve.label or '<unlabeled>'} does not cross outage probability {p} "
            f"within its sweep"
        )
    j = int(np.searchsorted(y, p, side="left"))
    if j == 0:
        return float(x[0])
    # y[j-1] < p <= y[j], so the segment has positive rise
    return float(x[j - 1] + (p - y[j - 1]) * (x[j] - x[j - 1]) / (y[j] - y[j - 1]))


def gain_improvement_at(curve_a: OutageCurve, curve_b: OutageCurve, p: float) -> float:
    """Sensitivity margin between two curves at a target outage probability.

    Returns ``s_a(p) - s_b(p)``; positive when curve_a keeps the target out
    to a higher (more tolerant) sensitivity than curve_b, e.g. a cooperative
    policy as curve_a versus the direct link as curve_b.
    """
    return sensitivity_at(curve_a, p) - sensitivity_at(curve_b, p)


# -- runs and duration statistics ----------------------------------------------


@dataclass(frozen=True)
class OutageRun:
    """A maximal stretch of consecutive outage slots."""

    start_slot: int
    length_slots: int
    delta_ms: float

    def __post_init__(self):
        if self.length_slots < 1:
            raise ValueError("a run has at least one slot")

    @property
    def duration_s(self) -> float:
        return self.length_slots * self.delta_ms / 1000.0


def outage_runs(indicator, delta_ms: float) -> list[OutageRun]:
    """Maximal true-runs of an outage mask; boundary runs count as observed."""
    ind = np.asarray(indicator, dtype=bool)
    if ind.ndim != 1:
        raise ValueError("indicator must be 1-dimensional")
    edges = np.diff(np.concatenate(([0], ind.astype(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return [
        OutageRun(int(s), int(e - s), delta_ms) for s, e in zip(starts, ends)
    ]


def _run_delta(runs: Sequence[OutageRun]) -> float | None:
    deltas = {r.delta_ms for r in runs}
    if len(deltas) > 1:
        raise ValueError(f"runs mix sample periods: {sorted(deltas)}")
    return deltas.pop() if deltas else None


def _exceedance_fraction(
    lengths: np.ndarray, delta_ms: float | None, total_time_s: float, threshold_s: float
) -> float:
    if lengths.size == 0:
        return 0.0
    selected = int(lengths[lengths * delta_ms > threshold_s * 1000.0].sum())
    if selected == 0:
        return 0.0
    # divide slot counts directly whenever the total time is grid aligned,
    # keeping the fraction-at-zero identical to the outage probability
    n_slots = total_time_s * 1000.0 / delta_ms
    n_round = round(n_slots)
    if n_round > 0 and abs(n_slots - n_round) < 1e-6:
        return selected / n_round
    return (selected * delta_ms / 1000.0) / total_time_s


def cod_curve(
    runs: Sequence[OutageRun],
    total_time_s: float,
    thresholds_s=None,
    sensitivity_db: float | None = None,
    label: str = "",
) -> DurationCurve:
    """Duration-exceedance curve from pooled runs over a total observed time."""
    if total_time_s <= 0:
        raise ConfigurationError(f"total_time_s must be positive, got {total_time_s}")
    thresholds = check_sweep(
        thresholds_s if thresholds_s is not None else DEFAULT_COD_THRESHOLDS_S,
        name="duration thresholds",
    )
    delta = _run_delta(runs)
    lengths = np.array([r.length_slots for r in runs], dtype=np.int64)
    fractions = np.array(
        [_exceedance_fraction(lengths, delta, total_time_s, x) for x in thresholds]
    )
    return DurationCurve(thresholds, fractions, sensitivity_db, label)


def latency_exceedance(
    runs: Sequence[OutageRun], total_time_s: float, latency_s: float = 0.125
) -> float:
    """Fraction of time inside outages longer than a latency requirement."""
    if total_time_s <= 0:
        raise ConfigurationError(f"total_time_s must be positive, got {total_time_s}")
    lengths = np.array([r.length_slots for r in runs], dtype=np.int64)
    return _exceedance_fraction(lengths, _run_delta(runs), total_time_s, latency_s)


# -- pooled analysis -----------------------------------------------------------


@dataclass(frozen=True)
class PairOutage:
    """Outage accounting for one (subject, source, dest) series."""

    subject: str
    source: Node
    dest: Node
    n_slots: int
    outage_slots: int
    runs: tuple[OutageRun, ...]


@dataclass(frozen=True)
class PooledOutage:
    """Time-weighted pool of per-pair outage statistics."""

    policy: Policy
    link_class: LinkClass | None
    sensitivity_db: float
    delta_ms: float
    pairs: tuple[PairOutage, ...]

    @property
    def total_slots(self) -> int:
        return sum(p.n_slots for p in self.pairs)

    @property
    def outage_slots(self) -> int:
        return sum(p.outage_slots for p in self.pairs)

    @property
    def op(self) -> float:
        if self.total_slots == 0:
            raise UndefinedMetricError("pooled outage probability needs at least one slot")
        return self.outage_slots / self.total_slots

    @property
    def total_time_s(self) -> float:
        return self.total_slots * self.delta_ms / 1000.0

    @property
    def runs(self) -> tuple[OutageRun, ...]:
        return tuple(r for p in self.pairs for r in p.runs)


def pair_outage(
    subject: str, source: Node, dest: Node, combined: CombinedSeries, sensitivity_db: float
) -> PairOutage:
    ind = outage_indicator(combined.gains, sensitivity_db)
    runs = tuple(outage_runs(ind, combined.delta_ms))
    return PairOutage(
        subject, source, dest, combined.n_slots, int(np.count_nonzero(ind)), runs
    )


def aggregate(
    trace_sets: Iterable[ChannelTraceSet],
    policy: Policy,
    link_class: LinkClass | None,
    sensitivity_db: float,
    swc_threshold_db: float = DEFAULT_SWC_THRESHOLD_DB,
    pairs: list[tuple[Node, Node]] | None = None,
) -> PooledOutage:
    """Pool one policy over every matching pair of every subject trace set.

    Outage probability is time weighted (summed outage slots over summed
    slots); runs are concatenated without spanning pair boundaries.
    """
    trace_sets = list(trace_sets)
    if not trace_sets:
        raise EmptySelectionError("no trace sets supplied")
    deltas = {ts.delta_ms for ts in trace_sets}
    if len(deltas) > 1:
        raise ValueError(f"trace sets mix sample periods: {sorted(deltas)}")
    selected = select_pairs(pairs, link_class)
    per_pair = []
    for ts in trace_sets:
        for source, dest in selected:
            combined = combine(build_branches(ts, source, dest), policy, swc_threshold_db)
            per_pair.append(pair_outage(ts.subject, source, dest, combined, sensitivity_db))
    return PooledOutage(policy, link_class, sensitivity_db, deltas.pop(), tuple(per_pair))


def best_case_op(curve: OutageCurve) -> float:
    """Outage probability at the -100 dB sweep floor (lost packets dominate)."""
    idx = np.flatnonzero(np.isclose(curve.sensitivities_db, -100.0, rtol=0.0, atol=1e-9))
    if idx.size == 0:
        raise ConfigurationError(
            "best-case outage probability needs -100 dB in the sensitivity sweep"
        )
    return float(curve.probabilities[idx[0]])
