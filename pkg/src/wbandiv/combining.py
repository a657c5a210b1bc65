"""Receive-diversity combining policies over branch-gain series.

Three policies are provided as scikit-learn style estimators operating on an
(n_slots, 3) branch-gain matrix with columns (direct, relay1, relay2):

- :class:`DirectLinkCombiner`: no cooperation, always the direct branch.
- :class:`SelectionCombiner`: per slot, the branch with maximum gain.
- :class:`SwitchAndExamineCombiner`: stay on the current branch while its
  gain is at or above the switching threshold; otherwise examine the other
  branches in cyclic order and take the first acceptable one, falling back
  to the last branch unconditionally when none qualifies.

``transform`` returns the combined gain series, ``predict`` the selected
branch index per slot. Branch identity is tracked by index, never by
comparing gain values, so ties cannot corrupt the switching state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, ClassVar

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_branch_matrix
from .branches import BranchSet
from .errors import ConfigurationError, UndefinedMetricError

DEFAULT_SWC_THRESHOLD_DB = -86.0

BRANCH_NAMES = ("direct", "relay1", "relay2")


class Policy(enum.Enum):
    DL = "DL"
    SC = "SC"
    SWC = "SwC"

    def __str__(self) -> str:
        return self.value


def _as_branch_index(value) -> int:
    if isinstance(value, str):
        try:
            return BRANCH_NAMES.index(value)
        except ValueError:
            raise ConfigurationError(
                f"unknown branch {value!r}, expected one of {BRANCH_NAMES}"
            ) from None
    idx = int(value)
    if idx not in (0, 1, 2):
        raise ConfigurationError(f"branch index must be 0, 1 or 2, got {value!r}")
    return idx


@dataclass(frozen=True, eq=False)
class CombinedSeries:
    """Output of a combining policy: per-slot gain plus selected branch."""

    gains: np.ndarray
    branch_ids: np.ndarray
    policy: Policy
    delta_ms: float
    threshold_db: float | None = None

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=np.float64)
        ids = np.asarray(self.branch_ids, dtype=np.int64)
        if gains.ndim != 1 or ids.shape != gains.shape:
            raise ValueError("gains and branch_ids must be equal-length 1-D arrays")
        if ids.size and (ids.min() < 0 or ids.max() > 2):
            raise ValueError("branch ids must lie in {0, 1, 2}")
        if (self.policy is Policy.SWC) != (self.threshold_db is not None):
            raise ValueError("threshold_db is required for SwC and only for SwC")
        gains.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "gains", gains)
        object.__setattr__(self, "branch_ids", ids)

    @property
    def n_slots(self) -> int:
        return len(self.gains)

    @property
    def duration_s(self) -> float:
        return self.n_slots * self.delta_ms / 1000.0

    def to_csv(self, dest: Path | IO[str]) -> None:
        if isinstance(dest, Path):
            with dest.open("w", encoding="utf-8", newline="\n") as fh:
                self.to_csv(fh)
            return
        dest.write("slot,gain_db,branch\n")
        for slot in range(self.n_slots):
            dest.write(
                f"{slot},{self.gains[slot]:.2f},{BRANCH_NAMES[self.branch_ids[slot]]}\n"
            )


class _BaseCombiner(TransformerMixin, BaseEstimator):
    """Shared estimator plumbing; subclasses implement ``_combine``."""

    policy: ClassVar[Policy]

    def fit(self, X, y=None):
        X = check_branch_matrix(X)
        self._check_params()
        self.n_features_in_ = X.shape[1]
        return self

    def _check_params(self):
        pass

    def _combine(self, X) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def transform(self, X) -> np.ndarray:
        """Combined gain series for a branch matrix, shape (n_slots,)."""
        check_is_fitted(self)
        return self._combine(check_branch_matrix(X))[0]

    def predict(self, X) -> np.ndarray:
        """Selected branch index per slot (0 direct, 1 relay1, 2 relay2)."""
        check_is_fitted(self)
        return self._combine(check_branch_matrix(X))[1]


class DirectLinkCombiner(_BaseCombiner):
    """Non-cooperative baseline: the direct branch, always."""

    policy = Policy.DL

    def _combine(self, X):
        n = X.shape[0]
        return X[:, 0].copy(), np.zeros(n, dtype=np.int64)


class SelectionCombiner(_BaseCombiner):
    """Per-slot maximum over the three branches.

    Ties break toward the lowest branch index (direct, then relay1), so the
    selected-branch record is reproducible; the output gain is unaffected.
    """

    policy = Policy.SC

    def _combine(self, X):
        ids = np.argmax(X, axis=1)
        return X[np.arange(X.shape[0]), ids], ids


def _next_branch(current: int, above: tuple[bool, bool, bool]) -> int:
    # examine in cyclic order starting from the current branch; if nothing
    # is above threshold the last branch is chosen unconditionally
    if above[current]:
        return current
    if above[(current + 1) % 3]:
        return (current + 1) % 3
    if above[(current + 2) % 3]:
        return (current + 2) % 3
    return 2


_SWC_TRANSITIONS = tuple(
    tuple(_next_branch(b, (bool(p & 1), bool(p & 2), bool(p & 4))) for p in range(8))
    for b in range(3)
)


class SwitchAndExamineCombiner(_BaseCombiner):
    """Threshold-driven switching with cyclic examination.

    Parameters
    ----------
    threshold_db : switching threshold; the current branch is kept while its
        gain is >= this value.
    initial_branch : branch assumed current before the first slot (the
        normal rule is applied at slot 0, so a below-threshold start is
        examined immediately).
    """

    policy = Policy.SWC

    def __init__(self, threshold_db=DEFAULT_SWC_THRESHOLD_DB, initial_branch=0):
        self.threshold_db = threshold_db
        self.initial_branch = initial_branch

    def _check_params(self):
        if not math.isfinite(float(self.threshold_db)):
            raise ConfigurationError(f"threshold_db must be finite, got {self.threshold_db}")
        _as_branch_index(self.initial_branch)

    def _combine(self, X):
        self._check_params()
        above = X >= float(self.threshold_db)
        # pattern per slot in 0..7, bit k set iff branch k is above threshold
        patterns = (above[:, 0] + 2 * above[:, 1] + 4 * above[:, 2]).tolist()
        ids = np.empty(len(patterns), dtype=np.int64)
        b = _as_branch_index(self.initial_branch)
        trans = _SWC_TRANSITIONS
        for t, p in enumerate(patterns):
            b = trans[b][p]
            ids[t] = b
        return X[np.arange(X.shape[0]), ids], ids


def _combined_from(branches: BranchSet, est: _BaseCombiner, threshold_db=None) -> CombinedSeries:
    X = branches.matrix()
    gains, ids = est.fit(X)._combine(X)
    return CombinedSeries(gains, ids, est.policy, branches.delta_ms, threshold_db)


def combine_dl(branches: BranchSet) -> CombinedSeries:
    """Direct-link series for a pair (relay branches ignored)."""
    return _combined_from(branches, DirectLinkCombiner())


def combine_sc(branches: BranchSet) -> CombinedSeries:
    """Selection-combined series for a pair."""
    return _combined_from(branches, SelectionCombiner())


def combine_swc(
    branches: BranchSet, threshold_db: float = DEFAULT_SWC_THRESHOLD_DB
) -> CombinedSeries:
    """Switch-and-examine combined series for a pair."""
    est = SwitchAndExamineCombiner(threshold_db=threshold_db)
    return _combined_from(branches, est, threshold_db=float(threshold_db))


def combine(
    branches: BranchSet,
    policy: Policy,
    swc_threshold_db: float = DEFAULT_SWC_THRESHOLD_DB,
) -> CombinedSeries:
    """Apply one policy to a branch set."""
    if policy is Policy.DL:
        return combine_dl(branches)
    if policy is Policy.SC:
        return combine_sc(branches)
    if policy is Policy.SWC:
        return combine_swc(branches, swc_threshold_db)
    raise ConfigurationError(f"unknown policy {policy!r}")


def count_switches(combined: CombinedSeries) -> int:
    ids = combined.branch_ids
    return int(np.count_nonzero(ids[1:] != ids[:-1]))


def switching_rate(combined: CombinedSeries) -> float:
    """Branch switches per second over the series."""
    n = combined.n_slots
    if n < 2:
        raise UndefinedMetricError(
            f"switching rate needs at least 2 slots, got {n}"
        )
    elapsed_s = (n - 1) * combined.delta_ms / 1000.0
    return count_switches(combined) / elapsed_s
