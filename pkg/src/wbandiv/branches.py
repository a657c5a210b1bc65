"""Diversity-branch construction for one source -> destination pair.

Each pair gets three branches: the direct link, and one two-hop path via
each of the two transceivers that are not the source. A relayed branch is
only as good as its weaker hop, so its gain is the minimum of the two hop
gains.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import EmptySelectionError, MissingLinkError, RoleError
from .nodes import NODE_ORDER, TRANSCEIVERS, LinkClass, Node, classify_link
from .trace import ChannelTraceSet, resolve_series


def two_hop_gain(h_first, h_second):
    """Composite gain of a relayed branch: min of the two hop gains.

    Accepts scalars or equal-length arrays.
    """
    return np.minimum(h_first, h_second)


def relays_for(source: Node) -> tuple[Node, Node]:
    """The two transceivers other than the source, in table order."""
    if not source.is_transceiver:
        raise RoleError(f"source {source} is receive-only and cannot transmit")
    r1, r2 = (n for n in TRANSCEIVERS if n != source)
    return r1, r2


@dataclass(frozen=True)
class BranchSet:
    """The three branch gain series for one pair, all dense and equal length."""

    source: Node
    dest: Node
    relay1: Node
    relay2: Node
    h_sd: np.ndarray
    h_sr1d: np.ndarray
    h_sr2d: np.ndarray
    delta_ms: float

    def __post_init__(self):
        n = len(self.h_sd)
        for name in ("h_sd", "h_sr1d", "h_sr2d"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.ndim != 1 or len(arr) != n:
                raise ValueError("branch series must be 1-D and equal length")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_slots(self) -> int:
        return len(self.h_sd)

    @property
    def link_class(self) -> LinkClass:
        return classify_link(self.source, self.dest)

    def matrix(self) -> np.ndarray:
        """Branch gains as an (n_slots, 3) matrix: direct, relay1, relay2."""
        return np.column_stack([self.h_sd, self.h_sr1d, self.h_sr2d])


def build_branches(trace_set: ChannelTraceSet, source: Node, dest: Node) -> BranchSet:
    """Assemble the direct and both relayed branch series for one pair.

    Hop gains are resolved with reciprocity fallback; the trace set must be
    dense (imputed) first. The destination cannot be one of the relays, so
    with three transceivers the destination must be a receive-only node or
    the construction fails on the relay self-hop.
    """
    relay1, relay2 = relays_for(source)
    if dest == source:
        raise RoleError(f"source and destination are both {source}")
    if dest in (relay1, relay2):
        raise MissingLinkError(
            f"destination {dest} is one of the relays for source {source}; "
            "a three-branch set needs two relays distinct from the destination"
        )
    if not trace_set.is_dense:
        raise ValueError("trace set has missing samples; run impute_missing first")
    h_sd = resolve_series(trace_set, source, dest)
    h_sr1d = two_hop_gain(
        resolve_series(trace_set, source, relay1), resolve_series(trace_set, relay1, dest)
    )
    h_sr2d = two_hop_gain(
        resolve_series(trace_set, source, relay2), resolve_series(trace_set, relay2, dest)
    )
    return BranchSet(source, dest, relay1, relay2, h_sd, h_sr1d, h_sr2d, trace_set.delta_ms)


def enumerate_pairs(link_class: LinkClass | None = None) -> Iterator[tuple[Node, Node]]:
    """All analyzable (source, dest) pairs, optionally filtered by link class.

    Sources are the three transceivers. Destinations are restricted to the
    receive-only nodes: a transceiver destination would have to double as a
    relay, which a three-branch set cannot express.
    """
    for source in TRANSCEIVERS:
        for dest in NODE_ORDER:
            if dest == source or dest.is_transceiver:
                continue
            if link_class is not None and classify_link(source, dest) != link_class:
                continue
            yield source, dest


def select_pairs(
    pairs: list[tuple[Node, Node]] | None,
    link_class: LinkClass | None = None,
) -> list[tuple[Node, Node]]:
    """Resolve an explicit pair list (or None for all) to a non-empty selection."""
    if pairs is None:
        selected = list(enumerate_pairs(link_class))
    else:
        analyzable = set(enumerate_pairs())
        bad = [(s, d) for s, d in pairs if (s, d) not in analyzable]
        if bad:
            listing = ", ".join(f"{s}:{d}" for s, d in enumerate_pairs())
            named = ", ".join(f"{s}:{d}" for s, d in bad)
            raise EmptySelectionError(
                f"unresolvable pair(s) {named}; valid pairs: {listing}"
            )
        selected = [
            (s, d)
            for s, d in pairs
            if link_class is None or classify_link(s, d) == link_class
        ]
    if not selected:
        valid = ", ".join(f"{s}:{d}" for s, d in enumerate_pairs(link_class))
        raise EmptySelectionError(
            f"no analyzable (source, dest) pairs selected; valid pairs: {valid}"
        )
    return selected
