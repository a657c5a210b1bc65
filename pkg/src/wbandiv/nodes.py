"""Node topology: radio positions, roles, links and link classification.

The measurement topology is fixed: seven radios, three of which are
transceivers (and can therefore appear as transmitters or relays) and four
of which are receive-only. Nodes next to the bed (head and foot end) are
the off-body endpoints.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import RoleError, SchemaError


class Role(enum.Enum):
    TRANSCEIVER = "transceiver"
    RECEIVER = "receiver"


class Node(enum.Enum):
    """Radio positions, in canonical table order."""

    NTB_h = "NTB_h"  # next to bed, head end
    L_w = "L_w"      # left wrist
    H_f = "H_f"      # hip, front
    R_w = "R_w"      # right wrist
    H_b = "H_b"      # hip, back
    L_a = "L_a"      # left ankle
    NTB_f = "NTB_f"  # next to bed, foot end

    @property
    def role(self) -> Role:
        return Role.TRANSCEIVER if self in TRANSCEIVERS else Role.RECEIVER

    @property
    def is_transceiver(self) -> bool:
        return self in TRANSCEIVERS

    def __str__(self) -> str:
        return self.value


NODE_ORDER: tuple[Node, ...] = tuple(Node)
TRANSCEIVERS: tuple[Node, ...] = (Node.NTB_h, Node.L_w, Node.H_f)
OFF_BODY_NODES: frozenset[Node] = frozenset({Node.NTB_h, Node.NTB_f})


def node_from_label(label: str, line: int | None = None) -> Node:
    try:
        return Node(label.strip())
    except ValueError:
        raise SchemaError(f"unknown node label {label!r}", line=line) from None


class LinkClass(enum.Enum):
    ON_BODY = "on_body"
    OFF_BODY = "off_body"

    def __str__(self) -> str:
        return self.value


def classify_link(a: Node, b: Node) -> LinkClass:
    """A link is off-body iff either endpoint sits next to the bed."""
    if a in OFF_BODY_NODES or b in OFF_BODY_NODES:
        return LinkClass.OFF_BODY
    return LinkClass.ON_BODY


@dataclass(frozen=True, order=True)
class LinkKey:
    """A directed measured link. Only transceivers can transmit."""

    tx: Node
    rx: Node

    def __post_init__(self):
        if not self.tx.is_transceiver:
            raise RoleError(f"{self.tx} is receive-only and cannot transmit")
        if self.tx == self.rx:
            raise RoleError(f"self-link {self.tx}->{self.rx} is not measurable")

    @property
    def label(self) -> str:
        return f"{self.tx.value}->{self.rx.value}"

    @property
    def column(self) -> str:
        # grid CSV column form; node labels never contain '-'
        return f"{self.tx.value}-{self.rx.value}"

    def __str__(self) -> str:
        return self.label


def link_from_label(label: str) -> LinkKey:
    """Parse 'tx->rx' (also accepts the 'tx-rx' column form)."""
    if "->" in label:
        tx, _, rx = label.partition("->")
    elif "-" in label:
        tx, _, rx = label.partition("-")
    else:
        raise SchemaError(f"cannot parse link label {label!r}")
    return LinkKey(node_from_label(tx), node_from_label(rx))


# Every directed link the TDMA schedule can observe: each transceiver is
# heard by all six other radios.
MEASURABLE_LINKS: tuple[LinkKey, ...] = tuple(
    LinkKey(tx, rx) for tx in TRANSCEIVERS for rx in NODE_ORDER if rx != tx
)

# dict-order key so trace sets and reports iterate links deterministically
_LINK_SORT = {link: i for i, link in enumerate(MEASURABLE_LINKS)}


def link_sort_key(link: LinkKey) -> int:
    return _LINK_SORT[link]
