import numpy as np
import pytest

from wbandiv.branches import BranchSet
from wbandiv.nodes import Node, link_from_label
from wbandiv.trace import ChannelTraceSet

SAMPLE_CSV = """time_ms,tx,rx,rssi_dbm
# decoded packets for two grid slots plus one loss
0,H_f,L_a,-72.5
15,H_f,L_a,-73.5
45,H_f,L_a,-80
0,H_f,NTB_h,-60
45,H_f,NTB_h,-61
0,NTB_h,L_a,-65
45,NTB_h,L_a,-66
0,H_f,L_w,-55
45,H_f,L_w,-56
0,L_w,L_a,-70
45,L_w,L_a,-71
"""


@pytest.fixture
def sample_csv() -> str:
    return SAMPLE_CSV


def make_trace_set(series: dict[str, list], delta_ms: float = 15.0, subject: str = "") -> ChannelTraceSet:
    """Build a trace set from {'H_f->L_a': [...], ...} link-label series."""
    traces = {link_from_label(label): np.asarray(vals, dtype=float) for label, vals in series.items()}
    n = len(next(iter(traces.values())))
    return ChannelTraceSet(delta_ms, traces, n, subject)


def make_branches(h_sd, h_sr1d, h_sr2d, delta_ms: float = 15.0) -> BranchSet:
    """Branch set for the H_f -> L_a pair (relays NTB_h, L_w) with given series."""
    return BranchSet(
        Node.H_f,
        Node.L_a,
        Node.NTB_h,
        Node.L_w,
        np.asarray(h_sd, dtype=float),
        np.asarray(h_sr1d, dtype=float),
        np.asarray(h_sr2d, dtype=float),
        delta_ms,
    )


def full_trace_set(pair_series: dict[str, list], fill: float = -60.0, delta_ms: float = 15.0,
                   subject: str = "") -> ChannelTraceSet:
    """Trace set covering every measurable link: given series plus a constant fill."""
    from wbandiv.nodes import MEASURABLE_LINKS

    n = len(next(iter(pair_series.values())))
    data = {link.label: np.full(n, fill) for link in MEASURABLE_LINKS}
    for label, vals in pair_series.items():
        data[link_from_label(label).label] = np.asarray(vals, dtype=float)
    return make_trace_set(data, delta_ms, subject)
