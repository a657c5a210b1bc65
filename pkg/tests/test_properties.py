"""Property-based checks of the core invariants."""

import numpy as np
from hypothesis import given, settings, strategies as st

from conftest import make_branches, make_trace_set
from swc_reference import true_cases
from wbandiv.combining import (
    combine_dl,
    combine_sc,
    combine_swc,
)
from wbandiv.metrics import cod_curve, outage_curve, outage_probability, outage_runs
from wbandiv.trace import align_to_grid, impute_missing, parse_records, record_csv_text
from wbandiv.branches import two_hop_gain

gain = st.floats(min_value=-110.0, max_value=0.0, allow_nan=False)
threshold = st.floats(min_value=-110.0, max_value=0.0, allow_nan=False)


@st.composite
def branch_matrices(draw, min_slots=1, max_slots=60):
    n = draw(st.integers(min_slots, max_slots))
    cols = [draw(st.lists(gain, min_size=n, max_size=n)) for _ in range(3)]
    return make_branches(*cols)


@given(branch_matrices())
def test_sc_is_pointwise_max_and_member(bs):
    cs = combine_sc(bs)
    X = bs.matrix()
    np.testing.assert_array_equal(cs.gains, X.max(axis=1))
    np.testing.assert_array_equal(cs.gains, X[np.arange(len(X)), cs.branch_ids])


@given(branch_matrices(), threshold)
def test_swc_and_dl_never_beat_sc(bs, t):
    sc = combine_sc(bs).gains
    assert (combine_dl(bs).gains <= sc).all()
    assert (combine_swc(bs, t).gains <= sc).all()


@given(branch_matrices(), threshold)
def test_swc_gain_matches_recorded_branch(bs, t):
    cs = combine_swc(bs, t)
    X = bs.matrix()
    np.testing.assert_array_equal(cs.gains, X[np.arange(len(X)), cs.branch_ids])


@given(branch_matrices(), threshold)
def test_swc_follows_reference_definition_stepwise(bs, t):
    ids = combine_swc(bs, t).branch_ids
    above = bs.matrix() >= t
    prev = 0
    for step, chosen in enumerate(ids.tolist()):
        cases = true_cases(prev, tuple(bool(b) for b in above[step]))
        assert chosen in cases
        if len(cases) > 1:
            assert chosen == prev
        prev = chosen


@given(gain, gain)
def test_two_hop_gain_properties(a, b):
    assert two_hop_gain(a, b) == two_hop_gain(b, a)
    assert two_hop_gain(a, a) == a
    assert two_hop_gain(a, b) <= a
    assert two_hop_gain(a, b) <= b


@given(st.lists(st.one_of(st.none(), gain), min_size=1, max_size=50))
def test_imputation_only_touches_missing(raw):
    values = [np.nan if v is None else v for v in raw]
    ts = make_trace_set({"H_f->L_a": values})
    out = impute_missing(ts, -102.0)
    src = ts.traces[ts.links[0]]
    dst = out.traces[out.links[0]]
    assert out.n_slots == ts.n_slots
    assert not np.isnan(dst).any()
    for s, d in zip(src, dst):
        assert d == (-102.0 if np.isnan(s) else s)


@given(st.lists(st.booleans(), min_size=0, max_size=200))
def test_run_lengths_account_for_every_outage_slot(bits):
    ind = np.array(bits, dtype=bool)
    runs = outage_runs(ind, 15.0)
    assert sum(r.length_slots for r in runs) == int(ind.sum())
    for r in runs:
        assert ind[r.start_slot : r.start_slot + r.length_slots].all()
        if r.start_slot > 0:
            assert not ind[r.start_slot - 1]
        end = r.start_slot + r.length_slots
        if end < len(ind):
            assert not ind[end]


@given(st.lists(gain, min_size=1, max_size=120))
def test_outage_curve_monotone_and_cod_consistent(values):
    series = np.array(values)
    curve = outage_curve(series, np.arange(-105.0, -59.0, 2.5))
    assert (np.diff(curve.probabilities) >= 0).all()

    sens = -86.0
    ind = series < sens
    runs = outage_runs(ind, 15.0)
    total_time_s = len(series) * 15.0 / 1000.0
    dur = cod_curve(runs, total_time_s, [0.0, 0.015, 0.15, 1.5])
    assert (np.diff(dur.fractions) <= 0).all()
    assert dur.fractions[0] == outage_probability(series, sens)


@st.composite
def sparse_record_sets(draw):
    n_slots = draw(st.integers(1, 12))
    links = draw(
        st.lists(
            st.sampled_from(["H_f->L_a", "NTB_h->R_w", "L_w->H_b"]),
            min_size=1,
            max_size=3,
            unique=True,
        )
    )
    series = {}
    for label in links:
        vals = [draw(st.one_of(st.none(), gain)) for _ in range(n_slots)]
        if all(v is None for v in vals):
            # a link only appears in an aligned set if at least one of its
            # packets decoded, so all-missing links cannot occur
            vals[draw(st.integers(0, n_slots - 1))] = draw(gain)
        series[label] = vals
    # the grid length is defined by the latest record, so force one
    series[links[0]][-1] = draw(gain)
    return {k: [np.nan if v is None else v for v in vals] for k, vals in series.items()}


@settings(max_examples=50)
@given(sparse_record_sets())
def test_record_serialization_round_trips(series):
    ts = make_trace_set(series)
    again = align_to_grid(parse_records(record_csv_text(ts)))
    assert again == ts


@given(st.lists(gain, min_size=1, max_size=60), st.lists(gain, min_size=1, max_size=60), threshold)
def test_composed_branch_outage_dominates_either_hop(first, second, sens):
    n = min(len(first), len(second))
    a, b = np.array(first[:n]), np.array(second[:n])
    composed = two_hop_gain(a, b)
    op = outage_probability(composed, sens)
    assert op >= outage_probability(a, sens)
    assert op >= outage_probability(b, sens)


@given(branch_matrices(min_slots=2), threshold)
def test_extreme_thresholds(bs, t):
    never = combine_swc(bs, -1e9)  # everything acceptable: stay put
    assert (never.branch_ids == 0).all()
    always = combine_swc(bs, 1e9)  # nothing acceptable: locked fallback
    assert (always.branch_ids == 2).all()
