"""Cooperative receive-diversity analysis for body-area-network channel traces.

Ingests per-packet RSSI recordings (or generates seeded synthetic ones),
builds three diversity branches per source/destination pair (direct plus two
two-hop relay paths), applies direct-link, selection-combining and
switch-and-examine combining policies, and reports outage probability and
continuous-outage-duration statistics.
"""

from .branches import BranchSet, build_branches, enumerate_pairs, relays_for, two_hop_gain
from .combining import (
    BRANCH_NAMES,
    DEFAULT_SWC_THRESHOLD_DB,
    CombinedSeries,
    DirectLinkCombiner,
    Policy,
    SelectionCombiner,
    SwitchAndExamineCombiner,
    combine,
    combine_dl,
    combine_sc,
    combine_swc,
    switching_rate,
)
from .errors import (
    ConfigurationError,
    CurveNotCrossedError,
    EmptySelectionError,
    MissingLinkError,
    ParseError,
    RoleError,
    SchemaError,
    UndefinedMetricError,
    WbandivError,
)
from .metrics import (
    DEFAULT_COD_THRESHOLDS_S,
    DEFAULT_SENSITIVITY_SWEEP_DB,
    DurationCurve,
    OutageCurve,
    OutageRun,
    aggregate,
    best_case_op,
    cod_curve,
    gain_improvement_at,
    latency_exceedance,
    outage_curve,
    outage_indicator,
    outage_probability,
    outage_runs,
    pooled_outage_curve,
    sensitivity_at,
)
from .nodes import (
    MEASURABLE_LINKS,
    NODE_ORDER,
    TRANSCEIVERS,
    LinkClass,
    LinkKey,
    Node,
    classify_link,
    link_from_label,
)
from .report import AnalysisConfig, config_from_dict, run_analysis, run_threshold_sweep, write_report
from .synth import LinkModel, ScenarioSpec, generate_link, generate_scenario, load_scenario, save_scenario
from .trace import (
    ChannelTraceSet,
    Record,
    align_to_grid,
    gain_at,
    impute_missing,
    load_record_csv,
    parse_records,
    read_grid_csv,
    resolve_series,
    write_grid_csv,
    write_record_csv,
)

__version__ = "0.1.0"
