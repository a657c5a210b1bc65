"""Command line front end: analyze, synth, sweep-threshold.

Flags mirror the configuration file keys; a flag given on the command line
overrides the same key from ``--config``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .errors import WbandivError
from .report import (
    config_from_dict,
    load_config_file,
    run_analysis,
    run_threshold_sweep,
    write_report,
    write_threshold_sweep,
)
from .synth import generate_scenario, load_scenario
from .trace import write_record_csv


def _add_input_options(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--input",
        action="append",
        default=None,
        metavar="CSV",
        help="record CSV for one subject; repeat for several subjects",
    )
    sub.add_argument("--scenario", default=None, metavar="JSON", help="synthetic scenario spec")
    sub.add_argument("--seed", type=int, default=None, help="scenario seed override")
    sub.add_argument("--config", default=None, metavar="JSON", help="configuration file")
    sub.add_argument("--delta-ms", type=float, default=None, help="sampling period of input CSVs")
    sub.add_argument(
        "--impute-floor-db", type=float, default=None, help="gain substituted for lost packets"
    )
    sub.add_argument(
        "--pair",
        action="append",
        default=None,
        metavar="SRC:DST",
        help="explicit source:dest pair; repeat for several",
    )
    sub.add_argument(
        "--all",
        action="store_true",
        help="analyze every valid pair (default when no --pair is given)",
    )
    sub.add_argument(
        "--link-class",
        choices=["on_body", "off_body"],
        default=None,
        help="restrict the pair selection to one link class",
    )


def _config_data(args: argparse.Namespace) -> dict:
    data = load_config_file(Path(args.config)) if args.config else {}
    if args.input:
        data["inputs"] = args.input
        data.pop("scenario", None)
    if args.scenario:
        data["scenario"] = args.scenario
        data.pop("inputs", None)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.delta_ms is not None:
        data["delta_ms"] = args.delta_ms
    if args.impute_floor_db is not None:
        data["impute_floor_db"] = args.impute_floor_db
    if args.pair:
        data["pairs"] = args.pair
    elif args.all:
        data["pairs"] = None
    if args.link_class is not None:
        data["link_class"] = args.link_class
    return data


def _cmd_analyze(args: argparse.Namespace) -> int:
    data = _config_data(args)
    if args.policies is not None:
        data["policies"] = [s.strip() for s in args.policies.split(",") if s.strip()]
    if args.sweep_start is not None or args.sweep_stop is not None or args.sweep_step is not None:
        start = args.sweep_start if args.sweep_start is not None else -100.0
        stop = args.sweep_stop if args.sweep_stop is not None else -60.0
        step = args.sweep_step if args.sweep_step is not None else 1.0
        data["sensitivity_sweep_db"] = list(np.arange(start, stop + step / 2, step))
    if args.cod_sensitivity:
        data["cod_sensitivities_db"] = args.cod_sensitivity
    if args.swc_threshold_db is not None:
        data["swc_threshold_db"] = args.swc_threshold_db
    if args.improvement_target_op is not None:
        data["improvement_target_op"] = args.improvement_target_op
    config = config_from_dict(data)
    report = run_analysis(config)
    out_dir = Path(args.out)
    write_report(report, out_dir)
    print(f"wrote {out_dir / 'summary.json'}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    spec = load_scenario(Path(args.scenario))
    trace_set = generate_scenario(spec, args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_record_csv(trace_set, out)
    print(f"wrote {out} ({trace_set.n_links} links, {trace_set.n_slots} slots)")
    return 0


def _cmd_sweep_threshold(args: argparse.Namespace) -> int:
    data = _config_data(args)
    data.setdefault("policies", ["DL", "SC", "SwC"])
    config = config_from_dict(data)
    thresholds = [float(s) for s in args.thresholds.split(",") if s.strip()]
    rows = run_threshold_sweep(config, thresholds, args.sensitivity)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8", newline="\n") as fh:
            write_threshold_sweep(rows, fh)
        print(f"wrote {out}")
    else:
        write_threshold_sweep(rows, sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wbandiv",
        description=(
            "Trace-driven analysis of cooperative receive diversity (direct link, "
            "selection combining, switch-and-examine combining) over body-area-network "
            "channel-gain recordings."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run the outage analysis and write a report")
    _add_input_options(analyze)
    analyze.add_argument(
        "--policies", default=None, help="comma-separated subset of DL,SC,SwC (default: all)"
    )
    analyze.add_argument("--swc-threshold-db", type=float, default=None)
    analyze.add_argument("--sweep-start", type=float, default=None, help="sweep start in dB")
    analyze.add_argument("--sweep-stop", type=float, default=None, help="sweep stop in dB")
    analyze.add_argument("--sweep-step", type=float, default=None, help="sweep step in dB")
    analyze.add_argument(
        "--cod-sensitivity",
        action="append",
        type=float,
        default=None,
        metavar="DB",
        help="sensitivity for duration statistics; repeat for several",
    )
    analyze.add_argument("--improvement-target-op", type=float, default=None)
    analyze.add_argument("--out", required=True, metavar="DIR", help="report output directory")
    analyze.set_defaults(func=_cmd_analyze)

    synth = sub.add_parser("synth", help="generate a synthetic record CSV from a scenario")
    synth.add_argument("--scenario", required=True, metavar="JSON")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--out", required=True, metavar="CSV")
    synth.set_defaults(func=_cmd_synth)

    sweep = sub.add_parser(
        "sweep-threshold", help="table of outage probability and switching rate per threshold"
    )
    _add_input_options(sweep)
    sweep.add_argument(
        "--thresholds", required=True, help="comma-separated switching thresholds in dB"
    )
    sweep.add_argument(
        "--sensitivity", type=float, default=None, help="receive sensitivity for the outage column"
    )
    sweep.add_argument("--out", default=None, metavar="CSV", help="write the table here (default stdout)")
    sweep.set_defaults(func=_cmd_sweep_threshold)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (WbandivError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
