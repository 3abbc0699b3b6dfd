"""
Command-line entry point: ``morphwing <subcommand> [options]``.

Every subcommand reads JSON/CSV, calls the matching library operation and
writes its result atomically to ``--out`` (stdout when omitted). Failures
print a one-line JSON error object on stderr and exit with status 1; bad
usage exits with status 2.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import aero, controller, crm, flightlog, linkage
from ._io import csv_text, dumps_json, load_json, write_atomic
from .errors import MorphwingError

SEED_ENV = "MORPHWING_SEED"


@dataclass
class ProjectConfig:
    linkage: Optional[linkage.LinkageGiven] = None
    derived: Optional[linkage.LinkageDerived] = None
    crm: Optional[crm.CrmConfig] = None
    wrist_mount_deg: float = 0.0
    controller: controller.ControllerConfig = field(default_factory=controller.ControllerConfig)
    pipeline: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def load(cls, path) -> "ProjectConfig":
        doc = load_json(path)
        cfg = cls(base_dir=Path(path).resolve().parent)
        # a bare linkage document (l_h, ..., derived) is accepted as well
        link_doc = doc.get("linkage", doc if "l_h" in doc else None)
        if link_doc is not None:
            cfg.linkage = linkage.LinkageGiven.from_dict(link_doc)
            if "derived" in link_doc:
                cfg.derived = linkage.LinkageDerived.from_dict(link_doc["derived"])
        if "derived" in doc and cfg.derived is None:
            cfg.derived = linkage.LinkageDerived.from_dict(doc["derived"])
        if "crm" in doc:
            cfg.crm = crm.CrmConfig.from_dict(doc["crm"])
        cfg.wrist_mount_deg = float(doc.get("wrist_mount_deg", 0.0))
        if "controller" in doc:
            cfg.controller = controller.ControllerConfig(**doc["controller"])
        cfg.pipeline = dict(doc.get("pipeline", {}))
        return cfg

    def require_linkage(self) -> linkage.LinkageGiven:
        if self.linkage is None:
            raise MorphwingError("config has no linkage section")
        return self.linkage

    def lengths(self) -> linkage.LinkageDerived:
        if self.derived is None:
            self.derived = linkage.synthesize_linkage(self.require_linkage(), seed=_seed())
        return self.derived


def _seed() -> int:
    value = os.environ.get(SEED_ENV)
    return int(value) if value else 0


def _project(args) -> ProjectConfig:
    if args.config is None:
        return ProjectConfig()
    return ProjectConfig.load(args.config)


def _emit(args, text: str) -> None:
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)


def _resolve(base: Path, name: str) -> Path:
    p = Path(name)
    return p if p.is_absolute() else base / p


# ---------------------------------------------------------------- commands


def cmd_synthesize(args) -> None:
    cfg = _project(args)
    given = cfg.require_linkage()
    derived = linkage.synthesize_linkage(given, seed=_seed())
    doc = given.to_dict()
    doc["derived"] = derived.to_dict()
    if derived.theta_st is not None:
        doc["tucked"]["theta_s"] = math.degrees(derived.theta_st)
    _emit(args, dumps_json(doc))


def cmd_kinematics(args) -> None:
    cfg = _project(args)
    given = cfg.require_linkage()
    lengths = cfg.lengths()
    if args.x_a:
        xs = list(args.x_a)
    else:
        lo, hi = sorted((given.extended.x_A, given.tucked.x_A))
        xs = list(np.linspace(lo, hi, args.sweep))
    rows = []
    for x in xs:
        state = linkage.forward_kinematics(lengths, given, x)
        span = linkage.wingspan(lengths, given, x)
        rows.append(
            (x, math.degrees(state.theta_s), math.degrees(state.theta_e), math.degrees(state.theta_w), span)
        )
    header = ("x_A_mm", "theta_s_deg", "theta_e_deg", "theta_w_deg", "wingspan_mm")
    if args.format == "json":
        _emit(args, dumps_json([dict(zip(header, row)) for row in rows]))
    else:
        _emit(args, csv_text(header, rows))


def _downstroke_offset(cfg_crm: crm.CrmConfig, cycle: int, offset: float):
    x_min = cfg_crm.mis_travel[0]

    def schedule(t: float) -> float:
        gear = crm.gear_angle_at(cfg_crm, t)
        in_cycle = math.floor((gear + math.pi / 2) / (2 * math.pi)) == cycle
        return x_min + offset if in_cycle and crm.is_downstroke(cfg_crm, gear) else x_min

    return schedule


def cmd_trajectory(args) -> None:
    cfg = _project(args)
    given = cfg.require_linkage()
    if cfg.crm is None:
        raise MorphwingError("config has no crm section")
    x_min = cfg.crm.mis_travel[0]
    schedules = {side: (lambda t: x_min) for side in crm.SIDES}
    if args.roll is not None:
        schedules[args.roll] = _downstroke_offset(cfg.crm, args.roll_cycle, args.sis_offset_mm)
    traj = crm.wingbeat_trajectory(
        cfg.crm,
        cfg.lengths(),
        given,
        math.radians(cfg.wrist_mount_deg),
        schedules,
        duration=args.cycles * cfg.crm.period,
        samples_per_cycle=args.samples_per_cycle,
    )
    _emit(args, crm.trajectory_csv(traj))


def cmd_simulate_controller(args) -> None:
    cfg = _project(args)
    with open(args.events, newline="") as fh:
        events = controller.read_events_csv(fh)
    _, outputs = controller.simulate(events, cfg.controller)
    rows = list(controller.output_rows(outputs))
    if args.format == "json":
        _emit(args, dumps_json([dict(zip(controller.OUTPUT_HEADER, r)) for r in rows]))
    else:
        _emit(args, csv_text(controller.OUTPUT_HEADER, rows))


def _manifest(path):
    entries = load_json(path)
    if isinstance(entries, dict):
        entries = entries["conditions"]
    return entries, Path(path).resolve().parent


def cmd_fit(args) -> None:
    entries, base = _manifest(args.manifest)
    groups: dict = {}
    for entry in entries:
        rec = aero.read_force_csv(_resolve(base, entry["file"]))
        tare = aero.read_force_csv(_resolve(base, entry["tare"])) if entry.get("tare") else None
        freq, lift, thrust = aero.reduce_condition(
            rec, float(entry["alpha_deg"]), float(entry.get("g_offset_n", 0.0)), tare
        )
        key = float(entry.get("wrist_mount_deg", 0.0))
        groups.setdefault(key, []).append((float(entry["alpha_deg"]), freq, lift, thrust))
    configs = []
    for theta in sorted(groups):
        rows = groups[theta]
        lift = aero.fit_surface([(a, f, l.mean) for a, f, l, _ in rows])
        thrust = aero.fit_surface([(a, f, t.mean) for a, f, _, t in rows])
        configs.append({
            "wrist_mount_deg": theta,
            "lift": lift.to_dict(),
            "thrust": thrust.to_dict(),
            "max_cycle_rmse_g": {
                "lift": max(l.rmse_across_cycles for _, _, l, _ in rows),
                "thrust": max(t.rmse_across_cycles for _, _, _, t in rows),
            },
        })
    doc = configs[0] if len(configs) == 1 else {"configurations": configs}
    _emit(args, dumps_json(doc))


def _surface_sets(doc):
    if "configurations" in doc:
        return doc["configurations"]
    return [doc]


def cmd_trim(args) -> None:
    cfg = _project(args)
    weight = args.weight_g if args.weight_g is not None else cfg.pipeline.get("weight_g", 600.0)
    results = []
    for entry in _surface_sets(load_json(args.surfaces)):
        lift = aero.AeroSurface.from_dict(entry["lift"])
        thrust = aero.AeroSurface.from_dict(entry["thrust"])
        trim = aero.solve_trim(lift, thrust, weight)
        results.append({
            "wrist_mount_deg": entry.get("wrist_mount_deg"),
            "alpha_star_deg": trim.alpha_star,
            "freq_star_hz": trim.freq_star,
            "lift_at_trim_g": trim.lift_at_trim,
            "thrust_at_trim_g": trim.thrust_at_trim,
            "weight_g": weight,
            "contour": trim.contour,
        })
    _emit(args, dumps_json(results[0] if len(results) == 1 else results))


def cmd_filter(args) -> None:
    cfg = _project(args)
    cutoff = args.cutoff_hz if args.cutoff_hz is not None else cfg.pipeline.get("cutoff_hz", 12.0)
    order = args.order if args.order is not None else cfg.pipeline.get("order", 5)
    import csv

    with open(args.input, newline="") as fh:
        rows = list(csv.DictReader(fh))
    t = np.array([float(r["t"]) for r in rows])
    x = np.array([float(r[args.column]) for r in rows])
    fs = args.sample_rate or (len(t) - 1) / (t[-1] - t[0])
    y = aero.butterworth_lowpass(x, fs, cutoff, order)
    header = ("t", args.column, f"{args.column}_filtered")
    _emit(args, csv_text(header, zip(t, x, y)))


def cmd_roll_moment(args) -> None:
    cfg = _project(args)
    entries, base = _manifest(args.manifest)
    records = {}
    for entry in entries:
        key = (float(entry["alpha_deg"]), float(entry["freq_hint_hz"]))
        records[key] = aero.read_force_csv(_resolve(base, entry["file"]))
    report = aero.roll_moment_analysis(
        records,
        column=args.column,
        cutoff=cfg.pipeline.get("cutoff_hz", 12.0),
        order=cfg.pipeline.get("order", 5),
    )
    doc = {
        "conditions": [
            {
                "alpha_deg": a,
                "freq_hz": f,
                "mean_nm": s.mean,
                "rmse_across_cycles_nm": s.rmse_across_cycles,
                "n_cycles": s.n_cycles,
            }
            for (a, f), s in sorted(report.conditions.items())
        ],
        "regressions": [
            {"alpha_deg": a, "slope": r.slope, "intercept": r.intercept, "r_squared": r.r_squared}
            for a, r in sorted(report.regressions.items())
        ],
        "rmse_bound_nm": report.bound,
        "flagged": [list(k) for k in report.flagged],
        "within_bound": report.within_bound,
    }
    _emit(args, dumps_json(doc))


def cmd_agility(args) -> None:
    logs = [
        flightlog.read_log_csv(p, freq=args.freq, t0=args.t0, maneuver_marker=args.maneuver_marker)
        for p in args.log
    ]
    metrics = [flightlog.agility_metric(log, args.target) for log in logs]
    if len(logs) >= 2:
        ens = flightlog.ensemble_stats(logs, bins=args.bins)
        if args.format == "csv":
            _emit(args, csv_text(flightlog.ENSEMBLE_HEADER, ens.rows()))
            return
        ensemble_metric = flightlog.agility_metric(ens, args.target)
    else:
        ensemble_metric = None
    doc = {
        "target_deg": args.target,
        "trials": [None if math.isinf(m) else m for m in metrics],
        "ensemble": None if ensemble_metric is None or math.isinf(ensemble_metric) else ensemble_metric,
    }
    _emit(args, dumps_json(doc))


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="project or linkage JSON")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)

    parser = argparse.ArgumentParser(prog="morphwing", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", parents=[common], help="solve the linkage lengths")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("kinematics", parents=[common], help="joint angles versus slider displacement")
    p.add_argument("--x-a", type=float, action="append", help="slider displacement (mm); repeatable")
    p.add_argument("--sweep", type=int, default=21, help="samples from extended to tucked")
    p.set_defaults(func=cmd_kinematics)

    p = sub.add_parser("trajectory", parents=[common], help="wingtip and wrist trajectories (CSV)")
    p.add_argument("--cycles", type=float, default=1.0)
    p.add_argument("--samples-per-cycle", type=int, default=64)
    p.add_argument("--roll", choices=crm.SIDES, help="raise this side's SIS for one downstroke")
    p.add_argument("--roll-cycle", type=int, default=0)
    p.add_argument("--sis-offset-mm", type=float, default=10.0)
    p.set_defaults(func=cmd_trajectory)

    p = sub.add_parser("simulate-controller", parents=[common], help="replay controller events")
    p.add_argument("--events", required=True)
    p.set_defaults(func=cmd_simulate_controller)

    p = sub.add_parser("fit", parents=[common], help="quadratic lift/thrust surfaces")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("trim", parents=[common], help="level-flight equilibrium")
    p.add_argument("--surfaces", required=True)
    p.add_argument("--weight-g", type=float)
    p.set_defaults(func=cmd_trim)

    p = sub.add_parser("filter", parents=[common], help="Butterworth low-pass one CSV column")
    p.add_argument("--input", required=True)
    p.add_argument("--column", default="mx")
    p.add_argument("--cutoff-hz", type=float)
    p.add_argument("--order", type=int)
    p.add_argument("--sample-rate", type=float)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("roll-moment", parents=[common], help="cycle-averaged roll moment regression")
    p.add_argument("--manifest", required=True)
    p.add_argument("--column", default="mx")
    p.set_defaults(func=cmd_roll_moment)

    p = sub.add_parser("agility", parents=[common], help="wingbeats to a roll change")
    p.add_argument("--log", action="append", required=True)
    p.add_argument("--target", type=float, default=90.0)
    p.add_argument("--freq", type=float)
    p.add_argument("--t0", type=float)
    p.add_argument("--maneuver-marker", type=int, default=0)
    p.add_argument("--bins", type=int, default=20)
    p.set_defaults(func=cmd_agility)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (MorphwingError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc), "command": args.command}
        sys.stderr.write(json.dumps(err) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
