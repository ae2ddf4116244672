"""Command-line interface.

Subcommands: simulate (ad-hoc run from a config file), analyze (ring radius
and stability report), maneuver (run a phase plan), scenario run|list, sweep
(scalar parameter grid). Exit codes: 0 ok, 1 check/maneuver failure,
2 config error, 3 numeric failure (collision or non-finite state).
SWARMCTL_OUT overrides --out.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import os
import sys

import numpy as np

try:
    import jsonschema
except ImportError:  # pragma: no cover
    jsonschema = None

from .model import (
    CollisionError,
    ModelParams,
    potential_from_config,
)
from .dynamics import NonFiniteStateError, SimConfig, simulate
from .controllers import law_from_config
from .analysis import (
    char_coeffs,
    cubic_roots,
    first_order_G,
    flock_ring_spec,
    mill_linearization_matrix,
    mill_radius_roots,
    mill_ring_spec,
    ring_positions,
    routh_hurwitz_stable,
)
from . import maneuvers, scenarios

EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3


class ConfigError(ValueError):
    pass


def _schema():
    text = importlib.resources.files("swarmctl").joinpath("config_schema.json").read_text()
    return json.loads(text)


def load_validated(path: str, kind: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if jsonschema is not None:
        schema = _schema()
        ref = {"$ref": f"#/$defs/{kind}", "$defs": schema["$defs"]}
        try:
            jsonschema.validate(data, ref)
        except jsonschema.ValidationError as exc:
            raise ConfigError(f"config {path} violates schema ({kind}): "
                              f"{exc.message}") from exc
    return data


def _out_dir(args) -> str:
    env = os.environ.get("SWARMCTL_OUT")
    return env if env else args.out


def _params_from(cfg: dict) -> ModelParams:
    p = dict(cfg)
    return ModelParams(alpha=float(p["alpha"]), beta=float(p["beta"]),
                       M=float(p["M"]), N=int(p["N"]))


def _write_trajectory(traj, pot, params, out, fmt: str, plots: bool):
    scenarios.write_artifacts(traj, pot, params, out, plots=plots)
    if fmt == "json":
        rows = {
            "times": list(traj.times),
            "x": [s.x.tolist() for s in traj.states],
            "v": [s.v.tolist() for s in traj.states],
            "u": [u.tolist() for u in traj.controls],
        }
        with open(os.path.join(out, "trajectory.json"), "w") as fh:
            json.dump(rows, fh)
            fh.write("\n")


def cmd_simulate(args) -> int:
    cfg = load_validated(args.config, "simulate_config")
    pot = potential_from_config(cfg["potential"])
    params = _params_from(cfg["params"])
    sim = dict(cfg.get("sim", {}))
    if args.dt is not None:
        sim["dt"] = args.dt
    if args.t_end is not None:
        sim["t_end"] = args.t_end
    config = SimConfig(dt=float(sim.get("dt", 1e-2)),
                       t_end=float(sim.get("t_end", 10.0)),
                       record_every=int(sim.get("record_every", 10)),
                       seed=args.seed)
    init = scenarios.build_initial_state(cfg["init"], pot, params, args.seed, {})
    law = law_from_config(cfg["law"], pot, params)
    traj = simulate(init, pot, params, law, config)
    out = os.path.join(_out_dir(args), "simulate")
    _write_trajectory(traj, pot, params, out, args.format, args.plots == "on")
    print(f"wrote {out} ({len(traj.times)} samples, t_end={traj.times[-1]:.6g})")
    return EXIT_OK


def cmd_analyze(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    pot = potential_from_config(cfg["potential"])
    params = _params_from(cfg["params"])
    n = params.N
    roots = mill_radius_roots(pot, params, n, mill=True)
    report = {"R_roots": roots}
    if roots:
        R = roots[0]
        A = mill_linearization_matrix(pot, params, n, R)
        a2, a1, a0 = char_coeffs(A)
        rh = routh_hurwitz_stable(a2, a1, a0)
        report.update({
            "A": A.tolist(),
            "char_coeffs": [a2, a1, a0],
            "eigenvalues": [[z.real, z.imag] for z in cubic_roots(a2, a1, a0)],
            "margins": list(rh.margins),
            "stable": rh.stable,
        })
    flock_roots = mill_radius_roots(pot, params, n, mill=False)
    if flock_roots:
        spec = flock_ring_spec((0.0, 0.0), flock_roots[0], n)
        gs = first_order_G(pot, ring_positions(spec))
        report.update({
            "flock_ring_radius": flock_roots[0],
            "G_zero_count": gs.zero_count,
            "G_max_nonzero_real": gs.max_nonzero_real,
        })
    out = json.dumps(report, indent=1, sort_keys=True)
    if args.out:
        os.makedirs(_out_dir(args), exist_ok=True)
        path = os.path.join(_out_dir(args), "analyze.json")
        with open(path, "w") as fh:
            fh.write(out + "\n")
    print(out)
    return EXIT_OK


def cmd_maneuver(args) -> int:
    cfg = load_validated(args.plan, "maneuver_config")
    pot = potential_from_config(cfg["potential"])
    params = _params_from(cfg["params"])
    init = scenarios.build_initial_state(cfg["init"], pot, params, args.seed, {})
    phases = maneuvers.plan_from_config(cfg["phases"], pot, params)
    sim = dict(cfg.get("sim", {}))
    dt = args.dt if args.dt is not None else float(sim.get("dt", 1e-2))
    traj = maneuvers.run_phases(init, pot, params, phases, dt=dt,
                                record_every=int(sim.get("record_every", 10)))
    out = os.path.join(_out_dir(args), "maneuver")
    _write_trajectory(traj, pot, params, out, args.format, args.plots == "on")
    for ph in traj.phases:
        print(f"phase {ph.name}: t=[{ph.t_start:.6g}, {ph.t_end:.6g}] "
              f"stopped by {ph.stop_kind}")
    return EXIT_OK


def cmd_scenario(args) -> int:
    if args.action == "list":
        for name in sorted(scenarios.REGISTRY):
            print(name)
        return EXIT_OK
    name = args.name
    if os.path.exists(name):
        record = load_validated(name, "scenario")
    else:
        record = scenarios.scenario_record(name)
    report = scenarios.run_scenario(record, _out_dir(args), seed=args.seed,
                                    plots=args.plots == "on")
    for chk in report.checks:
        print(chk.line())
    print(f"artifacts: {report.out_dir}")
    if not report.passed:
        failed = next(c for c in report.checks if not c.passed)
        print(f"FAILED: {failed.run}:{failed.metric}", file=sys.stderr)
        return EXIT_CHECK_FAILURE
    return EXIT_OK


def _set_by_path(obj, path: str, value):
    keys = path.split(".")
    cur = obj
    for k in keys[:-1]:
        cur = cur[int(k)] if isinstance(cur, list) else cur[k]
    last = keys[-1]
    if isinstance(cur, list):
        cur[int(last)] = value
    else:
        if last not in cur:
            raise ConfigError(f"sweep key {path!r} not present in scenario")
        cur[last] = value


def cmd_sweep(args) -> int:
    if os.path.exists(args.scenario):
        base = load_validated(args.scenario, "scenario")
    else:
        base = scenarios.scenario_record(args.scenario)
    try:
        values = [float(v) for v in args.values.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad sweep values: {args.values}") from exc
    rows = []
    metric_names = None
    any_fail = False
    for v in values:
        record = json.loads(json.dumps(base))
        _set_by_path(record, args.key, v)
        record["name"] = f"{record['name']}-{args.key.replace('.', '_')}{v:g}"
        report = scenarios.run_scenario(record, _out_dir(args), seed=args.seed,
                                        plots=args.plots == "on")
        any_fail = any_fail or not report.passed
        with open(os.path.join(report.out_dir, "report.json")) as fh:
            metrics = json.load(fh)["metrics"]
        for run_name, m in sorted(metrics.items()):
            if metric_names is None:
                metric_names = sorted(m)
            rows.append([repr(v), run_name] + [repr(float(m[k])) for k in metric_names])
    os.makedirs(_out_dir(args), exist_ok=True)
    path = os.path.join(_out_dir(args), "sweep.csv")
    with open(path, "w") as fh:
        fh.write(",".join([args.key, "run"] + metric_names) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    print(f"wrote {path}")
    return EXIT_CHECK_FAILURE if any_fail else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swarmctl",
                                 description="planar swarm simulation and control")
    ap.add_argument("--out", default="out", help="output directory "
                    "(SWARMCTL_OUT overrides)")
    ap.add_argument("--seed", type=int, default=0, help="64-bit PRNG seed")
    ap.add_argument("--dt", type=float, default=None)
    ap.add_argument("--t-end", dest="t_end", type=float, default=None)
    ap.add_argument("--format", choices=["csv", "json"], default="csv")
    ap.add_argument("--plots", choices=["on", "off"], default="on")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a single law from a config file")
    p.add_argument("config")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("analyze", help="ring radius and stability report")
    p.add_argument("config")
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("maneuver", help="run a phase plan")
    p.add_argument("plan")
    p.set_defaults(fn=cmd_maneuver)

    p = sub.add_parser("scenario", help="run or list registry scenarios")
    p.add_argument("action", choices=["run", "list"])
    p.add_argument("name", nargs="?", default=None)
    p.set_defaults(fn=cmd_scenario)

    p = sub.add_parser("sweep", help="grid over one scalar config key")
    p.add_argument("scenario")
    p.add_argument("key", help="dotted path, e.g. params.alpha or runs.0.sim.t_end")
    p.add_argument("values", help="comma-separated numbers")
    p.set_defaults(fn=cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "scenario" and args.action == "run" and not args.name:
        print("scenario run needs a name or file", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        return args.fn(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (CollisionError, NonFiniteStateError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC_FAILURE
    except maneuvers.PhaseTimeoutError as exc:
        print(f"maneuver failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILURE


if __name__ == "__main__":
    sys.exit(main())
