"""Scenario registry and runner: the repeatable desk-scale experiments.

A scenario is a declarative record (JSON-compatible) naming a potential,
model parameters, one or more runs (each an initial condition plus a law or
pipeline), and expected-outcome checks on the resulting metrics. Radius
symbols ("mill_radius", "flock_radius") resolve against the ring balance for
the scenario's potential and agent count. Identical (scenario, seed) runs
produce byte-identical artifacts.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .model import (
    ModelParams,
    SwarmState,
    interaction_forces,
    pairwise_distances,
    potential_from_config,
    rotation,
)
from .dynamics import (
    SimConfig,
    Trajectory,
    max_force,
    max_speed,
    order_parameters,
    random_state,
    simulate,
)
from .controllers import law_from_config, make_quasi_static_plan, InstantaneousSpec
from .analysis import (
    flock_ring_spec,
    mill_diagnostics,
    mill_radius_solve,
    mill_ring_spec,
    ring_state,
)
from . import maneuvers, svgplot


@dataclass
class CheckResult:
    run: str
    metric: str
    op: str
    value: float
    target: float
    tolerance: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.run}:{self.metric} {self.op} {self.target:.6g}"
                f" (got {self.value:.6g})")


@dataclass
class ScenarioReport:
    name: str
    seed: int
    out_dir: str
    checks: list = field(default_factory=list)
    trajectories: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def relax_to_equilibrium(pot, x0: np.ndarray, tol: float = 1e-6,
                         max_iter: int = 20000) -> np.ndarray:
    """Descend the pairwise interaction energy until max |F_i| < tol."""
    x = np.asarray(x0, dtype=float).copy()
    n = x.shape[0]

    def energy(xx):
        r, _ = pairwise_distances(xx)
        off = ~np.eye(n, dtype=bool)
        return float(np.sum(pot.value(r[off]))) / (2 * n)

    e = energy(x)
    step = 1.0
    for _ in range(max_iter):
        f = interaction_forces(pot, x)
        fmax = float(np.max(np.sqrt(np.sum(f * f, axis=-1))))
        if fmax < tol:
            return x
        while step > 1e-12:
            cand = x - step * f
            ec = energy(cand)
            if ec < e:
                x, e = cand, ec
                step *= 1.2
                break
            step *= 0.5
        else:
            return x
    return x


# ---------------------------------------------------------------------------
# Initial-condition construction
# ---------------------------------------------------------------------------

def _resolve(value, symbols):
    if isinstance(value, str):
        if value not in symbols:
            raise ValueError(f"unknown symbol {value!r}")
        return symbols[value]
    return float(value)


def build_initial_state(spec: dict, pot, params: ModelParams, seed: int,
                        symbols: dict) -> SwarmState:
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "random":
        box = float(spec.pop("box", 2.0))
        speed = float(spec.pop("speed", 1.0))
        _done(spec, "init")
        return random_state(params, box=box, speed=speed, seed=seed)
    if kind == "random_rest":
        box = float(spec.pop("box", 2.0))
        _done(spec, "init")
        st = random_state(params, box=box, speed=0.0, seed=seed)
        st.v[:] = 0.0
        return st
    if kind == "ring":
        R = _resolve(spec.pop("R", "mill_radius"), symbols) * float(spec.pop("scale", 1.0))
        center = tuple(spec.pop("center", (0.0, 0.0)))
        state_kind = spec.pop("state", "mill")
        gamma0 = float(spec.pop("gamma0", 0.0))
        v_angle = float(spec.pop("v_angle", 0.0))
        orientation = int(spec.pop("orientation", 1))
        _done(spec, "init")
        if state_kind == "mill":
            rs = mill_ring_spec(center, R, params, params.N, orientation=orientation)
            st = ring_state(rs, params, "mill")
            if gamma0:
                st.v = st.v @ rotation(gamma0).T
            return st
        rs = flock_ring_spec(center, R, params.N)
        if state_kind == "flock":
            c = params.cruise_speed
            return ring_state(rs, params, "flock",
                              vbar=(c * math.cos(v_angle), c * math.sin(v_angle)))
        return ring_state(rs, params, "rest")
    if kind == "relaxed_flock":
        box = float(spec.pop("box", 2.0))
        v_angle = float(spec.pop("v_angle", 0.0))
        tol = float(spec.pop("tol", 1e-6))
        _done(spec, "init")
        st = random_state(params, box=box, speed=0.0, seed=seed)
        x = relax_to_equilibrium(pot, st.x, tol=tol)
        c = params.cruise_speed
        v = np.tile([c * math.cos(v_angle), c * math.sin(v_angle)], (params.N, 1))
        return SwarmState(0.0, x, v)
    if kind == "explicit":
        x = np.asarray(spec.pop("x"), dtype=float)
        v = np.asarray(spec.pop("v", np.zeros_like(x)), dtype=float)
        _done(spec, "init")
        return SwarmState(0.0, x, v)
    raise ValueError(f"unknown init kind {kind!r}")


def _done(spec: dict, what: str):
    if spec:
        raise ValueError(f"unknown keys in {what} spec: {sorted(spec)}")


# ---------------------------------------------------------------------------
# Run execution
# ---------------------------------------------------------------------------

def _sim_config(sim: dict, seed: int) -> SimConfig:
    sim = dict(sim)
    cfg = SimConfig(
        dt=float(sim.pop("dt", 1e-2)),
        t_end=float(sim.pop("t_end", 10.0)),
        record_every=int(sim.pop("record_every", 10)),
        seed=seed,
    )
    _done(sim, "sim")
    return cfg


def execute_run(run: dict, pot, params: ModelParams, seed: int,
                symbols: dict) -> Trajectory:
    run = dict(run)
    init = build_initial_state(run.pop("init"), pot, params, seed, symbols)
    sim = _sim_config(run.pop("sim", {}), seed)
    kind = run.pop("kind", "law")
    if kind == "law":
        law_cfg = _resolve_in(run.pop("law"), symbols)
        _done(run, "run")
        law = law_from_config(law_cfg, pot, params)
        return simulate(init, pot, params, law, sim)
    if kind == "pipeline":
        pipeline = run.pop("pipeline")
        args = _resolve_in(run.pop("args", {}), symbols)
        _done(run, "run")
        return _run_pipeline(pipeline, init, pot, params, args, sim)
    raise ValueError(f"unknown run kind {kind!r}")


def _resolve_in(obj, symbols):
    """Resolve radius symbols in nested config values."""
    if isinstance(obj, dict):
        return {k: _resolve_in(v, symbols) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_resolve_in(v, symbols) for v in obj]
    if isinstance(obj, str) and obj in symbols:
        return symbols[obj]
    return obj


def _run_pipeline(pipeline: str, init, pot, params, args: dict, sim: SimConfig):
    args = dict(args)
    common = {"dt": sim.dt, "record_every": sim.record_every}
    if pipeline == "flock":
        return maneuvers.flock_pipeline(init, pot, params,
                                        target_vbar=args.pop("target_vbar"),
                                        eps=float(args.pop("eps", 0.05)),
                                        **common, **args)
    if pipeline == "mill":
        return maneuvers.mill_pipeline(init, pot, params,
                                       center=np.asarray(args.pop("center")),
                                       R_mill=args.pop("R_mill"),
                                       eps=float(args.pop("eps", 0.05)),
                                       **common, **args)
    if pipeline == "flock_to_flock":
        plan = make_quasi_static_plan(float(args.pop("theta0")),
                                      float(args.pop("thetaT")),
                                      float(args.pop("T")), params)
        return maneuvers.flock_to_flock(init, pot, params, plan,
                                        gain=args.pop("gain", None),
                                        **common, **args)
    if pipeline == "mill_to_flock":
        spec_args = args.pop("spec", {})
        spec = InstantaneousSpec(**spec_args) if spec_args else None
        return maneuvers.mill_to_flock(init, pot, params,
                                       vbar=args.pop("vbar"),
                                       R_f=float(args.pop("R_f")),
                                       spec=spec, **common, **args)
    if pipeline == "blowup":
        return maneuvers.blowup_pipeline(init, pot, params,
                                         eta=float(args.pop("eta")),
                                         L=float(args.pop("L")),
                                         **common, **args)
    if pipeline == "circular_placement":
        return maneuvers.circular_placement(init, pot, params,
                                            R=float(args.pop("R")),
                                            L=float(args.pop("L")),
                                            **common, **args)
    if pipeline == "radius_shrink":
        return maneuvers.radius_shrink(init, pot, params,
                                       kind=args.pop("ring_kind"),
                                       R_from=float(args.pop("R_from")),
                                       R_to=float(args.pop("R_to")),
                                       duration=float(args.pop("duration")),
                                       **common, **args)
    if pipeline == "placement_then_shrink":
        placement = maneuvers.circular_placement(
            init, pot, params, R=float(args.pop("R")), L=float(args.pop("L")),
            **common)
        shrink = maneuvers.radius_shrink(
            placement.final_state, pot, params, kind=args.pop("ring_kind"),
            R_from=float(args.pop("R_from")), R_to=float(args.pop("R_to")),
            duration=float(args.pop("duration")),
            center=placement.phases[-1].detail.get("center"), **common, **args)
        placement.extend(shrink)
        return placement
    raise ValueError(f"unknown pipeline {pipeline!r}")


# ---------------------------------------------------------------------------
# Metrics and checks
# ---------------------------------------------------------------------------

def trajectory_metrics(traj: Trajectory, pot, params: ModelParams,
                       symbols: dict) -> dict:
    final = traj.final_state
    init = traj.states[0]
    op = order_parameters(final)
    speeds = np.sqrt(np.sum(final.v**2, axis=-1))
    vmean = final.v.mean(axis=0)
    rel0 = init.x - init.x.mean(axis=0)
    rel1 = final.x - final.x.mean(axis=0)
    r_final, _ = pairwise_distances(final.x)
    path_min = min(float(np.min(pairwise_distances(s.x)[0])) for s in traj.states)

    energy = np.asarray(traj.energy)
    times = np.asarray(traj.times)
    if len(energy) > 1:
        dts = np.diff(times)
        viol = np.diff(energy) - 10.0 * dts**2 * np.maximum(1.0, np.abs(energy[:-1]))
        energy_violation = float(np.max(viol))
    else:
        energy_violation = 0.0

    metrics = {
        "final_t": float(final.t),
        "final_max_speed": max_speed(final),
        "final_max_force": max_force(final, pot) if pot is not None else 0.0,
        "final_polarization": op.polarization,
        "final_ang_momentum": op.ang_momentum,
        "final_mean_radius": op.mean_radius,
        "final_mean_speed": op.mean_speed,
        "final_mean_angle": math.atan2(vmean[1], vmean[0]),
        "final_cruise_dev": float(np.max(np.abs(speeds - params.cruise_speed))),
        "rel_drift": float(np.max(np.sqrt(np.sum((rel1 - rel0) ** 2, axis=-1)))),
        "min_pairwise_final": float(np.min(r_final)),
        "min_pairwise_path": path_min,
        "max_u": max(traj.step_max_u) if traj.step_max_u else 0.0,
        "max_u_raw": max(traj.step_max_u_raw) if traj.step_max_u_raw else 0.0,
        "energy_monotone_violation": energy_violation,
        "mill_diag_solved": mill_diagnostics(
            final, params, R_target=symbols.get("mill_radius")).max_abs()
        if "mill_radius" in symbols else float("nan"),
    }
    if traj.phases:
        metrics["phase0_t_end"] = float(traj.phases[0].t_end)
        detail = traj.phases[-1].detail
        if "terminal_diag" in detail:
            metrics["pipeline_terminal_diag"] = float(detail["terminal_diag"])
        if "terminal_mill_diagnostics" in detail:
            metrics["pipeline_terminal_diag"] = float(
                max(detail["terminal_mill_diagnostics"]))
    return metrics


_OPS = {
    "<": lambda v, t, tol: v < t,
    "<=": lambda v, t, tol: v <= t,
    ">": lambda v, t, tol: v > t,
    ">=": lambda v, t, tol: v >= t,
    "abs_within": lambda v, t, tol: abs(v - t) <= tol,
}


def evaluate_checks(checks: list, run_metrics: dict, symbols: dict) -> list:
    out = []
    for chk in checks:
        chk = dict(chk)
        run = chk.pop("run")
        metric = chk.pop("metric")
        op = chk.pop("op")
        target = _resolve(chk.pop("value"), symbols)
        scale = float(chk.pop("value_scale", 1.0))
        tolerance = _resolve(chk.pop("tolerance", 0.0), symbols) \
            * float(chk.pop("tolerance_scale", 1.0))
        _done(chk, "check")
        target = target * scale
        if run not in run_metrics:
            raise ValueError(f"check references unknown run {run!r}")
        if metric not in run_metrics[run]:
            raise ValueError(f"unknown metric {metric!r}")
        value = float(run_metrics[run][metric])
        passed = bool(_OPS[op](value, target, tolerance))
        out.append(CheckResult(run=run, metric=metric, op=op, value=value,
                               target=target, tolerance=tolerance, passed=passed))
    return out


# ---------------------------------------------------------------------------
# Artifact emission
# ---------------------------------------------------------------------------

def write_artifacts(traj: Trajectory, pot, params, out: str, plots: bool = True):
    os.makedirs(out, exist_ok=True)
    traj.to_csv(os.path.join(out, "trajectory.csv"))
    traj.write_summary(os.path.join(out, "summary.json"))
    if not plots:
        return
    times = traj.times
    svgplot.line_chart(os.path.join(out, "energy.svg"), times,
                       {"V": traj.energy}, title="energy", ylabel="V")
    speeds = [max_speed(s) for s in traj.states]
    series = {"max|v|": speeds}
    if pot is not None:
        series["max|F|"] = [max_force(s, pot) for s in traj.states]
    svgplot.line_chart(os.path.join(out, "speed_force.svg"), times, series,
                       title="speed and force", ylabel="max norm")
    svgplot.line_chart(os.path.join(out, "mean_radius.svg"), times,
                       {"mean radius": traj.mean_radius}, title="mean radius",
                       ylabel="radius")
    if traj.step_times:
        svgplot.line_chart(os.path.join(out, "control.svg"), traj.step_times,
                           {"max|u|": traj.step_max_u},
                           title="control magnitude", ylabel="max|u|")
    snaps = {}
    for label, idx in (("initial", 0), ("mid", len(traj.states) // 2),
                       ("final", len(traj.states) - 1)):
        s = traj.states[idx]
        snaps[f"{label} t={s.t:.3g}"] = (s.x, s.v)
    svgplot.scatter_snapshots(os.path.join(out, "positions.svg"), snaps,
                              title="agent positions", velocity_scale=0.2)


# ---------------------------------------------------------------------------
# Scenario execution
# ---------------------------------------------------------------------------

def run_scenario(record: dict, out_dir: str, seed=None,
                 plots: bool = True, overrides: dict = None) -> ScenarioReport:
    record = json.loads(json.dumps(record))  # deep copy, keep JSON-compatible
    if overrides:
        record.update(overrides)
    name = record.pop("name")
    pot_cfg = record.pop("potential")
    pot = potential_from_config(pot_cfg)
    par = dict(record.pop("params"))
    params = ModelParams(alpha=float(par.pop("alpha")), beta=float(par.pop("beta")),
                         M=float(par.pop("M")), N=int(par.pop("N")))
    _done(par, "params")
    seed = int(record.pop("seed", 0)) if seed is None else int(seed)
    runs = record.pop("runs")
    checks = record.pop("checks", [])
    _done(record, "scenario")

    symbols = {}
    try:
        symbols["mill_radius"] = mill_radius_solve(pot, params, params.N, mill=True)
    except Exception:
        pass
    try:
        symbols["flock_radius"] = mill_radius_solve(pot, params, params.N, mill=False)
    except Exception:
        pass

    base = os.path.join(out_dir, f"{name}-seed{seed}")
    os.makedirs(base, exist_ok=True)
    report = ScenarioReport(name=name, seed=seed, out_dir=base)
    run_metrics = {}
    for run in runs:
        run = dict(run)
        rname = run.pop("name")
        traj = execute_run(run, pot, params, seed, symbols)
        report.trajectories[rname] = traj
        run_metrics[rname] = trajectory_metrics(traj, pot, params, symbols)
        write_artifacts(traj, pot, params, os.path.join(base, rname), plots=plots)
    report.checks = evaluate_checks(checks, run_metrics, symbols)

    with open(os.path.join(base, "report.json"), "w") as fh:
        json.dump({
            "scenario": name,
            "seed": seed,
            "passed": report.passed,
            "checks": [{
                "run": c.run, "metric": c.metric, "op": c.op, "value": c.value,
                "target": c.target, "tolerance": c.tolerance, "passed": c.passed,
            } for c in report.checks],
            "metrics": run_metrics,
            "symbols": symbols,
        }, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return report


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

QUASI_MORSE = {"family": "quasi_morse", "C": 0.6, "l": 0.5, "p": 1.5}
POWER_LAW_41 = {"family": "power_law", "a": 4.0, "b": 1.0}
POWER_LAW_SOFT = {"family": "power_law", "a": 2.0, "b": 0.5}


def _registry() -> dict:
    reg = {}

    reg["smoke"] = {
        "name": "smoke",
        "potential": POWER_LAW_41,
        "params": {"alpha": 2.0, "beta": 1.5, "M": 2.0, "N": 4},
        "runs": [{
            "name": "free",
            "init": {"kind": "ring", "R": "mill_radius", "state": "mill"},
            "kind": "law", "law": {"law": "zero"},
            "sim": {"dt": 1e-2, "t_end": 1.0, "record_every": 10},
        }],
        "checks": [],
    }

    reg["fig-step11"] = {
        "name": "fig-step11",
        "potential": QUASI_MORSE,
        "params": {"alpha": 2.0, "beta": 1.5, "M": 2.0, "N": 200},
        "runs": [
            {
                "name": "uncontrolled",
                "init": {"kind": "random_rest", "box": 2.0},
                "kind": "law", "law": {"law": "zero"},
                "sim": {"dt": 2e-2, "t_end": 200.0, "record_every": 50},
            },
            {
                "name": "controlled",
                "init": {"kind": "random_rest", "box": 2.0},
                "kind": "law", "law": {"law": "jq"},
                "sim": {"dt": 2e-2, "t_end": 200.0, "record_every": 50},
            },
        ],
        "checks": [
            {"run": "controlled", "metric": "final_max_speed", "op": "<", "value": 1e-2},
            {"run": "controlled", "metric": "final_max_force", "op": "<", "value": 1e-1},
            {"run": "controlled", "metric": "energy_monotone_violation", "op": "<=", "value": 0.0},
            {"run": "uncontrolled", "metric": "final_mean_speed", "op": "abs_within",
             "value": 1.1547005383792515, "tolerance": 1e-2},
        ],
    }

    reg["fig-quasi"] = {
        "name": "fig-quasi",
        "potential": QUASI_MORSE,
        "params": {"alpha": 2.0, "beta": 1.5, "M": 2.0, "N": 200},
        "runs": [{
            "name": "rotate",
            "init": {"kind": "relaxed_flock", "box": 2.0, "v_angle": 0.0},
            "kind": "pipeline", "pipeline": "flock_to_flock",
            "args": {"theta0": 0.0, "thetaT": 1.5707963267948966, "T": 100.0},
            "sim": {"dt": 2e-2, "record_every": 50},
        }],
        "checks": [
            {"run": "rotate", "metric": "final_mean_angle", "op": "abs_within",
             "value": 1.5707963267948966, "tolerance": 0.05},
            {"run": "rotate", "metric": "final_cruise_dev", "op": "<", "value": 1e-3},
            {"run": "rotate", "metric": "rel_drift", "op": "<", "value": 1e-2},
        ],
    }

    mill1_runs = [{
        "name": "base",
        "init": {"kind": "ring", "R": "mill_radius", "scale": 1.25, "state": "mill"},
        "kind": "law", "law": {"law": "zero"},
        "sim": {"dt": 1e-2, "t_end": 40.0, "record_every": 40},
    }]
    for scale in (0.8, 1.1):
        mill1_runs.append({
            "name": f"R0x{scale}",
            "init": {"kind": "ring", "R": "mill_radius", "scale": scale, "state": "mill"},
            "kind": "law", "law": {"law": "zero"},
            "sim": {"dt": 1e-2, "t_end": 40.0, "record_every": 40},
        })
    for g0 in (0.2, 0.4):
        mill1_runs.append({
            "name": f"gamma{g0}",
            "init": {"kind": "ring", "R": "mill_radius", "state": "mill", "gamma0": g0},
            "kind": "law", "law": {"law": "zero"},
            "sim": {"dt": 1e-2, "t_end": 40.0, "record_every": 40},
        })
    reg["fig-mill1"] = {
        "name": "fig-mill1",
        "potential": POWER_LAW_41,
        "params": {"alpha": 10.0, "beta": 3.0, "M": 2.0, "N": 200},
        "runs": mill1_runs,
        "checks": [
            {"run": r["name"], "metric": "final_mean_radius", "op": "abs_within",
             "value": "mill_radius", "tolerance": 1e-2}
            for r in mill1_runs
        ] + [
            {"run": r["name"], "metric": "mill_diag_solved", "op": "<", "value": 1e-2}
            for r in mill1_runs
        ],
    }

    reg["fig-instcont"] = {
        "name": "fig-instcont",
        "potential": POWER_LAW_41,
        "params": {"alpha": 10.0, "beta": 3.0, "M": 2.0, "N": 20},
        "runs": [{
            "name": "to_mill",
            "init": {"kind": "ring", "R": "flock_radius", "state": "flock", "v_angle": 0.0},
            "kind": "law",
            "law": {"law": "instantaneous_mill", "R_target": "mill_radius",
                    "dt_horizon": 0.1, "lambda1": 0.1, "lambda2": 0.1},
            "sim": {"dt": 2e-2, "t_end": 40.0, "record_every": 10},
        }],
        "checks": [
            {"run": "to_mill", "metric": "final_ang_momentum", "op": ">", "value": 0.98},
            {"run": "to_mill", "metric": "final_mean_radius", "op": "abs_within",
             "value": "mill_radius", "tolerance": "mill_radius", "tolerance_scale": 0.05},
            {"run": "to_mill", "metric": "max_u", "op": "<=", "value": 1.4142135623731},
        ],
    }

    reg["fig-mill2flock"] = {
        "name": "fig-mill2flock",
        "potential": POWER_LAW_41,
        "params": {"alpha": 10.0, "beta": 3.0, "M": 3.0, "N": 20},
        "runs": [{
            "name": "to_flock",
            "init": {"kind": "ring", "R": "mill_radius", "state": "mill"},
            "kind": "pipeline", "pipeline": "mill_to_flock",
            "args": {"vbar": [1.8257418583505538, 0.0], "R_f": "flock_radius"},
            "sim": {"dt": 1e-2, "record_every": 20},
        }],
        "checks": [
            {"run": "to_flock", "metric": "final_polarization", "op": ">", "value": 0.99},
            {"run": "to_flock", "metric": "phase0_t_end", "op": "<=", "value": 40.0},
        ],
    }

    reg["thm2-blowup"] = {
        "name": "thm2-blowup",
        "potential": POWER_LAW_SOFT,
        "params": {"alpha": 2.0, "beta": 1.5, "M": 200.0, "N": 5},
        "runs": [{
            "name": "scatter",
            "init": {"kind": "random", "box": 1.0, "speed": 0.5},
            "kind": "pipeline", "pipeline": "blowup",
            "args": {"eta": 0.5, "L": 10.0},
            "sim": {"dt": 1e-2, "record_every": 20},
        }],
        "checks": [
            {"run": "scatter", "metric": "min_pairwise_final", "op": ">", "value": 10.0},
            {"run": "scatter", "metric": "final_max_speed", "op": "<", "value": 1e-3},
        ],
    }

    reg["thm2-ring"] = {
        "name": "thm2-ring",
        "potential": POWER_LAW_SOFT,
        "params": {"alpha": 2.0, "beta": 1.5, "M": 200.0, "N": 4},
        "runs": [{
            "name": "place_and_shrink",
            "init": {"kind": "explicit",
                     "x": [[12.0, 1.0], [-11.0, 2.0], [3.0, 14.0], [-2.0, -13.0]],
                     "v": [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]},
            "kind": "pipeline", "pipeline": "placement_then_shrink",
            "args": {"R": 18.0, "L": 10.0, "ring_kind": "mill",
                     "R_from": 18.0, "R_to": 2.0, "duration": 80.0},
            "sim": {"dt": 1e-2, "record_every": 20},
        }],
        "checks": [
            {"run": "place_and_shrink", "metric": "pipeline_terminal_diag",
             "op": "<", "value": 1e-2},
            {"run": "place_and_shrink", "metric": "min_pairwise_path", "op": ">",
             "value": 1.0},
        ],
    }

    return reg


REGISTRY = _registry()


def scenario_record(name: str) -> dict:
    if name not in REGISTRY:
        raise ValueError(f"unknown scenario {name!r}; known: {sorted(REGISTRY)}")
    return json.loads(json.dumps(REGISTRY[name]))
