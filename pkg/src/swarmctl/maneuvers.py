"""Multi-phase maneuver pipelines: stabilize, rearrange, and reshape the swarm.

Each pipeline chains simulate() calls, one phase at a time, and returns a
single merged Trajectory whose `phases` list records every phase boundary,
the stop predicate that ended it, and terminal metrics. Stop predicates all
carry a hard time cap; phases that must reach their condition raise
PhaseTimeoutError when the cap hits first.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .model import (
    GUARD_RADIUS,
    ModelParams,
    RadialPotential,
    SwarmState,
    force_bounds,
    interaction_forces,
    pairwise_distances,
    perp,
    threshold_m_alpha_beta,
)
from .dynamics import (
    ControlLaw,
    PhaseRecord,
    SimConfig,
    SwarmState,
    Trajectory,
    max_force,
    max_speed,
    order_parameters,
    simulate,
)
from .controllers import (
    JQParams,
    build_repulsive_surrogate,
    cancel_and_inject,
    default_jq_gamma,
    fictitious_potential_control,
    flock_hold,
    hold_stations,
    instantaneous_flock_law,
    InstantaneousSpec,
    jq_feedback,
    mill_centripetal,
    pd_tracking,
    quasi_static_rotation,
    QuasiStaticPlan,
    velocity_kill,
)
from .analysis import mill_diagnostics, flock_ring_spec, ring_positions


class PhaseTimeoutError(RuntimeError):
    def __init__(self, phase, predicate):
        self.phase = phase
        self.predicate = predicate
        super().__init__(f"phase {phase!r} hit its time cap before satisfying {predicate}")


class ThresholdViolationError(ValueError):
    """The control bound M is below the threshold the maneuver requires."""


class GeometricPreconditionError(ValueError):
    """The requested geometry violates the construction's preconditions."""


class TrackingDivergenceError(RuntimeError):
    """Position error exceeded the configured envelope during tracking."""


@dataclass
class Phase:
    name: str
    law: ControlLaw
    t_max: float
    stop: Optional[Callable[[SwarmState], bool]] = None
    stop_spec: Optional[dict] = None
    require_stop: bool = False


def run_phases(init: SwarmState, pot, params: ModelParams, phases,
               dt: float = 1e-2, record_every: int = 10,
               guard: float = GUARD_RADIUS) -> Trajectory:
    """Run phases back to back, merging their trajectories and phase records."""
    traj = Trajectory()
    state = init.copy()
    for k, ph in enumerate(phases):
        cfg = SimConfig(dt=dt, t_end=state.t + ph.t_max,
                        record_every=record_every, guard=guard)
        part = simulate(state, pot, params, ph.law, cfg, stop=ph.stop)
        stop_kind = "condition" if part.stop_reason == "condition" else "t_max"
        if ph.stop is not None and stop_kind == "t_max" and ph.require_stop:
            raise PhaseTimeoutError(ph.name, ph.stop_spec or "state condition")
        part.phases.append(PhaseRecord(
            name=ph.name, t_start=state.t, t_end=part.final_state.t,
            stop_kind=stop_kind, detail=dict(ph.stop_spec or {})))
        if k == 0:
            traj = part
        else:
            traj.extend(part)
        state = traj.final_state.copy()
    return traj


# ---------------------------------------------------------------------------
# Shared phase builders
# ---------------------------------------------------------------------------

def gradient_lipschitz_bound(pot: RadialPotential, r_lo: float, r_hi: float,
                             n: int = 4000) -> float:
    """Sampled Lipschitz bound for the pair gradient: sup max(|U''|, |U'|/r)."""
    rs = np.geomspace(max(r_lo, 1e-3), max(r_hi, 2 * r_lo), n)
    return float(np.max(np.maximum(np.abs(pot.second_deriv(rs)),
                                   np.abs(pot.deriv(rs)) / rs)))


def _eps_prime(pot: RadialPotential, params: ModelParams, eps: float,
               init: SwarmState) -> float:
    r, _ = pairwise_distances(init.x)
    r_hi = max(10.0, 2 * float(np.max(r[np.isfinite(r)])))
    lw = gradient_lipschitz_bound(pot, GUARD_RADIUS, r_hi)
    return min(eps / (1 + lw / 2), params.M / (2 + params.alpha + lw / 2))


def _stop_speed_force(pot, params, speed_tol, force_tol, guard):
    def stop(state):
        return (max_speed(state) < speed_tol
                and max_force(state, pot, guard) < force_tol)
    return stop


def _smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return 6 * s**5 - 15 * s**4 + 10 * s**3


def _smoothstep_d(s):
    s = np.clip(s, 0.0, 1.0)
    return 30 * s**4 - 60 * s**3 + 30 * s**2


def _smoothstep_dd(s):
    s = np.clip(s, 0.0, 1.0)
    return 120 * s**3 - 180 * s**2 + 60 * s


def line_reference(base: np.ndarray, movers: dict, t0: float, duration: float):
    """Reference path: agents in `movers` glide {index: (p0, p1)} along straight
    smoothstep segments over [t0, t0+duration]; everyone else parks at base."""
    base = np.asarray(base, dtype=float).copy()
    items = [(i, np.asarray(p0, float), np.asarray(p1, float))
             for i, (p0, p1) in movers.items()]

    def ref(t):
        xref = base.copy()
        vref = np.zeros_like(base)
        aref = np.zeros_like(base)
        s = (t - t0) / duration
        sig, sigd, sigdd = _smoothstep(s), _smoothstep_d(s), _smoothstep_dd(s)
        if s < 0 or s > 1:
            sigd = sigdd = 0.0
            sig = 1.0 if s > 1 else 0.0
        for i, p0, p1 in items:
            d = p1 - p0
            xref[i] = p0 + sig * d
            vref[i] = sigd / duration * d
            aref[i] = sigdd / duration**2 * d
        return xref, vref, aref

    return ref


# ---------------------------------------------------------------------------
# Flock pipeline
# ---------------------------------------------------------------------------

def flock_pipeline(init: SwarmState, pot: RadialPotential, params: ModelParams,
                   target_vbar, eps: float = 0.05, nu: float = 0.1,
                   dt: float = 1e-2, record_every: int = 10,
                   t_caps=(400.0, 40.0, 40.0, 60.0),
                   guard: float = GUARD_RADIUS) -> Trajectory:
    """Drive any initial state to a flock with common velocity target_vbar.

    Phases: speed-damping stabilization until speeds and forces are below
    eps'; exact braking to rest; double-integrator steering of all velocities
    to nu*target_vbar; interaction-cancelling hold while speeds climb the
    heteroclinic to cruise. A state already flocking along target_vbar skips
    straight to the hold.
    """
    target_vbar = np.asarray(target_vbar, dtype=float)
    c = params.cruise_speed
    if abs(float(np.hypot(*target_vbar)) - c) > 1e-9:
        raise ValueError("target flock velocity must have norm sqrt(alpha/beta)")
    mab = threshold_m_alpha_beta(params)
    if params.M <= mab:
        raise ThresholdViolationError(
            f"flock stabilization needs M > M_alpha_beta = {mab:.6g}, got {params.M}")

    op = order_parameters(init)
    vmean = init.v.mean(axis=0)
    aligned = (op.polarization >= 0.999
               and abs(op.mean_speed - c) <= 1e-3
               and float(np.hypot(*(vmean / max(np.hypot(*vmean), 1e-30) * c - target_vbar))) <= 1e-3)

    epsp = _eps_prime(pot, params, eps, init)
    eta = epsp / 2
    phases = []
    if not aligned:
        phases.append(Phase(
            "jq_stabilize", jq_feedback(params), t_caps[0],
            stop=_stop_speed_force(pot, params, epsp, epsp, guard),
            stop_spec={"max_speed<": epsp, "max_force<": epsp},
            require_stop=True))
        phases.append(Phase(
            "velocity_kill", velocity_kill(pot, params, eta, dt), t_caps[1],
            stop=lambda s: max_speed(s) <= eta * dt,
            stop_spec={"max_speed<=": eta * dt},
            require_stop=True))
        vtarget = nu * target_vbar
        inject = ControlLaw("velocity_align",
                            lambda t, s: -2.0 * (s.v - vtarget))
        phases.append(Phase(
            "velocity_inject", cancel_and_inject(pot, params, inject, params.M / 2),
            t_caps[2],
            stop=lambda s: float(np.max(np.sqrt(np.sum((s.v - vtarget) ** 2, axis=-1)))) < 1e-6,
            stop_spec={"max|v - nu*vbar|<": 1e-6},
            require_stop=True))
    phases.append(Phase(
        "flock_hold", flock_hold(pot, guard), t_caps[3],
        stop=lambda s: float(np.max(np.abs(np.sqrt(np.sum(s.v**2, axis=-1)) - c))) < 1e-4,
        stop_spec={"max|speed - cruise|<": 1e-4}))
    traj = run_phases(init, pot, params, phases, dt=dt, record_every=record_every,
                      guard=guard)
    final = traj.final_state
    opf = order_parameters(final)
    traj.phases[-1].detail.update({
        "terminal_polarization": opf.polarization,
        "terminal_speed_err": float(np.max(np.abs(
            np.sqrt(np.sum(final.v**2, axis=-1)) - c))),
    })
    return traj


# ---------------------------------------------------------------------------
# Mill pipeline (supports separated mill clusters)
# ---------------------------------------------------------------------------

def _as_clusters(center, R_mill):
    center = np.asarray(center, dtype=float)
    if center.ndim == 1:
        return [(center, float(R_mill))]
    radii = np.broadcast_to(np.asarray(R_mill, dtype=float), (center.shape[0],))
    return [(center[k], float(radii[k])) for k in range(center.shape[0])]


def _assign_clusters(x: np.ndarray, clusters) -> np.ndarray:
    centers = np.stack([c for c, _ in clusters])
    d2 = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
    return np.argmin(d2, axis=1)


def _ring_slot_targets(x: np.ndarray, center: np.ndarray, R: float) -> np.ndarray:
    """Assign each agent a slot on the ring, preserving angular order and
    choosing the slot phase that minimizes total angular travel."""
    n = x.shape[0]
    ang = np.arctan2(x[:, 1] - center[1], x[:, 0] - center[0])
    order = np.argsort(ang, kind="stable")
    base = 2 * np.pi * np.arange(n) / n
    best, best_cost = 0.0, math.inf
    for shift in base:
        slot = base + shift
        diff = np.angle(np.exp(1j * (slot - ang[order])))
        cost = float(np.sum(diff**2))
        if cost < best_cost:
            best, best_cost = shift, cost
    slot = base + best
    targets = np.empty_like(x)
    targets[order] = center + R * np.stack([np.cos(slot), np.sin(slot)], axis=1)
    return targets


def _cluster_centripetal(pot, params, clusters, assign, guard):
    centers = np.stack([c for c, _ in clusters])
    radii = np.array([r for _, r in clusters])

    def law(t, state):
        f = interaction_forces(pot, state.x, guard=guard, t=t)
        rel = state.x - centers[assign]
        rr = np.sqrt(np.sum(rel * rel, axis=-1))
        if np.any(rr < guard):
            raise ValueError("agent at its mill center")
        speed2 = np.sum(state.v**2, axis=-1)
        return f - (speed2 / radii[assign])[:, None] * rel / rr[:, None]

    return ControlLaw("mill_centripetal", law)


def mill_pipeline(init: SwarmState, pot: RadialPotential, params: ModelParams,
                  center, R_mill, eps: float = 0.05, nu: float = 0.1,
                  dt: float = 1e-2, record_every: int = 10,
                  t_caps=(400.0, 40.0, 200.0, 30.0, 80.0),
                  guard: float = GUARD_RADIUS) -> Trajectory:
    """Drive any initial state onto one or more rotating rings.

    center may be a single point or a (K, 2) array of cluster centers (with
    R_mill scalar or per-cluster). Phases: speed damping, braking,
    double-integrator placement onto the ring slots, a tangential velocity
    impulse, then the interaction-cancelling centripetal hold.
    """
    clusters = _as_clusters(center, R_mill)
    mab = threshold_m_alpha_beta(params)
    if params.M <= mab:
        raise ThresholdViolationError(
            f"mill stabilization needs M > M_alpha_beta = {mab:.6g}")
    bounds = force_bounds(pot, min(r for _, r in clusters), params.N)
    if not math.isfinite(bounds.m_f):
        warnings.warn("sup |U'| is unbounded for this family; the mill-budget "
                      "check M > max(M_alpha_beta, M_F) cannot hold", stacklevel=2)
    elif params.M <= max(mab, bounds.m_f):
        warnings.warn(f"M = {params.M} is below max(M_alpha_beta, M_F) = "
                      f"{max(mab, bounds.m_f):.6g}", stacklevel=2)

    op = order_parameters(init)
    assign0 = _assign_clusters(init.x, clusters)
    near_mill = op.ang_momentum >= 0.999 and len(clusters) == 1 and \
        mill_diagnostics(init, params, R_target=clusters[0][1],
                         center=clusters[0][0]).max_abs() < 1e-3

    epsp = _eps_prime(pot, params, eps, init)
    eta = epsp / 2
    phases = []
    if not near_mill:
        phases.append(Phase(
            "jq_stabilize", jq_feedback(params), t_caps[0],
            stop=_stop_speed_force(pot, params, epsp, epsp, guard),
            stop_spec={"max_speed<": epsp, "max_force<": epsp},
            require_stop=True))
        phases.append(Phase(
            "velocity_kill", velocity_kill(pot, params, eta, dt), t_caps[1],
            stop=lambda s: max_speed(s) <= eta * dt,
            stop_spec={"max_speed<=": eta * dt},
            require_stop=True))

        # Placement happens from rest, so cluster assignment is frozen here.
        def placement_targets(state):
            targets = np.empty_like(state.x)
            assign = _assign_clusters(state.x, clusters)
            for k, (c, r) in enumerate(clusters):
                idx = np.where(assign == k)[0]
                if idx.size:
                    targets[idx] = _ring_slot_targets(state.x[idx], c, r)
            return targets, assign

        # The targets must be computed lazily at phase start; wrap in a
        # one-shot closure driven by the first evaluation.
        targets_box = {}

        def place_w(t, state):
            if "targets" not in targets_box:
                targets_box["targets"] = placement_targets(state)[0]
            return -1.0 * (state.x - targets_box["targets"]) - 2.0 * state.v

        phases.append(Phase(
            "ring_placement",
            cancel_and_inject(pot, params, ControlLaw("place", place_w), params.M / 2),
            t_caps[2],
            stop=lambda s: ("targets" in targets_box
                            and float(np.max(np.sqrt(np.sum(
                                (s.x - targets_box["targets"]) ** 2, axis=-1)))) < 1e-3
                            and max_speed(s) < 1e-3),
            stop_spec={"max|x - ring|<": 1e-3, "max_speed<": 1e-3},
            require_stop=True))

        def spin_w(t, state):
            assign = _assign_clusters(state.x, clusters)
            centers = np.stack([c for c, _ in clusters])
            rel = state.x - centers[assign]
            rr = np.sqrt(np.sum(rel * rel, axis=-1, keepdims=True))
            vt = nu * params.cruise_speed * perp(rel) / np.maximum(rr, guard)
            return -2.0 * (state.v - vt)

        def spin_err(state):
            assign = _assign_clusters(state.x, clusters)
            centers = np.stack([c for c, _ in clusters])
            rel = state.x - centers[assign]
            rr = np.sqrt(np.sum(rel * rel, axis=-1, keepdims=True))
            vt = nu * params.cruise_speed * perp(rel) / np.maximum(rr, guard)
            return float(np.max(np.sqrt(np.sum((state.v - vt) ** 2, axis=-1))))

        phases.append(Phase(
            "tangential_impulse",
            cancel_and_inject(pot, params, ControlLaw("spin", spin_w), params.M / 2),
            t_caps[3],
            stop=lambda s: spin_err(s) < 1e-6,
            stop_spec={"max|v - nu*tangent|<": 1e-6},
            require_stop=True))

    assign_final = _assign_clusters(init.x, clusters) if near_mill else None
    # Final assignment recomputed at hold start from positions.
    traj = run_phases(init, pot, params, phases, dt=dt,
                      record_every=record_every, guard=guard) if phases else None
    state_now = traj.final_state if traj is not None else init
    assign = _assign_clusters(state_now.x, clusters)
    hold = Phase(
        "centripetal_hold", _cluster_centripetal(pot, params, clusters, assign, guard),
        t_caps[4],
        stop=lambda s: all(
            mill_diagnostics(
                SwarmState(s.t, s.x[assign == k], s.v[assign == k]), params,
                R_target=clusters[k][1], center=clusters[k][0]).max_abs() < 1e-3
            for k in range(len(clusters))),
        stop_spec={"mill_diagnostics<": 1e-3})
    tail = run_phases(state_now, pot, params, [hold], dt=dt,
                      record_every=record_every, guard=guard)
    if traj is None:
        traj = tail
    else:
        traj.extend(tail)
    final = traj.final_state
    diag = [mill_diagnostics(
        SwarmState(final.t, final.x[assign == k], final.v[assign == k]), params,
        R_target=clusters[k][1], center=clusters[k][0]).max_abs()
        for k in range(len(clusters))]
    traj.phases[-1].detail["terminal_mill_diagnostics"] = diag
    return traj


# ---------------------------------------------------------------------------
# Flock-to-flock and mill-to-flock transitions
# ---------------------------------------------------------------------------

def flock_to_flock(init: SwarmState, pot: RadialPotential, params: ModelParams,
                   plan: QuasiStaticPlan, gain: Optional[float] = None,
                   dt: float = 1e-2, record_every: int = 10,
                   t_tail: float = 30.0, envelope: float = 0.5,
                   guard: float = GUARD_RADIUS) -> Trajectory:
    """Rotate a flock's direction quasi-statically from theta0 to thetaT.

    The velocity reference turns linearly over plan.T; afterwards an
    interaction-cancelling hold settles speeds back to cruise. Raises
    TrackingDivergenceError when relative positions drift beyond the envelope.
    """
    gain = params.M if gain is None else gain
    c = params.cruise_speed
    rel0 = init.x - init.x.mean(axis=0)
    phases = [
        Phase("quasi_static_rotation", quasi_static_rotation(gain, plan),
              plan.T, stop=None, stop_spec={"t_max": plan.T}),
        Phase("flock_hold", flock_hold(pot, guard), t_tail,
              stop=lambda s: float(np.max(np.abs(
                  np.sqrt(np.sum(s.v**2, axis=-1)) - c))) < 1e-4,
              stop_spec={"max|speed - cruise|<": 1e-4}),
    ]
    traj = run_phases(init, pot, params, phases, dt=dt,
                      record_every=record_every, guard=guard)
    final = traj.final_state
    rel1 = final.x - final.x.mean(axis=0)
    drift = float(np.max(np.sqrt(np.sum((rel1 - rel0) ** 2, axis=-1))))
    if drift > envelope:
        raise TrackingDivergenceError(
            f"relative positions drifted {drift:.3g} > envelope {envelope}")
    vmean = final.v.mean(axis=0)
    traj.phases[-1].detail.update({
        "terminal_mean_angle": math.atan2(vmean[1], vmean[0]),
        "relative_drift": drift,
    })
    return traj


def mill_to_flock(init: SwarmState, pot: RadialPotential, params: ModelParams,
                  vbar, R_f: float, spec: Optional[InstantaneousSpec] = None,
                  dt: float = 1e-2, record_every: int = 10,
                  t_caps=(60.0, 30.0), guard: float = GUARD_RADIUS) -> Trajectory:
    """Break a mill into a flock with the one-step-lookahead per-agent control,
    then hand over to the interaction-cancelling hold."""
    vbar = np.asarray(vbar, dtype=float)
    if spec is None:
        spec = InstantaneousSpec(R_target=R_f, v_bar=tuple(vbar))
    else:
        spec = replace(spec, R_target=R_f, v_bar=tuple(vbar))

    def converged(state):
        op = order_parameters(state)
        return op.polarization > 0.99 and abs(op.mean_radius - R_f) <= 0.05 * R_f

    c = params.cruise_speed
    phases = [
        Phase("instantaneous_flock", instantaneous_flock_law(pot, params, spec, guard),
              t_caps[0], stop=converged,
              stop_spec={"polarization>": 0.99, "|mean_radius - R_f|<=": 0.05 * R_f},
              require_stop=True),
        Phase("flock_hold", flock_hold(pot, guard), t_caps[1],
              stop=lambda s: float(np.max(np.abs(
                  np.sqrt(np.sum(s.v**2, axis=-1)) - c))) < 1e-4,
              stop_spec={"max|speed - cruise|<": 1e-4}),
    ]
    traj = run_phases(init, pot, params, phases, dt=dt,
                      record_every=record_every, guard=guard)
    op = order_parameters(traj.final_state)
    traj.phases[-1].detail["terminal_polarization"] = op.polarization
    return traj


# ---------------------------------------------------------------------------
# Convex-hull geometry for the scattering construction
# ---------------------------------------------------------------------------

def convex_hull(points: np.ndarray):
    """Monotone-chain hull; returns indices into points, counterclockwise."""
    pts = [(float(p[0]), float(p[1]), i) for i, p in enumerate(points)]
    pts.sort()
    if len(pts) <= 2:
        return [p[2] for p in pts]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return [p[2] for p in (lower[:-1] + upper[:-1])]


@dataclass
class OuterVertex:
    index: int
    bisector: np.ndarray  # unit outward bisector of the external angle
    internal_angle: float


def outer_vertex(x: np.ndarray) -> OuterVertex:
    """Hull vertex with the smallest internal angle and its outward bisector.

    Every direction from the vertex to another agent makes an angle of at most
    internal_angle/2 with the inward bisector, so any purely repulsive pair
    force on the vertex has component >= cos(internal_angle/2) |force| along
    the outward bisector. Collinear clouds (and N = 2) return a segment
    endpoint with the outward axis direction.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        raise ValueError("outer_vertex needs at least two points")
    span = np.max(np.abs(x - x[0]))
    if span < 1e-12:
        raise ValueError("degenerate input: all points coincide")

    hull = convex_hull(x)
    if len(hull) <= 2 or _collinear(x):
        d = x - x.mean(axis=0)
        proj_dir = _principal_axis(x)
        proj = d @ proj_dir
        ends = [int(np.argmin(proj)), int(np.argmax(proj))]
        idx = min(ends)
        sign = -1.0 if proj[idx] <= proj[max(ends)] else 1.0
        if idx == ends[1]:
            sign = 1.0
        z = sign * proj_dir
        return OuterVertex(index=idx, bisector=z / np.linalg.norm(z),
                           internal_angle=0.0)

    best = None
    m = len(hull)
    for k, i in enumerate(hull):
        p = x[hull[k - 1]]
        q = x[hull[(k + 1) % m]]
        u1 = p - x[i]
        u2 = q - x[i]
        u1 = u1 / np.linalg.norm(u1)
        u2 = u2 / np.linalg.norm(u2)
        ang = math.acos(max(-1.0, min(1.0, float(np.dot(u1, u2)))))
        key = (round(ang / 1e-12), i)
        if best is None or key < best[0]:
            inner = u1 + u2
            nrm = np.linalg.norm(inner)
            if nrm < 1e-12:
                z = perp(u1)
            else:
                z = -inner / nrm
            best = (key, OuterVertex(index=int(i), bisector=z, internal_angle=ang))
    return best[1]


def _collinear(x: np.ndarray, tol: float = 1e-10) -> bool:
    d = x - x.mean(axis=0)
    cov = d.T @ d
    ev = np.linalg.eigvalsh(cov)
    return ev[0] <= tol * max(ev[1], 1e-30)


def _principal_axis(x: np.ndarray) -> np.ndarray:
    d = x - x.mean(axis=0)
    cov = d.T @ d
    _, vecs = np.linalg.eigh(cov)
    return vecs[:, -1]


# ---------------------------------------------------------------------------
# Blow-up pipeline (scatter all agents beyond a target separation)
# ---------------------------------------------------------------------------

def _min_dist_to_others(x: np.ndarray, i: int) -> float:
    d = np.sqrt(np.sum((x - x[i]) ** 2, axis=-1))
    d[i] = np.inf
    return float(np.min(d))


def _pick_extraction_direction(p0, cone_center, cone_half_width, frozen_pts,
                               margin: float = 0.05):
    """Direction inside the outward cone maximizing angular clearance from
    directions toward frozen agents."""
    if not len(frozen_pts):
        return cone_center
    base = math.atan2(cone_center[1], cone_center[0])
    half = max(cone_half_width - margin, 0.0)
    cands = base + np.linspace(-half, half, 181)
    fdirs = np.array([math.atan2(p[1] - p0[1], p[0] - p0[0]) for p in frozen_pts])
    best_ang, best_score = base, -1.0
    for aa in cands:
        sep = np.abs(np.angle(np.exp(1j * (fdirs - aa))))
        score = float(np.min(sep))
        if score > best_score + 1e-12:
            best_score, best_ang = score, aa
    return np.array([math.cos(best_ang), math.sin(best_ang)])


def blowup_pipeline(init: SwarmState, pot: RadialPotential, params: ModelParams,
                    eta: float, L: float, dt: float = 1e-2,
                    record_every: int = 10, qs_speed: float = 0.5,
                    jq_cap: float = 120.0, guard: float = GUARD_RADIUS) -> Trajectory:
    """Scatter all agents pairwise beyond L: purely repulsive surrogate
    dynamics under speed damping, braking to rest, then one-by-one quasi-static
    extraction of the sharpest hull vertex along its outward bisector.

    Movers are extracted to separation 3L so the audited minimum distance of
    each mover is nondecreasing throughout its phase.
    """
    near0 = float(pot.deriv(np.asarray(guard * 10)))
    if near0 >= 0:
        warnings.warn("potential is not repulsive near zero separation; the "
                      "scattering argument assumes it", stacklevel=2)
    bounds = force_bounds(pot, L, params.N)
    need = threshold_m_alpha_beta(params) + bounds.tilde_m_f
    if not math.isfinite(need) or params.M <= need:
        warnings.warn(f"M = {params.M} is not above M_alpha_beta + sup U' = {need:.6g}; "
                      "proceeding, realized controls are audited", stacklevel=2)

    r0, _ = pairwise_distances(init.x)
    finite = r0[np.isfinite(r0)]
    R0 = max(2.0, 1.2 * float(np.max(finite)))
    try:
        surrogate = build_repulsive_surrogate(pot, eta, R0)
    except ValueError:
        warnings.warn("no valid surrogate tail radius for this family; bounding "
                      "sup U' over the working range only", stacklevel=2)
        surrogate = build_repulsive_surrogate(pot, eta, R0, enforce_tail=False)

    # Speed damping runs against the surrogate dynamics, with a moderate-gain
    # damping law so the closed loop is not stiff even when M is huge.
    m_jq = min(params.M, max(2 * threshold_m_alpha_beta(params), 2.0))
    params_jq = replace(params, M=m_jq)
    jq_inner = jq_feedback(params_jq, default_jq_gamma(params_jq))
    epsp = min(_eps_prime(pot, params_jq, eta, init), 0.45 * eta)
    eta_kill = epsp / 2

    def surrogate_force_max(state):
        from .model import interaction_forces_from_deriv
        ft = interaction_forces_from_deriv(surrogate, state.x, guard=guard)
        return float(np.max(np.sqrt(np.sum(ft * ft, axis=-1))))

    phases = [
        Phase("jq_fictitious",
              fictitious_potential_control(pot, surrogate, jq_inner, guard),
              jq_cap,
              stop=lambda s: (max_speed(s) < epsp and surrogate_force_max(s) < eta / 2),
              stop_spec={"max_speed<": epsp, "max_surrogate_force<": eta / 2},
              require_stop=True),
        Phase("velocity_kill", velocity_kill(pot, params, eta_kill, dt), 40.0,
              stop=lambda s: max_speed(s) <= eta_kill * dt,
              stop_spec={"max_speed<=": eta_kill * dt},
              require_stop=True),
    ]
    traj = run_phases(init, pot, params, phases, dt=dt,
                      record_every=record_every, guard=guard)

    target_sep = 3.0 * L
    active = list(range(init.n))
    frozen = []
    while len(active) > 1:
        state = traj.final_state
        sub = state.x[active]
        ov = outer_vertex(sub)
        mover = active[ov.index]
        p0 = state.x[mover].copy()
        cone_half = (math.pi - ov.internal_angle) / 2
        z = _pick_extraction_direction(p0, ov.bisector, cone_half,
                                       state.x[frozen] if frozen else [])
        others = [i for i in range(init.n) if i != mover]
        reach = target_sep + float(np.max(np.sqrt(
            np.sum((state.x[others] - p0) ** 2, axis=-1))))
        p1 = p0 + reach * z
        duration = reach / qs_speed
        ref = line_reference(state.x, {mover: (p0, p1)}, state.t, duration)
        phase = Phase(
            f"extract_{mover}", pd_tracking(ref, 1.0, 2.0, pot, params, guard),
            duration + 10.0,
            stop=lambda s, mv=mover: _min_dist_to_others(s.x, mv) > target_sep,
            stop_spec={"min_dist_to_others>": target_sep},
            require_stop=True)
        traj.extend(run_phases(state, pot, params, [phase], dt=dt,
                               record_every=record_every, guard=guard))
        frozen.append(mover)
        active.remove(mover)

    state = traj.final_state
    settle = Phase("settle", hold_stations(state.x, pot, params, guard=guard), 10.0,
                   stop=lambda s: max_speed(s) < 1e-6,
                   stop_spec={"max_speed<": 1e-6})
    traj.extend(run_phases(state, pot, params, [settle], dt=dt,
                           record_every=record_every, guard=guard))
    r, _ = pairwise_distances(traj.final_state.x)
    traj.phases[-1].detail["terminal_min_distance"] = float(np.min(r))
    return traj


# ---------------------------------------------------------------------------
# Circular equidistributed placement and ring radius changes
# ---------------------------------------------------------------------------

def _line_point_distance(p, a, b):
    d = b - a
    nrm = np.linalg.norm(d)
    if nrm < 1e-30:
        return np.linalg.norm(p - a)
    return abs(float(np.cross(d / nrm, p - a)))


def choose_spread_center(x: np.ndarray, seed: int = 0,
                         max_trials: int = 1_000_000) -> np.ndarray:
    """Point near the centroid lying off every line through an agent pair."""
    x = np.asarray(x, dtype=float)
    scale = float(np.max(np.sqrt(np.sum((x - x.mean(axis=0)) ** 2, axis=-1))))
    scale = max(scale, 1.0)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    centroid = x.mean(axis=0)
    pairs = [(i, j) for i in range(len(x)) for j in range(i + 1, len(x))]
    cand = centroid.copy()
    for trial in range(max_trials):
        ok = all(_line_point_distance(cand, x[i], x[j]) > 1e-6 * scale
                 for i, j in pairs)
        if ok:
            return cand
        cand = centroid + rng.uniform(-0.1, 0.1, size=2) * scale * (1 + trial / 1000)
    raise GeometricPreconditionError("could not find a center off all pair lines")


def circular_placement(state: SwarmState, pot: RadialPotential,
                       params: ModelParams, R: float, L: float,
                       center=None, seed: int = 0, qs_speed: float = 0.5,
                       dt: float = 1e-2, record_every: int = 10,
                       guard: float = GUARD_RADIUS) -> Trajectory:
    """Steer far-separated agents onto an equidistributed circle of radius R.

    Agents move one at a time radially outward to radius R (largest radius
    first), then all interpolate their angles simultaneously to the equispaced
    targets; pairwise distances stay above L throughout when
    R > L/sin(min pairwise angle).
    """
    r, _ = pairwise_distances(state.x)
    if float(np.min(r)) <= L:
        raise GeometricPreconditionError(
            f"initial pairwise distances must exceed L = {L}")
    ctr = choose_spread_center(state.x, seed=seed) if center is None \
        else np.asarray(center, dtype=float)
    rel = state.x - ctr
    radii = np.sqrt(np.sum(rel * rel, axis=-1))
    angles = np.arctan2(rel[:, 1], rel[:, 0])
    n = state.n
    seps = []
    for i in range(n):
        for j in range(i + 1, n):
            d = abs(math.remainder(angles[i] - angles[j], 2 * math.pi))
            seps.append(abs(d))
    theta_min = min(seps)
    if theta_min <= 0:
        raise GeometricPreconditionError("two agents share a ray from the center")
    if R <= L / math.sin(theta_min):
        raise GeometricPreconditionError(
            f"R = {R} must exceed L/sin(theta_min) = {L / math.sin(theta_min):.6g}")
    if R < float(np.max(radii)):
        raise GeometricPreconditionError(
            f"R = {R} must be at least the largest center distance "
            f"{float(np.max(radii)):.6g} so all radial moves are outward")

    traj = None
    current = state
    for i in np.argsort(-radii, kind="stable"):
        p0 = current.x[i].copy()
        reli = p0 - ctr
        rr = float(np.linalg.norm(reli))
        p1 = ctr + reli / rr * R
        dist = float(np.linalg.norm(p1 - p0))
        if dist < 1e-12:
            continue
        duration = max(dist / qs_speed, 1.0)
        ref = line_reference(current.x, {int(i): (p0, p1)}, current.t, duration)
        phase = Phase(
            f"radial_move_{int(i)}", pd_tracking(ref, 1.0, 2.0, pot, params, guard),
            duration + 10.0,
            stop=lambda s, ii=int(i), tgt=p1: (
                float(np.linalg.norm(s.x[ii] - tgt)) < 1e-7
                and max_speed(s) < 1e-7),
            stop_spec={"|x - target|<": 1e-7, "max_speed<": 1e-7},
            require_stop=True)
        part = run_phases(current, pot, params, [phase], dt=dt,
                          record_every=record_every, guard=guard)
        if traj is None:
            traj = part
        else:
            traj.extend(part)
        current = traj.final_state

    rel = current.x - ctr
    ang_now = np.arctan2(rel[:, 1], rel[:, 0]) % (2 * math.pi)
    order = np.argsort(ang_now, kind="stable")
    target_ang = 2 * math.pi * np.arange(1, n + 1) / n

    max_move = float(np.max(np.abs(np.unwrap(
        target_ang - ang_now[order])))) * R
    duration = max(max_move / qs_speed, 1.0)
    t0 = current.t
    base = current.x.copy()

    a_start = ang_now[order]
    a_end = target_ang.copy()
    # take the short way around per agent
    a_end = a_start + np.array([math.remainder(e - s, 2 * math.pi)
                                for s, e in zip(a_start, a_end)])

    def ref(t):
        s = np.clip((t - t0) / duration, 0.0, 1.0)
        sig, sigd, sigdd = _smoothstep(s), _smoothstep_d(s), _smoothstep_dd(s)
        a = (1 - sig) * a_start + sig * a_end
        ad = sigd / duration * (a_end - a_start)
        add = sigdd / duration**2 * (a_end - a_start)
        xref = base.copy()
        vref = np.zeros_like(base)
        aref = np.zeros_like(base)
        ca, sa = np.cos(a), np.sin(a)
        xref[order] = ctr + R * np.stack([ca, sa], axis=1)
        vref[order] = R * ad[:, None] * np.stack([-sa, ca], axis=1)
        aref[order] = R * (add[:, None] * np.stack([-sa, ca], axis=1)
                           - (ad**2)[:, None] * np.stack([ca, sa], axis=1))
        return xref, vref, aref

    spec = flock_ring_spec(ctr, R, n)
    ring_x = ring_positions(spec)

    def at_targets(s):
        d2 = np.sum((s.x[:, None, :] - ring_x[None, :, :]) ** 2, axis=-1)
        return (float(np.max(np.min(d2, axis=1))) < 1e-14
                and max_speed(s) < 1e-7)

    phase = Phase(
        "angular_equidistribute", pd_tracking(ref, 1.0, 2.0, pot, params, guard),
        duration + 15.0, stop=at_targets,
        stop_spec={"max|x - ring|^2<": 1e-14, "max_speed<": 1e-7},
        require_stop=True)
    part = run_phases(current, pot, params, [phase], dt=dt,
                      record_every=record_every, guard=guard)
    if traj is None:
        traj = part
    else:
        traj.extend(part)
    r, _ = pairwise_distances(traj.final_state.x)
    traj.phases[-1].detail["terminal_min_distance"] = float(np.min(r))
    traj.phases[-1].detail["center"] = [float(ctr[0]), float(ctr[1])]
    return traj


def radius_shrink(state: SwarmState, pot: RadialPotential, params: ModelParams,
                  kind: str, R_from: float, R_to: float, duration: float,
                  center=None, vbar=None, rbar: Optional[float] = None,
                  orientation: int = 1, dt: float = 1e-2, record_every: int = 10,
                  t_tail: float = 15.0, guard: float = GUARD_RADIUS) -> Trajectory:
    """Quasi-statically change a ring's radius from R_from to R_to.

    kind "flock": the ring translates rigidly at the flock velocity while the
    radius interpolates. kind "mill": the ring rotates at omega(t) =
    cruise/R(t) while shrinking. Tracks the moving ring with the cancel-plus-PD
    law; the realized control is audited against the far-range derivative
    bound plus (for mills) the centripetal budget alpha/(beta rbar).
    """
    if kind not in ("flock", "mill"):
        raise ValueError("kind must be 'flock' or 'mill'")
    rbar = min(R_from, R_to) if rbar is None else rbar
    if min(R_from, R_to) < rbar:
        raise ValueError("both radii must stay at or above rbar")
    bounds = force_bounds(pot, rbar, params.N)
    budget = bounds.tilde_m_n
    if kind == "mill":
        budget = budget + params.alpha / (params.beta * rbar)
    if not math.isfinite(budget) or params.M < budget:
        warnings.warn(f"control budget {budget:.6g} exceeds M = {params.M}; "
                      "realized controls are audited", stacklevel=2)

    ctr0 = state.x.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    rel = state.x - ctr0
    base_ang = np.arctan2(rel[:, 1], rel[:, 0])
    c = params.cruise_speed
    n = state.n
    t0 = state.t
    if kind == "flock":
        if vbar is None:
            vm = state.v.mean(axis=0)
            nv = float(np.hypot(*vm))
            vbar = c * vm / nv if nv > 1e-12 else np.array([c, 0.0])
        else:
            vbar = np.asarray(vbar, dtype=float)

    dR = (R_to - R_from) / duration

    def radius_at(t):
        s = np.clip((t - t0) / duration, 0.0, 1.0)
        return R_from + (R_to - R_from) * s, (dR if 0 <= (t - t0) <= duration else 0.0)

    def theta_at(t):
        # integral of orientation*c/R over [t0, t]
        tt = np.clip(t - t0, 0.0, duration)
        if abs(R_to - R_from) < 1e-15:
            th = orientation * c * tt / R_from
        else:
            th = orientation * c / dR * math.log((R_from + dR * tt) / R_from)
        if t - t0 > duration:
            th += orientation * c * (t - t0 - duration) / R_to
        return th

    def ref(t):
        R, Rd = radius_at(t)
        if kind == "flock":
            ang = base_ang
            angd = 0.0
            drift = np.outer(np.ones(n), vbar) * (t - t0)
            vdrift = np.outer(np.ones(n), vbar)
        else:
            th = theta_at(t)
            ang = base_ang + th
            R_now = R
            angd = orientation * c / R_now
            drift = 0.0
            vdrift = 0.0
        ca, sa = np.cos(ang), np.sin(ang)
        uhat = np.stack([ca, sa], axis=1)
        that = np.stack([-sa, ca], axis=1)
        xref = ctr0 + R * uhat + drift
        vref = Rd * uhat + (R * angd) * that + vdrift
        if kind == "flock":
            aref = np.zeros_like(xref)
        else:
            R_now = R
            angdd = -orientation * c * Rd / R_now**2
            aref = (-(R_now * angd**2)) * uhat \
                + (2 * Rd * angd + R_now * angdd) * that
        return xref, np.broadcast_to(vref, xref.shape).copy() if np.isscalar(vref) else vref, aref

    phases = [
        Phase("radius_interpolate", pd_tracking(ref, 1.0, 2.0, pot, params, guard),
              duration, stop=None, stop_spec={"t_max": duration}),
        Phase("settle", pd_tracking(ref, 1.0, 2.0, pot, params, guard), t_tail,
              stop=None, stop_spec={"t_max": t_tail}),
    ]
    traj = run_phases(state, pot, params, phases, dt=dt,
                      record_every=record_every, guard=guard)
    final = traj.final_state
    if kind == "mill":
        diag = mill_diagnostics(final, params, R_target=R_to, center=ctr0).max_abs()
    else:
        xr, _, _ = ref(final.t)
        diag = float(np.max(np.sqrt(np.sum((final.x - xr) ** 2, axis=-1))))
    traj.phases[-1].detail.update({
        "terminal_diag": diag,
        "budget": budget,
        "realized_max_u": max(traj.step_max_u) if traj.step_max_u else 0.0,
    })
    return traj


# ---------------------------------------------------------------------------
# Serializable phase plans (file format used by the CLI `maneuver` command)
# ---------------------------------------------------------------------------

_METRICS = {
    "max_speed": lambda s, pot, params, guard: max_speed(s),
    "max_force": lambda s, pot, params, guard: max_force(s, pot, guard),
    "polarization": lambda s, pot, params, guard: order_parameters(s).polarization,
    "ang_momentum": lambda s, pot, params, guard: order_parameters(s).ang_momentum,
    "mean_radius": lambda s, pot, params, guard: order_parameters(s).mean_radius,
    "mean_speed": lambda s, pot, params, guard: order_parameters(s).mean_speed,
    "min_pairwise": lambda s, pot, params, guard: float(np.min(pairwise_distances(s.x)[0])),
}

_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def condition_from_spec(spec: dict, pot, params, guard=GUARD_RADIUS):
    """Build a stop predicate from {"metric", "op", "value"} or {"all": [...]}."""
    if "all" in spec:
        subs = [condition_from_spec(s, pot, params, guard) for s in spec["all"]]
        return lambda state: all(f(state) for f in subs)
    metric = spec["metric"]
    if metric not in _METRICS:
        raise ValueError(f"unknown stop metric {metric!r}")
    op = spec.get("op", "<")
    if op not in _OPS:
        raise ValueError(f"unknown comparison {op!r}")
    value = float(spec["value"])
    fn = _METRICS[metric]
    cmp = _OPS[op]
    return lambda state: cmp(fn(state, pot, params, guard), value)


def plan_from_config(plan: list, pot, params, guard=GUARD_RADIUS) -> list:
    """Phases from a JSON-style list of {"law": {...}, "stop": {...}} records."""
    from .controllers import law_from_config

    phases = []
    for k, rec in enumerate(plan):
        rec = dict(rec)
        law_cfg = rec.pop("law")
        stop_cfg = dict(rec.pop("stop"))
        name = rec.pop("name", f"phase_{k}")
        if rec:
            raise ValueError(f"unknown keys in phase record: {sorted(rec)}")
        t_max = float(stop_cfg.pop("t_max"))
        cond = stop_cfg.pop("condition", None)
        if stop_cfg:
            raise ValueError(f"unknown keys in stop record: {sorted(stop_cfg)}")
        stop = condition_from_spec(cond, pot, params, guard) if cond else None
        phases.append(Phase(
            name=name, law=law_from_config(law_cfg, pot, params), t_max=t_max,
            stop=stop, stop_spec={"t_max": t_max, **({"condition": cond} if cond else {})}))
    return phases
