"""Feedback laws for the controlled swarm, as composable ControlLaw constructors.

All laws are pure maps (t, state) -> (N, 2) controls; the simulation engine
applies the hard saturation max_i |u_i| <= M downstream and records both the
raw and saturated magnitudes for budget audits.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .model import (
    GUARD_RADIUS,
    ModelParams,
    RadialPotential,
    SwarmState,
    force_bounds,
    interaction_forces,
    interaction_forces_from_deriv,
    perp,
    rotation,
    threshold_m_alpha_beta,
)
from .dynamics import ControlLaw, saturate, self_propulsion


# ---------------------------------------------------------------------------
# Speed-damping stabilizer (drives velocities and, with them, forces to zero)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JQParams:
    """Gain shaping for the speed-damping feedback; gamma > max(1, sqrt(alpha^3/beta)/M)."""

    gamma: float


def default_jq_gamma(params: ModelParams, margin: float = 1.05) -> JQParams:
    bound = max(1.0, math.sqrt(params.alpha**3 / params.beta) / params.M)
    return JQParams(gamma=margin * bound)


def jq_feedback(params: ModelParams, jq: Optional[JQParams] = None) -> ControlLaw:
    """Piecewise speed-damping feedback: full braking at moderate speeds,
    linear near zero, tapering to zero at high speeds.

    With c = sqrt(alpha/beta), a1 = c/gamma, a2 = gamma*c the per-agent control is

        u_i = 0                                 if |v_i| >= 2 a2
        u_i = -M (v_i/|v_i|) (2 - |v_i|/a2)     if a2 < |v_i| < 2 a2
        u_i = -M  v_i/|v_i|                     if a1 <= |v_i| <= a2
        u_i = -(M gamma / c) v_i                if |v_i| < a1

    which is globally Lipschitz, continuous at the three breakpoints, and
    bounded by M. It makes the total energy nonincreasing.
    """
    if jq is None:
        jq = default_jq_gamma(params)
    bound = max(1.0, math.sqrt(params.alpha**3 / params.beta) / params.M)
    if jq.gamma <= bound:
        raise ValueError(f"gamma must exceed max(1, sqrt(alpha^3/beta)/M) = {bound}")
    c = params.cruise_speed
    a1 = c / jq.gamma
    a2 = jq.gamma * c
    m = params.M

    def law(t, state):
        v = state.v
        s = np.sqrt(np.sum(v * v, axis=-1))
        k = np.empty_like(s)
        inner = s < a1
        k[inner] = m * jq.gamma / c
        flat = (s >= a1) & (s <= a2)
        k[flat] = m / s[flat]
        taper = (s > a2) & (s < 2 * a2)
        k[taper] = (m / s[taper]) * (2.0 - s[taper] / a2)
        k[s >= 2 * a2] = 0.0
        return -k[:, None] * v

    return ControlLaw("jq_feedback", law)


def velocity_kill(pot: Optional[RadialPotential], params: ModelParams,
                  eta: float, dt: float, guard: float = GUARD_RADIUS) -> ControlLaw:
    """Cancel the dynamics and brake each agent at constant rate eta.

    u_i = -(alpha - beta|v_i|^2) v_i + F_i(x) - eta v_i/|v_i| while
    |v_i| > eta*dt; below that the braking term is dropped and the control
    holds the velocity (closed loop dv/dt = 0). Each agent reaches rest in
    time |v_i|/eta with braking displacement at most |v_i|^2/(2 eta).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    hold_below = eta * dt

    def law(t, state):
        u = -self_propulsion(state.v, params)
        if pot is not None:
            u = u + interaction_forces(pot, state.x, guard=guard, t=t)
        s = np.sqrt(np.sum(state.v**2, axis=-1))
        braking = s > hold_below
        u[braking] -= eta * state.v[braking] / s[braking, None]
        worst = float(np.max(np.sqrt(np.sum(u * u, axis=-1))))
        if worst > params.M:
            warnings.warn(
                f"velocity_kill request {worst:.3g} exceeds M={params.M}; "
                "the state is not close enough to rest-with-small-forces",
                stacklevel=2)
        return u

    return ControlLaw("velocity_kill", law)


def cancel_and_inject(pot: Optional[RadialPotential], params: ModelParams,
                      w_law: ControlLaw, w_bound: float,
                      guard: float = GUARD_RADIUS) -> ControlLaw:
    """Exactly cancel self-propulsion and interactions and add an inner control w.

    The closed loop becomes the double integrator dx_i = v_i, dv_i = w_i; w is
    saturated at w_bound before injection.
    """

    def law(t, state):
        u = -self_propulsion(state.v, params)
        if pot is not None:
            u = u + interaction_forces(pot, state.x, guard=guard, t=t)
        return u + saturate(w_law(t, state), w_bound)

    return ControlLaw(f"cancel+{w_law.name}", law)


def flock_hold(pot: RadialPotential, guard: float = GUARD_RADIUS) -> ControlLaw:
    """u_i = F_i(x): with equal velocities the relative positions freeze and each
    speed follows ds/dt = alpha s - beta s^3 toward cruise."""

    def law(t, state):
        return interaction_forces(pot, state.x, guard=guard, t=t)

    return ControlLaw("flock_hold", law)


# ---------------------------------------------------------------------------
# Quasi-static velocity-direction steering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuasiStaticPlan:
    """Rotate the common flock velocity from angle theta0 to thetaT over duration T."""

    theta0: float
    thetaT: float
    T: float
    v0: tuple  # reference velocity at t = 0; |v0| = cruise speed

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("plan duration must be positive")


def make_quasi_static_plan(theta0: float, thetaT: float, T: float,
                           params: ModelParams) -> QuasiStaticPlan:
    c = params.cruise_speed
    return QuasiStaticPlan(theta0, thetaT, T,
                           (c * math.cos(theta0), c * math.sin(theta0)))


def quasi_static_rotation(M: float, plan: QuasiStaticPlan) -> ControlLaw:
    """u_i = -M (v_i - vref(t)) with vref rotating from angle theta0 to thetaT
    linearly over [0, T] and held at thetaT afterwards."""
    v0 = np.asarray(plan.v0, dtype=float)

    def law(t, state):
        tau = min(max(t / plan.T, 0.0), 1.0)
        theta = plan.theta0 + tau * (plan.thetaT - plan.theta0)
        vref = rotation(theta - plan.theta0) @ v0
        return -M * (state.v - vref)

    return ControlLaw("quasi_static_rotation", law)


# ---------------------------------------------------------------------------
# Mill-shaping feedbacks
# ---------------------------------------------------------------------------

def mill_centripetal(pot: RadialPotential, R: float, center=(0.0, 0.0),
                     guard: float = GUARD_RADIUS) -> ControlLaw:
    """u_i = F_i - (|v_i|^2/R) (x_i - c)/|x_i - c|: cancel interactions and supply
    the centripetal force of a circle of radius R about the center."""
    cvec = np.asarray(center, dtype=float)

    def law(t, state):
        rel = state.x - cvec
        radii = np.sqrt(np.sum(rel * rel, axis=-1))
        if np.any(radii < guard):
            raise ValueError("mill_centripetal: agent at the mill center")
        f = interaction_forces(pot, state.x, guard=guard, t=t)
        speed2 = np.sum(state.v**2, axis=-1)
        return f - (speed2 / R)[:, None] * rel / radii[:, None]

    return ControlLaw("mill_centripetal", law)


def mill_velocity_feedback(M: float, params: ModelParams, center=None,
                           guard: float = GUARD_RADIUS) -> ControlLaw:
    """u_i = -M (v_i - cruise * tangent_i): proportional regulation of each
    velocity to the unit tangential direction about the centroid."""
    c = params.cruise_speed
    fixed_center = None if center is None else np.asarray(center, dtype=float)

    def law(t, state):
        ctr = state.x.mean(axis=0) if fixed_center is None else fixed_center
        rel = state.x - ctr
        radii = np.sqrt(np.sum(rel * rel, axis=-1, keepdims=True))
        if np.any(radii < guard):
            raise ValueError("mill_velocity_feedback: agent at the centroid")
        target = c * perp(rel) / radii
        return -M * (state.v - target)

    return ControlLaw("mill_velocity_feedback", law)


# ---------------------------------------------------------------------------
# Instantaneous (one-step-lookahead) optimizing controls
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InstantaneousSpec:
    """Settings for the one-step-lookahead box-constrained controls.

    R_target is the desired configuration radius; v_bar is the desired common
    velocity (flock variant). lambda1/lambda2 weight |u| and |u|^2 in the mill
    variant, lam weights |u_i|^2 in the flock variant. unit_tangent switches
    the mill velocity target from cruise * x_perp/|x_perp|^2 (as stated) to the
    unit-tangent variant cruise * x_perp/|x_perp|.
    """

    dt_horizon: float = 0.1
    R_target: float = 1.0
    v_bar: Optional[tuple] = None
    lambda1: float = 0.1
    lambda2: float = 0.1
    lam: float = 0.1
    unit_tangent: bool = False

    def __post_init__(self):
        if self.dt_horizon <= 0:
            raise ValueError("dt_horizon must be positive")
        if min(self.lambda1, self.lambda2, self.lam) < 0:
            raise ValueError("penalty weights must be >= 0")


def _mill_objective_terms(state: SwarmState, pot: RadialPotential,
                          params: ModelParams, spec: InstantaneousSpec,
                          guard: float):
    """Precompute everything of the mill objective that does not depend on u."""
    dt = spec.dt_horizon
    f = interaction_forces(pot, state.x, guard=guard, t=state.t)
    xp = state.x + dt * state.v
    vp0 = state.v + dt * (self_propulsion(state.v, params) - f)
    xm = xp.mean(axis=0)
    rel = xp - xm
    r2 = np.sum(rel * rel, axis=-1)
    radius_cost = float(np.sum((r2 - spec.R_target**2) ** 2))
    denom = r2 if not spec.unit_tangent else np.sqrt(r2)
    denom = np.where(denom < guard, guard, denom)
    target = params.cruise_speed * perp(rel) / denom[:, None]
    n = state.n
    angles = 2 * np.pi * np.arange(n) / n
    rots = np.stack([np.stack([np.cos(angles), -np.sin(angles)], axis=1),
                     np.stack([np.sin(angles), np.cos(angles)], axis=1)], axis=1)
    return vp0, target, radius_cost, rots, dt


def _mill_objective_batch(cands: np.ndarray, vp0, target, radius_cost, rots, dt,
                          spec: InstantaneousSpec) -> np.ndarray:
    """Objective at each candidate shared control; cands is (m, 2)."""
    per_agent = np.einsum("nij,mj->mni", rots, cands)
    vp = vp0[None, :, :] + dt * per_agent
    vel_cost = np.sum(np.sqrt(np.sum((vp - target[None]) ** 2, axis=-1)), axis=-1)
    unorm = np.sqrt(np.sum(cands * cands, axis=-1))
    return vel_cost + radius_cost + spec.lambda1 * unorm + spec.lambda2 * unorm**2


def instantaneous_mill_control(state: SwarmState, pot: RadialPotential,
                               params: ModelParams, spec: InstantaneousSpec,
                               guard: float = GUARD_RADIUS,
                               grid: int = 41) -> np.ndarray:
    """Single shared control in [-1, 1]^2 minimizing the one-step-lookahead mill objective.

    Agent i receives the shared vector rotated by 2 pi i / N. Minimization is a
    coarse grid followed by projected-gradient refinement with numeric
    gradients; exact ties resolve to the lexicographically smallest candidate.
    """
    terms = _mill_objective_terms(state, pot, params, spec, guard)
    vp0, target, radius_cost, rots, dt = terms
    axis = np.linspace(-1.0, 1.0, grid)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    cands = np.stack([gx.ravel(), gy.ravel()], axis=1)
    vals = _mill_objective_batch(cands, *terms, spec)
    vmin = float(np.min(vals))
    ties = cands[vals == vmin]
    best = ties[np.lexsort((ties[:, 1], ties[:, 0]))][0].copy()

    def obj(u):
        return float(_mill_objective_batch(u[None, :], *terms, spec)[0])

    def grad(u):
        per_agent = np.einsum("nij,j->ni", rots, u)
        diff = vp0 + dt * per_agent - target
        norms = np.sqrt(np.sum(diff * diff, axis=-1))
        safe = norms > 1e-12
        g = dt * np.einsum("nji,nj->i", rots[safe], diff[safe] / norms[safe, None])
        unorm = float(np.hypot(u[0], u[1]))
        if unorm > 1e-12:
            g = g + spec.lambda1 * u / unorm
        return g + 2 * spec.lambda2 * u

    u = best.copy()
    fu = vmin
    alpha = 0.25
    for _ in range(25):
        g = grad(u)
        if float(np.hypot(g[0], g[1])) < 1e-8:
            break
        improved = False
        alpha = min(alpha * 2.0, 1.0)
        for _ in range(15):
            cand = np.clip(u - alpha * g, -1.0, 1.0)
            fc = obj(cand)
            if fc < fu - 1e-14:
                u, fu = cand, fc
                improved = True
                break
            alpha *= 0.5
        if not improved:
            break
    if fu < vmin:
        return u
    return best


def instantaneous_mill_law(pot: RadialPotential, params: ModelParams,
                           spec: InstantaneousSpec,
                           guard: float = GUARD_RADIUS) -> ControlLaw:
    """Closed-loop wrapper: re-solve the shared control and rotate it per agent."""
    def law(t, state):
        u = instantaneous_mill_control(state, pot, params, spec, guard=guard)
        n = state.n
        angles = 2 * np.pi * np.arange(n) / n
        out = np.empty((n, 2))
        out[:, 0] = np.cos(angles) * u[0] - np.sin(angles) * u[1]
        out[:, 1] = np.sin(angles) * u[0] + np.cos(angles) * u[1]
        return out

    return ControlLaw("instantaneous_mill", law)


def instantaneous_flock_control(state: SwarmState, pot: RadialPotential,
                                params: ModelParams, spec: InstantaneousSpec,
                                guard: float = GUARD_RADIUS,
                                max_iter: int = 200, gtol: float = 1e-8) -> np.ndarray:
    """Per-agent controls in [-1, 1]^2 minimizing |v_i' - vbar|^2 + radius term + lam |u_i|^2.

    The per-agent subproblems are separable; each is solved by projected
    gradient with backtracking on the one-step-lookahead prediction.
    """
    if spec.v_bar is None:
        raise ValueError("flock variant needs v_bar")
    if spec.lam <= 0:
        raise ValueError("flock variant needs lam > 0")
    dt = spec.dt_horizon
    vbar = np.asarray(spec.v_bar, dtype=float)
    f = interaction_forces(pot, state.x, guard=guard, t=state.t)
    xp = state.x + dt * state.v
    vp0 = state.v + dt * (self_propulsion(state.v, params) - f)
    xm = xp.mean(axis=0)
    r2 = np.sum((xp - xm) ** 2, axis=-1)
    radius_cost = (r2 - spec.R_target**2) ** 2  # constant in u

    def obj(u):
        vp = vp0 + dt * u
        return (np.sum((vp - vbar) ** 2, axis=-1) + radius_cost
                + spec.lam * np.sum(u * u, axis=-1))

    def grad(u):
        vp = vp0 + dt * u
        return 2 * dt * (vp - vbar) + 2 * spec.lam * u

    u = np.zeros_like(state.v)
    fu = obj(u)
    # 1/L step for the isotropic quadratic: a full gradient step lands on the
    # unconstrained minimizer, so the projected iteration converges immediately.
    lip = 2 * (dt * dt + spec.lam)
    for _ in range(max_iter):
        g = grad(u)
        gnorm = np.sqrt(np.sum(g * g, axis=-1))
        if float(np.max(gnorm)) < gtol:
            break
        alpha = np.full(state.n, 1.0 / lip)
        active = np.ones(state.n, dtype=bool)
        new_u = u.copy()
        new_f = fu.copy()
        for _ in range(40):
            cand = np.clip(u - alpha[:, None] * g, -1.0, 1.0)
            fc = obj(cand)
            better = active & (fc < fu - 1e-15)
            new_u[better] = cand[better]
            new_f[better] = fc[better]
            active = active & ~better
            if not np.any(active):
                break
            alpha[active] *= 0.5
        moved = np.max(np.abs(new_u - u))
        u, fu = new_u, new_f
        if moved < 1e-12:
            break
    return u


def instantaneous_flock_law(pot: RadialPotential, params: ModelParams,
                            spec: InstantaneousSpec,
                            guard: float = GUARD_RADIUS) -> ControlLaw:
    def law(t, state):
        return instantaneous_flock_control(state, pot, params, spec, guard=guard)

    return ControlLaw("instantaneous_flock", law)


# ---------------------------------------------------------------------------
# Fictitious-potential (surrogate interaction) control
# ---------------------------------------------------------------------------

def build_repulsive_surrogate(pot: RadialPotential, eta: float, R0: float,
                              enforce_tail: bool = True,
                              guard: float = GUARD_RADIUS) -> Callable:
    """Purely repulsive surrogate derivative r -> Utilde'(r).

    Utilde'(r) = phi(r) (U'(r) - sup U') - eta/(1+r^2) with phi the quintic
    smoothstep from 1 to 0 on [R0, R0+1]; strictly negative for all r > 0 and
    within sup U' + 2 eta of U' wherever the tail bound |U'| < eta holds.

    With enforce_tail the construction refuses potentials whose |U'| is not
    below eta on [R0, inf); enforce_tail=False bounds sup U' over (0, R0+1]
    only, which still yields a globally repulsive surrogate (used for
    unbounded-tail families, where no valid R0 exists).
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    if enforce_tail:
        bounds = force_bounds(pot, 1.0, 2)
        tilde = bounds.tilde_m_f
        if not math.isfinite(tilde):
            raise ValueError("sup U' is unbounded; no valid surrogate under the tail check")
        rs = np.geomspace(R0, 1e6, 20000)
        if float(np.max(np.abs(pot.deriv(rs)))) >= eta:
            raise ValueError(f"|U'| >= eta={eta} somewhere on [R0={R0}, inf); pick a larger R0")
    else:
        rs = np.geomspace(guard, R0 + 1.0, 20000)
        tilde = max(0.0, float(np.max(pot.deriv(rs))))

    def smooth_factor(r):
        x = np.clip(r - R0, 0.0, 1.0)
        return 1.0 - (6 * x**5 - 15 * x**4 + 10 * x**3)

    def surrogate_deriv(r):
        r = np.asarray(r, dtype=float)
        out = -eta / (1.0 + r * r)
        inside = r < R0 + 1.0
        if np.any(inside):
            ri = r[inside] if r.ndim else r
            contrib = smooth_factor(ri) * (pot.deriv(ri) - tilde)
            if r.ndim:
                out[inside] += contrib
            else:
                out = out + contrib
        return out

    surrogate_deriv.tilde_m_f = tilde
    surrogate_deriv.eta = eta
    surrogate_deriv.R0 = R0
    return surrogate_deriv


def fictitious_potential_control(pot: RadialPotential, surrogate_deriv: Callable,
                                 w_law: ControlLaw,
                                 guard: float = GUARD_RADIUS) -> ControlLaw:
    """u_i = F_i - Ftilde_i + w_i: swap the true interactions for the surrogate's."""

    def law(t, state):
        f = interaction_forces(pot, state.x, guard=guard, t=t)
        ft = interaction_forces_from_deriv(surrogate_deriv, state.x, guard=guard, t=t)
        return f - ft + w_law(t, state)

    return ControlLaw(f"fictitious+{w_law.name}", law)


# ---------------------------------------------------------------------------
# Sparsification and reference tracking
# ---------------------------------------------------------------------------

def sparsify(inner: ControlLaw, params: ModelParams, dt_slot: float) -> ControlLaw:
    """Round-robin single-agent activation: in time slot k only agent k mod N
    receives N x its inner control (saturated at M); over N consecutive slots
    the average equals the slot-frozen inner control."""
    if params.M <= params.N * threshold_m_alpha_beta(params):
        warnings.warn(
            f"sparsified control needs M > N*M_alpha_beta = "
            f"{params.N * threshold_m_alpha_beta(params):.6g}, got M = {params.M}",
            stacklevel=2)

    def law(t, state):
        k = int(math.floor(t / dt_slot + 1e-12))
        active = k % state.n
        out = np.zeros_like(state.v)
        out[active] = params.N * inner(t, state)[active]
        return saturate(out, params.M)

    return ControlLaw(f"sparse({inner.name})", law)


def pd_tracking(reference: Callable, k1: float, k2: float,
                pot: Optional[RadialPotential], params: ModelParams,
                guard: float = GUARD_RADIUS) -> ControlLaw:
    """Cancel the dynamics and track a reference path with PD feedback.

    reference(t) must return (xref, vref, aref), each (N, 2). The closed-loop
    error obeys e'' = -k1 e - k2 e' exactly; defaults (1, 2) critically damp it.
    """
    if k1 <= 0 or k2 <= 0:
        raise ValueError("gains must be positive")

    def law(t, state):
        xref, vref, aref = reference(t)
        u = -self_propulsion(state.v, params) + aref \
            - k1 * (state.x - xref) - k2 * (state.v - vref)
        if pot is not None:
            u = u + interaction_forces(pot, state.x, guard=guard, t=t)
        return u

    return ControlLaw("pd_tracking", law)


def hold_stations(xref: np.ndarray, pot: Optional[RadialPotential],
                  params: ModelParams, k1: float = 1.0, k2: float = 2.0,
                  guard: float = GUARD_RADIUS) -> ControlLaw:
    """PD station-keeping at fixed positions with zero reference velocity."""
    xref = np.asarray(xref, dtype=float).copy()
    zeros = np.zeros_like(xref)
    return pd_tracking(lambda t: (xref, zeros, zeros), k1, k2, pot, params, guard=guard)


# ---------------------------------------------------------------------------
# Config-driven construction
# ---------------------------------------------------------------------------

def law_from_config(cfg: dict, pot: Optional[RadialPotential],
                    params: ModelParams) -> ControlLaw:
    """Build a law from {"law": <name>, ...}; composite laws nest configs."""
    cfg = dict(cfg)
    name = cfg.pop("law", None)
    if name is None:
        raise ValueError("law config needs a 'law' key")
    if name == "zero":
        _reject_extra(name, cfg)
        from .dynamics import zero_law
        return zero_law()
    if name == "jq":
        gamma = cfg.pop("gamma", None)
        _reject_extra(name, cfg)
        return jq_feedback(params, JQParams(gamma) if gamma is not None else None)
    if name == "flock_hold":
        _reject_extra(name, cfg)
        return flock_hold(pot)
    if name == "velocity_kill":
        eta = cfg.pop("eta")
        dt = cfg.pop("dt")
        _reject_extra(name, cfg)
        return velocity_kill(pot, params, eta, dt)
    if name == "quasi_static_rotation":
        plan = make_quasi_static_plan(cfg.pop("theta0"), cfg.pop("thetaT"),
                                      cfg.pop("T"), params)
        gain = cfg.pop("gain", params.M)
        _reject_extra(name, cfg)
        return quasi_static_rotation(gain, plan)
    if name == "mill_centripetal":
        R = cfg.pop("R")
        center = cfg.pop("center", (0.0, 0.0))
        _reject_extra(name, cfg)
        return mill_centripetal(pot, R, center)
    if name == "mill_velocity_feedback":
        gain = cfg.pop("gain", params.M)
        center = cfg.pop("center", None)
        _reject_extra(name, cfg)
        return mill_velocity_feedback(gain, params, center)
    if name == "instantaneous_mill":
        spec = _instant_spec(cfg)
        _reject_extra(name, cfg)
        return instantaneous_mill_law(pot, params, spec)
    if name == "instantaneous_flock":
        spec = _instant_spec(cfg)
        _reject_extra(name, cfg)
        return instantaneous_flock_law(pot, params, spec)
    if name == "sparsify":
        inner = law_from_config(cfg.pop("inner"), pot, params)
        dt_slot = cfg.pop("dt_slot")
        _reject_extra(name, cfg)
        return sparsify(inner, params, dt_slot)
    raise ValueError(f"unknown law {name!r}")


def _instant_spec(cfg: dict) -> InstantaneousSpec:
    kwargs = {}
    for key in ("dt_horizon", "R_target", "lambda1", "lambda2", "lam"):
        if key in cfg:
            kwargs[key] = float(cfg.pop(key))
    if "v_bar" in cfg:
        kwargs["v_bar"] = tuple(cfg.pop("v_bar"))
    if "unit_tangent" in cfg:
        kwargs["unit_tangent"] = bool(cfg.pop("unit_tangent"))
    return InstantaneousSpec(**kwargs)


def _reject_extra(name: str, cfg: dict):
    if cfg:
        raise ValueError(f"unknown keys for law {name!r}: {sorted(cfg)}")
