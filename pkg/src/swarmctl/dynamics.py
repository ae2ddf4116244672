"""Time integration of the controlled swarm, control saturation and trajectory recording.

The integrator is classical fixed-step RK4 with the control law re-evaluated
(and saturated) at every internal stage state. Everything is deterministic:
two runs with identical inputs produce bit-identical trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .model import (
    GUARD_RADIUS,
    ModelParams,
    RadialPotential,
    SwarmState,
    interaction_forces,
    perp,
    total_energy,
)


class NonFiniteStateError(RuntimeError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"non-finite state at t={t:.6g}")


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings.

    record_every is the sample stride in steps; seed feeds the Philox
    generator used for random initial conditions.
    """

    dt: float = 1e-2
    t_end: float = 10.0
    record_every: int = 10
    seed: int = 0
    guard: float = GUARD_RADIUS

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_end < self.dt:
            raise ValueError("t_end must be >= dt")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class ControlLaw:
    """Named map (t, state) -> (N, 2) control array.

    The engine saturates the output so that max_i |u_i| <= M; laws must be
    pure so stage re-evaluation inside a step is safe.
    """

    name: str
    eval: Callable[[float, SwarmState], np.ndarray]

    def __call__(self, t: float, state: SwarmState) -> np.ndarray:
        return self.eval(t, state)


def zero_law() -> ControlLaw:
    return ControlLaw("zero", lambda t, state: np.zeros_like(state.v))


def saturate(u: np.ndarray, m: float) -> np.ndarray:
    """Radially rescale any u_i with |u_i| > m down to norm m.

    A second corrective pass removes the ulp-level excess the rescaling
    round-off can leave, so the output norms never exceed m.
    """
    u = np.asarray(u, dtype=float)
    out = u.copy()
    for _ in range(3):
        norms = np.sqrt(np.sum(out * out, axis=-1))
        over = norms > m
        if not np.any(over):
            break
        scale = np.ones_like(norms)
        scale[over] = m / norms[over] * (1.0 - 1e-15)
        out = out * scale[..., None]
    return out


def self_propulsion(v: np.ndarray, params: ModelParams) -> np.ndarray:
    """(alpha - beta |v_i|^2) v_i."""
    speed2 = np.sum(v * v, axis=-1, keepdims=True)
    return (params.alpha - params.beta * speed2) * v


def rhs(state: SwarmState, pot: Optional[RadialPotential], params: ModelParams,
        u: np.ndarray, guard: float = GUARD_RADIUS):
    """Time derivative (dx, dv) of the controlled system.

    dv_i = (alpha - beta |v_i|^2) v_i - F_i(x) + u_i, with pot=None meaning
    no interaction term.
    """
    dv = self_propulsion(state.v, params) + u
    if pot is not None:
        dv = dv - interaction_forces(pot, state.x, guard=guard, t=state.t)
    return state.v.copy(), dv


def step(state: SwarmState, pot: Optional[RadialPotential], params: ModelParams,
         law: ControlLaw, dt: float, guard: float = GUARD_RADIUS) -> SwarmState:
    """One RK4 step; the control is re-evaluated and saturated at each stage."""

    def f(t, x, v):
        s = SwarmState(t, x, v)
        u = saturate(law(t, s), params.M)
        return rhs(s, pot, params, u, guard=guard)

    t, x, v = state.t, state.x, state.v
    k1x, k1v = f(t, x, v)
    k2x, k2v = f(t + dt / 2, x + dt / 2 * k1x, v + dt / 2 * k1v)
    k3x, k3v = f(t + dt / 2, x + dt / 2 * k2x, v + dt / 2 * k2v)
    k4x, k4v = f(t + dt, x + dt * k3x, v + dt * k3v)
    xn = x + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
    vn = v + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return SwarmState(t + dt, xn, vn)


@dataclass
class OrderParameters:
    polarization: float
    ang_momentum: float
    mean_radius: float
    mean_speed: float


def order_parameters(state: SwarmState) -> OrderParameters:
    """Velocity alignment, rotational coherence about the centroid, mean radius, mean speed.

    Degenerate denominators yield 0 by convention.
    """
    v = state.v
    speeds = np.sqrt(np.sum(v * v, axis=-1))
    total_speed = float(np.sum(speeds))
    pol = float(np.linalg.norm(v.sum(axis=0))) / total_speed if total_speed > 0 else 0.0

    xc = state.x - state.x.mean(axis=0)
    radii = np.sqrt(np.sum(xc * xc, axis=-1))
    denom = float(np.sum(radii * speeds))
    if denom > 0:
        ang = abs(float(np.sum(perp(xc) * v))) / denom
    else:
        ang = 0.0
    return OrderParameters(
        polarization=pol,
        ang_momentum=ang,
        mean_radius=float(radii.mean()),
        mean_speed=float(speeds.mean()),
    )


@dataclass
class PhaseRecord:
    """One maneuver phase: which law ran, when, and why it stopped."""

    name: str
    t_start: float
    t_end: float
    stop_kind: str  # "condition" | "t_max"
    detail: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    """Sampled record of a simulation run plus per-step control-magnitude audits."""

    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    controls: list = field(default_factory=list)          # post-saturation, at samples
    energy: list = field(default_factory=list)
    polarization: list = field(default_factory=list)
    ang_momentum: list = field(default_factory=list)
    mean_radius: list = field(default_factory=list)
    mean_speed: list = field(default_factory=list)
    step_times: list = field(default_factory=list)
    step_max_u: list = field(default_factory=list)         # post-saturation, every step
    step_max_u_raw: list = field(default_factory=list)     # pre-saturation, every step
    phases: list = field(default_factory=list)
    stop_reason: str = "t_end"

    @property
    def final_state(self) -> SwarmState:
        return self.states[-1]

    def record(self, state: SwarmState, u: np.ndarray, pot, guard):
        self.times.append(state.t)
        self.states.append(state.copy())
        self.controls.append(u.copy())
        self.energy.append(total_energy(state, pot, guard) if pot is not None
                           else 0.5 * float(np.sum(state.v * state.v)))
        op = order_parameters(state)
        self.polarization.append(op.polarization)
        self.ang_momentum.append(op.ang_momentum)
        self.mean_radius.append(op.mean_radius)
        self.mean_speed.append(op.mean_speed)

    def extend(self, other: "Trajectory"):
        """Append a continuation run, dropping its duplicated first sample."""
        skip = 1 if (self.times and other.times and other.times[0] <= self.times[-1]) else 0
        self.times += other.times[skip:]
        self.states += other.states[skip:]
        self.controls += other.controls[skip:]
        self.energy += other.energy[skip:]
        self.polarization += other.polarization[skip:]
        self.ang_momentum += other.ang_momentum[skip:]
        self.mean_radius += other.mean_radius[skip:]
        self.mean_speed += other.mean_speed[skip:]
        self.step_times += other.step_times
        self.step_max_u += other.step_max_u
        self.step_max_u_raw += other.step_max_u_raw
        self.phases += other.phases
        self.stop_reason = other.stop_reason

    def summary_dict(self) -> dict:
        return {
            "times": list(self.times),
            "V": list(self.energy),
            "polarization": list(self.polarization),
            "ang_momentum": list(self.ang_momentum),
            "mean_radius": list(self.mean_radius),
            "mean_speed": list(self.mean_speed),
        }

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary_dict(), fh)
            fh.write("\n")

    def to_csv(self, path):
        """One row per agent per sample: t,agent,x1,x2,v1,v2,u1,u2.

        Floats are written with repr (shortest round-trip decimal), which keeps
        identical runs byte-identical.
        """
        with open(path, "w") as fh:
            fh.write("t,agent,x1,x2,v1,v2,u1,u2\n")
            for t, s, u in zip(self.times, self.states, self.controls):
                ts = repr(float(t))
                for i in range(s.n):
                    row = (float(s.x[i, 0]), float(s.x[i, 1]), float(s.v[i, 0]),
                           float(s.v[i, 1]), float(u[i, 0]), float(u[i, 1]))
                    fh.write(ts + "," + str(i) + ","
                             + ",".join(repr(val) for val in row) + "\n")


def simulate(init: SwarmState, pot: Optional[RadialPotential], params: ModelParams,
             law: ControlLaw, config: SimConfig,
             stop: Optional[Callable[[SwarmState], bool]] = None) -> Trajectory:
    """Iterate RK4 steps from init.t to t_end, recording every record_every steps.

    An optional stop predicate is checked after every step; when it fires the
    final state is recorded and stop_reason is set to "condition". Non-finite
    states and collisions fail fast with the offending timestamp.
    """
    traj = Trajectory()
    state = init.copy()
    u0 = saturate(law(state.t, state), params.M)
    traj.record(state, u0, pot, config.guard)

    n_steps = int(round((config.t_end - init.t) / config.dt))
    for k in range(1, n_steps + 1):
        u_raw = law(state.t, state)
        u = saturate(u_raw, params.M)
        traj.step_times.append(state.t)
        traj.step_max_u_raw.append(float(np.max(np.sqrt(np.sum(u_raw**2, axis=-1)))))
        traj.step_max_u.append(float(np.max(np.sqrt(np.sum(u**2, axis=-1)))))

        state = step(state, pot, params, law, config.dt, guard=config.guard)
        if not state.is_finite():
            raise NonFiniteStateError(state.t)

        done = stop is not None and stop(state)
        if k % config.record_every == 0 or k == n_steps or done:
            u_rec = saturate(law(state.t, state), params.M)
            traj.record(state, u_rec, pot, config.guard)
        if done:
            traj.stop_reason = "condition"
            break
    return traj


def random_state(params: ModelParams, box: float = 2.0, speed: float = 1.0,
                 seed: int = 0, t0: float = 0.0) -> SwarmState:
    """Positions uniform in [-box, box]^2, velocities uniform in the speed disk.

    Uses numpy's counter-based Philox generator, keyed by the 64-bit seed, so
    draws are reproducible and independent streams can be split by seed.
    """
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    x = rng.uniform(-box, box, size=(params.N, 2))
    ang = rng.uniform(0, 2 * np.pi, size=params.N)
    rad = speed * np.sqrt(rng.uniform(0, 1, size=params.N))
    v = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
    return SwarmState(t0, x, v)


def max_speed(state: SwarmState) -> float:
    return float(np.max(np.sqrt(np.sum(state.v**2, axis=-1))))


def max_force(state: SwarmState, pot: RadialPotential, guard: float = GUARD_RADIUS) -> float:
    f = interaction_forces(pot, state.x, guard=guard, t=state.t)
    return float(np.max(np.sqrt(np.sum(f**2, axis=-1))))
