"""Equilibrium rings, the mill radius equation, reduced-order mill stability, and manifold distances.

A mill ring of N agents at radius R rotating at angular velocity
omega = sqrt(alpha/beta)/R is an exact solution of the uncontrolled dynamics
exactly when R solves the force balance

    sum_{p=1..N-1} sin(p pi / N) * [U'(2 R sin(p pi / N)) - omega^2 * 2 R sin(p pi / N)] = 0.

Flock rings are the omega = 0 case. The same chord-length kernel
phi(r) = (1/N) sum_j sin(pi j/N) U'(2 (R+r) sin(pi j/N)) drives the
rotationally-symmetric reduced system used for the linear stability analysis;
at a solved radius phi(0) = omega^2 R holds identically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .model import (
    ModelParams,
    RadialPotential,
    PowerLawPotential,
    SwarmState,
    perp,
    rotation,
)


class NoBracketError(ValueError):
    """The residual does not change sign on the requested bracket."""


@dataclass(frozen=True)
class RingSpec:
    """A flock-ring or mill-ring reference configuration."""

    center: tuple
    R: float
    omega: float
    theta: float
    orientation: int
    N: int

    def __post_init__(self):
        if self.R <= 0:
            raise ValueError("ring radius must be positive")
        if self.orientation not in (-1, 1):
            raise ValueError("orientation must be +1 or -1")
        if self.N < 2:
            raise ValueError("ring needs N >= 2")


def mill_ring_spec(center, R, params: ModelParams, N: int,
                   theta: float = 0.0, orientation: int = 1) -> RingSpec:
    """RingSpec with the mill angular velocity omega = orientation*cruise/R."""
    return RingSpec(tuple(center), float(R),
                    orientation * params.cruise_speed / R, theta, orientation, N)


def flock_ring_spec(center, R, N: int, theta: float = 0.0) -> RingSpec:
    return RingSpec(tuple(center), float(R), 0.0, theta, 1, N)


def ring_positions(spec: RingSpec) -> np.ndarray:
    """Equispaced points on the circle: c + R * Rot(theta) (cos(2 pi i/N), sin(2 pi i/N))."""
    i = np.arange(spec.N)
    ang = 2 * np.pi * i / spec.N
    pts = spec.R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return np.asarray(spec.center, dtype=float) + pts @ rotation(spec.theta).T


def ring_state(spec: RingSpec, params: ModelParams, kind: str = "mill",
               vbar=None, t0: float = 0.0) -> SwarmState:
    """State on a ring: tangential cruise velocities (mill), common vbar (flock), or rest.

    For the flock kind vbar must have norm cruise_speed.
    """
    x = ring_positions(spec)
    if kind == "mill":
        rel = x - np.asarray(spec.center, dtype=float)
        radii = np.sqrt(np.sum(rel * rel, axis=-1, keepdims=True))
        v = spec.orientation * params.cruise_speed * perp(rel) / radii
    elif kind == "flock":
        vbar = np.asarray(vbar, dtype=float)
        if abs(float(np.hypot(*vbar)) - params.cruise_speed) > 1e-9:
            raise ValueError("flock velocity must have norm sqrt(alpha/beta)")
        v = np.tile(vbar, (spec.N, 1))
    elif kind == "rest":
        v = np.zeros_like(x)
    else:
        raise ValueError(f"unknown ring state kind {kind!r}")
    return SwarmState(t0, x, v)


# ---------------------------------------------------------------------------
# Mill radius equation
# ---------------------------------------------------------------------------

def mill_radius_residual(pot: RadialPotential, params: ModelParams, n_agents: int,
                         R: float, mill: bool = True) -> float:
    """Left-hand side of the ring force balance at radius R (omega = 0 when mill=False)."""
    if R <= 0:
        raise ValueError("radius must be positive")
    p = np.arange(1, n_agents)
    s = np.sin(p * np.pi / n_agents)
    chord = 2 * R * s
    omega2 = (params.alpha / params.beta) / R**2 if mill else 0.0
    return float(np.sum(s * (pot.deriv(chord) - omega2 * chord)))


def scan_mill_brackets(pot: RadialPotential, params: ModelParams, n_agents: int,
                       lo: float = 1e-2, hi: float = 1e2, n: int = 200,
                       mill: bool = True) -> list:
    """Sign-change brackets of the residual on a log grid of radii."""
    rs = np.geomspace(lo, hi, n)
    vals = [mill_radius_residual(pot, params, n_agents, float(r), mill=mill) for r in rs]
    out = []
    for k in range(n - 1):
        if vals[k] == 0.0:
            out.append((float(rs[k]), float(rs[k])))
        elif vals[k] * vals[k + 1] < 0:
            out.append((float(rs[k]), float(rs[k + 1])))
    return out


def _bisect(fn, lo: float, hi: float, xtol: float = 1e-12, ftol: float = 1e-12,
            max_iter: int = 300) -> float:
    flo = fn(lo)
    fhi = fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise NoBracketError(f"no sign change on [{lo}, {hi}]")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0 or (hi - lo < xtol and abs(fm) < ftol):
            return mid
        if hi - lo < 4 * np.finfo(float).eps * max(1.0, abs(mid)):
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def mill_radius_roots(pot: RadialPotential, params: ModelParams, n_agents: int,
                      lo: float = 1e-2, hi: float = 1e2, mill: bool = True) -> list:
    """All ring-balance roots found on [lo, hi], ascending."""
    roots = []
    for a, b in scan_mill_brackets(pot, params, n_agents, lo, hi, mill=mill):
        if a == b:
            roots.append(a)
        else:
            roots.append(_bisect(
                lambda r: mill_radius_residual(pot, params, n_agents, r, mill=mill), a, b))
    return roots


def mill_radius_solve(pot: RadialPotential, params: ModelParams, n_agents: int,
                      bracket=None, mill: bool = True) -> float:
    """Bisect the ring balance to |residual| < 1e-12 and bracket width < 1e-12.

    Without an explicit bracket the residual is scanned on [1e-2, 1e2] and the
    smallest root is returned.
    """
    fn = lambda r: mill_radius_residual(pot, params, n_agents, r, mill=mill)
    if bracket is not None:
        return _bisect(fn, float(bracket[0]), float(bracket[1]))
    roots = mill_radius_roots(pot, params, n_agents, mill=mill)
    if not roots:
        raise NoBracketError("no sign change found on the default scan range [1e-2, 1e2]")
    return roots[0]


# ---------------------------------------------------------------------------
# Rotationally-symmetric reduced system
# ---------------------------------------------------------------------------

def phi_of_r(pot: RadialPotential, n_agents: int, R: float, r: float) -> float:
    """Radial component of the ring interaction force at ring radius R + r."""
    j = np.arange(1, n_agents)
    s = np.sin(j * np.pi / n_agents)
    arg = 2 * (R + r) * s
    if np.any(arg <= 0):
        raise ValueError("phi requires R + r > 0")
    return float(np.sum(s * pot.deriv(arg))) / n_agents


@dataclass
class ReducedMillState:
    """Radial perturbation r, angle mismatch gamma, speed perturbation w."""

    r: float
    gamma: float
    w: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r, self.gamma, self.w])


def reduced_mill_rhs(s: ReducedMillState, pot: RadialPotential, params: ModelParams,
                     n_agents: int, R: float) -> np.ndarray:
    """Time derivative (dr, dgamma, dw) of the rotationally-symmetric reduced system."""
    c = params.cruise_speed
    speed = c + s.w
    if speed <= 0:
        raise ValueError("reduced system needs cruise + w > 0")
    if R + s.r <= 0:
        raise ValueError("reduced system needs R + r > 0")
    ph = phi_of_r(pot, n_agents, R, s.r)
    dr = speed * math.sin(s.gamma)
    dgamma = (speed / (R + s.r) - ph / speed) * math.cos(s.gamma)
    dw = -(2 * math.sqrt(params.alpha * params.beta) * s.w
           + params.beta * s.w**2) * speed - ph * math.sin(s.gamma)
    return np.array([dr, dgamma, dw])


def integrate_reduced_mill(s0: ReducedMillState, pot: RadialPotential,
                           params: ModelParams, n_agents: int, R: float,
                           dt: float = 1e-3, t_end: float = 50.0) -> np.ndarray:
    """RK4 on the reduced system; returns the (n_steps+1, 3) state history."""
    f = lambda y: reduced_mill_rhs(ReducedMillState(*y), pot, params, n_agents, R)
    y = s0.as_array()
    n = int(round(t_end / dt))
    out = np.empty((n + 1, 3))
    out[0] = y
    for k in range(n):
        k1 = f(y)
        k2 = f(y + dt / 2 * k1)
        k3 = f(y + dt / 2 * k2)
        k4 = f(y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out[k + 1] = y
    return out


def phi_prime0_central(pot: RadialPotential, n_agents: int, R: float) -> float:
    """phi'(0) by central finite difference with step 1e-6 * max(1, R)."""
    h = 1e-6 * max(1.0, R)
    return (phi_of_r(pot, n_agents, R, h) - phi_of_r(pot, n_agents, R, -h)) / (2 * h)


def phi_prime0_power_law(pot: PowerLawPotential, n_agents: int, R: float) -> float:
    """Closed-form phi'(0) for the power-law family (cross-check for the FD value)."""
    j = np.arange(1, n_agents)
    s = np.sin(j * np.pi / n_agents)
    a, b = pot.a, pot.b
    sa = float(np.sum(s**a))
    sb = float(np.sum(s**b))
    return ((a - 1) * 2 ** (a - 1) * R ** (a - 2) * sa
            - (b - 1) * 2 ** (b - 1) * R ** (b - 2) * sb) / n_agents


def mill_linearization_matrix(pot: RadialPotential, params: ModelParams,
                              n_agents: int, R: float) -> np.ndarray:
    """3x3 Jacobian of the reduced system at the mill equilibrium (r, gamma, w) = 0."""
    c = params.cruise_speed
    omega = c / R
    ph0 = phi_of_r(pot, n_agents, R, 0.0)
    # Solved radii satisfy phi(0) = omega^2 R; a large mismatch means R does
    # not actually solve the ring balance.
    if abs(ph0 - omega**2 * R) > 1e-6 * max(1.0, abs(ph0)):
        warnings.warn(
            f"radius {R} does not satisfy the ring balance: phi(0)={ph0:.6g} "
            f"vs omega^2 R={omega**2 * R:.6g}", stacklevel=2)
    php = phi_prime0_central(pot, n_agents, R)
    return np.array([
        [0.0, c, 0.0],
        [-omega / R - php / c, 0.0, 2.0 / R],
        [0.0, -ph0, -2.0 * params.alpha],
    ])


def char_coeffs(A: np.ndarray):
    """(a2, a1, a0) of the monic cubic det(lambda I - A) via trace, minors, det."""
    a2 = -float(np.trace(A))
    m01 = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    m02 = A[0, 0] * A[2, 2] - A[0, 2] * A[2, 0]
    m12 = A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1]
    a1 = float(m01 + m02 + m12)
    a0 = -float(np.linalg.det(A))
    return a2, a1, a0


def cubic_roots(a2: float, a1: float, a0: float) -> np.ndarray:
    """Roots of lambda^3 + a2 lambda^2 + a1 lambda + a0, deterministic ordering.

    Three real roots use the trigonometric method; otherwise Cardano. Sorted by
    (real, imag).
    """
    p = a1 - a2**2 / 3
    q = 2 * a2**3 / 27 - a2 * a1 / 3 + a0
    shift = -a2 / 3
    disc = (q / 2) ** 2 + (p / 3) ** 3
    if disc <= 0 and p < 0:
        m = 2 * math.sqrt(-p / 3)
        arg = max(-1.0, min(1.0, 3 * q / (p * m)))
        theta = math.acos(arg) / 3
        roots = [m * math.cos(theta - 2 * math.pi * k / 3) + shift for k in range(3)]
        return np.array(sorted(roots), dtype=complex)
    sq = math.sqrt(max(disc, 0.0))
    cbrt = lambda y: math.copysign(abs(y) ** (1.0 / 3.0), y)
    u = cbrt(-q / 2 + sq)
    v = cbrt(-q / 2 - sq)
    real_root = u + v + shift
    re = -(u + v) / 2 + shift
    im = (math.sqrt(3) / 2) * (u - v)
    roots = [complex(real_root, 0.0), complex(re, -abs(im)), complex(re, abs(im))]
    return np.array(sorted(roots, key=lambda z: (z.real, z.imag)), dtype=complex)


@dataclass
class RouthResult:
    stable: bool
    margins: tuple  # (a2, a0, a2*a1 - a0)


def routh_hurwitz_stable(a2: float, a1: float, a0: float) -> RouthResult:
    """Monic cubic is Hurwitz iff a2 > 0, a0 > 0, a2 a1 - a0 > 0."""
    margins = (a2, a0, a2 * a1 - a0)
    return RouthResult(stable=all(m > 0 for m in margins), margins=margins)


# ---------------------------------------------------------------------------
# First-order linearization around a stationary configuration
# ---------------------------------------------------------------------------

@dataclass
class FirstOrderSpectrum:
    G: np.ndarray
    eigenvalues: np.ndarray
    zero_count: int
    max_nonzero_real: float


def first_order_G(pot: RadialPotential, xhat: np.ndarray,
                  zero_tol: float = 1e-8) -> FirstOrderSpectrum:
    """2N x 2N linearization of the interaction flow around stationary positions xhat.

    Off-diagonal blocks are the pair Hessians, diagonals the negative block-row
    sums, so block rows sum to zero and G is symmetric. The spectrum comes from
    a dense symmetric eigensolve.
    """
    from .model import hessian_w

    n = xhat.shape[0]
    G = np.zeros((2 * n, 2 * n))
    for i in range(n):
        diag = np.zeros((2, 2))
        for j in range(n):
            if i == j:
                continue
            H = hessian_w(pot, xhat[i] - xhat[j])
            G[2 * i:2 * i + 2, 2 * j:2 * j + 2] = H
            diag -= H
        G[2 * i:2 * i + 2, 2 * i:2 * i + 2] = diag
    ev = np.linalg.eigvalsh(G)
    near_zero = np.abs(ev) < zero_tol
    zero_count = int(np.sum(near_zero))
    rest = ev[~near_zero]
    max_rest = float(np.max(rest)) if rest.size else float("nan")
    return FirstOrderSpectrum(G=G, eigenvalues=ev, zero_count=zero_count,
                              max_nonzero_real=max_rest)


# ---------------------------------------------------------------------------
# Distances to reference configurations
# ---------------------------------------------------------------------------

def _circle_two(p, q):
    c = (0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1]))
    r = 0.5 * math.hypot(p[0] - q[0], p[1] - q[1])
    return c, r


def _circle_three(p, q, s):
    ax, ay = p
    bx, by = q
    cx, cy = s
    d = 2 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if abs(d) < 1e-14:
        # Collinear: fall back to the widest two-point circle.
        cands = [_circle_two(p, q), _circle_two(p, s), _circle_two(q, s)]
        return max(cands, key=lambda c: c[1])
    ux = ((ax**2 + ay**2) * (by - cy) + (bx**2 + by**2) * (cy - ay)
          + (cx**2 + cy**2) * (ay - by)) / d
    uy = ((ax**2 + ay**2) * (cx - bx) + (bx**2 + by**2) * (ax - cx)
          + (cx**2 + cy**2) * (bx - ax)) / d
    c = (ux, uy)
    return c, math.hypot(ax - ux, ay - uy)


def _in_circle(circle, p, slack=1e-12):
    c, r = circle
    return math.hypot(p[0] - c[0], p[1] - c[1]) <= r + slack


def min_enclosing_circle(points) -> tuple:
    """Smallest circle containing the points: (center, radius).

    Incremental Welzl construction with deterministic processing order; the
    radius equals min over b of max_i |p_i - b| (the Chebyshev center).
    """
    pts = [(float(p[0]), float(p[1])) for p in points]
    if not pts:
        return (0.0, 0.0), 0.0
    circle = (pts[0], 0.0)
    for i, p in enumerate(pts):
        if _in_circle(circle, p):
            continue
        circle = (p, 0.0)
        for j in range(i):
            q = pts[j]
            if _in_circle(circle, q):
                continue
            circle = _circle_two(p, q)
            for k in range(j):
                s = pts[k]
                if not _in_circle(circle, s):
                    circle = _circle_three(p, q, s)
    return circle


def distance_to_flock_manifold(state: SwarmState, xstar: np.ndarray,
                               params: ModelParams, n_theta: int = 720) -> float:
    """Distance (in the max-position + max-velocity norm) to the flock family of xstar.

    The family is {(b + Rot(theta) xstar, 1 x vbar)} over translations b,
    rotations theta, and cruise-speed velocities vbar. The velocity term uses
    the cruise-normalized mean velocity; the translation is the exact Chebyshev
    center per rotation; theta is minimized on a grid plus golden-section
    refinement.
    """
    c = params.cruise_speed
    vmean = state.v.mean(axis=0)
    nv = float(np.hypot(*vmean))
    if nv > 1e-12:
        vbar = c * vmean / nv
        vel_term = float(np.max(np.sqrt(np.sum((state.v - vbar) ** 2, axis=-1))))
    else:
        angs = np.linspace(0, 2 * np.pi, 360, endpoint=False)
        best = math.inf
        for a in angs:
            vb = c * np.array([math.cos(a), math.sin(a)])
            best = min(best, float(np.max(np.sqrt(np.sum((state.v - vb) ** 2, axis=-1)))))
        vel_term = best

    def pos_term(theta):
        res = state.x - xstar @ rotation(theta).T
        return min_enclosing_circle(res)[1]

    thetas = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    vals = [pos_term(t) for t in thetas]
    k = int(np.argmin(vals))
    span = 2 * np.pi / n_theta
    a, b = thetas[k] - span, thetas[k] + span
    invphi = (math.sqrt(5) - 1) / 2
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = pos_term(x1), pos_term(x2)
    for _ in range(60):
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = pos_term(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = pos_term(x2)
    return min(min(vals), f1, f2) + vel_term


@dataclass
class MillDiagnostics:
    radius_dev: float
    gamma_mean: float
    speed_dev: float

    def max_abs(self) -> float:
        return max(abs(self.radius_dev), abs(self.gamma_mean), abs(self.speed_dev))


def mill_diagnostics(state: SwarmState, params: ModelParams,
                     R_target: float = None, center=None) -> MillDiagnostics:
    """Mean deviations from a mill: radius spread, velocity-tangent angle, speed error.

    Without R_target the radius deviation is measured against the swarm's own
    mean radius; center defaults to the centroid.
    """
    if center is None:
        center = state.x.mean(axis=0)
    rel = state.x - np.asarray(center, dtype=float)
    radii = np.sqrt(np.sum(rel * rel, axis=-1))
    rhat = R_target if R_target is not None else float(radii.mean())
    radius_dev = float(np.mean(np.abs(radii - rhat)))

    tang = perp(rel)
    tnorm = np.sqrt(np.sum(tang * tang, axis=-1, keepdims=True))
    tnorm[tnorm == 0] = 1.0
    tang = tang / tnorm
    orient = float(np.sum(tang * state.v))
    sgn = 1.0 if orient >= 0 else -1.0
    speeds = np.sqrt(np.sum(state.v * state.v, axis=-1))
    angles = np.zeros(state.n)
    moving = speeds > 0
    if np.any(moving):
        cosg = np.sum(state.v[moving] * (sgn * tang[moving]), axis=-1) / speeds[moving]
        angles[moving] = np.arccos(np.clip(cosg, -1.0, 1.0))
    gamma_mean = float(angles.mean())
    speed_dev = float(np.mean(np.abs(speeds - params.cruise_speed)))
    return MillDiagnostics(radius_dev, gamma_mean, speed_dev)
