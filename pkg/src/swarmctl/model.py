"""Core types, radial interaction potentials, pairwise forces and control-bound thresholds.

Everything is dimensionless. Positions and velocities of the N planar agents
are stored as (N, 2) float arrays; all operations here are pure functions of
their inputs. Pairwise force sums use numpy's sequential-by-index reduction,
so results are reproducible bit-for-bit on a given platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from functools import lru_cache

import numpy as np

# Pairwise evaluations below this separation raise CollisionError instead of
# returning huge/non-finite values.
GUARD_RADIUS = 1e-9


class CollisionError(RuntimeError):
    """Two agents closer than the guard radius."""

    def __init__(self, i, j, distance, t=None):
        self.pair = (int(i), int(j))
        self.distance = float(distance)
        self.t = t
        at = f" at t={t:.6g}" if t is not None else ""
        super().__init__(
            f"agents {i} and {j} at distance {distance:.3e} below guard{at}"
        )


class SingularPotentialError(ValueError):
    """Evaluation where the selected potential family is singular."""


def perp(a):
    """Rotate by +pi/2: (x, y) -> (-y, x). Acts on the last axis of (..., 2) arrays."""
    a = np.asarray(a, dtype=float)
    out = np.empty_like(a)
    out[..., 0] = -a[..., 1]
    out[..., 1] = a[..., 0]
    return out


def rotation(theta: float) -> np.ndarray:
    """2x2 counterclockwise rotation matrix."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


@dataclass(frozen=True)
class ModelParams:
    """Self-propulsion strength alpha >= 0, friction beta > 0, control bound M > 0, agent count N >= 2."""

    alpha: float
    beta: float
    M: float
    N: int

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.M <= 0:
            raise ValueError(f"M must be > 0, got {self.M}")
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")

    @property
    def cruise_speed(self) -> float:
        """Stable speed of the self-propulsion term, sqrt(alpha/beta)."""
        return math.sqrt(self.alpha / self.beta)


@dataclass
class SwarmState:
    """Positions x and velocities v of N agents plus the simulation clock t."""

    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.x.shape != self.v.shape or self.x.ndim != 2 or self.x.shape[1] != 2:
            raise ValueError(
                f"x and v must both be (N, 2), got {self.x.shape} and {self.v.shape}"
            )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    def copy(self) -> "SwarmState":
        return SwarmState(self.t, self.x.copy(), self.v.copy())

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v)))


# ---------------------------------------------------------------------------
# Radial potential families
# ---------------------------------------------------------------------------

def _pow(r, e: float):
    """r**e with cheap paths for the exponents the families actually use."""
    if e == 0.0:
        return np.ones_like(r)
    if e == 1.0:
        return r
    if e == 2.0:
        return r * r
    if e == 3.0:
        return r * r * r
    if e == 0.5:
        return np.sqrt(r)
    if e == 1.5:
        return r * np.sqrt(r)
    if e == -0.5:
        return 1.0 / np.sqrt(r)
    return r**e


class RadialPotential:
    """Radial pair potential W(x) = U(|x|). Subclasses provide U, U', U''."""

    family = "radial"

    def value(self, r):
        raise NotImplementedError

    def deriv(self, r):
        raise NotImplementedError

    def second_deriv(self, r):
        raise NotImplementedError

    def singular_deriv_at_zero(self) -> bool:
        """True when U'(0+) is not finite."""
        return False

    def to_config(self) -> dict:
        cfg = {"family": self.family}
        for f in fields(self):
            cfg[f.name] = float(getattr(self, f.name))
        return cfg


@dataclass(frozen=True)
class MorsePotential(RadialPotential):
    """U(r) = -C_A exp(-r/ell_A) + C_R exp(-r/ell_R); bounded with vanishing tail."""

    C_A: float
    ell_A: float
    C_R: float
    ell_R: float

    family = "morse"

    def __post_init__(self):
        for name in ("C_A", "ell_A", "C_R", "ell_R"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return -self.C_A * np.exp(-r / self.ell_A) + self.C_R * np.exp(-r / self.ell_R)

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        return (self.C_A / self.ell_A) * np.exp(-r / self.ell_A) - (
            self.C_R / self.ell_R
        ) * np.exp(-r / self.ell_R)

    def second_deriv(self, r):
        r = np.asarray(r, dtype=float)
        return -(self.C_A / self.ell_A**2) * np.exp(-r / self.ell_A) + (
            self.C_R / self.ell_R**2
        ) * np.exp(-r / self.ell_R)


@dataclass(frozen=True)
class QuasiMorsePotential(RadialPotential):
    """U(r) = V(r) - C V(r/l) with V(r) = -exp(-r^p / p)."""

    C: float
    l: float
    p: float

    family = "quasi_morse"

    def __post_init__(self):
        for name in ("C", "l", "p"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @staticmethod
    def _v(r, p):
        return -np.exp(-_pow(r, p) / p)

    @staticmethod
    def _vp(r, p):
        rp1 = _pow(r, p - 1.0)
        return rp1 * np.exp(-(rp1 * r) / p)

    @staticmethod
    def _vpp(r, p):
        rp1 = _pow(r, p - 1.0)
        return np.exp(-(rp1 * r) / p) * ((p - 1) * _pow(r, p - 2.0) - rp1 * rp1)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return self._v(r, self.p) - self.C * self._v(r / self.l, self.p)

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        if self.p < 1 and np.any(r <= 0):
            raise SingularPotentialError("quasi-Morse U'(0+) diverges for p < 1")
        return self._vp(r, self.p) - (self.C / self.l) * self._vp(r / self.l, self.p)

    def second_deriv(self, r):
        r = np.asarray(r, dtype=float)
        if self.p < 2 and np.any(r <= 0):
            raise SingularPotentialError("quasi-Morse U''(0+) diverges for p < 2")
        return self._vpp(r, self.p) - (self.C / self.l**2) * self._vpp(
            r / self.l, self.p
        )

    def singular_deriv_at_zero(self) -> bool:
        return self.p < 1


@dataclass(frozen=True)
class PowerLawPotential(RadialPotential):
    """U(r) = r^a / a - r^b / b with a > b > 0. U' is unbounded as r -> inf for a > 1."""

    a: float
    b: float

    family = "power_law"

    def __post_init__(self):
        if not (self.a > self.b > 0):
            raise ValueError(f"power-law exponents need a > b > 0, got a={self.a}, b={self.b}")

    def value(self, r):
        r = np.asarray(r, dtype=float)
        return _pow(r, self.a) / self.a - _pow(r, self.b) / self.b

    def deriv(self, r):
        r = np.asarray(r, dtype=float)
        if self.b < 1 and np.any(r <= 0):
            raise SingularPotentialError("power-law U'(0+) diverges for b < 1")
        return _pow(r, self.a - 1) - _pow(r, self.b - 1)

    def second_deriv(self, r):
        r = np.asarray(r, dtype=float)
        if self.b < 2 and np.any(r <= 0):
            raise SingularPotentialError("power-law U''(0+) diverges for b < 2")
        return (self.a - 1) * _pow(r, self.a - 2) - (self.b - 1) * _pow(r, self.b - 2)

    def singular_deriv_at_zero(self) -> bool:
        return self.b < 1


_FAMILIES = {
    "morse": (MorsePotential, ("C_A", "ell_A", "C_R", "ell_R")),
    "quasi_morse": (QuasiMorsePotential, ("C", "l", "p")),
    "power_law": (PowerLawPotential, ("a", "b")),
}


def potential_from_config(cfg: dict) -> RadialPotential:
    """Build a potential from {"family": ..., <parameters>}. Unknown keys are errors."""
    if "family" not in cfg:
        raise ValueError("potential config needs a 'family' key")
    family = cfg["family"]
    if family not in _FAMILIES:
        raise ValueError(f"unknown potential family {family!r}")
    cls, names = _FAMILIES[family]
    extra = set(cfg) - set(names) - {"family"}
    if extra:
        raise ValueError(f"unknown keys for {family} potential: {sorted(extra)}")
    missing = set(names) - set(cfg)
    if missing:
        raise ValueError(f"missing keys for {family} potential: {sorted(missing)}")
    return cls(**{k: float(cfg[k]) for k in names})


# ---------------------------------------------------------------------------
# Potential evaluation with domain guards
# ---------------------------------------------------------------------------

def potential_value(pot: RadialPotential, r):
    """U(r) for r >= 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("potential argument must be >= 0")
    return pot.value(r)


def potential_deriv(pot: RadialPotential, r):
    """U'(r) for r > 0 (r = 0 allowed only when U'(0+) is finite)."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("potential argument must be >= 0")
    if pot.singular_deriv_at_zero() and np.any(r == 0):
        raise SingularPotentialError("U'(0+) is not finite for this family")
    return pot.deriv(r)


def potential_second_deriv(pot: RadialPotential, r):
    """U''(r) for r > 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("potential argument must be >= 0")
    return pot.second_deriv(r)


# ---------------------------------------------------------------------------
# Forces, Hessian, energy
# ---------------------------------------------------------------------------

def pair_gradient(pot: RadialPotential, d, guard: float = GUARD_RADIUS):
    """Gradient of W(x) = U(|x|) at x = d, i.e. U'(|d|) d/|d|."""
    d = np.asarray(d, dtype=float)
    r = float(np.hypot(d[0], d[1]))
    if r < guard:
        raise CollisionError(0, 1, r)
    return pot.deriv(r) * d / r


def pairwise_distances(x: np.ndarray):
    """(N, N) distance matrix with +inf on the diagonal, plus the (N, N, 2) separations."""
    diff = x[:, None, :] - x[None, :, :]
    r = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(r, np.inf)
    return r, diff


@lru_cache(maxsize=32)
def _triu_pairs(n: int):
    return np.triu_indices(n, k=1)


def _pair_separations(x: np.ndarray, guard: float, t):
    iu, ju = _triu_pairs(x.shape[0])
    d = np.empty((iu.size, 2))
    d[:, 0] = x[:, 0].take(iu) - x[:, 0].take(ju)
    d[:, 1] = x[:, 1].take(iu) - x[:, 1].take(ju)
    r = np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2)
    if r.size and float(np.min(r)) < guard:
        k = int(np.argmin(r))
        raise CollisionError(iu[k], ju[k], r[k], t=t)
    return iu, ju, d, r


def _scatter_pair_forces(n, iu, ju, fd):
    # bincount accumulates in index order: deterministic reduction.
    out = np.empty((n, 2))
    out[:, 0] = np.bincount(iu, weights=fd[:, 0], minlength=n) \
        - np.bincount(ju, weights=fd[:, 0], minlength=n)
    out[:, 1] = np.bincount(iu, weights=fd[:, 1], minlength=n) \
        - np.bincount(ju, weights=fd[:, 1], minlength=n)
    return out / n


def interaction_forces(pot: RadialPotential, x: np.ndarray,
                       guard: float = GUARD_RADIUS, t=None) -> np.ndarray:
    """F_i = (1/N) sum_j U'(|x_i - x_j|) (x_i - x_j)/|x_i - x_j|; sums to zero.

    Pair terms are evaluated once per unordered pair and scattered
    antisymmetrically, so opposite contributions cancel exactly.
    """
    n = x.shape[0]
    iu, ju, d, r = _pair_separations(x, guard, t)
    coef = pot.deriv(r) / r
    return _scatter_pair_forces(n, iu, ju, coef[:, None] * d)


def interaction_forces_from_deriv(deriv_fn, x: np.ndarray,
                                  guard: float = GUARD_RADIUS, t=None) -> np.ndarray:
    """Same pairwise force assembly but from an arbitrary radial derivative r -> U'(r)."""
    n = x.shape[0]
    iu, ju, d, r = _pair_separations(x, guard, t)
    coef = deriv_fn(r) / r
    return _scatter_pair_forces(n, iu, ju, coef[:, None] * d)


def hessian_w(pot: RadialPotential, d) -> np.ndarray:
    """Hessian of W(x) = U(|x|) at x = d: U''(r) dd^T/r^2 + (U'(r)/r)(I - dd^T/r^2)."""
    d = np.asarray(d, dtype=float)
    r = float(np.hypot(d[0], d[1]))
    if r < GUARD_RADIUS:
        raise SingularPotentialError("Hessian undefined at zero separation")
    dh = d / r
    proj = np.outer(dh, dh)
    return pot.second_deriv(r) * proj + (pot.deriv(r) / r) * (np.eye(2) - proj)


def total_energy(state: SwarmState, pot: RadialPotential,
                 guard: float = GUARD_RADIUS) -> float:
    """V = (1/2) sum |v_i|^2 + (1/2N) sum_{i!=j} W(x_i - x_j)."""
    n = state.n
    _, _, _, r = _pair_separations(state.x, guard, state.t)
    kinetic = 0.5 * float(np.sum(state.v * state.v))
    potential = float(np.sum(pot.value(r))) / n  # each unordered pair counts twice
    return kinetic + potential


def threshold_m_alpha_beta(params: ModelParams) -> float:
    """sqrt(4 alpha^3 / (27 beta)), the maximum of s -> alpha s - beta s^3 over s >= 0."""
    return math.sqrt(4 * params.alpha**3 / (27 * params.beta))


# ---------------------------------------------------------------------------
# Derivative bounds used by the control-budget checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ForceBounds:
    """Suprema of U': m_f = sup |U'|, tilde_m_f = sup U', tilde_m_n = sup |U'| over the far range.

    math.inf marks an unbounded supremum.
    """

    m_f: float
    tilde_m_f: float
    tilde_m_n: float


def _sampled_sup(fn, lo: float, hi: float, n: int = 100_000) -> float:
    """Supremum of fn over [lo, hi] by log-spaced sampling plus golden-section refinement."""
    rs = np.geomspace(lo, hi, n)
    vals = fn(rs)
    k = int(np.argmax(vals))
    a = rs[max(k - 1, 0)]
    b = rs[min(k + 1, n - 1)]
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    for _ in range(80):
        if fn(np.asarray(c)) > fn(np.asarray(d)):
            b, d = d, c
            c = b - invphi * (b - a)
        else:
            a, c = c, d
            d = a + invphi * (b - a)
    best = max(float(vals[k]), float(fn(np.asarray(0.5 * (a + b)))))
    return best


def force_bounds(pot: RadialPotential, rbar: float, n_agents: int) -> ForceBounds:
    """Derivative suprema for the control-budget thresholds.

    Closed-form stationary points are used for the Morse family; other bounded
    families fall back to dense sampling on [1e-6, 1e6]. Power laws (and any
    family with a non-vanishing tail) get math.inf markers.
    """
    cutoff = 2 * math.sin(math.pi / n_agents) * rbar

    if isinstance(pot, PowerLawPotential):
        # |U'| -> inf as r -> inf for a > 1, and as r -> 0 for b < 1.
        m_f = math.inf if (pot.a > 1 or pot.b < 1) else _sampled_sup(
            lambda r: np.abs(pot.deriv(r)), 1e-6, 1e6)
        tilde_m_f = math.inf if pot.a > 1 else _sampled_sup(pot.deriv, 1e-6, 1e6)
        tilde_m_n = math.inf if pot.a > 1 else _sampled_sup(
            lambda r: np.abs(pot.deriv(r)), max(cutoff, 1e-9), 1e6)
        return ForceBounds(m_f, tilde_m_f, tilde_m_n)

    if isinstance(pot, MorsePotential):
        # U''(r*) = 0 at a single interior point when the length scales differ.
        candidates = [0.0]
        if pot.ell_A != pot.ell_R:
            num = math.log((pot.C_R * pot.ell_A**2) / (pot.C_A * pot.ell_R**2))
            den = 1.0 / pot.ell_R - 1.0 / pot.ell_A
            rstar = num / den
            if rstar > 0:
                candidates.append(rstar)
        vals = [abs(float(pot.deriv(np.asarray(r)))) for r in candidates]
        m_f = max(vals)  # tail limit is 0
        tilde_m_f = max(float(pot.deriv(np.asarray(r))) for r in candidates)
        tilde_m_f = max(tilde_m_f, 0.0)
        far = [r for r in candidates if r >= cutoff] + [cutoff]
        tilde_m_n = max(abs(float(pot.deriv(np.asarray(r)))) for r in far)
        return ForceBounds(m_f, tilde_m_f, tilde_m_n)

    if isinstance(pot, QuasiMorsePotential) and pot.p < 1:
        return ForceBounds(math.inf, math.inf, _sampled_sup(
            lambda r: np.abs(pot.deriv(r)), max(cutoff, 1e-9), 1e6))

    m_f = _sampled_sup(lambda r: np.abs(pot.deriv(r)), 1e-6, 1e6)
    tilde_m_f = max(_sampled_sup(pot.deriv, 1e-6, 1e6), 0.0)
    tilde_m_n = _sampled_sup(lambda r: np.abs(pot.deriv(r)), max(cutoff, 1e-9), 1e6)
    return ForceBounds(m_f, tilde_m_f, tilde_m_n)
