"""Simulation and feedback-control toolkit for planar self-propelled swarms."""

from .model import (
    CollisionError,
    GUARD_RADIUS,
    ForceBounds,
    ModelParams,
    MorsePotential,
    PowerLawPotential,
    QuasiMorsePotential,
    RadialPotential,
    SingularPotentialError,
    SwarmState,
    force_bounds,
    hessian_w,
    interaction_forces,
    pair_gradient,
    perp,
    potential_deriv,
    potential_from_config,
    potential_second_deriv,
    potential_value,
    rotation,
    threshold_m_alpha_beta,
    total_energy,
)
from .dynamics import (
    ControlLaw,
    NonFiniteStateError,
    OrderParameters,
    SimConfig,
    Trajectory,
    order_parameters,
    random_state,
    rhs,
    saturate,
    simulate,
    step,
    zero_law,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
