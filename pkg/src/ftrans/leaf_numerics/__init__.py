"""Differentiable reference implementation of the corpus physics.

Day length, leaf photosynthesis with Medlyn stomatal coupling, a
safeguarded secant solver for internal CO2, and Vcmax estimation by
uniform sampling or dual-number gradient descent. Everything here is
pure and reentrant; it doubles as the oracle that translated corpus
units are checked against.
"""

from .dual import DualScalar, derivative, seed
from .daylength import daylength
from .photosynthesis import (
    CiSolution,
    PhotoParams,
    assimilation,
    conductance_residual,
    diffusion_supply,
    medlyn_conductance,
    rubisco_limited,
    rubp_limited,
    secant_update,
    solve_ci,
)
from .fitting import (
    FitResult,
    LeafObservation,
    default_observations_path,
    fit_gradient_descent,
    fit_uniform,
    generate_synthetic_observations,
    load_observations,
    loss_at_vcmax,
    mse_loss,
    save_observations,
    vcmax_gradient,
)
from .bench import bench_kernel

__all__ = [
    "DualScalar",
    "derivative",
    "seed",
    "daylength",
    "CiSolution",
    "PhotoParams",
    "assimilation",
    "conductance_residual",
    "diffusion_supply",
    "medlyn_conductance",
    "rubisco_limited",
    "rubp_limited",
    "secant_update",
    "solve_ci",
    "FitResult",
    "LeafObservation",
    "default_observations_path",
    "fit_gradient_descent",
    "fit_uniform",
    "generate_synthetic_observations",
    "load_observations",
    "loss_at_vcmax",
    "mse_loss",
    "save_observations",
    "vcmax_gradient",
    "bench_kernel",
]
