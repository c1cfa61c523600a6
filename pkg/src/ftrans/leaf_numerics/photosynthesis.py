"""Leaf photosynthesis at 25 degC with Medlyn stomatal coupling.

Net assimilation is the hard minimum of the Rubisco-limited and the
RuBP-regeneration-limited rate minus dark respiration; electron transport
runs at light saturation, so j equals jmax25. The internal CO2 pressure is
the root of biochemical demand minus diffusive supply through the Medlyn
conductance, found by a safeguarded secant iteration.

All arithmetic is generic over plain floats and DualScalar, so seeding
vcmax25 (and any coupled parameters) differentiates the whole model,
including the unrolled solver iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Union

from ..errors import NoConvergence, NonPositiveCi
from .dual import DualScalar, sqrt, value_of

Scalar = Union[float, DualScalar]

# Defaults follow the CLM5 technical documentation at 25 degC, with gas
# concentrations converted to Pa at standard surface pressure.
DEFAULT_VCMAX25 = 50.0
JMAX_RATIO = 1.67
RD_RATIO = 0.015
FTOL = 1e-6
CI_STEP_TOL = 1e-3
MAX_ITERATIONS = 40
_BRACKET_FLOOR = 1e-6


@dataclass(frozen=True)
class PhotoParams:
    """Leaf-level parameters; vcmax25 is the one we estimate."""

    vcmax25: Scalar        # maximum carboxylation rate, umol CO2 / m2 / s
    jmax25: Scalar         # maximum electron transport rate, umol / m2 / s
    rd25: Scalar           # dark respiration, umol / m2 / s
    gamma_star: float = 4.275   # CO2 compensation point, Pa
    kc: float = 40.49           # Michaelis constant for CO2, Pa
    ko: float = 27840.0         # Michaelis constant for O2, Pa
    oi: float = 20900.0         # O2 partial pressure, Pa
    ca: float = 40.0            # ambient CO2 partial pressure, Pa
    g0: float = 0.01            # minimum stomatal conductance, mol / m2 / s
    g1: float = 4.0             # Medlyn slope, dimensionless
    vpd: float = 1.5            # vapor pressure deficit, kPa
    pressure: float = 101325.0  # surface pressure, Pa

    def __post_init__(self):
        for name in ("vcmax25", "jmax25", "rd25", "gamma_star", "kc", "ko",
                     "oi", "ca", "g0", "g1", "vpd", "pressure"):
            if not value_of(getattr(self, name)) > 0.0:
                raise ValueError(f"{name} must be strictly positive")

    @classmethod
    def defaults(cls, vcmax25: float = DEFAULT_VCMAX25, **overrides) -> "PhotoParams":
        """Standard 25 degC parameter set; jmax25 and rd25 scale with vcmax25."""
        base = dict(
            vcmax25=vcmax25,
            jmax25=JMAX_RATIO * vcmax25,
            rd25=RD_RATIO * vcmax25,
        )
        base.update(overrides)
        return cls(**base)

    def with_vcmax(self, vcmax25: Scalar) -> "PhotoParams":
        """Rescale vcmax25 keeping the jmax25 and rd25 ratios of this set.

        Accepts a DualScalar seed, in which case the coupled parameters
        carry the matching derivative components.
        """
        ratio_j = value_of(self.jmax25) / value_of(self.vcmax25)
        ratio_rd = value_of(self.rd25) / value_of(self.vcmax25)
        return replace(self, vcmax25=vcmax25, jmax25=ratio_j * vcmax25,
                       rd25=ratio_rd * vcmax25)


def rubisco_limited(ci: Scalar, params: PhotoParams) -> Scalar:
    """Carboxylation-limited gross rate Ac."""
    km = params.kc * (1.0 + params.oi / params.ko)
    return params.vcmax25 * (ci - params.gamma_star) / (ci + km)


def rubp_limited(ci: Scalar, params: PhotoParams) -> Scalar:
    """RuBP-regeneration-limited gross rate Aj at light saturation."""
    return (params.jmax25 / 4.0) * (ci - params.gamma_star) / (ci + 2.0 * params.gamma_star)


def assimilation(ci: Scalar, params: PhotoParams) -> Scalar:
    """Co-limited net assimilation An = min(Ac, Aj) - Rd."""
    if not value_of(ci) > 0.0:
        raise NonPositiveCi(value_of(ci))
    return min(rubisco_limited(ci, params), rubp_limited(ci, params)) - params.rd25


def medlyn_conductance(an: Scalar, params: PhotoParams) -> Scalar:
    """Stomatal conductance gs = g0 + 1.6 (1 + g1/sqrt(vpd)) An/ca.

    The assimilation term is floored at zero so gs never drops below g0;
    with that floor the supply/demand residual has exactly one root.
    """
    return params.g0 + 1.6 * (1.0 + params.g1 / sqrt(params.vpd)) * max(an, 0.0) / params.ca


def diffusion_supply(gs: Scalar, ci: Scalar, params: PhotoParams) -> Scalar:
    """CO2 supply through stomata at conductance gs (umol / m2 / s)."""
    return gs * (params.ca - ci) / (1.6 * params.pressure) * 1e6


def conductance_residual(ci: Scalar, params: PhotoParams) -> Scalar:
    """Biochemical demand minus diffusive supply; the solver's target."""
    an = assimilation(ci, params)
    return an - diffusion_supply(medlyn_conductance(an, params), ci, params)


def secant_update(x0: Scalar, f0: Scalar, x1: Scalar, f1: Scalar) -> Scalar:
    """One secant step towards the root of f."""
    return x1 - f1 * (x1 - x0) / (f1 - f0)


@dataclass(frozen=True)
class CiSolution:
    ci: Scalar
    an: Scalar
    iterations: int
    residual: float


def solve_ci(params: PhotoParams, ci0: Scalar) -> CiSolution:
    """Root of the supply/demand residual by safeguarded secant.

    Starts from ci0 inside the bracket (tiny, 2 ca); any secant step that
    would leave the bracket, or a degenerate secant denominator, falls
    back to bisection. Converged when |residual| <= 1e-6 and the last ci
    step is below 1e-3 Pa; the iteration count is part of the result so a
    dual-seeded call unrolls exactly the same number of steps.
    """
    if not 0.0 < value_of(ci0) < 2.0 * params.ca:
        raise ValueError(f"ci0 must lie in (0, {2.0 * params.ca}), got {value_of(ci0)}")

    f = lambda ci: conductance_residual(ci, params)

    lo: Scalar = _BRACKET_FLOOR
    hi: Scalar = 2.0 * params.ca
    f_lo = f(lo)
    f_hi = f(hi)
    if value_of(f_lo) == 0.0:
        return CiSolution(lo, assimilation(lo, params), 0, 0.0)
    if value_of(f_hi) == 0.0:
        return CiSolution(hi, assimilation(hi, params), 0, 0.0)
    if value_of(f_lo) * value_of(f_hi) > 0.0:
        raise NoConvergence(0, min(abs(value_of(f_lo)), abs(value_of(f_hi))))

    x_prev, f_prev = lo, f_lo
    x, fx = ci0, f(ci0)
    step = abs(value_of(x) - value_of(x_prev))
    for iteration in range(1, MAX_ITERATIONS + 1):
        if abs(value_of(fx)) <= FTOL and step <= CI_STEP_TOL:
            return CiSolution(x, assimilation(x, params), iteration - 1,
                              abs(value_of(fx)))
        # Tighten the bracket with the newest point.
        if value_of(fx) * value_of(f_lo) > 0.0:
            lo, f_lo = x, fx
        else:
            hi, f_hi = x, fx
        denom = fx - f_prev
        use_bisection = value_of(abs(denom)) < 1e-300
        if not use_bisection:
            candidate = secant_update(x_prev, f_prev, x, fx)
            c = value_of(candidate)
            if not (value_of(lo) < c < value_of(hi)):
                use_bisection = True
        if use_bisection:
            candidate = 0.5 * (lo + hi)
        x_prev, f_prev = x, fx
        x = candidate
        fx = f(x)
        step = abs(value_of(x) - value_of(x_prev))
    raise NoConvergence(MAX_ITERATIONS, abs(value_of(fx)))
