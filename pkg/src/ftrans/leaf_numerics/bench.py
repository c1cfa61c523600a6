"""Throughput benchmark for the internal-CO2 solver.

Runs solve_ci over evenly spaced starting guesses and reports wall time,
solves per second, and convergence statistics. The numeric results are
hashed so two runs of the same size can be compared bit for bit; timing
is reported but naturally varies between runs.
"""

from __future__ import annotations

import hashlib
import time

import numpy as np

from .photosynthesis import PhotoParams, solve_ci

DEFAULT_CI_RANGE = (35.0, 70.0)


def bench_kernel(n_inputs: int,
                 ci_range: tuple[float, float] = DEFAULT_CI_RANGE,
                 params: PhotoParams | None = None,
                 workers: int = 1) -> dict:
    """Solve n_inputs root problems and summarize the run as a JSON-ready dict.

    The problem is embarrassingly parallel over inputs; workers > 1 fans
    the solves out over threads. Results are written by input index, so
    the report is identical whatever the worker count.
    """
    if n_inputs < 1:
        raise ValueError("n_inputs must be at least 1")
    if params is None:
        params = PhotoParams.defaults()
    ci0_values = np.linspace(ci_range[0], ci_range[1], n_inputs)

    roots = np.empty(n_inputs)
    an_values = np.empty(n_inputs)
    iterations = np.empty(n_inputs, dtype=int)
    residuals = np.empty(n_inputs)

    def solve_index(i: int) -> None:
        sol = solve_ci(params, float(ci0_values[i]))
        roots[i] = sol.ci
        an_values[i] = sol.an
        iterations[i] = sol.iterations
        residuals[i] = sol.residual

    start = time.perf_counter()
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(solve_index, range(n_inputs)))
    else:
        for i in range(n_inputs):
            solve_index(i)
    wall = time.perf_counter() - start

    digest = hashlib.sha256(roots.tobytes() + an_values.tobytes()).hexdigest()
    return {
        "n": n_inputs,
        "ci_range": list(ci_range),
        "wall_time_s": wall,
        "solves_per_second": n_inputs / wall if wall > 0 else float("inf"),
        "iterations": {
            "min": int(iterations.min()),
            "max": int(iterations.max()),
            "mean": float(iterations.mean()),
        },
        "max_abs_residual": float(np.abs(residuals).max()),
        "ci_star_mean": float(roots.mean()),
        "an_star_mean": float(an_values.mean()),
        "results_digest": digest,
    }
