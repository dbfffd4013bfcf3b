"""Error metrics, network-vs-residual diagnostics, order estimation, stability scan."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import stepper_residual
from .dem import Corrector, dem_step
from .errors import NonFiniteState
from .mlp import forward_batch
from .ode import OdeProblem, StepSchedule, Trajectory, evaluate_truth, solve_fixed

_BASE_BY_EXPONENT = {2: "euler", 3: "heun"}


@dataclass(frozen=True)
class ErrorReport:
    """One benchmark cell: worst deviation plus the network diagnostic."""

    max_error: float
    eps_mean: Optional[float]
    ratio_to_baseline: Optional[float]
    step_size: float
    region: tuple[float, float]


@dataclass(frozen=True)
class OrderEstimate:
    """Least-squares convergence order; infinite when errors are at rounding level."""

    order: float
    degenerate: bool
    h_values: tuple[float, ...]
    errors: tuple[float, ...]


def max_abs_error(trajectory: Trajectory, exact) -> float:
    """Worst absolute deviation over mesh points and components.

    ``exact`` is a callable x -> state or a precomputed (M+1, n) array.
    """
    if callable(exact):
        truth = np.stack([np.asarray(exact(x), float) for x in trajectory.xs])
    else:
        truth = np.asarray(exact, dtype=np.float64)
    if truth.shape != trajectory.ys.shape:
        raise ValueError(
            f"truth shape {truth.shape} does not match trajectory {trajectory.ys.shape}"
        )
    return float(np.max(np.abs(trajectory.ys - truth)))


def eps_series(
    corrector: Corrector,
    problem: OdeProblem,
    schedule: StepSchedule,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-6,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-step |network - residual| along the ground-truth trajectory.

    Returns (right endpoints x_{m+1}, component-sum gaps). The residual uses
    the base method matching the corrector's exponent (2 -> Euler, 3 -> Heun)
    and ground-truth states, not the corrected trajectory.
    """
    if corrector.kind != "network":
        raise ValueError("eps diagnostics are defined for network correctors")
    base = _BASE_BY_EXPONENT.get(corrector.order_exponent)
    if base is None:
        raise ValueError(f"no base method for exponent {corrector.order_exponent}")
    xs = schedule.mesh(*problem.domain)
    truth = evaluate_truth(problem, xs, rel_tol, abs_tol)
    inputs = np.column_stack((xs[:-1], xs[1:], truth[:-1]))
    n_vals = forward_batch(corrector.params, inputs)
    r_vals = np.stack(
        [
            stepper_residual(xs[m], xs[m + 1], truth[m], truth[m + 1], problem, base)
            for m in range(len(xs) - 1)
        ]
    )
    return xs[1:], np.sum(np.abs(n_vals - r_vals), axis=1)


def eps_mean(
    corrector: Corrector,
    problem: OdeProblem,
    schedule: StepSchedule,
    region: Optional[tuple[float, float]] = None,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-6,
) -> float:
    """Mean |network - residual| over the mesh steps inside ``region``.

    A step belongs to (lo, hi] when its right endpoint does, so adjacent
    regions partition the mesh exactly.
    """
    ends, gaps = eps_series(corrector, problem, schedule, rel_tol, abs_tol)
    if region is not None:
        lo, hi = region
        mask = (ends > lo) & (ends <= hi)
        if not np.any(mask):
            raise ValueError(f"no mesh steps end inside ({lo}, {hi}]")
        gaps = gaps[mask]
    return float(np.mean(gaps))


def convergence_order(
    problem: OdeProblem,
    stepper,
    h_list: Sequence[float],
) -> OrderEstimate:
    """Slope of log(max error) against log(h) for a halving sequence of steps."""
    hs = [float(h) for h in h_list]
    if len(hs) < 3:
        raise ValueError("need at least 3 step sizes")
    for h_prev, h_next in zip(hs, hs[1:]):
        if abs(h_prev / h_next - 2.0) > 1e-9:
            raise ValueError(f"step sizes must halve, got {h_prev} then {h_next}")
    if problem.exact is None:
        raise ValueError("convergence measurement needs an exact solution")
    errors = []
    for h in hs:
        traj = solve_fixed(problem, StepSchedule.uniform(h), stepper)
        errors.append(max_abs_error(traj, problem.exact))
    if min(errors) < 1e-12:
        return OrderEstimate(math.inf, True, tuple(hs), tuple(errors))
    slope = np.polyfit(np.log(hs), np.log(errors), 1)[0]
    return OrderEstimate(float(slope), False, tuple(hs), tuple(errors))


def stability_scan(
    lam: float,
    corrector: Corrector,
    h_grid: Sequence[float],
    steps: int = 1000,
    bound: float = 10.0,
) -> list[tuple[float, bool]]:
    """Corrected Euler iteration on y' = lam*y from y=1; bounded means
    |y_m| <= bound for all of ``steps`` iterations."""
    if not lam < 0:
        raise ValueError("stability scan expects lam < 0")
    results = []
    for h in h_grid:
        h = float(h)
        problem = OdeProblem(
            name="linear_test",
            dim=1,
            rhs=lambda x, y: lam * y,
            domain=(0.0, steps * h + h),
            initial=np.array([1.0]),
            exact=lambda x: np.array([math.exp(lam * x)]),
        )
        y = problem.initial
        bounded = True
        for m in range(steps):
            try:
                y = dem_step(problem, corrector, m * h, y, h)
            except NonFiniteState:
                bounded = False
                break
            if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > bound:
                bounded = False
                break
        results.append((h, bounded))
    return results
