"""Hybrid ODE solvers: single-step methods corrected by a trained network
that approximates the scaled local truncation error."""

__version__ = "0.1.0"

from .dataset import (
    Measurement,
    NoiseSpec,
    PairPolicy,
    ResidualSample,
    build_pairs,
    residual,
    sample_measurements,
    split,
    stack_samples,
)
from .dem import (
    Corrector,
    corrected_step,
    dem_step,
    dhm_step,
    make_corrected_stepper,
    solve_dem,
    solve_dhm,
)
from .metrics import (
    ErrorReport,
    OrderEstimate,
    convergence_order,
    eps_mean,
    max_abs_error,
    stability_scan,
)
from .mlp import (
    AdamState,
    MlpParams,
    TrainConfig,
    adam_step,
    clip_weights,
    forward,
    forward_batch,
    init,
    lipschitz_bound,
    load_model,
    loss_and_grad,
    save_model,
    train,
)
from .ode import (
    OdeProblem,
    StepSchedule,
    Trajectory,
    builtin_problems,
    euler_step,
    evaluate_truth,
    get_problem,
    heun_step,
    restrict,
    solve_fixed,
    solve_reference,
)

__all__ = [
    "__version__",
    "AdamState",
    "Corrector",
    "ErrorReport",
    "Measurement",
    "MlpParams",
    "NoiseSpec",
    "OdeProblem",
    "OrderEstimate",
    "PairPolicy",
    "ResidualSample",
    "StepSchedule",
    "TrainConfig",
    "Trajectory",
    "adam_step",
    "build_pairs",
    "builtin_problems",
    "clip_weights",
    "convergence_order",
    "corrected_step",
    "dem_step",
    "dhm_step",
    "eps_mean",
    "euler_step",
    "evaluate_truth",
    "forward",
    "forward_batch",
    "get_problem",
    "heun_step",
    "init",
    "lipschitz_bound",
    "load_model",
    "loss_and_grad",
    "make_corrected_stepper",
    "max_abs_error",
    "residual",
    "sample_measurements",
    "save_model",
    "solve_dem",
    "solve_dhm",
    "solve_fixed",
    "solve_reference",
    "split",
    "stability_scan",
    "stack_samples",
    "train",
]
