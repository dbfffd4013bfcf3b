"""Exception types shared across the toolkit."""


class DeepEulerError(Exception):
    """Base class for all toolkit errors."""


class NonFiniteState(DeepEulerError):
    """A right-hand side evaluation produced NaN or infinity."""

    def __init__(self, x, step=None):
        self.x = x
        self.step = step
        where = f"x={x}" if step is None else f"x={x} (step {step})"
        super().__init__(f"non-finite state at {where}")


class MinStepReached(DeepEulerError):
    """The adaptive reference solver could not shrink its step any further."""


class UnknownProblem(DeepEulerError):
    """Lookup of a problem name that is not in the registry."""


class InvalidArchitecture(DeepEulerError):
    """Layer widths that cannot form a valid network."""


class InvalidInput(DeepEulerError):
    """Non-finite or wrongly shaped network input."""


class EmptyBatch(DeepEulerError):
    """loss_and_grad called with no samples."""


class NonFiniteGradient(DeepEulerError):
    """Optimizer update received NaN or infinite gradients."""


class ModelFormatError(DeepEulerError):
    """Corrupt, truncated, or incompatible model checkpoint."""


class TooFewPoints(DeepEulerError):
    """Measurement sampling needs at least two points."""


class BadPairOrder(DeepEulerError):
    """Residual requested for a pair with x_j <= x_i."""


class EmptyDataset(DeepEulerError):
    """Pair selection policy eliminated every candidate pair."""


class CorrectorShapeError(DeepEulerError):
    """Corrector network dimensions do not match the problem."""


class OrderMismatch(DeepEulerError):
    """Corrector exponent does not equal base method order + 1."""


class ConfigError(DeepEulerError):
    """Invalid or unknown configuration entry; message carries the key path."""
