"""Exception hierarchy for the plasticell toolkit."""

from __future__ import annotations


class PlasticellError(Exception):
    """Base class for all toolkit errors."""


class ModelInputError(PlasticellError, ValueError):
    """Rejected input: bad dimensions, negative quantities, malformed spec."""


class NonPhysicalEquilibriumError(PlasticellError):
    """The requested equilibrium does not exist in the positive quadrant.

    Raised when the stability criterion (steady product level must stay
    below the limit product level) is violated, which makes the closed-form
    factory equilibrium undefined or negative.
    """

    def __init__(self, p_inf: float, p_lim: float):
        self.p_inf = p_inf
        self.p_lim = p_lim
        super().__init__(
            f"no positive equilibrium: steady product level {p_inf:.6g} "
            f"is not below the limit product level {p_lim:.6g}"
        )


class SolverError(PlasticellError):
    """The multi-factory equilibrium solver failed to converge."""

    def __init__(self, message: str, residual_history: list[float] | None = None):
        self.residual_history = residual_history or []
        super().__init__(message)


class DivergenceError(PlasticellError):
    """Integration produced NaN/inf; carries the last finite state."""

    def __init__(self, time: float, factory, product):
        self.time = time
        self.factory = factory
        self.product = product
        super().__init__(f"state diverged to NaN/inf shortly after t={time:.6g}")


class StepSizeError(PlasticellError):
    """A step drove a state component negative beyond discretization dust."""

    def __init__(self, time: float, worst: float, step: float):
        self.time = time
        self.worst = worst
        self.step = step
        super().__init__(
            f"state component reached {worst:.3e} at t={time:.6g}; "
            f"reduce the step size (currently {step:g})"
        )


class NonConvergenceError(PlasticellError):
    """run_to_steady hit its time cap; carries the final state."""

    def __init__(self, time: float, factory, product):
        self.time = time
        self.factory = factory
        self.product = product
        super().__init__(f"no steady state detected by t={time:.6g}")


class ConfigError(PlasticellError):
    """Scenario configuration problems, addressed by field path."""

    def __init__(self, issues: list[str]):
        self.issues = list(issues)
        super().__init__("invalid scenario config:\n" + "\n".join(f"  - {p}" for p in self.issues))
