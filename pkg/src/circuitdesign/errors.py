"""Exception types shared across the toolkit."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class IntegrationError(RuntimeError):
    """The ODE integrator could not continue.

    ``t_fail`` is the simulation time at which the failure was detected.
    """

    def __init__(self, message, t_fail, phase=None):
        if phase is not None:
            message = f"[{phase}] {message}"
        super().__init__(f"{message} (t={t_fail:.6g})")
        self.t_fail = t_fail
        self.phase = phase


class SteadyStateNotReached(RuntimeError):
    """No state satisfied the steady-state residual bound before ``t_max``."""

    def __init__(self, t_max, residual, phase=None):
        msg = f"steady state not reached by t={t_max:g} (residual {residual:.3g})"
        if phase is not None:
            msg = f"[{phase}] {msg}"
        super().__init__(msg)
        self.t_max = t_max
        self.residual = residual
        self.phase = phase


class EmptyFrontError(DomainError):
    """A Pareto front was requested from a set with no feasible point."""


class BudgetExceeded(DomainError):
    """Exhaustive enumeration would exceed the configured design budget."""

    def __init__(self, count, budget):
        super().__init__(f"enumeration needs {count} designs, budget is {budget}")
        self.count = count
        self.budget = budget
