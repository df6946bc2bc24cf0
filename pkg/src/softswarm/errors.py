"""Exception types shared across the package."""


class ContractViolationError(ValueError):
    """An argument violates a documented precondition (shape, range, domain)."""


class CriticalPointNotFoundError(LookupError):
    """A point was expected to be one of an objective's listed critical points."""


class DivergenceError(RuntimeError):
    """A trajectory produced a non-finite coordinate.

    Carries the index of the integration step that produced it.
    """

    def __init__(self, step: int, detail: str = ""):
        self.step = step
        msg = f"non-finite position after integration step {step}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class ConfigError(ValueError):
    """A run configuration is malformed or out of range."""
