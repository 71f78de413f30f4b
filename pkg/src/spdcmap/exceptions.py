"""Exception hierarchy shared by all modules."""


class SpdcMapError(Exception):
    """Base class for errors raised by spdcmap."""


class ValidationError(SpdcMapError, ValueError):
    """One or more invariants of an input object are violated.

    ``problems`` lists every violated invariant so callers can report them
    individually.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DegenerateMarginalError(ValidationError):
    """The marginal of a joint-spectrum model has no finite width."""


class UndefinedStateError(SpdcMapError, ValueError):
    pass


class FitError(SpdcMapError, RuntimeError):
    """A fit did not converge or produced an invalid model."""


class InconsistentInputsError(SpdcMapError, ValueError):
    pass


class InfeasibleError(SpdcMapError, ValueError):
    """No scanned point satisfies an optimization constraint."""
