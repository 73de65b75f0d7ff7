"""Exception types raised by the package."""


class MultistableError(ValueError):
    """Base class for domain errors (bad inputs, violated preconditions)."""


class StructureError(MultistableError):
    """An information structure or scenario description is malformed."""


class ZeroMassError(MultistableError):
    """A rectangle, cell or conditioning event has zero probability."""


class GuardExceeded(MultistableError):
    """An exhaustive enumeration would exceed its size guard."""


class PolicyError(MultistableError):
    """A protocol policy produced an invalid message."""


class PreconditionError(MultistableError):
    """Inputs do not satisfy the operation's stated hypotheses."""
