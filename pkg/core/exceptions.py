class PinwheelError(Exception):
    """Base class for every error raised by the pinwheel toolkit."""


class InvalidPeriodError(PinwheelError, ValueError):
    pass


class InstanceParseError(PinwheelError, ValueError):
    pass


class MalformedScheduleError(PinwheelError, ValueError):
    pass


class FoldError(PinwheelError, ValueError):
    pass


class PartitionError(PinwheelError, ValueError):
    pass


class LiftError(PinwheelError, RuntimeError):
    """A lifted schedule failed verification: a folding soundness bug."""


class SolverConfigError(PinwheelError, ValueError):
    pass


class UnknownSolverError(PinwheelError, ValueError):
    pass


class ContractViolation(PinwheelError, RuntimeError):
    pass


class StageMissingError(PinwheelError, LookupError):
    pass


class ProofParamsError(PinwheelError, ValueError):
    pass


class GeneratorConfigError(PinwheelError, ValueError):
    pass
