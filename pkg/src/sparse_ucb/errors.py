"""Exception hierarchy shared by every module of the package."""


class SparseBanditError(Exception):
    """Base class for all errors raised by :mod:`sparse_ucb`."""


class EmptyInstance(SparseBanditError, ValueError):
    pass


class SparsityMismatch(SparseBanditError, ValueError):
    """The number of strictly positive means differs from ``s``."""


class IndexOutOfRange(SparseBanditError, IndexError):
    pass


class LengthMismatch(SparseBanditError, ValueError):
    pass


class NotInitialized(SparseBanditError, RuntimeError):
    """An arm has never been pulled, so the active sets are undefined."""


class InvariantViolation(SparseBanditError, RuntimeError):
    pass


class NonzeroBadArm(SparseBanditError, ValueError):
    """The lower bound only covers instances whose bad arms have mean exactly 0."""


class NoValidK(SparseBanditError, RuntimeError):
    """The closed-form lower bound disagrees with the LP optimum."""


class DegenerateNoBadArms(SparseBanditError, ValueError):
    pass


class NumericalFailure(SparseBanditError, RuntimeError):
    pass


class WrongPolicy(SparseBanditError, ValueError):
    pass


class ReplicationFailed(SparseBanditError, RuntimeError):
    def __init__(self, index: int, cause: BaseException) -> None:
        super().__init__(f"replication {index} failed: {cause!r}")
        self.index = index


class ConfigError(SparseBanditError, ValueError):
    """Base for configuration problems surfaced by the CLI."""


class ParseError(ConfigError):
    pass


class ValidationError(ConfigError):
    pass
