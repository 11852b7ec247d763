"""Exception hierarchy shared by all firecrew modules."""


class FirecrewError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(FirecrewError):
    """Invalid configuration value or file."""


class InputError(FirecrewError):
    """Caller passed a value that violates an operation's preconditions."""


class StateError(FirecrewError):
    """Operation invoked on an object in the wrong state."""


class ParseError(FirecrewError):
    """A mediator reply contained no parseable task line."""


class NoFireToTarget(FirecrewError):
    """Raised by prompt builders when there is no active fire to direct agents to."""


class RejectedTask(FirecrewError):
    """A task referenced an agent that does not exist in the world."""


class BackendError(FirecrewError):
    """Completion backend returned a non-success HTTP status."""

    def __init__(self, status: int, message: str = ""):
        super().__init__(f"backend returned status {status}: {message}")
        self.status = status


class Unavailable(FirecrewError):
    """Completion backend did not answer within the configured retries."""


class NumericsError(FirecrewError):
    """Non-finite value encountered in the policy or optimizer."""


class ReplayError(FirecrewError):
    """Replay input is unreadable or from an incompatible version."""


class ReplayMismatch(ReplayError):
    """Replayed trajectory diverged from the recorded one."""

    def __init__(self, step: int, message: str = ""):
        super().__init__(f"replay diverged at step {step}" + (f": {message}" if message else ""))
        self.step = step
