"""Exception hierarchy.

Domain errors subclass the builtin they refine so callers catching
``ValueError`` or ``RuntimeError`` keep working. ``exit_code`` is read by the
command-line front end.
"""

from typing import Any, Optional


class ConfigError(ValueError):
    """Invalid configuration or command-line flags."""

    exit_code = 1


class CapExceededError(ValueError):
    """A combinatorial cap would be exceeded."""

    exit_code = 2

    def __init__(self, what: str, requested: int, cap: int):
        self.requested = requested
        self.cap = cap
        super().__init__(
            f"{what} {requested} exceeds the configured cap {cap}; "
            f"raise the cap to at least {requested} to proceed"
        )


class InvalidGardenError(ValueError):
    """Malformed tree, garden or pairing."""

    exit_code = 1


class InvalidLayeringError(ValueError):
    """Layering violates monotonicity, pairing equality or the depth bound."""

    exit_code = 1


class DecorationError(ValueError):
    """Inconsistent decoration, momentum violation or out-of-grid momentum."""

    exit_code = 1


class NotABlockError(ValueError):
    """Block, vine or cut preconditions failed."""

    exit_code = 1


class TwistError(ValueError):
    """Twist preconditions failed; ``failures`` lists each one."""

    exit_code = 1

    def __init__(self, failures: list[str]):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class BlowupError(RuntimeError):
    """Blowup monitor crossed its ceiling."""

    exit_code = 3

    def __init__(self, message: str, partial: Optional[Any] = None):
        self.partial = partial
        super().__init__(message)


class HaltError(RuntimeError):
    """Too many invalid trajectories."""

    exit_code = 3
