"""Exception types shared across the kernel."""


class QcError(Exception):
    """Base class for all kernel errors."""


class ZeroWindow(QcError):
    """Inversion (or leading-term access) of a series that is zero in its window."""


class EmptyWindow(QcError):
    """A window operation produced an empty certified range."""


class CutoffExceeded(QcError):
    """A request needs mode indices or degrees beyond the configured cutoff."""


class NonconvergentCoincidentProduct(QcError):
    """A same-point contraction has no positive q-valuation slope, so its
    mode sum does not terminate q-adically."""


class GuardInsufficient(QcError):
    """The clearing guard band certifies no q-range; enlarge the guard or
    shrink the comparison window."""


class WrongLevel(QcError):
    """A construction that only exists at a specific level was requested
    at a different one."""


class IdentityFailed(QcError):
    """An identity check found a mismatched coefficient.

    Carries the first offending position so reports can point at it.
    """

    def __init__(self, message, x_power=None, q_power=None, lhs=None, rhs=None):
        super().__init__(message)
        self.x_power = x_power
        self.q_power = q_power
        self.lhs = lhs
        self.rhs = rhs


class ConfigError(QcError):
    """Bad harness configuration (unknown key, unparsable value, bad combination)."""
