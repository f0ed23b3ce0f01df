class WorkbenchError(Exception):
    """
    Base class for every error the workbench raises on purpose.

    Each subclass carries the exit code the command line reports for it.
    """

    exit_code: int = 3


# ---------- Usage errors (exit 2) ----------

class UsageError(WorkbenchError):
    """Malformed command, option, point text, or an out-of-range request."""

    exit_code = 2


class ConfigError(UsageError):
    """The configuration file is unreadable, nested, or names an unknown key."""


class NotPrime(UsageError):
    """A modulus that should be prime is not."""


class InvalidCondition(UsageError):
    """An incidence condition whose point does not lie on its line."""


# ---------- Degenerate input (exit 3) ----------

class DegenerateInput(WorkbenchError):
    """Input that is well formed but degenerate for the requested computation."""

    exit_code = 3


class BadReduction(DegenerateInput):
    """Reduction mod p hits a denominator, a zero discriminant, or the zero form."""


class BadPrime(DegenerateInput):
    """The prime is excluded for a family or linear system."""


class DegenerateLine(DegenerateInput):
    """The line through two points lies inside the curve."""


class DegeneratePoint(DegenerateInput):
    """A point is all zeros in some block, coincides with a base point, or is singular."""


class NotOnCurve(DegenerateInput):
    """A point handed to the group law does not lie on the curve."""


class NotGeneral(DegenerateInput):
    """Points are not in general position for the section matrix."""


class SingularFibre(DegenerateInput):
    """A fibre that must be smooth has a singular point."""


class InconsistentConditions(DegenerateInput):
    """The only curve satisfying the conditions is zero."""


class SingularFit(DegenerateInput):
    """The fit matrix does not have full column rank."""


class InconsistentFit(DegenerateInput):
    """The moment values admit no exact solution in the requested basis."""


class NotFound(DegenerateInput):
    """A bounded search came up empty."""


class CacheCorrupt(WorkbenchError):
    """A cache file holds a record that cannot be parsed or contradicts another."""

    exit_code = 3


# ---------- Verification failures (exit 1) ----------

class VerificationFailed(WorkbenchError):
    """An acceptance suite found an identity that does not hold."""

    exit_code = 1
