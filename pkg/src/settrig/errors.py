"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end:
2 for infeasibility / violated assumptions, 3 for numerical failures.
"""


class SettrigError(Exception):
    exit_code = 2


class DimensionMismatch(SettrigError, ValueError):
    pass


class NotCSet(SettrigError, ValueError):
    """Set is unbounded or does not contain the origin in its interior."""


class NegativeScale(SettrigError, ValueError):
    pass


class EmptyPolytope(SettrigError):
    pass


class UnboundedPolytope(SettrigError):
    pass


class MalformedProgram(SettrigError, ValueError):
    pass


class EmptyIterate(SettrigError):
    """An iterate of the contractive-set recursion became empty."""


class NotContractive(SettrigError):
    pass


class StateOutsideSet(SettrigError):
    """A transmission state left the contractive set."""


class EmptyCandidates(SettrigError):
    pass


class AssumptionViolated(SettrigError):
    pass


class NumericalError(SettrigError, ArithmeticError):
    exit_code = 3


class DecompositionFailed(NumericalError):
    pass
