import os
from dataclasses import dataclass

from .errors import SettrigError

TOL_ENV = "SETTRIG_TOL"


@dataclass(frozen=True)
class Tolerance:
    """Numerical slacks shared by every module.

    ``feas_tol`` is the allowed constraint violation, ``rank_tol`` the
    threshold below which a pivot or singular value counts as zero.
    """

    feas_tol: float = 1e-7
    rank_tol: float = 1e-9

    def __post_init__(self):
        if not (self.feas_tol > 0 and self.rank_tol > 0):
            raise ValueError("tolerances must be strictly positive")


def default_tolerance():
    """Defaults, with ``feas_tol`` overridden by ``$SETTRIG_TOL`` if set."""
    raw = os.environ.get(TOL_ENV)
    if not raw:
        return Tolerance()
    try:
        return Tolerance(feas_tol=float(raw))
    except ValueError as exc:
        raise SettrigError(f"bad {TOL_ENV}={raw!r}: {exc}") from None
