"""Exception hierarchy and warning categories for the spin-stirling package.

Every error raised deliberately by this package derives from
:class:`SpinStirlingError`, so callers can catch one base class at API
boundaries.  Validation failures additionally derive from :class:`ValueError`
to keep duck-typed call sites working.
"""

from __future__ import annotations

__all__ = [
    "SpinStirlingError",
    "ValidationError",
    "OverflowCapError",
    "ModeError",
    "DataFormatError",
    "InvariantViolation",
    "CurieRegimeWarning",
]


class SpinStirlingError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SpinStirlingError, ValueError):
    """An input value violates a documented domain invariant.

    Examples: non-positive temperature, coupling magnitude beyond the
    configured cap, a zero-width cycle with identical couplings, or a
    bridging angle outside the sanity window.
    """


class OverflowCapError(ValidationError):
    """A Boltzmann exponent exceeds the numerical-oracle overflow cap.

    Raised only by code paths that must evaluate ``exp(J / (k_B T))``
    literally, such as the 4x4 Gibbs oracle.  The closed-form state
    functions are evaluated in a rewritten stable form and never hit
    this cap.
    """


class ModeError(SpinStirlingError):
    """An operation requiring a specific operational mode was applied
    to a cycle in a different mode.

    The main producer is :func:`spin_stirling.cycle.efficiency`, which is
    meaningful only for the heat-engine sign pattern.
    """


class DataFormatError(SpinStirlingError, ValueError):
    """An experimental data stream cannot be parsed or fails dataset
    invariants (malformed rows, duplicate temperatures, too few points).

    Parsing errors carry the 1-based line number of the offending row in
    their message.
    """


class InvariantViolation(SpinStirlingError):
    """An internal consistency check failed.

    This signals a bug in the package (or pathological floating-point
    input), never a legitimate physical regime.  Example: the two
    independent total-work evaluations disagreeing beyond tolerance.
    """


class CurieRegimeWarning(UserWarning):
    """A cycle endpoint lies in the Curie paramagnetic regime, T > |J|/k_B.

    The closed forms remain valid there, but the dimer model stops being
    a faithful description of a real complex well above the exchange
    splitting, so results should be treated with care.  This is a
    warning, not an error, because the mathematics stays well defined.
    """
