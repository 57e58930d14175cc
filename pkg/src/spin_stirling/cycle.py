"""Quantum Stirling cycle bookkeeping for the spin dimer.

The cycle runs between two baths at ``t_hot`` and ``t_cold`` and two
values of the exchange coupling, ``j_a`` and ``j_b``:

    A -> B   isothermal stroke at t_hot, coupling moves j_a -> j_b
    B -> C   isochoric stroke at j_b, bath swaps hot -> cold
    C -> D   isothermal stroke at t_cold, coupling moves j_b -> j_a
    D -> A   isochoric stroke at j_a, bath swaps cold -> hot

All heats are positive when absorbed by the substance and work is
positive when done by it, so the first law over the closed loop reads
``W = q_ab + q_bc + q_cd + q_da`` with no minus signs.  The net work is
also evaluated through an independent closed-form expression in the log
of the susceptibility shape factor; agreement of the two routes is a
package invariant.

Classification into operational modes follows the second-law-allowed
sign patterns of (W, Q_in, Q_out), with a tolerance band around the
all-zero Carnot degeneracy.  Any other sign pattern is reported as
``FORBIDDEN``, which flags a bug or an out-of-domain input rather than
a physical operating regime.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import warnings

from . import _kernels
from .core import Coupling, ThermalPoint
from .errors import CurieRegimeWarning, InvariantViolation, ModeError, ValidationError

__all__ = [
    "CycleSpec",
    "StrokeLedger",
    "OperationMode",
    "heat_isothermal_expansion",
    "heat_isochoric_cooling",
    "heat_isothermal_compression",
    "heat_isochoric_heating",
    "total_work",
    "assemble_ledger",
    "classify_mode",
    "default_classification_tolerance",
    "efficiency",
    "carnot_efficiency",
]

#: Relative first-law closure demanded of every assembled ledger.
FIRST_LAW_RTOL = 1e-10

#: Relative half-width of the Carnot degeneracy band in classify_mode.
MODE_TOLERANCE_RTOL = 1e-12

#: Absolute floor of the classification tolerance, guarding cycles whose
#: energy exchanges all underflow.
MODE_TOLERANCE_FLOOR = 1e-30


@dataclasses.dataclass(frozen=True)
class CycleSpec:
    """One Stirling cycle: two couplings and two bath temperatures.

    Invariants enforced at construction: ``t_hot > t_cold > 0`` strictly
    (the degenerate equal-temperature cycle is analyzed only through
    limits, never as a spec) and ``j_a != j_b`` (a zero-width cycle
    exchanges nothing and is rejected as input error).
    """

    j_a: Coupling
    j_b: Coupling
    t_hot: float
    t_cold: float

    def __post_init__(self) -> None:
        for name in ("t_hot", "t_cold"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ValidationError(f"{name} must be a finite number, got {value!r}")
        if not self.t_cold > 0.0:
            raise ValidationError(
                f"t_cold must be strictly positive, got {self.t_cold!r}"
            )
        if not self.t_hot > self.t_cold:
            raise ValidationError(
                f"t_hot must exceed t_cold, got t_hot={self.t_hot!r}, "
                f"t_cold={self.t_cold!r}"
            )
        if self.j_a.j_over_kb == self.j_b.j_over_kb:
            raise ValidationError(
                "zero-width cycle: j_a and j_b must differ, both are "
                f"{self.j_a.j_over_kb!r} K"
            )

    @classmethod
    def from_values(
        cls, j_a: float, j_b: float, t_hot: float, t_cold: float
    ) -> "CycleSpec":
        """Build a spec from bare floats with default coupling caps."""
        return cls(Coupling(j_a), Coupling(j_b), t_hot, t_cold)

    def endpoints(self) -> tuple[ThermalPoint, ThermalPoint, ThermalPoint, ThermalPoint]:
        """The four cycle nodes (A, B, C, D) as thermal points."""
        return (
            ThermalPoint(self.j_a, self.t_hot),
            ThermalPoint(self.j_b, self.t_hot),
            ThermalPoint(self.j_b, self.t_cold),
            ThermalPoint(self.j_a, self.t_cold),
        )


@dataclasses.dataclass(frozen=True)
class StrokeLedger:
    """The four stroke heats, the net work, and the in/out aggregates.

    Everything is in kelvin times k_B.  ``q_in = q_ab + q_da`` and
    ``q_out = q_bc + q_cd`` are stored as signed sums; in engine
    operation ``q_out`` is negative and no absolute value is ever taken.
    """

    q_ab: float
    q_bc: float
    q_cd: float
    q_da: float
    work: float
    q_in: float
    q_out: float


class OperationMode(enum.Enum):
    """Second-law-allowed operating regimes of the cycle."""

    HEAT_ENGINE = "heat_engine"
    REFRIGERATOR = "refrigerator"
    ACCELERATOR = "accelerator"
    HEATER = "heater"
    CARNOT_DEGENERATE = "carnot"
    FORBIDDEN = "forbidden"

    @property
    def token(self) -> str:
        """Lowercase serialization token used by exports and the CLI."""
        return self.value

    @classmethod
    def from_token(cls, token: str) -> "OperationMode":
        for mode in cls:
            if mode.value == token:
                return mode
        raise ValidationError(f"unknown operation-mode token {token!r}")


def heat_isothermal_expansion(spec: CycleSpec) -> float:
    """Heat absorbed on the hot isotherm A -> B,
    ``t_hot [S(j_b, t_hot) - S(j_a, t_hot)]``."""
    return float(
        _kernels.isothermal_heat(
            spec.j_a.j_over_kb, spec.j_b.j_over_kb, spec.t_hot
        )
    )


def heat_isochoric_cooling(spec: CycleSpec) -> float:
    """Heat exchanged on the fixed-coupling stroke B -> C,
    ``U(j_b, t_cold) - U(j_b, t_hot)``; negative for every valid spec."""
    return float(
        _kernels.isochoric_heat(spec.j_b.j_over_kb, spec.t_hot, spec.t_cold)
    )


def heat_isothermal_compression(spec: CycleSpec) -> float:
    """Heat exchanged on the cold isotherm C -> D,
    ``t_cold [S(j_a, t_cold) - S(j_b, t_cold)]``."""
    return float(
        _kernels.isothermal_heat(
            spec.j_b.j_over_kb, spec.j_a.j_over_kb, spec.t_cold
        )
    )


def heat_isochoric_heating(spec: CycleSpec) -> float:
    """Heat absorbed on the fixed-coupling stroke D -> A,
    ``U(j_a, t_hot) - U(j_a, t_cold)``; positive for every valid spec."""
    return float(
        _kernels.isochoric_heat(spec.j_a.j_over_kb, spec.t_cold, spec.t_hot)
    )


def total_work(spec: CycleSpec) -> float:
    """Net work done by the substance over the cycle.

    Uses the closed-form log expression (see
    :func:`spin_stirling._kernels.net_work`) rather than summing stroke
    heats, so it serves as an independent first-law witness.  Positive
    values mean the cycle delivers work.
    """
    return float(
        _kernels.net_work(
            spec.j_a.j_over_kb, spec.j_b.j_over_kb, spec.t_hot, spec.t_cold
        )
    )


def _stroke_scale(q_ab: float, q_bc: float, q_cd: float, q_da: float) -> float:
    return max(abs(q_ab), abs(q_bc), abs(q_cd), abs(q_da))


def _roundoff_floor(spec: CycleSpec) -> float:
    """Absolute roundoff scale of the stroke-heat arithmetic.

    Every stroke heat is a difference of state-function terms bounded by
    ``T ln 4`` (entropy side) or ``3|J|/4`` (energy side).  In a deeply
    gapped cycle the differences are exponentially small while the terms
    stay O(T) and O(|J|), so the achievable absolute accuracy is set by
    the terms, not the results.  Consistency checks must not demand more
    than a modest multiple of machine epsilon times that term magnitude.
    """
    operand_sum = 2.0 * math.log(4.0) * (spec.t_hot + spec.t_cold) + 1.5 * (
        abs(spec.j_a.j_over_kb) + abs(spec.j_b.j_over_kb)
    )
    return 32.0 * math.ulp(1.0) * operand_sum


def default_classification_tolerance(ledger: StrokeLedger) -> float:
    """Carnot-band half-width used by :func:`classify_mode` by default.

    Relative to the largest stroke magnitude with an absolute floor, so
    near-degenerate cycles where every exchange vanishes together are
    mapped to ``CARNOT_DEGENERATE`` instead of acquiring noise-driven
    sign patterns.
    """
    scale = _stroke_scale(ledger.q_ab, ledger.q_bc, ledger.q_cd, ledger.q_da)
    return MODE_TOLERANCE_RTOL * max(scale, MODE_TOLERANCE_FLOOR)


def assemble_ledger(spec: CycleSpec) -> StrokeLedger:
    """Evaluate all four strokes and aggregates for one cycle.

    The ledger's ``work`` field carries the independent closed-form
    value; this function verifies the first-law closure against the sum
    of the stroke heats to 1e-10 relative (floored at the roundoff
    scale of the summed state functions, see :func:`_roundoff_floor`)
    and raises :class:`InvariantViolation` on disagreement, since the
    two routes are algebraically identical and can only diverge through
    a bug.

    Emits :class:`CurieRegimeWarning` when any of the four cycle
    endpoints has ``T > |J|/k_B``, where the dimer model leaves the
    exchange-dominated regime it is meant to describe.
    """
    q_ab = heat_isothermal_expansion(spec)
    q_bc = heat_isochoric_cooling(spec)
    q_cd = heat_isothermal_compression(spec)
    q_da = heat_isochoric_heating(spec)
    work = total_work(spec)

    scale = _stroke_scale(q_ab, q_bc, q_cd, q_da)
    floor = _roundoff_floor(spec)
    closure = abs(work - (q_ab + q_bc + q_cd + q_da))
    if closure > max(FIRST_LAW_RTOL * max(scale, abs(work)), floor):
        raise InvariantViolation(
            f"first-law closure violated: independent work {work!r} vs "
            f"stroke sum {q_ab + q_bc + q_cd + q_da!r}"
        )
    sign_slack = max(MODE_TOLERANCE_RTOL * max(scale, MODE_TOLERANCE_FLOOR), floor)
    if q_bc > sign_slack or q_da < -sign_slack:
        raise InvariantViolation(
            f"isochoric sign law violated: q_bc={q_bc!r} (expected <= 0), "
            f"q_da={q_da!r} (expected >= 0)"
        )

    if any(
        point.temperature > abs(point.j_over_kb) for point in spec.endpoints()
    ):
        warnings.warn(
            "cycle endpoint enters the Curie paramagnetic regime "
            "(T > |J|/k_B); the dimer description degrades there",
            CurieRegimeWarning,
            stacklevel=2,
        )

    return StrokeLedger(
        q_ab=q_ab,
        q_bc=q_bc,
        q_cd=q_cd,
        q_da=q_da,
        work=work,
        q_in=q_ab + q_da,
        q_out=q_bc + q_cd,
    )


def classify_mode(
    ledger: StrokeLedger, tolerance: float | None = None
) -> OperationMode:
    """Map the sign pattern of (work, q_in, q_out) to an operating mode.

    Patterns, with + meaning strictly positive and - strictly negative:

    ==========  =====  ======  ======
    mode        work   q_in    q_out
    ==========  =====  ======  ======
    heat engine  +      +       -
    refrigerator -      -       +
    accelerator  -      +       -
    heater       -      -       -
    ==========  =====  ======  ======

    When all three magnitudes fall inside the tolerance band the cycle
    sits at a Carnot degeneracy where the four modes coincide, and
    ``CARNOT_DEGENERATE`` is returned.  Any remaining pattern (for
    example positive work with negative absorbed heat) cannot arise from
    the physics and is returned as ``FORBIDDEN``.

    Parameters
    ----------
    ledger:
        Assembled stroke ledger.
    tolerance:
        Non-negative half-width of the degeneracy band in kelvin times
        k_B.  Defaults to :func:`default_classification_tolerance`.
    """
    if tolerance is None:
        tolerance = default_classification_tolerance(ledger)
    elif not (isinstance(tolerance, (int, float)) and tolerance >= 0.0):
        raise ValidationError(f"tolerance must be >= 0, got {tolerance!r}")

    w, q_in, q_out = ledger.work, ledger.q_in, ledger.q_out
    if abs(w) <= tolerance and abs(q_in) <= tolerance and abs(q_out) <= tolerance:
        return OperationMode.CARNOT_DEGENERATE

    pattern = (w > 0.0, q_in > 0.0, q_out > 0.0)
    if pattern == (True, True, False):
        return OperationMode.HEAT_ENGINE
    if pattern == (False, False, True):
        return OperationMode.REFRIGERATOR
    if pattern == (False, True, False):
        return OperationMode.ACCELERATOR
    if pattern == (False, False, False):
        return OperationMode.HEATER
    return OperationMode.FORBIDDEN


def efficiency(spec: CycleSpec) -> float:
    """Heat-engine efficiency ``eta = W / Q_in``.

    Only defined in heat-engine operation; any other classification
    raises :class:`ModeError` because the ratio stops being a
    performance indicator once the work changes sign.  The result is
    strictly below the Carnot bound for every valid spec, and that bound
    is enforced as an internal invariant.
    """
    ledger = assemble_ledger(spec)
    mode = classify_mode(ledger)
    if mode is not OperationMode.HEAT_ENGINE:
        raise ModeError(
            f"efficiency requires heat-engine operation, cycle is {mode.token!r}"
        )
    eta = ledger.work / ledger.q_in
    eta_c = carnot_efficiency(spec.t_hot, spec.t_cold)
    if not 0.0 < eta < eta_c:
        raise InvariantViolation(
            f"efficiency {eta!r} escaped the open interval (0, eta_C={eta_c!r})"
        )
    return eta


def carnot_efficiency(t_hot: float, t_cold: float) -> float:
    """Carnot bound ``1 - t_cold / t_hot``.

    Accepts ``t_hot == t_cold`` (returning exactly 0.0) so limit
    analyses can evaluate the degenerate point, but rejects a hot bath
    colder than the cold one.
    """
    for name, value in (("t_hot", t_hot), ("t_cold", t_cold)):
        if not (isinstance(value, (int, float)) and math.isfinite(value)):
            raise ValidationError(f"{name} must be a finite number, got {value!r}")
    if not t_cold > 0.0:
        raise ValidationError(f"t_cold must be strictly positive, got {t_cold!r}")
    if t_hot < t_cold:
        raise ValidationError(
            f"t_hot must be at least t_cold, got t_hot={t_hot!r} < t_cold={t_cold!r}"
        )
    return 1.0 - t_cold / t_hot
