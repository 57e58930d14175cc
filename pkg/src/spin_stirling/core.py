"""Equilibrium state functions of a spin-1/2 exchange-coupled dimer.

Two spin-1/2 centers coupled by an isotropic Heisenberg exchange J have a
four-level spectrum: a triplet at J/4 and a singlet at -3J/4 (positive J
puts the singlet below, negative J the triplet).  Every thermal property
of the dimer is a closed-form function of the single dimensionless ratio
J / (k_B T), and this module exposes those closed forms behind small
typed value objects.

Exchange energies are carried as J/k_B in kelvin throughout, so formulas
read directly in kelvin and no dimensional constants appear until a
caller asks for eV or for cgs susceptibilities.

A brute-force 4x4 Gibbs-state oracle (:func:`gibbs_oracle`) builds the
Hamiltonian matrix explicitly, diagonalizes it numerically, and
recomputes populations, entropy, and energy from Boltzmann weights.  It
exists to cross-check the closed forms in the test suite and shares no
algebra with them beyond the exponential function.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import _kernels
from .constants import (
    CURIE_CONSTANT_EMU_K_PER_MOL,
    DEFAULT_COUPLING_CAP_K,
    ORACLE_EXPONENT_CAP,
)
from .errors import InvariantViolation, OverflowCapError, ValidationError

__all__ = [
    "Coupling",
    "ThermalPoint",
    "PopulationVector",
    "GibbsOracleResult",
    "dimensionless_susceptibility",
    "molar_susceptibility",
    "populations",
    "entropy",
    "internal_energy",
    "gibbs_oracle",
]


@dataclasses.dataclass(frozen=True)
class Coupling:
    """Exchange constant of the dimer, stored as J/k_B in kelvin.

    Positive values favor the singlet ground state
    (antiferromagnetic exchange); negative values leave the triplet
    manifold lowest (ferromagnetic exchange).

    Parameters
    ----------
    j_over_kb:
        Exchange constant divided by k_B, in kelvin.  Must be finite.
    cap:
        Largest accepted magnitude, in kelvin.  Guards against unit
        mistakes; the default of 1e4 K is far above any molecular
        exchange constant.  Not part of equality comparisons.
    """

    j_over_kb: float
    cap: float = dataclasses.field(
        default=DEFAULT_COUPLING_CAP_K, compare=False, repr=False
    )

    def __post_init__(self) -> None:
        j = self.j_over_kb
        if not math.isfinite(j):
            raise ValidationError(f"coupling j_over_kb must be finite, got {j!r}")
        if not (self.cap > 0.0):
            raise ValidationError(f"coupling cap must be positive, got {self.cap!r}")
        if abs(j) > self.cap:
            raise ValidationError(
                f"coupling magnitude {abs(j):g} K exceeds the cap {self.cap:g} K"
            )


@dataclasses.dataclass(frozen=True)
class ThermalPoint:
    """A (coupling, temperature) pair describing one equilibrium state."""

    coupling: Coupling
    temperature: float

    def __post_init__(self) -> None:
        t = self.temperature
        if not (math.isfinite(t) and t > 0.0):
            raise ValidationError(
                f"temperature must be finite and strictly positive, got {t!r}"
            )

    @classmethod
    def from_values(cls, j_over_kb: float, temperature: float) -> "ThermalPoint":
        """Build a point from bare floats, applying the default coupling cap."""
        return cls(Coupling(j_over_kb), temperature)

    @property
    def j_over_kb(self) -> float:
        return self.coupling.j_over_kb


@dataclasses.dataclass(frozen=True)
class PopulationVector:
    """Thermal occupations of the four dimer levels.

    The first three entries are the shared triplet population F and the
    fourth is the singlet population 1 - 3F.  Construction enforces the
    exact threefold degeneracy and normalization to within 1e-14.
    """

    p1: float
    p2: float
    p3: float
    p4: float

    def __post_init__(self) -> None:
        if not (self.p1 == self.p2 == self.p3):
            raise InvariantViolation(
                "triplet populations must be exactly equal, got "
                f"({self.p1!r}, {self.p2!r}, {self.p3!r})"
            )
        for name in ("p1", "p2", "p3", "p4"):
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise InvariantViolation(
                    f"population {name}={value!r} outside [0, 1]"
                )
        total = self.p1 + self.p2 + self.p3 + self.p4
        if abs(total - 1.0) > 1e-14:
            raise InvariantViolation(
                f"populations sum to {total!r}, expected 1 within 1e-14"
            )

    @property
    def triplet(self) -> float:
        """The shared population of each triplet level."""
        return self.p1

    @property
    def singlet(self) -> float:
        return self.p4

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.p1, self.p2, self.p3, self.p4)


@dataclasses.dataclass(frozen=True)
class GibbsOracleResult:
    """Output of the brute-force Gibbs-state evaluation.

    ``eigenvalues`` is reported in the fixed basis order used throughout
    the package: the three triplet levels first, then the singlet.
    """

    populations: PopulationVector
    entropy: float
    internal_energy: float
    eigenvalues: tuple[float, float, float, float]


def dimensionless_susceptibility(point: ThermalPoint) -> float:
    """Shape factor F(J, T) = 1 / (3 + exp(J / (k_B T))).

    F is the population of each triplet level and the g-free part of the
    molar susceptibility, which is why the cycle thermodynamics never
    sees the Lande factor.  The value lies in (0, 1/3); in the deep
    singlet regime it may round to exactly 0.0 once the Boltzmann weight
    underflows, which is the correct limit to double precision.

    Parameters
    ----------
    point:
        Equilibrium state at which to evaluate.

    Returns
    -------
    float
        The dimensionless shape factor.
    """
    return float(
        _kernels.susceptibility_shape(point.j_over_kb, point.temperature)
    )


def molar_susceptibility(point: ThermalPoint, g: float) -> float:
    """Molar susceptibility of the dimer in cgs emu/mol.

    chi = 2 C g**2 F(J, T) / T with C = N_A mu_B**2 / k_B the Curie
    prefactor.  This is the standard singlet-triplet expression used to
    fit variable-temperature magnetometry of dinuclear complexes.

    Parameters
    ----------
    point:
        Equilibrium state (temperature strictly positive by
        construction).
    g:
        Lande g-factor, strictly positive.
    """
    if not (isinstance(g, (int, float)) and math.isfinite(g) and g > 0.0):
        raise ValidationError(f"g-factor must be finite and positive, got {g!r}")
    f = dimensionless_susceptibility(point)
    return 2.0 * CURIE_CONSTANT_EMU_K_PER_MOL * g * g * f / point.temperature


def populations(point: ThermalPoint) -> PopulationVector:
    """Thermal populations (F, F, F, 1 - 3F) of the four levels.

    The singlet entry is evaluated from its own stable expression rather
    than by subtracting 3F from one, so it keeps full relative accuracy
    in the triplet-dominated regime.
    """
    f = float(_kernels.susceptibility_shape(point.j_over_kb, point.temperature))
    q = float(_kernels.singlet_population(point.j_over_kb, point.temperature))
    return PopulationVector(f, f, f, q)


def entropy(point: ThermalPoint) -> float:
    """Entropy of the thermal state in units of k_B.

    Shannon form over the four populations, -3 F log F
    - (1 - 3F) log(1 - 3F), with both logarithms formed analytically so
    the x log x -> 0 limits are exact at the representable endpoints.
    """
    return float(
        _kernels.entropy_dimensionless(point.j_over_kb, point.temperature)
    )


def internal_energy(point: ThermalPoint) -> float:
    """Mean energy U = 3 J (F - 1/4) in kelvin times k_B.

    Zero for J = 0 identically; approaches -3J/4 (singlet side) or 3J/4
    times the residual population imbalance as T -> 0.
    """
    return float(
        _kernels.internal_energy_kelvin(point.j_over_kb, point.temperature)
    )


_PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# Spin-dot-spin operator 4 S1.S2 in the product basis, assembled once
# from Pauli Kronecker products at import time.
_SPIN_DOT_SPIN_X4 = sum(
    np.kron(p, p) for p in (_PAULI_X, _PAULI_Y, _PAULI_Z)
)


def _heisenberg_matrix(j_over_kb: float) -> np.ndarray:
    """Dense J S1.S2 matrix in the two-spin product basis, in kelvin."""
    return (j_over_kb / 4.0) * _SPIN_DOT_SPIN_X4


def gibbs_oracle(point: ThermalPoint) -> GibbsOracleResult:
    """Brute-force Gibbs-state evaluation on the explicit 4x4 Hamiltonian.

    Builds J S1.S2 from Pauli Kronecker products, diagonalizes it with
    :func:`numpy.linalg.eigh`, forms max-shifted Boltzmann weights, and
    reassembles populations, entropy, and mean energy.  Intended as an
    independent cross-check of the closed forms; the test suite holds
    the two routes to 1e-12 agreement.

    The three weights of the degenerate triplet manifold are averaged
    into the single shared population before packing, which removes the
    last-ulp asymmetry a numerical eigensolver leaves between degenerate
    levels.

    Raises
    ------
    OverflowCapError
        If |J| / T exceeds the literal-exponential cap of 700.  Unlike
        the closed forms, this code path really evaluates ``exp`` of
        (shifted) spectral gaps and must refuse arguments that could
        push it into inf.
    """
    j = point.j_over_kb
    t = point.temperature
    if abs(j) / t > ORACLE_EXPONENT_CAP:
        raise OverflowCapError(
            f"|J|/T = {abs(j) / t:g} exceeds the oracle exponent cap "
            f"{ORACLE_EXPONENT_CAP:g}; use the closed forms in this regime"
        )

    energies, _ = np.linalg.eigh(_heisenberg_matrix(j))
    shifted = energies - energies.min()
    weights = np.exp(-shifted / t)
    weights /= weights.sum()

    singlet_energy = -0.75 * j
    singlet_index = int(np.argmin(np.abs(energies - singlet_energy)))
    triplet_indices = [i for i in range(4) if i != singlet_index]

    p_triplet = float(weights[triplet_indices].mean())
    p_singlet = float(weights[singlet_index])
    # Averaging preserves the total, so renormalization is a no-op up to
    # the rounding already present in the weights.
    pops = PopulationVector(p_triplet, p_triplet, p_triplet, p_singlet)

    entropy_value = float(-(weights * np.log(weights)).sum())
    energy_value = float((weights * energies).sum())
    ordered = (
        float(energies[triplet_indices[0]]),
        float(energies[triplet_indices[1]]),
        float(energies[triplet_indices[2]]),
        float(energies[singlet_index]),
    )
    return GibbsOracleResult(
        populations=pops,
        entropy=entropy_value,
        internal_energy=energy_value,
        eigenvalues=ordered,
    )
