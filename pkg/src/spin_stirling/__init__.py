"""Quantum Stirling cycle of a spin-1/2 exchange-coupled dimer.

The package is organized in thin layers:

``core``
    Closed-form equilibrium state functions of the dimer (populations,
    entropy, internal energy, susceptibility shape factor) plus a 4x4
    Gibbs-state numerical oracle that cross-checks them.
``cycle``
    Per-stroke heat accounting for the four-stroke Stirling cycle, net
    work, operational-mode classification, and efficiency.
``phasemap``
    Grid sweeps over the (coupling ratio, temperature ratio) plane,
    zero-work boundary tracing, and CSV/JSON export.
``magnetometry``
    Ingestion and Bleaney-Bowers fitting of experimental molar
    susceptibility data, bridging-angle conversion, and engine curves
    driven by fitted couplings.
``cli``
    The ``spin-stirling`` command-line tool.

Energies are carried internally as J/k_B in kelvin; eV appears only in
reporting layers.
"""

from .constants import (
    CURIE_CONSTANT_EMU_K_PER_MOL,
    DEFAULT_COUPLING_CAP_K,
    KB_EV_PER_K,
    ORACLE_EXPONENT_CAP,
)
from .core import (
    Coupling,
    GibbsOracleResult,
    PopulationVector,
    ThermalPoint,
    dimensionless_susceptibility,
    entropy,
    gibbs_oracle,
    internal_energy,
    molar_susceptibility,
    populations,
)
from .cycle import (
    CycleSpec,
    OperationMode,
    StrokeLedger,
    assemble_ledger,
    carnot_efficiency,
    classify_mode,
    efficiency,
    heat_isochoric_cooling,
    heat_isochoric_heating,
    heat_isothermal_compression,
    heat_isothermal_expansion,
    total_work,
)
from .errors import (
    CurieRegimeWarning,
    DataFormatError,
    InvariantViolation,
    ModeError,
    OverflowCapError,
    SpinStirlingError,
    ValidationError,
)
from .magnetometry import (
    BridgingAngle,
    EngineCurvePoint,
    FitResult,
    FixG,
    FreeG,
    SusceptibilityDataset,
    bleaney_bowers_chi,
    bleaney_bowers_jacobian,
    coupling_from_angle,
    engine_curve,
    engine_curve_csv,
    fit_bleaney_bowers,
    fit_report_json,
    ingest_csv,
)
from .phasemap import (
    Branch,
    GridAnchor,
    ModeCell,
    SweepGrid,
    export,
    export_to_path,
    read_cells,
    sweep,
    trace_zero_work_boundary,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "KB_EV_PER_K",
    "CURIE_CONSTANT_EMU_K_PER_MOL",
    "ORACLE_EXPONENT_CAP",
    "DEFAULT_COUPLING_CAP_K",
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
    "efficiency",
    "carnot_efficiency",
    "Branch",
    "GridAnchor",
    "SweepGrid",
    "ModeCell",
    "sweep",
    "trace_zero_work_boundary",
    "export",
    "export_to_path",
    "read_cells",
    "SusceptibilityDataset",
    "FitResult",
    "FixG",
    "FreeG",
    "BridgingAngle",
    "EngineCurvePoint",
    "bleaney_bowers_chi",
    "bleaney_bowers_jacobian",
    "ingest_csv",
    "fit_bleaney_bowers",
    "fit_report_json",
    "coupling_from_angle",
    "engine_curve",
    "engine_curve_csv",
    "SpinStirlingError",
    "ValidationError",
    "OverflowCapError",
    "ModeError",
    "DataFormatError",
    "InvariantViolation",
    "CurieRegimeWarning",
]
