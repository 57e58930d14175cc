"""Command-line surface for the spin-stirling package.

Four subcommands wrap the library: ``cycle`` evaluates one Stirling
cycle, ``sweep`` writes a mode map over the ratio plane, ``fit``
performs a Bleaney-Bowers fit of a susceptibility CSV, and
``engine-curve`` tabulates the cycle against the hot-bath temperature.

Every parameter can come from a flat INI config file (one section per
subcommand, keys equal to the long flag names with dashes replaced by
underscores); explicit flags override the file.  The fully resolved
parameter set is echoed with the output so a run can be reproduced from
its artifacts alone.  Outputs are deterministic byte for byte.

Exit codes: 0 success, 2 validation failure, 3 I/O failure, 4 data or
fit failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import importlib.resources
import json
import math
import sys
from typing import Any, Callable, Sequence

import numpy as np

from .constants import KB_EV_PER_K
from .core import Coupling
from .cycle import (
    CycleSpec,
    OperationMode,
    assemble_ledger,
    carnot_efficiency,
    classify_mode,
)
from .errors import (
    DataFormatError,
    InvariantViolation,
    ModeError,
    SpinStirlingError,
    ValidationError,
)
from .magnetometry import (
    FixG,
    FreeG,
    engine_curve,
    engine_curve_csv,
    fit_bleaney_bowers,
    fit_report_json,
    ingest_csv,
)
from .phasemap import Branch, GridAnchor, SweepGrid, export_to_path, sweep

__all__ = ["main", "console_entry", "schema_text"]

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_DATA = 4

_MODE_COUNT_ORDER = (
    OperationMode.HEAT_ENGINE,
    OperationMode.REFRIGERATOR,
    OperationMode.ACCELERATOR,
    OperationMode.HEATER,
    OperationMode.CARNOT_DEGENERATE,
    OperationMode.FORBIDDEN,
)


def schema_text(name: str) -> str:
    """Return the shipped JSON schema for ``name``.

    ``name`` is the schema stem, one of ``cycle_report``, ``fit_report``,
    or ``mode_map``; the ``.schema.json`` suffix may be included or left
    off.
    """
    if not name.endswith(".schema.json"):
        name = f"{name}.schema.json"
    resource = importlib.resources.files("spin_stirling") / "schemas" / name
    return resource.read_text(encoding="utf-8")


@dataclasses.dataclass(frozen=True)
class _Param:
    """One resolvable CLI parameter: flag, config key, type, default."""

    name: str
    kind: Callable[[str], Any]
    default: Any = None
    required: bool = False


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"cannot interpret {text!r} as a boolean")


_CYCLE_PARAMS = (
    _Param("ja_k", float, required=True),
    _Param("jb_k", float, required=True),
    _Param("th", float, required=True),
    _Param("tc", float, required=True),
    _Param("json", _parse_bool, default=False),
)

_SWEEP_PARAMS = (
    _Param("branch", str, default="b-negative"),
    _Param("jb_k", float, default=None),
    _Param("tc", float, default=20.0),
    _Param("ratio_min", float, default=-3.0),
    _Param("ratio_max", float, default=3.0),
    _Param("ratio_steps", int, default=400),
    _Param("tr_min", float, default=1.005),
    _Param("tr_max", float, default=3.0),
    _Param("tr_steps", int, default=400),
    _Param("format", str, default="csv"),
    _Param("out", str, required=True),
)

_FIT_PARAMS = (
    _Param("data", str, required=True),
    _Param("fix_g", float, default=None),
    _Param("free_g", _parse_bool, default=False),
    _Param("g_init", float, default=None),
    _Param("out", str, default=None),
)

_CURVE_PARAMS = (
    _Param("ja_k", float, required=True),
    _Param("jb_k", float, required=True),
    _Param("tc", float, required=True),
    _Param("th_min", float, required=True),
    _Param("th_max", float, required=True),
    _Param("steps", int, required=True),
    _Param("out", str, required=True),
)

_COMMAND_PARAMS = {
    "cycle": _CYCLE_PARAMS,
    "sweep": _SWEEP_PARAMS,
    "fit": _FIT_PARAMS,
    "engine-curve": _CURVE_PARAMS,
}


def _load_config_section(path: str, section: str) -> dict[str, str]:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle, source=path)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ValidationError(f"cannot parse config file {path}: {exc}") from exc
    if not parser.has_section(section):
        return {}
    return dict(parser.items(section))


def _resolve_params(ns: argparse.Namespace, command: str) -> dict[str, Any]:
    """Merge defaults, config-file values, and explicit flags.

    Precedence, lowest to highest: built-in default, config file
    section, command-line flag.  Unknown config keys are rejected so a
    typo cannot silently fall back to a default.
    """
    params = _COMMAND_PARAMS[command]
    by_name = {p.name: p for p in params}
    resolved: dict[str, Any] = {p.name: p.default for p in params}

    config_path = getattr(ns, "config", None)
    if config_path is not None:
        section = _load_config_section(config_path, command)
        for key, raw in section.items():
            if key not in by_name:
                raise ValidationError(
                    f"unknown key {key!r} in config section [{command}]"
                )
            try:
                resolved[key] = by_name[key].kind(raw)
            except ValidationError:
                raise
            except ValueError as exc:
                raise ValidationError(
                    f"config key {key!r}: cannot parse value {raw!r}"
                ) from exc

    for param in params:
        flag_value = getattr(ns, param.name, None)
        if flag_value is not None and flag_value is not False:
            resolved[param.name] = flag_value

    for param in params:
        if param.required and resolved[param.name] is None:
            flag = "--" + param.name.replace("_", "-")
            raise ValidationError(f"missing required parameter {flag}")
    return resolved


def _echo_lines(resolved: dict[str, Any]) -> list[str]:
    return [f"# {key} = {value!r}" for key, value in resolved.items()]


def _cmd_cycle(ns: argparse.Namespace) -> int:
    resolved = _resolve_params(ns, "cycle")
    spec = CycleSpec(
        j_a=Coupling(resolved["ja_k"]),
        j_b=Coupling(resolved["jb_k"]),
        t_hot=resolved["th"],
        t_cold=resolved["tc"],
    )
    ledger = assemble_ledger(spec)
    mode = classify_mode(ledger)
    eta = ledger.work / ledger.q_in if mode is OperationMode.HEAT_ENGINE else None
    eta_carnot = carnot_efficiency(spec.t_hot, spec.t_cold)

    ledger_fields = ("q_ab", "q_bc", "q_cd", "q_da", "work", "q_in", "q_out")
    config_echo = {k: resolved[k] for k in ("ja_k", "jb_k", "th", "tc")}

    if resolved["json"]:
        payload = {
            "config": config_echo,
            "ledger_k_kb": {f: getattr(ledger, f) for f in ledger_fields},
            "ledger_ev": {
                f: getattr(ledger, f) * KB_EV_PER_K for f in ledger_fields
            },
            "mode": mode.token,
            "eta": eta,
            "eta_carnot": eta_carnot,
        }
        print(json.dumps(payload, indent=2, allow_nan=False))
        return EXIT_OK

    for line in _echo_lines(config_echo):
        print(line)
    print(f"{'quantity':<10}{'kelvin*k_B':>22}{'eV':>18}")
    for field in ledger_fields:
        value = getattr(ledger, field)
        print(f"{field:<10}{value:>22.12g}{value * KB_EV_PER_K:>18.6e}")
    print(f"mode       {mode.token}")
    if eta is not None:
        print(f"eta        {eta:.12g}")
    print(f"eta_carnot {eta_carnot:.12g}")
    return EXIT_OK


def _cmd_sweep(ns: argparse.Namespace) -> int:
    resolved = _resolve_params(ns, "sweep")
    branch = Branch.from_token(resolved["branch"])
    if resolved["jb_k"] is None:
        resolved["jb_k"] = -32.0 if branch is Branch.B_NEGATIVE else 32.0
    if resolved["format"] not in ("csv", "json"):
        raise ValidationError(
            f"--format must be 'csv' or 'json', got {resolved['format']!r}"
        )
    for steps_key in ("ratio_steps", "tr_steps"):
        if resolved[steps_key] < 1:
            raise ValidationError(f"--{steps_key.replace('_', '-')} must be >= 1")

    grid = SweepGrid(
        coupling_ratio_axis=tuple(
            np.linspace(
                resolved["ratio_min"], resolved["ratio_max"], resolved["ratio_steps"]
            ).tolist()
        ),
        temp_ratio_axis=tuple(
            np.linspace(
                resolved["tr_min"], resolved["tr_max"], resolved["tr_steps"]
            ).tolist()
        ),
        anchor=GridAnchor(j_b=Coupling(resolved["jb_k"]), t_cold=resolved["tc"]),
        branch=branch,
    )
    cells = sweep(grid)
    export_to_path(cells, resolved["out"], format=resolved["format"])

    counts = {mode: 0 for mode in _MODE_COUNT_ORDER}
    for cell in cells:
        counts[cell.mode] += 1
    for line in _echo_lines(resolved):
        print(line)
    print(f"cells {len(cells)}")
    for mode in _MODE_COUNT_ORDER:
        print(f"{mode.token} {counts[mode]}")
    print(f"wrote {resolved['out']}")
    return EXIT_OK


def _cmd_fit(ns: argparse.Namespace) -> int:
    resolved = _resolve_params(ns, "fit")
    if resolved["fix_g"] is not None and resolved["free_g"]:
        raise ValidationError("--fix-g and --free-g are mutually exclusive")
    if resolved["free_g"]:
        policy = (
            FreeG(resolved["g_init"]) if resolved["g_init"] is not None else FreeG()
        )
    elif resolved["fix_g"] is not None:
        policy = FixG(resolved["fix_g"])
    else:
        policy = FixG()

    with open(resolved["data"], "rb") as handle:
        dataset = ingest_csv(handle)
    result = fit_bleaney_bowers(dataset, policy)
    report = fit_report_json(result, dataset)

    for line in _echo_lines(resolved):
        print(line, file=sys.stderr)
    if resolved["out"] is not None:
        try:
            with open(resolved["out"], "wb") as handle:
                handle.write(report)
        except OSError as exc:
            raise OSError(
                exc.errno, f"cannot write fit report: {exc.strerror}", resolved["out"]
            ) from exc
        print(f"wrote {resolved['out']}", file=sys.stderr)
    else:
        sys.stdout.write(report.decode("utf-8"))

    if not result.converged:
        print(
            f"fit did not converge after {result.iterations} iterations",
            file=sys.stderr,
        )
        return EXIT_DATA
    return EXIT_OK


def _cmd_engine_curve(ns: argparse.Namespace) -> int:
    resolved = _resolve_params(ns, "engine-curve")
    if resolved["steps"] < 1:
        raise ValidationError("--steps must be >= 1")
    if not resolved["th_min"] > resolved["tc"]:
        raise ValidationError("--th-min must exceed --tc")
    if resolved["th_max"] < resolved["th_min"]:
        raise ValidationError("--th-max must be at least --th-min")

    axis = np.linspace(
        resolved["th_min"], resolved["th_max"], resolved["steps"]
    ).tolist()
    points = engine_curve(
        j_a=Coupling(resolved["ja_k"]),
        j_b=Coupling(resolved["jb_k"]),
        t_cold=resolved["tc"],
        t_hot_axis=axis,
    )
    payload = engine_curve_csv(points)
    try:
        with open(resolved["out"], "wb") as handle:
            handle.write(payload)
    except OSError as exc:
        raise OSError(
            exc.errno, f"cannot write engine curve: {exc.strerror}", resolved["out"]
        ) from exc

    for line in _echo_lines(resolved):
        print(line)
    engine_points = sum(
        1 for p in points if p.mode is OperationMode.HEAT_ENGINE
    )
    print(f"points {len(points)} heat_engine {engine_points}")
    print(f"wrote {resolved['out']}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spin-stirling",
        description=(
            "Quantum Stirling cycle of a spin-1/2 dimer: single cycles, "
            "mode maps, susceptibility fits, and engine curves."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    cycle_p = sub.add_parser("cycle", help="evaluate one Stirling cycle")
    cycle_p.add_argument("--ja-k", dest="ja_k", type=float, help="J_A/k_B in K")
    cycle_p.add_argument("--jb-k", dest="jb_k", type=float, help="J_B/k_B in K")
    cycle_p.add_argument("--th", type=float, help="hot bath temperature in K")
    cycle_p.add_argument("--tc", type=float, help="cold bath temperature in K")
    cycle_p.add_argument(
        "--json", action="store_true", default=None, help="emit a JSON report"
    )
    cycle_p.set_defaults(handler=_cmd_cycle)

    sweep_p = sub.add_parser("sweep", help="write a mode map over the ratio plane")
    sweep_p.add_argument("--branch", help="b-negative (default) or b-positive")
    sweep_p.add_argument(
        "--jb-k", dest="jb_k", type=float, help="anchor J_B/k_B in K"
    )
    sweep_p.add_argument("--tc", type=float, help="anchor cold temperature in K")
    sweep_p.add_argument("--ratio-min", dest="ratio_min", type=float)
    sweep_p.add_argument("--ratio-max", dest="ratio_max", type=float)
    sweep_p.add_argument("--ratio-steps", dest="ratio_steps", type=int)
    sweep_p.add_argument("--tr-min", dest="tr_min", type=float)
    sweep_p.add_argument("--tr-max", dest="tr_max", type=float)
    sweep_p.add_argument("--tr-steps", dest="tr_steps", type=int)
    sweep_p.add_argument("--format", help="csv (default) or json")
    sweep_p.add_argument("--out", help="output file path")
    sweep_p.set_defaults(handler=_cmd_sweep)

    fit_p = sub.add_parser("fit", help="fit a susceptibility CSV")
    fit_p.add_argument("--data", help="input CSV path")
    fit_p.add_argument("--fix-g", dest="fix_g", type=float, help="fit J with g fixed")
    fit_p.add_argument(
        "--free-g",
        dest="free_g",
        action="store_true",
        default=None,
        help="fit J and g together",
    )
    fit_p.add_argument(
        "--g-init", dest="g_init", type=float, help="starting g for --free-g"
    )
    fit_p.add_argument("--out", help="write the JSON report here instead of stdout")
    fit_p.set_defaults(handler=_cmd_fit)

    curve_p = sub.add_parser(
        "engine-curve", help="tabulate the cycle against the hot-bath temperature"
    )
    curve_p.add_argument("--ja-k", dest="ja_k", type=float)
    curve_p.add_argument("--jb-k", dest="jb_k", type=float)
    curve_p.add_argument("--tc", type=float)
    curve_p.add_argument("--th-min", dest="th_min", type=float)
    curve_p.add_argument("--th-max", dest="th_max", type=float)
    curve_p.add_argument("--steps", type=int)
    curve_p.add_argument("--out", help="output CSV path")
    curve_p.set_defaults(handler=_cmd_engine_curve)

    for sub_parser in (cycle_p, sweep_p, fit_p, curve_p):
        sub_parser.add_argument(
            "--config", help="INI config file with a section per subcommand"
        )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point returning an exit code instead of raising SystemExit."""
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else EXIT_VALIDATION
    try:
        return ns.handler(ns)
    except InvariantViolation:
        # An internal consistency bug should crash loudly, not map to a
        # polite exit code.
        raise
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValidationError, ModeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except SpinStirlingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def console_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
