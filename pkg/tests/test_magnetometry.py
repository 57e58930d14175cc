"""Tests for susceptibility ingestion, Bleaney-Bowers fitting, and the
pressure-axis helpers built on top of the fit."""

import io
import json
import math

import numpy as np
import pytest
from importlib import resources

from spin_stirling.core import Coupling
from spin_stirling.cycle import OperationMode
from spin_stirling.errors import DataFormatError, ValidationError
from spin_stirling.magnetometry import (
    ANGLE_INTERCEPT_K,
    ANGLE_SLOPE_K_PER_DEG,
    BridgingAngle,
    DEFAULT_G_FACTOR,
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

CHI_M32_T20_G21 = 0.05166959896118547

# Fixed-g fits of the two bundled digitized datasets, frozen.
AMBIENT_FIT_J = -32.13087200947598
PRESSURE_FIT_J = -41.858121157663994


def synthetic_csv(j, g, temps=None, header="T_K,chi_emu_mol", extra_lines=()):
    temps = np.linspace(20.0, 350.0, 67) if temps is None else np.asarray(temps)
    chi = bleaney_bowers_chi(temps, j, g)
    lines = list(extra_lines) + [header]
    lines += ["%.17g,%.17g" % (t, c) for t, c in zip(temps, chi)]
    return "\n".join(lines) + "\n"


def bundled(name):
    return resources.files("spin_stirling").joinpath("data", name).read_bytes()


class TestIngestion:
    def test_parses_a_minimal_file(self):
        ds = ingest_csv("T_K,chi_emu_mol\n10,0.01\n20,0.02\n30,0.03\n40,0.04\n50,0.05\n")
        assert len(ds.points) == 5
        assert ds.points[0] == (10.0, 0.01)
        assert ds.pressure_gpa is None
        assert ds.label == ""

    def test_accepts_bytes_and_file_objects(self):
        text = synthetic_csv(-32.0, 2.1)
        from_str = ingest_csv(text)
        from_bytes = ingest_csv(text.encode("ascii"))
        from_handle = ingest_csv(io.StringIO(text))
        assert from_str == from_bytes == from_handle

    def test_reads_metadata_comments(self):
        text = synthetic_csv(
            -32.0,
            2.1,
            extra_lines=["# pressure_GPa: 0.84", "# label: diamond anvil"],
        )
        ds = ingest_csv(text)
        assert ds.pressure_gpa == 0.84
        assert ds.label == "diamond anvil"

    def test_sorts_rows_by_temperature(self):
        ds = ingest_csv(
            "T_K,chi_emu_mol\n50,0.05\n10,0.01\n30,0.03\n20,0.02\n40,0.04\n"
        )
        assert [t for t, _ in ds.points] == [10.0, 20.0, 30.0, 40.0, 50.0]

    def test_ignores_extra_columns_and_spacing(self):
        ds = ingest_csv(
            "sample,T_K,chi_emu_mol\n"
            "a, 10 , 0.01\na,20,0.02\na,30,0.03\na,40,0.04\na,50,0.05\n"
        )
        assert ds.points[0] == (10.0, 0.01)

    def test_malformed_row_reports_its_line_number(self):
        text = "T_K,chi_emu_mol\n10,0.01\n20,oops\n30,0.03\n40,0.04\n50,0.05\n"
        with pytest.raises(DataFormatError) as err:
            ingest_csv(text)
        assert "line 3" in str(err.value)

    def test_duplicate_temperatures_are_rejected_with_both_lines(self):
        text = "T_K,chi_emu_mol\n10,0.01\n20,0.02\n20,0.021\n40,0.04\n50,0.05\n"
        with pytest.raises(DataFormatError) as err:
            ingest_csv(text)
        message = str(err.value)
        assert "20" in message and "line" in message

    def test_missing_required_columns(self):
        with pytest.raises(DataFormatError):
            ingest_csv("temperature,chi\n10,0.01\n20,0.02\n30,0.03\n40,0.04\n50,0.05\n")

    def test_empty_and_header_only_files(self):
        with pytest.raises(DataFormatError):
            ingest_csv("")
        with pytest.raises(DataFormatError):
            ingest_csv("T_K,chi_emu_mol\n")

    def test_too_few_points(self):
        with pytest.raises(DataFormatError):
            ingest_csv("T_K,chi_emu_mol\n10,0.01\n20,0.02\n30,0.03\n40,0.04\n")

    def test_nonpositive_values_are_rejected(self):
        with pytest.raises(DataFormatError):
            ingest_csv("T_K,chi_emu_mol\n-1,0.01\n20,0.02\n30,0.03\n40,0.04\n50,0.05\n")
        with pytest.raises(DataFormatError):
            ingest_csv("T_K,chi_emu_mol\n10,-0.01\n20,0.02\n30,0.03\n40,0.04\n50,0.05\n")

    def test_bundled_datasets_carry_their_pressure_metadata(self):
        ambient = ingest_csv(bundled("cu2_dimer_ambient.csv"))
        pressurized = ingest_csv(bundled("cu2_dimer_0p84gpa.csv"))
        assert ambient.pressure_gpa == 0.0
        assert ambient.label == "ambient"
        assert pressurized.pressure_gpa == 0.84
        assert pressurized.label == "0.84 GPa"
        assert len(ambient.points) == 67


class TestModel:
    def test_frozen_value(self):
        chi = float(bleaney_bowers_chi(np.asarray(20.0), -32.0, 2.1))
        assert chi == pytest.approx(CHI_M32_T20_G21, abs=1e-17)

    def test_jacobian_matches_finite_differences(self):
        temps = np.linspace(10.0, 350.0, 31)
        rng = np.random.default_rng(9)
        for _ in range(10):
            j = rng.uniform(-200.0, 200.0)
            g = rng.uniform(1.7, 2.5)
            jac = bleaney_bowers_jacobian(temps, j, g)
            h_j = 1e-6 * max(1.0, abs(j))
            h_g = 1e-6 * g
            fd_j = (
                bleaney_bowers_chi(temps, j + h_j, g)
                - bleaney_bowers_chi(temps, j - h_j, g)
            ) / (2.0 * h_j)
            fd_g = (
                bleaney_bowers_chi(temps, j, g + h_g)
                - bleaney_bowers_chi(temps, j, g - h_g)
            ) / (2.0 * h_g)
            scale_j = np.max(np.abs(jac[:, 0])) + 1e-300
            scale_g = np.max(np.abs(jac[:, 1])) + 1e-300
            assert np.max(np.abs(jac[:, 0] - fd_j)) / scale_j < 1e-6
            assert np.max(np.abs(jac[:, 1] - fd_g)) / scale_g < 1e-6


class TestDatasetValidation:
    def test_requires_five_points(self):
        with pytest.raises(DataFormatError):
            SusceptibilityDataset(
                points=((10.0, 0.01), (20.0, 0.02)), pressure_gpa=None, label=None
            )

    def test_requires_strictly_increasing_temperatures(self):
        points = ((10.0, 0.01), (10.0, 0.02), (30.0, 0.03), (40.0, 0.04), (50.0, 0.05))
        with pytest.raises(DataFormatError):
            SusceptibilityDataset(points=points, pressure_gpa=None, label=None)


class TestFitting:
    def test_noiseless_roundtrip_with_free_g(self):
        for j_true, g_true in ((-27.3, 2.05), (51.8, 2.2)):
            ds = ingest_csv(synthetic_csv(j_true, g_true))
            res = fit_bleaney_bowers(ds, FreeG())
            assert res.converged
            assert abs(res.j_over_kb - j_true) <= 1e-6 * abs(j_true)
            assert abs(res.g - g_true) <= 1e-6 * g_true

    def test_noiseless_roundtrip_with_fixed_g(self):
        ds = ingest_csv(synthetic_csv(-42.0, 2.1))
        res = fit_bleaney_bowers(ds, FixG(2.1))
        assert res.converged
        assert res.g == 2.1
        assert abs(res.j_over_kb + 42.0) <= 1e-6 * 42.0

    def test_default_policy_fixes_g_at_the_organometallic_value(self):
        ds = ingest_csv(synthetic_csv(-42.0, DEFAULT_G_FACTOR))
        res = fit_bleaney_bowers(ds)
        assert res.g == DEFAULT_G_FACTOR

    def test_fit_is_deterministic(self):
        ds = ingest_csv(bundled("cu2_dimer_ambient.csv"))
        first = fit_bleaney_bowers(ds, FixG(2.1))
        second = fit_bleaney_bowers(ds, FixG(2.1))
        assert first == second

    def test_overall_scale_does_not_shift_the_coupling(self):
        # chi -> c * chi is absorbed entirely by g when g floats.
        base = ingest_csv(synthetic_csv(-32.0, 2.1))
        scaled = SusceptibilityDataset(
            points=tuple((t, 3.7 * chi) for t, chi in base.points),
            pressure_gpa=None,
            label=None,
        )
        res_base = fit_bleaney_bowers(base, FreeG())
        res_scaled = fit_bleaney_bowers(scaled, FreeG())
        assert abs(res_scaled.j_over_kb - res_base.j_over_kb) <= 1e-6 * 32.0
        assert res_scaled.g == pytest.approx(res_base.g * math.sqrt(3.7), rel=1e-6)

    def test_digitized_datasets_recover_the_published_couplings(self):
        ambient = fit_bleaney_bowers(ingest_csv(bundled("cu2_dimer_ambient.csv")))
        pressurized = fit_bleaney_bowers(
            ingest_csv(bundled("cu2_dimer_0p84gpa.csv"))
        )
        assert ambient.converged and pressurized.converged
        assert ambient.j_over_kb == pytest.approx(AMBIENT_FIT_J, abs=1e-9)
        assert pressurized.j_over_kb == pytest.approx(PRESSURE_FIT_J, abs=1e-9)
        assert abs(ambient.j_over_kb + 32.0) < 0.1 * 32.0
        assert abs(pressurized.j_over_kb + 42.0) < 0.1 * 42.0

    def test_policy_validation(self):
        ds = ingest_csv(synthetic_csv(-32.0, 2.1))
        with pytest.raises(ValidationError):
            fit_bleaney_bowers(ds, FixG(0.0))
        with pytest.raises(ValidationError):
            fit_bleaney_bowers(ds, FreeG(-1.0))
        with pytest.raises(ValidationError):
            fit_bleaney_bowers(ds, 2.1)

    def test_iteration_budget_exhaustion_is_reported_not_raised(self, monkeypatch):
        import spin_stirling.magnetometry as mag

        monkeypatch.setattr(mag, "FIT_MAX_ITERATIONS", 0)
        ds = ingest_csv(synthetic_csv(-32.0, 2.1))
        res = fit_bleaney_bowers(ds, FixG(1.2))
        assert not res.converged
        assert res.iterations == 0
        assert math.isfinite(res.residual_rms)

    def test_report_json_layout(self):
        ds = ingest_csv(bundled("cu2_dimer_ambient.csv"))
        res = fit_bleaney_bowers(ds, FixG(2.1))
        blob = fit_report_json(res, ds)
        parsed = json.loads(blob)
        assert list(parsed.keys()) == [
            "j_over_kb_K",
            "g",
            "residual_rms",
            "converged",
            "iterations",
            "pressure_GPa",
            "label",
        ]
        assert parsed["j_over_kb_K"] == pytest.approx(AMBIENT_FIT_J, abs=1e-9)
        assert parsed["g"] == 2.1
        assert parsed["converged"] is True
        assert parsed["pressure_GPa"] == 0.0
        assert parsed["label"] == "ambient"

    def test_report_json_null_pressure(self):
        ds = ingest_csv(synthetic_csv(-32.0, 2.1))
        res = fit_bleaney_bowers(ds, FixG(2.1))
        parsed = json.loads(fit_report_json(res, ds))
        assert parsed["pressure_GPa"] is None


class TestBridgingAngle:
    def test_linear_correlation_values(self):
        assert coupling_from_angle(BridgingAngle(98.0)).j_over_kb == 1.0
        assert coupling_from_angle(BridgingAngle(97.5)).j_over_kb == -52.0

    def test_crossing_angle_gives_zero_coupling(self):
        theta_star = -ANGLE_INTERCEPT_K / ANGLE_SLOPE_K_PER_DEG
        j = coupling_from_angle(BridgingAngle(theta_star)).j_over_kb
        assert abs(j) < 1e-9

    def test_default_sanity_window(self):
        with pytest.raises(ValidationError):
            BridgingAngle(70.0)
        with pytest.raises(ValidationError):
            BridgingAngle(130.0)

    def test_custom_window(self):
        angle = BridgingAngle(75.0, window=(70.0, 130.0))
        assert coupling_from_angle(angle).j_over_kb == pytest.approx(
            ANGLE_SLOPE_K_PER_DEG * 75.0 + ANGLE_INTERCEPT_K
        )

    def test_rejects_inverted_window(self):
        with pytest.raises(ValidationError):
            BridgingAngle(98.0, window=(120.0, 80.0))


class TestEngineCurve:
    def test_pressure_pair_runs_as_an_engine_everywhere(self):
        axis = np.arange(21.0, 351.0, 10.0)
        points = engine_curve(Coupling(-42.0), Coupling(-32.0), 20.0, axis)
        assert len(points) == len(axis)
        for pt in points:
            assert pt.mode is OperationMode.HEAT_ENGINE
            assert pt.eta is not None
            assert 0.0 < pt.eta < pt.eta_carnot

    def test_efficiency_follows_carnot_near_the_degenerate_point(self):
        (pt,) = engine_curve(Coupling(-42.0), Coupling(-32.0), 20.0, [20.02])
        assert pt.eta / pt.eta_carnot > 0.99

    def test_non_engine_points_carry_no_efficiency(self):
        (pt,) = engine_curve(Coupling(-16.0), Coupling(-32.0), 20.0, [26.0])
        assert pt.mode is OperationMode.REFRIGERATOR
        assert pt.eta is None

    def test_rejects_hot_axis_at_or_below_the_cold_bath(self):
        with pytest.raises(ValidationError):
            engine_curve(Coupling(-42.0), Coupling(-32.0), 20.0, [19.0])
        with pytest.raises(ValidationError):
            engine_curve(Coupling(-42.0), Coupling(-32.0), 20.0, [])

    def test_csv_layout(self):
        points = engine_curve(Coupling(-42.0), Coupling(-32.0), 20.0, [20.02, 26.0])
        text = engine_curve_csv(points).decode("ascii")
        lines = text.splitlines()
        assert lines[0] == "T_h_K,Q_AB_eV,Q_BC_eV,Q_CD_eV,Q_DA_eV,W_eV,eta,eta_carnot,mode"
        assert len(lines) == 3
        first = lines[1].split(",")
        assert first[0] == "20.02"
        assert first[-1] == "heat_engine"
        # Heats are reported in eV, so they sit far below the kelvin scale.
        assert abs(float(first[1])) < 1e-3

    def test_csv_rejects_empty_curves(self):
        with pytest.raises(ValidationError):
            engine_curve_csv([])
