"""Tests for stroke heats, work, mode classification, and efficiency."""

import math
import warnings

import numpy as np
import pytest

from spin_stirling import _kernels
from spin_stirling.core import ThermalPoint, dimensionless_susceptibility
from spin_stirling.cycle import (
    CycleSpec,
    OperationMode,
    StrokeLedger,
    assemble_ledger,
    carnot_efficiency,
    classify_mode,
    default_classification_tolerance,
    efficiency,
    heat_isochoric_cooling,
    heat_isochoric_heating,
    heat_isothermal_compression,
    heat_isothermal_expansion,
    total_work,
)
from spin_stirling.errors import (
    CurieRegimeWarning,
    InvariantViolation,
    ModeError,
    ValidationError,
)

# Reference cycle: the fitted dihydroxo-bridged Cu(II) dimer couplings at
# ambient pressure (-32 K) and 0.84 GPa (-42 K), run between 20 K and 40 K.
REF = dict(j_a=-42.0, j_b=-32.0, t_hot=40.0, t_cold=20.0)
REF_Q_AB = 0.9506567852488601
REF_Q_BC = -2.1507304038845962
REF_Q_CD = -0.8730799855222582
REF_Q_DA = 2.740205684077643
REF_WORK = 0.6670520799196522
REF_Q_IN = 3.690862469326503
REF_Q_OUT = -3.0238103894068544
REF_ETA = 0.18073067893027556


def ref_spec(**overrides):
    params = dict(REF)
    params.update(overrides)
    return CycleSpec.from_values(
        params["j_a"], params["j_b"], params["t_hot"], params["t_cold"]
    )


class TestCycleSpec:
    def test_from_values(self):
        spec = ref_spec()
        assert spec.j_a.j_over_kb == -42.0
        assert spec.j_b.j_over_kb == -32.0
        assert spec.t_hot == 40.0
        assert spec.t_cold == 20.0

    def test_endpoints_order(self):
        a, b, c, d = ref_spec().endpoints()
        assert (a.j_over_kb, a.temperature) == (-42.0, 40.0)
        assert (b.j_over_kb, b.temperature) == (-32.0, 40.0)
        assert (c.j_over_kb, c.temperature) == (-32.0, 20.0)
        assert (d.j_over_kb, d.temperature) == (-42.0, 20.0)

    def test_rejects_inverted_baths(self):
        with pytest.raises(ValidationError):
            CycleSpec.from_values(-42.0, -32.0, 20.0, 40.0)
        with pytest.raises(ValidationError):
            CycleSpec.from_values(-42.0, -32.0, 20.0, 20.0)

    def test_rejects_nonpositive_cold_bath(self):
        with pytest.raises(ValidationError):
            CycleSpec.from_values(-42.0, -32.0, 40.0, 0.0)

    def test_rejects_zero_width_coupling_stroke(self):
        with pytest.raises(ValidationError):
            CycleSpec.from_values(-32.0, -32.0, 40.0, 20.0)


class TestStrokeHeats:
    def test_frozen_reference_values(self):
        spec = ref_spec()
        assert heat_isothermal_expansion(spec) == pytest.approx(REF_Q_AB, abs=1e-13)
        assert heat_isochoric_cooling(spec) == pytest.approx(REF_Q_BC, abs=1e-13)
        assert heat_isothermal_compression(spec) == pytest.approx(REF_Q_CD, abs=1e-13)
        assert heat_isochoric_heating(spec) == pytest.approx(REF_Q_DA, abs=1e-13)

    def test_isothermal_pair_at_equal_temperature_cancels(self):
        # Retracing the coupling path at one temperature is a null process.
        forward = _kernels.isothermal_heat(-42.0, -32.0, 25.0)
        backward = _kernels.isothermal_heat(-32.0, -42.0, 25.0)
        assert forward + backward == 0.0

    def test_isothermal_heat_vanishes_with_stroke_width(self):
        spec = ref_spec(j_a=-32.000000001)
        assert abs(heat_isothermal_expansion(spec)) < 1e-8

    def test_isochoric_heat_vanishes_with_bath_gap(self):
        spec = ref_spec(t_hot=20.000000001)
        assert abs(heat_isochoric_cooling(spec)) < 1e-8

    def test_isochoric_signs_off_the_reference_point(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            j_a = rng.uniform(-200.0, 200.0)
            j_b = rng.uniform(-200.0, 200.0)
            if abs(j_a - j_b) < 1e-6:
                continue
            t_c = rng.uniform(5.0, 40.0)
            t_h = t_c * rng.uniform(1.001, 10.0)
            spec = CycleSpec.from_values(j_a, j_b, t_h, t_c)
            assert heat_isochoric_cooling(spec) < 0.0
            assert heat_isochoric_heating(spec) > 0.0


class TestWorkAndLedger:
    def test_frozen_work(self):
        assert total_work(ref_spec()) == pytest.approx(REF_WORK, abs=1e-13)

    def test_ledger_aggregates(self):
        led = assemble_ledger(ref_spec())
        assert led.work == pytest.approx(REF_WORK, abs=1e-13)
        assert led.q_in == pytest.approx(REF_Q_IN, abs=1e-13)
        assert led.q_out == pytest.approx(REF_Q_OUT, abs=1e-13)
        assert led.q_in == led.q_ab + led.q_da
        assert led.q_out == led.q_bc + led.q_cd

    def test_first_law_closure(self):
        led = assemble_ledger(ref_spec())
        stroke_sum = led.q_ab + led.q_bc + led.q_cd + led.q_da
        assert abs(led.work - stroke_sum) <= 1e-10 * abs(led.work)

    def test_swapping_couplings_negates_every_stroke(self):
        # Running the same loop backwards: isothermal heats negate in
        # place, the two isochoric heats negate and trade roles.
        led = assemble_ledger(ref_spec())
        swapped = assemble_ledger(ref_spec(j_a=REF["j_b"], j_b=REF["j_a"]))
        assert swapped.q_ab == -led.q_ab
        assert swapped.q_cd == -led.q_cd
        assert swapped.q_bc == -led.q_da
        assert swapped.q_da == -led.q_bc
        assert swapped.work == -led.work

    def test_work_vanishes_with_bath_gap(self):
        spec = ref_spec(t_hot=20.0 * (1.0 + 1e-9))
        assert abs(total_work(spec)) < 1e-7

    def test_work_matches_expanded_susceptibility_form(self):
        # Independent route: exponential prefactors times ratios of the
        # shape factor F, written exactly as the isothermal log-ratio
        # expression before any cancellation.
        spec = ref_spec()
        j_a, j_b = REF["j_a"], REF["j_b"]
        t_h, t_c = REF["t_hot"], REF["t_cold"]
        f = lambda j, t: dimensionless_susceptibility(ThermalPoint.from_values(j, t))
        hot = t_h * math.log(
            math.exp((j_a - j_b) / (4.0 * t_h)) * f(j_a, t_h) / f(j_b, t_h)
        )
        cold = t_c * math.log(
            math.exp((j_b - j_a) / (4.0 * t_c)) * f(j_b, t_c) / f(j_a, t_c)
        )
        assert hot + cold == pytest.approx(total_work(spec), rel=1e-10)


class TestClassification:
    @staticmethod
    def ledger(work, q_in, q_out):
        return StrokeLedger(
            q_ab=q_in / 2.0,
            q_bc=q_out / 2.0,
            q_cd=q_out / 2.0,
            q_da=q_in / 2.0,
            work=work,
            q_in=q_in,
            q_out=q_out,
        )

    def test_sign_patterns(self):
        assert classify_mode(self.ledger(1.0, 2.0, -1.0)) is OperationMode.HEAT_ENGINE
        assert (
            classify_mode(self.ledger(-1.0, -2.0, 1.0)) is OperationMode.REFRIGERATOR
        )
        assert classify_mode(self.ledger(-1.0, 2.0, -3.0)) is OperationMode.ACCELERATOR
        assert classify_mode(self.ledger(-2.0, -1.0, -1.0)) is OperationMode.HEATER

    def test_forbidden_patterns(self):
        assert classify_mode(self.ledger(1.0, -1.0, 2.0)) is OperationMode.FORBIDDEN
        assert classify_mode(self.ledger(1.0, 1.0, 2.0)) is OperationMode.FORBIDDEN

    def test_all_zero_ledger_is_carnot_degenerate(self):
        led = self.ledger(0.0, 0.0, 0.0)
        assert classify_mode(led) is OperationMode.CARNOT_DEGENERATE

    def test_tolerance_floor_absorbs_subnormal_scale_noise(self):
        # The default band is relative to the stroke scale with a 1e-30
        # floor, so only exchanges far below that floor collapse to the
        # degenerate point; a tiny but honest sign pattern still counts.
        led = self.ledger(1e-45, 1e-45, -1e-45)
        assert classify_mode(led) is OperationMode.CARNOT_DEGENERATE
        led = self.ledger(1e-20, 2e-20, -1e-20)
        assert classify_mode(led) is OperationMode.HEAT_ENGINE

    def test_explicit_tolerance_override(self):
        led = self.ledger(1.0, 2.0, -1.0)
        assert classify_mode(led, tolerance=10.0) is OperationMode.CARNOT_DEGENERATE

    def test_rejects_negative_tolerance(self):
        with pytest.raises(ValidationError):
            classify_mode(self.ledger(1.0, 2.0, -1.0), tolerance=-1.0)

    def test_default_tolerance_scales_with_strokes(self):
        led = assemble_ledger(ref_spec())
        tol = default_classification_tolerance(led)
        assert 0.0 < tol < 1e-10 * abs(led.work)

    def test_reference_cycle_is_a_heat_engine(self):
        assert classify_mode(assemble_ledger(ref_spec())) is OperationMode.HEAT_ENGINE

    def test_reduced_coupling_ratio_yields_refrigerator(self):
        spec = CycleSpec.from_values(-16.0, -32.0, 26.0, 20.0)
        assert classify_mode(assemble_ledger(spec)) is OperationMode.REFRIGERATOR

    def test_mode_tokens_roundtrip(self):
        for mode in OperationMode:
            assert OperationMode.from_token(mode.token) is mode
        with pytest.raises(ValidationError):
            OperationMode.from_token("perpetuum_mobile")


class TestEfficiency:
    def test_frozen_value(self):
        assert efficiency(ref_spec()) == pytest.approx(REF_ETA, abs=1e-13)

    def test_below_carnot_bound(self):
        eta = efficiency(ref_spec())
        assert eta < carnot_efficiency(REF["t_hot"], REF["t_cold"])

    def test_approaches_carnot_in_the_narrow_bath_limit(self):
        t_hot = 20.0 * (1.0 + 1e-4)
        ratio = efficiency(ref_spec(t_hot=t_hot)) / carnot_efficiency(t_hot, 20.0)
        assert abs(ratio - 1.0) < 1e-2

    def test_rejected_outside_engine_mode(self):
        spec = CycleSpec.from_values(-16.0, -32.0, 26.0, 20.0)
        with pytest.raises(ModeError):
            efficiency(spec)

    def test_carnot_efficiency_values(self):
        assert carnot_efficiency(40.0, 20.0) == 0.5
        assert carnot_efficiency(300.0, 100.0) == pytest.approx(2.0 / 3.0)
        assert carnot_efficiency(20.0, 20.0) == 0.0

    def test_carnot_efficiency_validation(self):
        with pytest.raises(ValidationError):
            carnot_efficiency(10.0, 20.0)
        with pytest.raises(ValidationError):
            carnot_efficiency(10.0, 0.0)


class TestCurieRegimeWarning:
    def test_warns_when_a_bath_exceeds_the_coupling_scale(self):
        with pytest.warns(CurieRegimeWarning):
            assemble_ledger(ref_spec())  # 40 K hot bath vs |J_B| = 32 K

    def test_silent_deep_in_the_exchange_regime(self):
        spec = CycleSpec.from_values(-200.0, -100.0, 50.0, 40.0)
        with warnings.catch_warnings():
            warnings.simplefilter("error", CurieRegimeWarning)
            assemble_ledger(spec)


class TestRandomizedInvariants:
    def test_first_law_and_signs_hold_broadly(self):
        rng = np.random.default_rng(8)
        modes = set()
        for _ in range(1000):
            j_a = rng.uniform(-200.0, 200.0)
            j_b = rng.uniform(-200.0, 200.0)
            if abs(j_a - j_b) < 1e-6:
                continue
            t_c = rng.uniform(5.0, 40.0)
            t_h = t_c * rng.uniform(1.001, 10.0)
            led = assemble_ledger(CycleSpec.from_values(j_a, j_b, t_h, t_c))
            stroke_sum = led.q_ab + led.q_bc + led.q_cd + led.q_da
            scale = max(abs(led.q_ab), abs(led.q_bc), abs(led.q_cd), abs(led.q_da))
            # Deep in the gapped regime the strokes can be exponentially
            # smaller than the state functions they difference, so the
            # closure bound carries a roundoff floor on the latter.
            floor = 32.0 * math.ulp(1.0) * (
                2.0 * math.log(4.0) * (t_h + t_c) + 1.5 * (abs(j_a) + abs(j_b))
            )
            assert abs(led.work - stroke_sum) <= max(1e-10 * scale, floor)
            modes.add(classify_mode(led))
        assert OperationMode.FORBIDDEN not in modes
        assert OperationMode.HEAT_ENGINE in modes
