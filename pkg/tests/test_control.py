"""Action selection, bootstrap probing and both closed-loop controllers."""

import math

import numpy as np
import pytest

from powderdose import (
    GRAVITY,
    VIBRATION,
    ActionGrid,
    ActionSelection,
    CoefficientEstimate,
    DispensingController,
    ModeFit,
    PidBaselineController,
    PidGains,
    TrialStatus,
    ValveAction,
    ValveKinematics,
)
from powderdose.control import select_action


def estimate(c_gravity=None, c_vibration=None):
    return CoefficientEstimate(
        gravity=(ModeFit(c_prime=c_gravity, n_obs=2)
                 if c_gravity is not None else ModeFit()),
        vibration=(ModeFit(c_prime=c_vibration, n_obs=2)
                   if c_vibration is not None else ModeFit()),
    )


def brute_select(c_gravity, c_vibration, kin, grid, w_target):
    """Pure-python reference for select_action, same arithmetic order."""
    c, vibration = c_gravity, False
    capacity = (c * kin.l_max ** 2.5) * (kin.l_max / kin.travel_rate
                                         + kin.t_pose_max)
    if capacity < w_target:
        vibration = True
        if c_vibration is None:
            return None, None, True
        c = c_vibration
    l_vals = [float(v) for v in grid.l_values(kin)]
    t_vals = [float(v) for v in grid.t_values(kin)]
    positive = [l for l in l_vals if l > 0]
    if positive:
        floor = (c * positive[0] ** 2.5) * (positive[0] / kin.travel_rate
                                            + kin.t_pose_min)
        if w_target < floor:
            w_target = floor
    best = min(
        (abs((c * l ** 2.5) * (l / kin.travel_rate + t) - w_target), t, l)
        for l in l_vals for t in t_vals)
    _, t, l = best
    return ValveAction(l, t, vibration=vibration), \
        (c * l ** 2.5) * (l / kin.travel_rate + t), vibration


class TestActionGrid:
    def test_default_axes_cover_the_envelope(self):
        kin = ValveKinematics()
        grid = ActionGrid()
        l_vals = grid.l_values(kin)
        t_vals = grid.t_values(kin)
        assert len(l_vals) == 43 and l_vals[0] == 0.0 and l_vals[-1] == 210.0
        assert len(t_vals) == 41 and t_vals[0] == 0.0 and t_vals[-1] == 20.0

    def test_non_divisible_span_stops_inside(self):
        kin = ValveKinematics(l_max=7.0)
        assert list(ActionGrid(l_step=5.0).l_values(kin)) == [0.0, 5.0]

    def test_rejects_bad_steps(self):
        with pytest.raises(ValueError):
            ActionGrid(l_step=0.0)
        with pytest.raises(ValueError):
            ActionGrid(t_step=-0.5)


class TestSelectAction:
    def test_four_candidate_example(self):
        # candidate predictions: 0.348, 0.664, 2.147, 3.935; nearest to 1.0
        # is (L=10, t=2)
        kin = ValveKinematics(l_min=10.0, l_max=20.0,
                              t_pose_min=1.0, t_pose_max=2.0)
        grid = ActionGrid(l_step=10.0, t_step=1.0)
        sel = select_action(estimate(c_gravity=0.001), kin, 1.0, grid=grid)
        assert sel.action == ValveAction(10.0, 2.0)
        assert sel.predicted_mg == pytest.approx(0.6640783086353597,
                                                 rel=1e-14)
        assert not sel.use_vibration
        assert sel.needs_bootstrap is None

    def test_matches_brute_force_reference(self):
        rng = np.random.default_rng(97)
        for _ in range(300):
            l_min = float(rng.choice([0.0, rng.uniform(0.0, 50.0)]))
            l_max = l_min + float(rng.uniform(5.0, 300.0))
            t_min = float(rng.choice([0.0, rng.uniform(0.0, 3.0)]))
            t_max = t_min + float(rng.uniform(0.5, 30.0))
            kin = ValveKinematics(travel_rate=float(rng.uniform(10.0, 500.0)),
                                  l_min=l_min, l_max=l_max,
                                  t_pose_min=t_min, t_pose_max=t_max)
            grid = ActionGrid(
                l_step=(l_max - l_min) / int(rng.integers(1, 100)),
                t_step=(t_max - t_min) / int(rng.integers(1, 100)))
            c_grav = float(10.0 ** rng.uniform(-5.0, 0.0))
            c_vib = (c_grav * float(rng.uniform(1.0, 10.0))
                     if rng.random() < 0.5 else None)
            capacity = (c_grav * l_max ** 2.5) * (l_max / kin.travel_rate
                                                  + t_max)
            w_target = capacity * float(rng.uniform(0.001, 1.3))
            sel = select_action(estimate(c_grav, c_vib), kin, w_target,
                                grid=grid)
            action, predicted, vibration = brute_select(
                c_grav, c_vib, kin, grid, w_target)
            if action is None:
                assert sel.needs_bootstrap == VIBRATION
                assert sel.use_vibration
                continue
            assert sel.action == action
            assert sel.predicted_mg == pytest.approx(predicted, rel=1e-12)
            assert sel.use_vibration == vibration

    def test_all_tie_prefers_smallest_dwell_then_command(self):
        sel = select_action(estimate(c_vibration=0.0), ValveKinematics(), 5.0,
                            use_vibration=True)
        assert sel.action == ValveAction(0.0, 0.0, vibration=True)

    def test_capacity_boundary_is_strict(self):
        kin = ValveKinematics()
        est = estimate(c_gravity=0.001, c_vibration=0.01)
        capacity = (0.001 * kin.l_max ** 2.5) * (kin.l_max / kin.travel_rate
                                                 + kin.t_pose_max)
        at_cap = select_action(est, kin, capacity)
        assert not at_cap.use_vibration
        beyond = select_action(est, kin, math.nextafter(capacity, math.inf))
        assert beyond.use_vibration
        assert beyond.action.vibration

    def test_capacity_switch_without_vibration_fit_requests_bootstrap(self):
        kin = ValveKinematics()
        sel = select_action(estimate(c_gravity=1e-9), kin, 1000.0)
        assert sel.needs_bootstrap == VIBRATION
        assert sel.use_vibration
        assert sel.action is None

    def test_subresolution_target_floors_to_smallest_action(self):
        kin = ValveKinematics(l_min=10.0, t_pose_min=1.0)
        sel = select_action(estimate(c_gravity=0.01), kin, 1e-6)
        assert sel.action == ValveAction(10.0, 1.0)

    def test_unfitted_mode_requests_bootstrap(self):
        sel = select_action(estimate(), ValveKinematics(), 5.0)
        assert sel == ActionSelection(None, None, False,
                                      needs_bootstrap=GRAVITY)

    def test_rejects_bad_target(self):
        est = estimate(c_gravity=0.01)
        for bad in (0.0, -1.0, float("nan"), float("inf")):
            with pytest.raises(ValueError):
                select_action(est, ValveKinematics(), bad)


class TestTrialStatus:
    def test_terminal_split(self):
        assert not TrialStatus.RUNNING.terminal
        for status in TrialStatus:
            if status is not TrialStatus.RUNNING:
                assert status.terminal

    def test_wire_values(self):
        assert TrialStatus.SUCCESS.value == "success"
        assert TrialStatus.OVERSHOOT_FAIL.value == "overshoot-fail"
        assert TrialStatus.STEP_LIMIT_FAIL.value == "step-limit-fail"
        assert TrialStatus.DEPLETED_FAIL.value == "depleted-fail"
        assert TrialStatus.ABORTED.value == "aborted"


class TestControllerTermination:
    """Boundary behaviour shared between both controllers."""

    @pytest.mark.parametrize("make", [
        lambda: DispensingController(100.0),
        lambda: PidBaselineController(100.0),
    ])
    def test_tolerance_band_is_exclusive(self, make):
        assert make().step(98.1).status is TrialStatus.SUCCESS
        assert make().step(101.9).status is TrialStatus.SUCCESS
        assert make().step(98.0).status is TrialStatus.RUNNING
        assert make().step(102.0).status is TrialStatus.OVERSHOOT_FAIL

    @pytest.mark.parametrize("make", [
        lambda: DispensingController(100.0),
        lambda: PidBaselineController(100.0),
    ])
    def test_empty_hopper_and_bad_reading(self, make):
        ctl = make()
        assert ctl.step(50.0, hopper_empty=True).status \
            is TrialStatus.DEPLETED_FAIL
        assert make().step(float("nan")).status is TrialStatus.ABORTED

    @pytest.mark.parametrize("make", [
        lambda: DispensingController(100.0, max_steps=3),
        lambda: PidBaselineController(100.0, max_steps=3),
    ])
    def test_step_limit(self, make):
        ctl = make()
        for _ in range(3):
            assert ctl.step(0.0).status is TrialStatus.RUNNING
        assert ctl.step(0.0).status is TrialStatus.STEP_LIMIT_FAIL

    @pytest.mark.parametrize("make", [
        lambda: DispensingController(100.0),
        lambda: PidBaselineController(100.0),
    ])
    def test_stepping_a_finished_trial_is_an_error(self, make):
        ctl = make()
        ctl.step(100.5)
        assert ctl.status is TrialStatus.SUCCESS
        with pytest.raises(RuntimeError):
            ctl.step(100.5)

    def test_success_beats_empty_hopper(self):
        ctl = DispensingController(100.0)
        assert ctl.step(100.0, hopper_empty=True).status \
            is TrialStatus.SUCCESS


class TestBootstrapProbing:
    def test_ladder_climbs_then_confirms(self):
        ctl = DispensingController(20.0)
        first = ctl.step(0.0)
        assert first.probe and first.action == ValveAction(5.0, 0.0)
        second = ctl.step(0.0)           # nothing measurable: next rung
        assert second.action == ValveAction(10.0, 0.0)
        third = ctl.step(5.0)            # measurable once: repeat to confirm
        assert third.probe and third.action == ValveAction(10.0, 0.0)
        assert len(ctl.log) == 0
        fourth = ctl.step(10.0)          # confirmed: both observations land
        assert len(ctl.log) == 2
        x = 10.0 ** 2.5 * (10.0 / 100.0 + 0.0)
        assert ctl.estimate.c_prime_gravity == pytest.approx(5.0 / x,
                                                             rel=1e-12)
        assert ctl.w_target == 5.0       # k_p 0.5 * error 10
        assert not fourth.probe
        action, predicted, vibration = brute_select(
            5.0 / x, None, ctl.kin, ctl.grid, 5.0)
        assert fourth.action == action
        assert fourth.predicted_mg == pytest.approx(predicted, rel=1e-12)
        assert not vibration

    def test_failed_confirmation_discards_and_advances(self):
        ctl = DispensingController(20.0)
        ctl.step(0.0)                    # probe (5, 0)
        ctl.step(0.0)                    # probe (10, 0)
        ctl.step(5.0)                    # candidate, repeat (10, 0)
        decision = ctl.step(5.3)         # repeat delta 0.3: below the gate
        assert len(ctl.log) == 0
        assert not ctl.estimate.for_mode(GRAVITY).usable
        assert decision.probe and decision.action == ValveAction(15.0, 0.0)

    def test_gravity_exhaustion_latches_vibration_then_falls_back(self):
        ctl = DispensingController(3000.0)
        rungs = 42                        # positive commands 5..210 step 5
        for i in range(rungs):
            decision = ctl.step(0.0)
            assert decision.probe and not decision.action.vibration
            assert decision.action.t_pose_s == 0.0
        decision = ctl.step(0.0)          # gravity spent: switch modes
        assert ctl.use_vibration
        assert decision.action == ValveAction(5.0, 0.0, vibration=True)
        for _ in range(rungs - 1):
            decision = ctl.step(0.0)
            assert decision.action.vibration
        decision = ctl.step(0.0)          # both spent: most aggressive push
        assert decision.action == ValveAction(210.0, 20.0, vibration=True)
        while ctl.status is TrialStatus.RUNNING:
            decision = ctl.step(0.0)
        assert ctl.status is TrialStatus.STEP_LIMIT_FAIL
        assert ctl.step_count == 100

    def test_capacity_shortfall_mid_trial_switches_to_vibration_probing(self):
        # gravity fitted, but its whole-envelope capacity is far below the
        # target: the controller must latch vibration and start probing it
        kin = ValveKinematics(l_max=10.0, t_pose_max=1.0)
        ctl = DispensingController(3000.0, kin, k_p=1.0)
        ctl.step(0.0)                    # probe (5, 0)
        ctl.step(0.6)                    # candidate at (5, 0), repeat it
        decision = ctl.step(1.2)         # confirmed, and capacity falls short
        assert ctl.estimate.for_mode(GRAVITY).usable
        assert ctl.use_vibration
        assert decision.probe
        assert decision.action == ValveAction(5.0, 0.0, vibration=True)


class TestControllerValidation:
    def test_constructor_bounds(self):
        with pytest.raises(ValueError):
            DispensingController(0.0)
        with pytest.raises(ValueError):
            DispensingController(100.0, k_p=0.0)
        with pytest.raises(ValueError):
            DispensingController(100.0, k_p=1.1)
        with pytest.raises(ValueError):
            DispensingController(100.0, tolerance=0.0)
        with pytest.raises(ValueError):
            DispensingController(100.0, max_steps=0)

    def test_valve_action_bounds(self):
        with pytest.raises(ValueError):
            ValveAction(-1.0, 2.0)
        with pytest.raises(ValueError):
            ValveAction(10.0, float("nan"))


class TestPidBaseline:
    def test_proportional_mapping(self):
        gains = PidGains(k_p=1.0, output_slope=0.1)
        ctl = PidBaselineController(1000.0, gains=gains)
        action = ctl.action_for_error(500.0)
        assert action.l_command == 50.0
        assert action.t_pose_s == 2.0
        assert not action.vibration

    def test_zero_error_closes_the_valve(self):
        ctl = PidBaselineController(1000.0, gains=PidGains())
        assert ctl.action_for_error(0.0).l_command == 0.0

    def test_output_clamped_to_valve_range(self):
        ctl = PidBaselineController(100000.0, gains=PidGains(output_slope=1.0))
        assert ctl.action_for_error(50000.0).l_command == 210.0

    def test_integral_accumulates_and_clamps(self):
        gains = PidGains(k_p=0.0, k_i=1.0, output_slope=1.0,
                         integral_limit=10.0)
        ctl = PidBaselineController(100.0, gains=gains)
        assert ctl.action_for_error(8.0).l_command == 8.0
        assert ctl.action_for_error(8.0).l_command == 10.0   # clamped at 16
        assert ctl.integral == 10.0

    def test_derivative_kicks_in_from_second_sample(self):
        gains = PidGains(k_p=0.0, k_d=1.0, output_slope=1.0)
        ctl = PidBaselineController(100.0, gains=gains)
        assert ctl.action_for_error(30.0).l_command == 0.0   # no history yet
        assert ctl.action_for_error(20.0).l_command == 0.0   # derivative -10
        assert ctl.action_for_error(25.0).l_command == 5.0

    def test_vibration_flag_passthrough(self):
        ctl = PidBaselineController(100.0, vibration=True)
        assert ctl.step(0.0).action.vibration

    def test_dwell_must_fit_the_valve(self):
        with pytest.raises(ValueError):
            PidBaselineController(100.0, gains=PidGains(t_pose_fixed_s=25.0))

    def test_gains_validation(self):
        with pytest.raises(ValueError):
            PidGains(output_slope=0.0)
        with pytest.raises(ValueError):
            PidGains(t_pose_fixed_s=-1.0)
        with pytest.raises(ValueError):
            PidGains(integral_limit=-5.0)
        with pytest.raises(ValueError):
            PidGains(k_p=float("inf"))

    def test_keeps_no_observation_log(self):
        ctl = PidBaselineController(100.0)
        assert not hasattr(ctl, "log")
