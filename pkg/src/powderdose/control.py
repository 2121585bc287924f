"""Closed-loop dispensing controllers.

DispensingController implements the model-based loop. Each cycle it

1. reads the balance and updates the remaining error W_error,
2. stops on success (|W_error| below tolerance), overshoot, an empty
   hopper, or the step budget,
3. attributes the previous step's measured delta to the action that caused
   it and refits that mode's coefficient,
4. sets the per-step request W_target = K_p * W_error and picks the grid
   action whose predicted drop is nearest to it.

Before searching, the controller checks whether the gravity model at the
largest action could deliver W_target at all; if not it latches into
vibration mode for the rest of the trial and selects against the vibration
coefficient instead. The latch is one way, a trial never falls back to
gravity.

While a mode has no usable coefficient the controller walks a probe ladder:
smallest productive command first, escalating one grid step at a time, so
exploration cannot overshoot even a 20 mg request. A candidate first
observation is accepted only after an immediate repeat of the same probe
also clears the observability gate; a single noise spike on a quiet balance
therefore cannot seed a phantom model. When the gravity ladder tops out
with nothing measurable the controller latches vibration and starts probing
there.

PidBaselineController is the comparison controller: a direct PID on the
weight error mapped linearly to the valve command, fixed dwell, no model
and no logging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .flow import (GRAVITY, VIBRATION, DispenseModel, ValveKinematics,
                   predicted_drop, travel_time)
from .identify import (MIN_OBSERVABLE_MG, CoefficientEstimate, ModeFit,
                       ObservationLog)

DEFAULT_K_P = 0.5
DEFAULT_TOLERANCE_MG = 2.0
DEFAULT_MAX_STEPS = 100


@dataclass(frozen=True)
class ValveAction:
    """One dispensing command: opening, dwell, vibration flag."""

    l_command: float
    t_pose_s: float
    vibration: bool = False

    def __post_init__(self) -> None:
        if not math.isfinite(self.l_command) or self.l_command < 0:
            raise ValueError("ValveAction.l_command must be finite and >= 0")
        if not math.isfinite(self.t_pose_s) or self.t_pose_s < 0:
            raise ValueError("ValveAction.t_pose_s must be finite and >= 0")


@dataclass(frozen=True)
class ActionGrid:
    """Discretisation of the action space searched each step."""

    l_step: float = 5.0
    t_step: float = 0.5

    def __post_init__(self) -> None:
        if not math.isfinite(self.l_step) or self.l_step <= 0:
            raise ValueError("ActionGrid.l_step must be > 0")
        if not math.isfinite(self.t_step) or self.t_step <= 0:
            raise ValueError("ActionGrid.t_step must be > 0")

    def l_values(self, kin: ValveKinematics) -> np.ndarray:
        return _axis(kin.l_min, kin.l_max, self.l_step)

    def t_values(self, kin: ValveKinematics) -> np.ndarray:
        return _axis(kin.t_pose_min, kin.t_pose_max, self.t_step)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


class TrialStatus(str, Enum):
    RUNNING = "running"
    SUCCESS = "success"
    OVERSHOOT_FAIL = "overshoot-fail"
    STEP_LIMIT_FAIL = "step-limit-fail"
    DEPLETED_FAIL = "depleted-fail"
    ABORTED = "aborted"

    @property
    def terminal(self) -> bool:
        return self is not TrialStatus.RUNNING


@dataclass(frozen=True)
class StepDecision:
    """Outcome of one controller step: either an action or a terminal status."""

    status: TrialStatus
    action: ValveAction | None = None
    predicted_mg: float | None = None
    probe: bool = False


@dataclass(frozen=True)
class ActionSelection:
    """Result of a grid search, or a bootstrap signal when the needed
    mode has no usable coefficient yet."""

    action: ValveAction | None
    predicted_mg: float | None
    use_vibration: bool
    needs_bootstrap: str | None = None


def select_action(estimate: CoefficientEstimate, kin: ValveKinematics,
                  w_target: float, *, use_vibration: bool = False,
                  grid: ActionGrid | None = None) -> ActionSelection:
    """Pick the grid action whose predicted drop is nearest W_target.

    Gravity mode first runs a capacity check: if even the largest action's
    predicted drop falls short of W_target, the selection switches to the
    vibration model (and reports that switch so the caller can latch it).
    W_target is floored at the predicted drop of the smallest productive
    grid action so the search never chases a sub-resolution request; in
    that regime the smallest action wins. Exact cost ties break toward the
    smaller dwell, then the smaller command.
    """
    if not math.isfinite(w_target) or w_target <= 0:
        raise ValueError("w_target must be finite and > 0")
    if grid is None:
        grid = ActionGrid()
    mode = VIBRATION if use_vibration else GRAVITY
    mode_fit = estimate.for_mode(mode)
    if not mode_fit.usable:
        return ActionSelection(None, None, use_vibration, needs_bootstrap=mode)
    if mode == GRAVITY:
        capacity = predicted_drop(DispenseModel(mode_fit.c_prime, GRAVITY),
                                  kin, kin.l_max, kin.t_pose_max)
        if capacity < w_target:
            use_vibration = True
            mode = VIBRATION
            mode_fit = estimate.for_mode(mode)
            if not mode_fit.usable:
                return ActionSelection(None, None, True, needs_bootstrap=mode)
    model = DispenseModel(mode_fit.c_prime, mode)
    l_vals = grid.l_values(kin)
    t_vals = grid.t_values(kin)
    positive = l_vals[l_vals > 0]
    if positive.size:
        floor = predicted_drop(model, kin, float(positive[0]), kin.t_pose_min)
        if w_target < floor:
            w_target = floor
    coef_l = model.coefficient * np.power(l_vals, 2.5)
    window = (l_vals / kin.travel_rate)[:, None] + t_vals[None, :]
    pred = coef_l[:, None] * window
    cost = np.abs(pred - w_target)
    best = cost.min()
    rows, cols = np.nonzero(cost == best)
    j = cols.min()
    i = rows[cols == j].min()
    action = ValveAction(float(l_vals[i]), float(t_vals[j]),
                         vibration=(mode == VIBRATION))
    return ActionSelection(action, float(pred[i, j]), use_vibration)


class _ProbeLadder:
    """Escalating probe schedule used while a mode has no coefficient.

    Rungs are the positive grid commands from smallest to largest, probed
    at the minimum dwell. A rung that produces a measurable delta becomes a
    pending candidate; the same action is repeated once and the mode is
    seeded only if the repeat is measurable too. A failed repeat discards
    the candidate and the ladder moves on.
    """

    def __init__(self, kin: ValveKinematics, grid: ActionGrid) -> None:
        self._kin = kin
        l_vals = grid.l_values(kin)
        self._rungs = [float(v) for v in l_vals if v > 0]
        self._next = {GRAVITY: 0, VIBRATION: 0}
        self.pending: tuple[str, ValveAction, float] | None = None

    def exhausted(self, mode: str) -> bool:
        return self._next[mode] >= len(self._rungs)

    def next_probe(self, mode: str) -> ValveAction | None:
        """The next action to try for this mode, or None when exhausted."""
        if self.pending is not None and self.pending[0] == mode:
            return self.pending[1]
        if self.exhausted(mode):
            return None
        l_command = self._rungs[self._next[mode]]
        self._next[mode] += 1
        return ValveAction(l_command, self._kin.t_pose_min,
                           vibration=(mode == VIBRATION))

    def note_result(self, mode: str, action: ValveAction, delta_w: float,
                    gate: float) -> tuple[ValveAction, float] | None:
        """Feed back a probe's measured delta.

        Returns the (action, delta) pair of the confirmed first observation
        when a pending candidate is corroborated, else None. Measurable
        first-time deltas only open a pending candidate.
        """
        if self.pending is not None and self.pending[0] == mode:
            _, pending_action, pending_delta = self.pending
            self.pending = None
            if delta_w >= gate:
                return pending_action, pending_delta
            return None
        if delta_w >= gate:
            self.pending = (mode, action, delta_w)
        return None


class DispensingController:
    """Model-based closed-loop dispenser for a single trial."""

    def __init__(self, w_goal: float, kin: ValveKinematics | None = None, *,
                 k_p: float = DEFAULT_K_P,
                 tolerance: float = DEFAULT_TOLERANCE_MG,
                 max_steps: int = DEFAULT_MAX_STEPS,
                 grid: ActionGrid | None = None,
                 min_observable: float = MIN_OBSERVABLE_MG) -> None:
        if not math.isfinite(w_goal) or w_goal <= 0:
            raise ValueError("w_goal must be finite and > 0")
        if not 0 < k_p <= 1:
            raise ValueError("k_p must satisfy 0 < k_p <= 1")
        if not math.isfinite(tolerance) or tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        self.w_goal = w_goal
        self.kin = kin if kin is not None else ValveKinematics()
        self.k_p = k_p
        self.tolerance = tolerance
        self.max_steps = max_steps
        self.grid = grid if grid is not None else ActionGrid()
        self.log = ObservationLog(min_observable)
        self.status = TrialStatus.RUNNING
        self.use_vibration = False
        self.step_count = 0
        self.w_measured: float | None = None
        self.w_error: float | None = None
        self.w_target: float | None = None
        self._fits: dict[str, ModeFit] = {GRAVITY: ModeFit(),
                                          VIBRATION: ModeFit()}
        self._ladder = _ProbeLadder(self.kin, self.grid)
        self._last_action: ValveAction | None = None

    @property
    def estimate(self) -> CoefficientEstimate:
        return CoefficientEstimate(gravity=self._fits[GRAVITY],
                                   vibration=self._fits[VIBRATION])

    def step(self, reading: float, *, hopper_empty: bool = False) -> StepDecision:
        """Consume one stabilised balance reading, emit the next action.

        Terminal statuses carry no action. Calling again after termination
        is an error; one controller drives exactly one trial.
        """
        if self.status.terminal:
            raise RuntimeError(f"trial already ended: {self.status.value}")
        if not math.isfinite(reading):
            self.status = TrialStatus.ABORTED
            return StepDecision(self.status)
        previous = self.w_measured
        self.w_measured = reading
        self.w_error = self.w_goal - reading
        if abs(self.w_error) < self.tolerance:
            self.status = TrialStatus.SUCCESS
        elif self.w_error < 0:
            self.status = TrialStatus.OVERSHOOT_FAIL
        elif hopper_empty:
            self.status = TrialStatus.DEPLETED_FAIL
        elif self.step_count >= self.max_steps:
            self.status = TrialStatus.STEP_LIMIT_FAIL
        if self.status.terminal:
            return StepDecision(self.status)
        self._ingest(previous, reading)
        decision = self._choose()
        self._last_action = decision.action
        self.step_count += 1
        return decision

    def _ingest(self, previous: float | None, reading: float) -> None:
        if self._last_action is None or previous is None:
            return
        delta = reading - previous
        if delta < 0.0:
            delta = 0.0
        action = self._last_action
        mode = VIBRATION if action.vibration else GRAVITY
        if self._fits[mode].usable:
            if self.log.record(action.l_command, action.t_pose_s,
                               action.vibration, delta, self.step_count):
                self._refit(mode)
            return
        confirmed = self._ladder.note_result(mode, action, delta,
                                             self.log.min_observable)
        if confirmed is not None:
            first_action, first_delta = confirmed
            self.log.record(first_action.l_command, first_action.t_pose_s,
                            first_action.vibration, first_delta,
                            self.step_count)
            self.log.record(action.l_command, action.t_pose_s,
                            action.vibration, delta, self.step_count)
            self._refit(mode)

    def _refit(self, mode: str) -> None:
        self._fits[mode] = self.log.fit(self.kin, mode)

    def _choose(self) -> StepDecision:
        raw_target = self.k_p * self.w_error
        self.w_target = raw_target
        mode = VIBRATION if self.use_vibration else GRAVITY
        if not self._fits[mode].usable:
            return self._probe(mode)
        selection = select_action(self.estimate, self.kin, raw_target,
                                  use_vibration=self.use_vibration,
                                  grid=self.grid)
        if selection.use_vibration and not self.use_vibration:
            self.use_vibration = True
        if selection.needs_bootstrap is not None:
            return self._probe(selection.needs_bootstrap)
        return StepDecision(TrialStatus.RUNNING, selection.action,
                            selection.predicted_mg)

    def _probe(self, mode: str) -> StepDecision:
        action = self._ladder.next_probe(mode)
        if action is None and mode == GRAVITY:
            # Nothing measurable across the whole gravity range: latch
            # vibration and keep probing there.
            self.use_vibration = True
            mode = VIBRATION
            if self._fits[mode].usable:
                return self._choose()
            action = self._ladder.next_probe(mode)
        if action is None:
            # Both ladders spent with nothing measurable; push the most
            # aggressive action until a termination condition ends the trial.
            action = ValveAction(self.kin.l_max, self.kin.t_pose_max,
                                 vibration=True)
        return StepDecision(TrialStatus.RUNNING, action, None, probe=True)


@dataclass(frozen=True)
class PidGains:
    """Frozen tuning profile for the direct PID baseline.

    output_slope maps the PID output (mg) to a valve command (units/mg).
    integral_limit bounds |sum of errors| for anti-windup, in mg*steps.
    """

    k_p: float = 1.0
    k_i: float = 0.0
    k_d: float = 0.0
    output_slope: float = 0.05
    t_pose_fixed_s: float = 2.0
    integral_limit: float = 10000.0

    def __post_init__(self) -> None:
        for name in ("k_p", "k_i", "k_d", "output_slope", "t_pose_fixed_s",
                     "integral_limit"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"PidGains.{name} must be finite")
        if self.output_slope <= 0:
            raise ValueError("PidGains.output_slope must be > 0")
        if self.t_pose_fixed_s < 0:
            raise ValueError("PidGains.t_pose_fixed_s must be >= 0")
        if self.integral_limit < 0:
            raise ValueError("PidGains.integral_limit must be >= 0")


# Tuned once against the glass-beads 500 mg condition and frozen. The
# tuning sweep maximised success rate there, preferring the smallest
# integral gain among ties (least windup), then the fewest steps.
DEFAULT_PID_PROFILE = PidGains(
    k_p=0.5,
    k_i=0.01,
    k_d=1.0,
    output_slope=0.08,
    t_pose_fixed_s=2.0,
    integral_limit=9000.0,
)


class PidBaselineController:
    """Direct PID on the weight error, no model, no observation logging.

    The PID output u = k_p*e + k_i*sum(e) + k_d*(e - e_prev) is mapped
    through output_slope to a valve command and clamped to the kinematic
    range; the dwell is fixed. Termination conditions match the model-based
    controller so the two are comparable trial for trial.
    """

    def __init__(self, w_goal: float, kin: ValveKinematics | None = None, *,
                 gains: PidGains = DEFAULT_PID_PROFILE,
                 vibration: bool = False,
                 tolerance: float = DEFAULT_TOLERANCE_MG,
                 max_steps: int = DEFAULT_MAX_STEPS) -> None:
        if not math.isfinite(w_goal) or w_goal <= 0:
            raise ValueError("w_goal must be finite and > 0")
        if not math.isfinite(tolerance) or tolerance <= 0:
            raise ValueError("tolerance must be > 0")
        if max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        self.w_goal = w_goal
        self.kin = kin if kin is not None else ValveKinematics()
        if not (self.kin.t_pose_min <= gains.t_pose_fixed_s
                <= self.kin.t_pose_max):
            raise ValueError("PidGains.t_pose_fixed_s outside dwell bounds")
        self.gains = gains
        self.vibration = vibration
        self.tolerance = tolerance
        self.max_steps = max_steps
        self.status = TrialStatus.RUNNING
        self.step_count = 0
        self.w_measured: float | None = None
        self.w_error: float | None = None
        self.integral = 0.0
        self.previous_error: float | None = None

    def action_for_error(self, w_error: float) -> ValveAction:
        """PID update for one error sample; mutates integral and history."""
        g = self.gains
        self.integral += w_error
        if self.integral > g.integral_limit:
            self.integral = g.integral_limit
        elif self.integral < -g.integral_limit:
            self.integral = -g.integral_limit
        derivative = 0.0 if self.previous_error is None \
            else w_error - self.previous_error
        self.previous_error = w_error
        u = g.k_p * w_error + g.k_i * self.integral + g.k_d * derivative
        l_command = g.output_slope * u
        if l_command < self.kin.l_min:
            l_command = self.kin.l_min
        elif l_command > self.kin.l_max:
            l_command = self.kin.l_max
        return ValveAction(l_command, g.t_pose_fixed_s,
                           vibration=self.vibration)

    def step(self, reading: float, *, hopper_empty: bool = False) -> StepDecision:
        if self.status.terminal:
            raise RuntimeError(f"trial already ended: {self.status.value}")
        if not math.isfinite(reading):
            self.status = TrialStatus.ABORTED
            return StepDecision(self.status)
        self.w_measured = reading
        self.w_error = self.w_goal - reading
        if abs(self.w_error) < self.tolerance:
            self.status = TrialStatus.SUCCESS
        elif self.w_error < 0:
            self.status = TrialStatus.OVERSHOOT_FAIL
        elif hopper_empty:
            self.status = TrialStatus.DEPLETED_FAIL
        elif self.step_count >= self.max_steps:
            self.status = TrialStatus.STEP_LIMIT_FAIL
        if self.status.terminal:
            return StepDecision(self.status)
        action = self.action_for_error(self.w_error)
        self.step_count += 1
        return StepDecision(TrialStatus.RUNNING, action)
