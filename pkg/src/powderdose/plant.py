"""Stochastic simulated plant: hopper, valve, vibration motor, balance.

The plant integrates the Beverloo rate over each open-dwell-close cycle and
perturbs it with a multiplicative Gaussian disturbance. Arching is a hard
gate: gravity flow stops entirely once the orifice is at or below the
powder's critical arch diameter. Vibration defeats the gate and scales the
rate by the powder's vibration gain.

The balance is read between steps. Readings are the true dispensed total
plus Gaussian noise, quantised to the display resolution (round half away
from zero), and each stabilised reading costs a settling wait.

Randomness contract: a plant draws from two independent substreams spawned
from one seed sequence, one for flow disturbances and one for the balance.
Enabling or disabling either noise source therefore never shifts the draws
of the other, and a fixed seed reproduces a trial bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .flow import PowderSpec, ValveKinematics, beverloo_rate, travel_time


@dataclass(frozen=True)
class BalanceModel:
    """Display resolution and noise of the weighing balance, mg and s."""

    resolution: float = 0.1
    noise_sigma: float = 0.1
    settle_time_mean: float = 8.0
    settle_time_sigma: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.resolution) or self.resolution <= 0:
            raise ValueError("BalanceModel.resolution must be > 0")
        if not math.isfinite(self.settle_time_mean) or self.settle_time_mean <= 0:
            raise ValueError("BalanceModel.settle_time_mean must be > 0")
        for name in ("noise_sigma", "settle_time_sigma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"BalanceModel.{name} must be >= 0")


def quantize_reading(value: float, resolution: float) -> float:
    """Snap a raw weight to the display grid, rounding half away from zero.

    Done in decimal arithmetic so that e.g. 1.25 mg at 0.1 mg resolution
    reads 1.3 despite the binary representation of the ratio landing a hair
    below the midpoint.
    """
    ticks = (Decimal(repr(value)) / Decimal(repr(resolution))).quantize(
        Decimal(1), rounding=ROUND_HALF_UP)
    return float(ticks * Decimal(repr(resolution)))


class SimulatedPlant:
    """Mutable state of one simulated dispensing rig.

    remaining is derived from the dispensed total so the mass balance
    remaining + dispensed_total == initial_load holds at every step.
    sim_clock accrues 2*T(L) + t_pose per executed cycle (travel out,
    dwell, travel back) plus the settling wait of each stabilised reading.
    """

    def __init__(self, spec: PowderSpec, kin: ValveKinematics,
                 balance: BalanceModel | None = None, *, seed: int = 0,
                 stream_key: tuple[int, ...] = ()) -> None:
        self.spec = spec
        self.kin = kin
        self.balance = balance if balance is not None else BalanceModel()
        self.seed = seed
        self.stream_key = tuple(stream_key)
        root = np.random.SeedSequence(seed, spawn_key=self.stream_key)
        flow_ss, balance_ss = root.spawn(2)
        self._flow_rng = np.random.default_rng(flow_ss)
        self._balance_rng = np.random.default_rng(balance_ss)
        self.dispensed_total = 0.0
        self.sim_clock = 0.0
        self.steps_executed = 0

    @property
    def remaining(self) -> float:
        return self.spec.initial_load - self.dispensed_total

    @property
    def depleted(self) -> bool:
        return self.remaining <= 0.0

    def flow_rate(self, l_command: float, vibration: bool) -> float:
        """Noise-free discharge rate in mg/s at the given opening."""
        orifice = self.kin.opening_per_command * l_command
        base = beverloo_rate(self.spec, orifice)
        if vibration:
            return self.spec.vibration_gain * base
        if orifice > self.spec.critical_arch_diameter:
            return base
        return 0.0

    def execute(self, l_command: float, t_pose_s: float,
                vibration: bool) -> tuple[float, float]:
        """Run one open-dwell-close cycle; returns (dispensed mg, elapsed s).

        The dispensed mass is rate * (T(L) + t_pose) scaled by (1 + eps)
        with eps drawn once per step from N(0, flow_noise_sigma^2) and
        truncated at -1, then clamped to what the hopper still holds. The
        flow draw happens on every step, flowing or not, so the stream
        position depends only on the step count.
        """
        kin = self.kin
        if not kin.l_min <= l_command <= kin.l_max:
            raise ValueError(
                f"l_command {l_command} outside [{kin.l_min}, {kin.l_max}]")
        if not kin.t_pose_min <= t_pose_s <= kin.t_pose_max:
            raise ValueError(
                f"t_pose_s {t_pose_s} outside "
                f"[{kin.t_pose_min}, {kin.t_pose_max}]")
        eps = self._flow_rng.normal(0.0, self.spec.flow_noise_sigma)
        if eps < -1.0:
            eps = -1.0
        travel = travel_time(kin, l_command)
        duration = travel + t_pose_s
        dispensed = self.flow_rate(l_command, vibration) * duration * (1.0 + eps)
        if dispensed >= self.remaining:
            dispensed = self.remaining
            self.dispensed_total = self.spec.initial_load
        else:
            self.dispensed_total += dispensed
        elapsed = 2.0 * travel + t_pose_s
        self.sim_clock += elapsed
        self.steps_executed += 1
        return dispensed, elapsed

    def read_balance(self, *, wait_settle: bool = True) -> tuple[float, float]:
        """Take one stabilised reading; returns (reading mg, settle wait s).

        The initial tare reading of a trial passes wait_settle=False: the
        balance is already stable before dispensing starts, so no settling
        time is charged and no settle variate is drawn.
        """
        eta = self._balance_rng.normal(0.0, self.balance.noise_sigma)
        reading = quantize_reading(self.dispensed_total + eta,
                                   self.balance.resolution)
        settle = 0.0
        if wait_settle:
            settle = self._balance_rng.normal(self.balance.settle_time_mean,
                                              self.balance.settle_time_sigma)
            if settle < 0.0:
                settle = 0.0
            self.sim_clock += settle
        return reading, settle
