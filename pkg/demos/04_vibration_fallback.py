#!/usr/bin/env python3
# Cohesive powder: titanium dioxide arches below a 12 mm opening, far
# beyond anything the valve can open, so gravity probes measure nothing.
# The controller walks its probe ladder, gives up on gravity, latches
# the vibration motor on, and identifies the vibrated coefficient
# instead. The latch is one-way: once cohesion is diagnosed the trial
# never goes back to gravity flow.

from powderdose import ExperimentConfig, run_trial

cfg = ExperimentConfig(powders=["tio2"], controllers=["model-based"],
                       targets_mg=[500.0], trials=1, seed=9)
rec = run_trial(cfg, 0)

print("tio2, 500 mg target")
print(f"{'step':>4} {'L':>7} {'t_pose':>7} {'vib':>4} {'probe':>6} "
      f"{'delta mg':>9} {'C_vib':>9}")
for row in rec.steps:
    c = f"{row.cprime_vibration:9.4f}" if row.cprime_vibration is not None else "        -"
    print(f"{row.step:>4} {row.l_command:7.1f} {row.t_pose_s:7.2f} "
          f"{'y' if row.vibration else 'n':>4} {'y' if row.probe else '':>6} "
          f"{row.measured_delta_mg:9.2f} {c}")

print()
print(f"status: {rec.status.value}, {rec.final_mass_mg:.2f} mg in {rec.total_steps} steps")

n_gravity = sum(1 for r in rec.steps if not r.vibration)
n_flowing = sum(1 for r in rec.steps if r.true_delta_mg > 0 and not r.vibration)
print(f"gravity steps attempted: {n_gravity}, of which moved powder: {n_flowing}")
print("every milligram was dispensed under vibration")
