"""Rebuild summary tables and fit diagnostics from persisted artifacts.

Reads an artifact directory produced by run_suite (summary.json plus the
per-trial trace CSVs), recomputes the condition statistics and pooled
drop-model fits from scratch, and writes a report/ subdirectory:

    report/summary_recomputed.csv   same schema as summary.csv
    report/report.txt               formatted condition and fit tables
    report/fit_<powder>_<mode>.csv  regressor, measured and predicted drop
                                    per pooled data point

Because trials are rebuilt in their original order from exact string
round-tripped floats, the recomputed summary matches the one written at
run time byte for byte.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .control import TrialStatus
from .harness import (ConditionStats, PooledFit, TrialRecord, compute_metrics,
                      config_from_dict, fmt_cell, pooled_fits,
                      pooled_observations, read_trace_csv, write_summary_csv)
from .identify import regressor


@dataclass(frozen=True)
class ReportResult:
    artifact_dir: Path
    report_dir: Path | None
    conditions: tuple[ConditionStats, ...]
    fits: tuple[PooledFit, ...]
    errors: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.errors


def load_suite_records(artifact_dir: str | Path
                       ) -> tuple[list[TrialRecord], dict, list[str]]:
    """Rebuild trial records from summary.json and the trace CSVs."""
    root = Path(artifact_dir)
    errors: list[str] = []
    index_path = root / "summary.json"
    if not index_path.is_file():
        return [], {}, [f"no data: {index_path} not found"]
    try:
        with index_path.open() as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        return [], {}, [f"cannot read {index_path}: {exc}"]
    records: list[TrialRecord] = []
    for entry in payload.get("trials", []):
        trace_rel = entry.get("trace_csv", "")
        trace_path = root / trace_rel
        try:
            steps = read_trace_csv(trace_path)
        except (OSError, ValueError) as exc:
            errors.append(f"trial {entry.get('trial_id')}: {exc}")
            continue
        if len(steps) != entry["total_steps"]:
            errors.append(
                f"trial {entry['trial_id']}: index says "
                f"{entry['total_steps']} steps, trace has {len(steps)}")
            continue
        records.append(TrialRecord(
            trial_id=entry["trial_id"],
            powder=entry["powder"],
            controller=entry["controller"],
            target_mg=float(entry["target_mg"]),
            trial_index=int(entry["trial_index"]),
            status=TrialStatus(entry["status"]),
            final_mass_mg=float(entry["final_mass_mg"]),
            total_steps=int(entry["total_steps"]),
            total_sim_time_s=float(entry["total_sim_time_s"]),
            steps=tuple(steps),
        ))
    return records, payload.get("config", {}), errors


def build_report(artifact_dir: str | Path, *,
                 write: bool = True) -> ReportResult:
    """Recompute statistics from an artifact directory; optionally persist."""
    root = Path(artifact_dir)
    records, config_echo, errors = load_suite_records(root)
    if not records and not errors:
        errors.append(f"no data: {root} holds no trials")
    if not records:
        return ReportResult(root, None, (), (), tuple(errors))
    try:
        config = config_from_dict(config_echo)
    except ValueError as exc:
        errors.append(f"config echo invalid: {exc}")
        return ReportResult(root, None, (), (), tuple(errors))
    conditions = compute_metrics(records, config.tolerance_mg)
    fits = pooled_fits(records, config.kinematics)
    report_dir = None
    if write:
        report_dir = root / "report"
        report_dir.mkdir(parents=True, exist_ok=True)
        write_summary_csv(conditions, report_dir / "summary_recomputed.csv")
        _write_fit_points(records, config, report_dir)
        _write_text_report(conditions, fits, records,
                           report_dir / "report.txt")
    return ReportResult(root, report_dir, tuple(conditions), tuple(fits),
                        tuple(errors))


def _write_fit_points(records, config, report_dir: Path) -> None:
    kin = config.kinematics
    fits = {(f.powder, f.mode): f for f in pooled_fits(records, kin)}
    pools = pooled_observations(records)
    for (powder, mode), fit in fits.items():
        rows = [o for o in pools[powder]
                if ("vibration" if o.vibration else "gravity") == mode]
        path = report_dir / f"fit_{powder}_{mode}.csv"
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(("regressor", "measured_mg", "predicted_mg"))
            for o in rows:
                x = regressor(kin, o.l_command, o.t_pose_s)
                predicted = (fit.c_prime * x if fit.c_prime is not None
                             else None)
                writer.writerow([fmt_cell(x), fmt_cell(o.delta_w_mg),
                                 fmt_cell(predicted)])


def _write_text_report(conditions, fits, records, path: Path) -> None:
    lines = []
    lines.append("Dispensing benchmark report")
    lines.append(f"trials: {len(records)}")
    lines.append("")
    lines.append("Per-condition accuracy")
    header = (f"{'powder':<16} {'controller':<12} {'target':>9} "
              f"{'ok':>5} {'dropped mg':>22} {'steps':>16} {'time s':>18}")
    lines.append(header)
    lines.append("-" * len(header))
    for c in conditions:
        rate = f"{c.successes}/{c.trials}"
        dropped = f"{c.dropped_mean_mg:.2f} +/- {c.dropped_std_mg:.2f}"
        steps = f"{c.steps_mean:.1f} +/- {c.steps_std:.1f}"
        time_s = f"{c.time_mean_s:.1f} +/- {c.time_std_s:.1f}"
        flag = " *" if c.degenerate_stats else ""
        lines.append(f"{c.powder:<16} {c.controller:<12} "
                     f"{c.target_mg:>9g} {rate:>5} {dropped:>22} "
                     f"{steps:>16} {time_s:>18}{flag}")
    if any(c.degenerate_stats for c in conditions):
        lines.append("* fewer than two completed trials behind these numbers")
    lines.append("")
    lines.append("Pooled drop-model fits")
    fit_header = (f"{'powder':<16} {'mode':<10} {'coefficient':>14} "
                  f"{'R^2':>8} {'points':>7}")
    lines.append(fit_header)
    lines.append("-" * len(fit_header))
    for f in fits:
        coeff = "unfitted" if f.c_prime is None else f"{f.c_prime:.6g}"
        score = "n/a" if f.r_squared is None else f"{f.r_squared:.4f}"
        lines.append(f"{f.powder:<16} {f.mode:<10} {coeff:>14} "
                     f"{score:>8} {f.n_points:>7}")
    lines.append("")
    path.write_text("\n".join(lines) + "\n")
