"""Ablation runners: out-of-workspace scheduling study and safety study.

Both fan over (mode, seed) cells sequentially, run full training sessions,
and reduce the per-cell counters into mean / min / max summary tables.
Reruns with the same seed list reproduce the tables exactly.
"""

from dataclasses import replace

import numpy as np

from ..env import WORKSPACE_PRESETS
from .records import write_curves, write_summary

OOB_SUMMARY_COLUMNS = [
    "workspace",
    "mode",
    "mean_oob",
    "min_oob",
    "max_oob",
    "mean_falls",
    "total_steps",
    "seeds",
]

SAFETY_SUMMARY_COLUMNS = [
    "mode",
    "mean_falls",
    "min_falls",
    "max_falls",
    "mean_final_return",
    "min_final_return",
    "max_final_return",
    "seeds",
]


def _final_return(records, fraction=0.25, horizon=500):
    """Trailing return rate, normalized to a full-horizon episode.

    Boundary early terminations truncate episodes, so a plain episode mean
    under-reports policies that walk far; per-step rate times the horizon
    compares modes on walking quality alone.
    """
    tail = records[max(0, int(len(records) * (1.0 - fraction))) :]
    steps = sum(r.steps for r in tail)
    if steps == 0:
        return 0.0
    return float(sum(r.episode_return for r in tail) / steps * horizon)


def run_ablation_oob(base_cfg, out_dir=None, workspaces=None, progress=None):
    """Two-task center scheduling vs single-task learning, by workspace size.

    Both arms get the same total environment-step budget: the single-task
    arm concentrates the whole budget on its one policy. Returns summary
    rows plus the per-cell counts.
    """
    from ..tasks import training_session

    workspaces = list(workspaces or WORKSPACE_PRESETS)
    cells = []
    for workspace in workspaces:
        for mode in ("two-task", "single_task"):
            for seed in base_cfg.seeds:
                cfg = base_cfg.session_config(seed)
                if mode == "single_task":
                    cfg = replace(
                        cfg,
                        workspace=workspace,
                        scheduler="single_task",
                        steps_per_task=base_cfg.steps_per_task * 2,
                    )
                else:
                    cfg = replace(cfg, workspace=workspace, scheduler="center")
                state, _ = training_session(cfg)
                cells.append(
                    {
                        "workspace": workspace,
                        "mode": mode,
                        "seed": seed,
                        "oob": state.oob_events,
                        "falls": state.falls,
                        "steps": state.steps,
                    }
                )
                if progress is not None:
                    progress(cells[-1])

    rows = []
    for workspace in workspaces:
        for mode in ("two-task", "single_task"):
            sub = [c for c in cells if c["workspace"] == workspace and c["mode"] == mode]
            oob = [c["oob"] for c in sub]
            rows.append(
                [
                    workspace,
                    mode,
                    f"{np.mean(oob):.3f}",
                    min(oob),
                    max(oob),
                    f"{np.mean([c['falls'] for c in sub]):.3f}",
                    sum(c["steps"] for c in sub),
                    len(sub),
                ]
            )
    if out_dir is not None:
        write_summary(f"{out_dir}/summary.csv", OOB_SUMMARY_COLUMNS, rows)
    return rows, cells


SAFETY_MODES = (
    ("lagrangian", None),
    ("fixed_weight", 0.0),
    ("fixed_weight", 1.0),
    ("fixed_weight", 100.0),
)


def _mode_label(mode, weight):
    return mode if weight is None else f"{mode}_{weight:g}"


def run_ablation_safety(base_cfg, out_dir=None, progress=None):
    """Learnable multiplier vs fixed safety penalty weights, on flat ground."""
    from ..tasks import training_session

    cells = []
    all_records = []
    for mode, weight in SAFETY_MODES:
        label = _mode_label(mode, weight)
        for seed in base_cfg.seeds:
            cfg = base_cfg.session_config(seed)
            cfg = replace(
                cfg,
                terrain="flat",
                safety_mode=mode,
                safety_weight=weight if weight is not None else 0.0,
            )
            state, records = training_session(cfg)
            cells.append(
                {
                    "mode": label,
                    "seed": seed,
                    "falls": state.falls,
                    "oob": state.oob_events,
                    "final_return": _final_return(records),
                    "steps": state.steps,
                }
            )
            all_records.append((label, seed, records))
            if progress is not None:
                progress(cells[-1])

    rows = []
    for mode, weight in SAFETY_MODES:
        label = _mode_label(mode, weight)
        sub = [c for c in cells if c["mode"] == label]
        falls = [c["falls"] for c in sub]
        finals = [c["final_return"] for c in sub]
        rows.append(
            [
                label,
                f"{np.mean(falls):.3f}",
                min(falls),
                max(falls),
                f"{np.mean(finals):.3f}",
                f"{min(finals):.3f}",
                f"{max(finals):.3f}",
                len(sub),
            ]
        )
    if out_dir is not None:
        write_summary(f"{out_dir}/summary.csv", SAFETY_SUMMARY_COLUMNS, rows)
        for label, seed, records in all_records:
            write_curves(f"{out_dir}/curves_{label}_seed{seed}.csv", records)
    return rows, cells
