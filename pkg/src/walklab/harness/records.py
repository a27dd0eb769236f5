"""Run records and the CSV/JSONL serialization shared across the harness.

The curves.csv schema is a stable contract: column names and order below
are fixed and covered by a golden-file test.
"""

import csv
import json
from dataclasses import dataclass

CURVE_COLUMNS = [
    "seed",
    "episode",
    "task",
    "steps",
    "episode_return",
    "cum_falls",
    "cum_oob",
    "cum_sim_time_s",
    "lambda",
    "alpha",
]


@dataclass(frozen=True)
class RunRecord:
    """One episode row of a training run."""

    seed: int
    episode: int
    task: str
    steps: int
    episode_return: float
    cum_falls: int
    cum_oob: int
    cum_sim_time_s: float
    lam: float
    alpha: float

    def row(self):
        return [
            self.seed,
            self.episode,
            self.task,
            self.steps,
            f"{self.episode_return:.6f}",
            self.cum_falls,
            self.cum_oob,
            f"{self.cum_sim_time_s:.3f}",
            f"{self.lam:.6f}",
            f"{self.alpha:.6f}",
        ]


def write_curves(path, records, header=True, mode="w"):
    with open(path, mode, newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(CURVE_COLUMNS)
        for rec in records:
            writer.writerow(rec.row())


def read_curves(path):
    """Rows as dicts with numeric fields parsed back."""
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                {
                    "seed": int(row["seed"]),
                    "episode": int(row["episode"]),
                    "task": row["task"],
                    "steps": int(row["steps"]),
                    "episode_return": float(row["episode_return"]),
                    "cum_falls": int(row["cum_falls"]),
                    "cum_oob": int(row["cum_oob"]),
                    "cum_sim_time_s": float(row["cum_sim_time_s"]),
                    "lambda": float(row["lambda"]),
                    "alpha": float(row["alpha"]),
                }
            )
    return out


def write_summary(path, columns, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        writer.writerows(rows)


def write_jsonl(path, rows):
    with open(path, "w") as fh:
        for row in rows:
            fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]
