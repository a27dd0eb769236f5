"""Versioned single-file checkpoints.

One JSON document per checkpoint: a self-describing header, the config
echo, per-task learner records, and rng cursors. Numeric arrays are flat
little-endian float64 ('<f8'), base64-encoded, so files round-trip
bit-for-bit across platforms regardless of native byte order.
"""

import base64
import json

import numpy as np

from ..sac import Learner
from .config import ExperimentConfig

FORMAT = "walklab-checkpoint"
VERSION = 1


class CheckpointError(ValueError):
    """Unreadable, mis-versioned, or structurally invalid checkpoint."""


def _encode(obj):
    if isinstance(obj, np.ndarray):
        flat = np.ascontiguousarray(obj, dtype="<f8")
        return {
            "__array__": True,
            "shape": list(obj.shape),
            "data": base64.b64encode(flat.tobytes()).decode("ascii"),
        }
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _decode(obj):
    if isinstance(obj, dict):
        if obj.get("__array__"):
            raw = base64.b64decode(obj["data"])
            return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(obj["shape"])
        return {k: _decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode(v) for v in obj]
    return obj


def save_checkpoint(path, cfg, learners, env_rng_state=None):
    """Write every learner plus rng cursors under a versioned header."""
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "config": cfg.echo() if isinstance(cfg, ExperimentConfig) else dict(cfg),
        "tasks": {name: _encode(ln.to_record()) for name, ln in learners.items()},
        "env_rng": env_rng_state,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise CheckpointError(f"checkpoint {path} lacks the {FORMAT!r} header")
    if doc.get("version") != VERSION:
        raise CheckpointError(
            f"checkpoint {path} has version {doc.get('version')!r}, expected {VERSION}"
        )
    if "tasks" not in doc or not doc["tasks"]:
        raise CheckpointError(f"checkpoint {path} contains no task records")
    doc["tasks"] = {name: _decode(rec) for name, rec in doc["tasks"].items()}
    return doc


def restore_learners(doc):
    """Rebuild per-task learners from a loaded checkpoint document."""
    cfg = ExperimentConfig.from_echo(doc["config"])
    sac = cfg.sac_config()
    learners = {}
    try:
        for name, rec in doc["tasks"].items():
            learners[name] = Learner.from_record(rec, config=sac)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"task record {name!r} is malformed: {exc}") from None
    return cfg, learners
