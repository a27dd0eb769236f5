"""Deterministic policy evaluation from a checkpoint."""

import math
from dataclasses import dataclass

import numpy as np

from ..env import PlanarWalker, WalkerState, RESET_TILT_JITTER, wrap_angle
from ..tasks import EpisodeFrame, task_reward, task_set
from .checkpoint import CheckpointError, load_checkpoint, restore_learners


@dataclass
class EvalStats:
    task: str
    episodes: int
    mean_return: float
    falls: int
    mean_forward_displacement: float
    mean_yaw_change: float
    returns: list

    def as_dict(self):
        return {
            "task": self.task,
            "episodes": self.episodes,
            "mean_return": self.mean_return,
            "falls": self.falls,
            "mean_forward_displacement": self.mean_forward_displacement,
            "mean_yaw_change": self.mean_yaw_change,
            "returns": self.returns,
        }


def evaluate_policy(checkpoint_path, episodes=20, task=None, seed=1234, horizon=None):
    """Noise-free rollouts of one task's policy; deterministic per seed.

    Each episode starts at the workspace center with a fresh uniform yaw
    and ends on fall, boundary early termination, or the horizon. Reports
    the scaled task return, fall count, forward displacement in the
    episode-start frame, and accumulated yaw change.
    """
    doc = load_checkpoint(checkpoint_path)
    cfg, learners = restore_learners(doc)
    tasks = {t.name: t for t in task_set(cfg.task_set)}
    if task is None:
        task = next(iter(learners))
    if task not in learners:
        raise CheckpointError(f"checkpoint has no policy for task {task!r}")
    learner = learners[task]
    vector = tasks[task]
    horizon = horizon or cfg.horizon

    rng = np.random.default_rng(np.random.SeedSequence((seed, 777)))
    walker = PlanarWalker(cfg.terrain, cfg.workspace, rng=rng)

    returns = []
    displacements = []
    yaw_changes = []
    falls = 0
    for _ in range(episodes):
        yaw = rng.uniform(-math.pi, math.pi)
        roll, pitch = rng.uniform(-RESET_TILT_JITTER, RESET_TILT_JITTER, size=2)
        walker.set_state(WalkerState(yaw=yaw, roll=roll, pitch=pitch))
        frame = EpisodeFrame.from_pose(walker.state.pose())
        obs = walker.observation()
        ep_return = 0.0
        yaw_change = 0.0
        for _ in range(horizon):
            prev_prev = walker.state.prev_prev_action
            prev = walker.state.prev_action
            action = learner.act(obs, stochastic=False)
            res = walker.step(action)
            ep_return += cfg.reward_scale * task_reward(
                frame, res.pose_before, res.pose_after, (prev_prev, prev, action), vector
            )
            yaw_change += wrap_angle(res.pose_after[2] - res.pose_before[2])
            obs = res.observation
            if res.events.fall:
                falls += 1
                break
            if res.events.out_of_workspace or res.events.near_boundary_outbound:
                break
        dx = walker.state.x - frame.origin[0]
        dy = walker.state.y - frame.origin[1]
        r = frame.rotation
        displacements.append(r[0, 0] * dx + r[1, 0] * dy)
        returns.append(ep_return)
        yaw_changes.append(yaw_change)

    return EvalStats(
        task=task,
        episodes=episodes,
        mean_return=float(np.mean(returns)),
        falls=falls,
        mean_forward_displacement=float(np.mean(displacements)),
        mean_yaw_change=float(np.mean(yaw_changes)),
        returns=[float(r) for r in returns],
    )
