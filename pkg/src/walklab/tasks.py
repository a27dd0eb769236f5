"""Multi-task machinery: directional task rewards, the center-pointing
scheduler, strictly isolated per-task learners, and the outer training loop.

A task is a three-component weight vector over body-frame displacement and
yaw change, measured in the frame the torso had when the episode began.
Every task has a counter-task walking the opposite way, which is what lets
the scheduler keep the walker inside the workspace: at each episode start
it picks the task whose direction points toward the workspace center.

Episodes chain in place. Only falls and workspace escapes teleport the
walker back to the center, and both cost the full manual-reset time.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import env as envmod
from .env import DT, PlanarWalker, wrap_angle
from .harness.records import RunRecord
from .sac import Learner, ReplayBuffer, SacConfig, TerminationKind, Transition

SMOOTHNESS_COEFF = 0.001


@dataclass(frozen=True)
class TaskVector:
    """Walking-direction weights: planar displacement (w1, w2) and yaw (w3)."""

    w1: float
    w2: float
    w3: float
    name: str
    counter: str

    def __post_init__(self):
        if self.w1 == 0.0 and self.w2 == 0.0 and self.w3 == 0.0:
            raise ValueError("a task needs at least one nonzero component")


TASK_PRESETS = {
    "two-task": (
        TaskVector(1.0, 0.0, 0.0, "forward", "backward"),
        TaskVector(-1.0, 0.0, 0.0, "backward", "forward"),
    ),
    "four-task": (
        TaskVector(1.0, 0.0, 0.0, "forward", "backward"),
        TaskVector(-1.0, 0.0, 0.0, "backward", "forward"),
        TaskVector(0.0, 0.0, 0.5, "turn-left", "turn-right"),
        TaskVector(0.0, 0.0, -0.5, "turn-right", "turn-left"),
    ),
}


def task_set(name):
    try:
        return TASK_PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown task set {name!r}; choose from {sorted(TASK_PRESETS)}") from None


@dataclass(frozen=True)
class EpisodeFrame:
    """Torso frame at episode start: yaw rotation plus origin pose."""

    rotation: np.ndarray  # 2x2, world <- body at t=0
    origin: tuple

    @classmethod
    def from_pose(cls, pose):
        x, y, yaw = pose
        c, s = math.cos(yaw), math.sin(yaw)
        return cls(np.array([[c, -s], [s, c]]), (x, y, yaw))


def task_reward(frame, prev_pose, cur_pose, action_window, w):
    """Per-step directional reward with the action-smoothness penalty.

    Displacement is rotated into the episode-start frame, the yaw delta is
    wrapped, and the penalty charges the squared second difference of the
    last three commanded actions.
    """
    dx = cur_pose[0] - prev_pose[0]
    dy = cur_pose[1] - prev_pose[1]
    r = frame.rotation
    # R0^{-1} = R0^T for a rotation
    local_x = r[0, 0] * dx + r[1, 0] * dy
    local_y = r[0, 1] * dx + r[1, 1] * dy
    dyaw = wrap_angle(cur_pose[2] - prev_pose[2])
    a2, a1, a0 = action_window[0], action_window[1], action_window[2]
    accel = a0 - 2.0 * a1 + a2
    smooth = SMOOTHNESS_COEFF * float(np.dot(accel, accel))
    return w.w1 * local_x + w.w2 * local_y + w.w3 * dyaw - smooth


def center_bearing(robot_pose, workspace_center=(0.0, 0.0)):
    """Bearing of the workspace center in the robot frame, in (-pi, pi]."""
    dx = workspace_center[0] - robot_pose[0]
    dy = workspace_center[1] - robot_pose[1]
    return wrap_angle(math.atan2(dy, dx) - robot_pose[2])


def select_task(robot_pose, workspace_center, tasks):
    """Pick the task whose walking direction points toward the center.

    Two tasks: forward when the center sits in the front half-plane.
    Four tasks: 90-degree sectors around bearings 0, pi, +pi/2, -pi/2 for
    forward, backward, turn-left, turn-right; exact boundaries go to the
    lower task index.
    """
    b = center_bearing(robot_pose, workspace_center)
    if len(tasks) == 2:
        return 0 if abs(b) <= math.pi / 2.0 else 1
    if len(tasks) == 4:
        if abs(b) <= math.pi / 4.0:
            return 0
        if abs(b) >= 3.0 * math.pi / 4.0:
            return 1
        return 2 if b > 0.0 else 3
    raise ValueError(f"no scheduler rule for a {len(tasks)}-task set")


@dataclass
class SessionConfig:
    """One training run: environment, task set, scheduling, and safety mode."""

    terrain: str = "flat"
    workspace: str = "5.0x2.0"
    task_set: str = "two-task"
    scheduler: str = "center"  # center | round_robin | single_task
    safety_mode: str = "lagrangian"  # lagrangian | fixed_weight | none
    safety_weight: float = 0.0
    seed: int = 0
    steps_per_task: int = 15000
    horizon: int = 500
    reward_scale: float = 15.0
    sac: SacConfig = field(default_factory=SacConfig)

    def validate(self):
        if self.terrain not in envmod.TERRAINS:
            raise ValueError(f"unknown terrain {self.terrain!r}")
        if self.workspace not in envmod.WORKSPACE_PRESETS:
            raise ValueError(f"unknown workspace {self.workspace!r}")
        if self.task_set not in TASK_PRESETS:
            raise ValueError(f"unknown task set {self.task_set!r}")
        if self.scheduler not in ("center", "round_robin", "single_task"):
            raise ValueError(f"unknown scheduler {self.scheduler!r}")
        if self.safety_mode not in ("lagrangian", "fixed_weight", "none"):
            raise ValueError(f"unknown safety mode {self.safety_mode!r}")
        if self.steps_per_task < 0 or self.horizon <= 0:
            raise ValueError("budget must be >= 0 and horizon positive")
        return self


@dataclass
class SessionState:
    """Per-task learners and buffers (disjoint by construction) plus counters."""

    tasks: tuple
    learners: dict
    buffers: dict
    episodes: int = 0
    steps: int = 0
    falls: int = 0
    oob_events: int = 0
    sim_time_s: float = 0.0


def _learner_sac_config(cfg):
    sac = cfg.sac
    if cfg.safety_mode != "lagrangian":
        # fixed-weight shaping and plain SAC run without the multiplier
        # machinery; the safety critic is skipped entirely so fixed_weight
        # 0.0 is bit-identical to safety mode "none".
        sac = sac.replace(use_safety_critic=False, lambda_init=0.0)
    return sac


def build_session(cfg):
    """Instantiate learners, buffers, and the simulator for one session."""
    cfg.validate()
    tasks = task_set(cfg.task_set)
    if cfg.scheduler == "single_task":
        tasks = (tasks[0],)
    root = np.random.SeedSequence(cfg.seed)
    env_ss, *task_ss = root.spawn(1 + 2 * len(tasks))
    walker = PlanarWalker(cfg.terrain, cfg.workspace, rng=np.random.default_rng(env_ss))
    sac = _learner_sac_config(cfg)
    learners = {}
    buffers = {}
    for i, t in enumerate(tasks):
        learners[t.name] = Learner(envmod.OBS_DIM, envmod.ACTION_DIM, sac, task_ss[2 * i])
        buffers[t.name] = ReplayBuffer(sac.buffer_capacity, task_ss[2 * i + 1])
    return walker, SessionState(tasks=tasks, learners=learners, buffers=buffers)


def training_session(cfg, on_episode=None):
    """Run the scheduled multi-task loop; returns (SessionState, records).

    Each episode trains exactly one task: its policy rolls out, its buffer
    stores the transitions, and its learner takes two gradient rounds per
    environment step. Episodes end on falls (teleport reset, 12 s), on the
    boundary early-termination rule (chain in place), on workspace escape
    (teleport reset, 12 s, counted as manual intervention), or at the
    horizon.
    """
    walker, state = build_session(cfg)
    tasks = state.tasks
    budget = cfg.steps_per_task * len(tasks)
    fixed_weight = cfg.safety_weight if cfg.safety_mode == "fixed_weight" else 0.0
    records = []

    while state.steps < budget:
        if cfg.scheduler == "center":
            idx = select_task(walker.state.pose(), (0.0, 0.0), tasks)
        elif cfg.scheduler == "round_robin":
            idx = state.episodes % len(tasks)
        else:
            idx = 0
        task = tasks[idx]
        learner = state.learners[task.name]
        buffer = state.buffers[task.name]

        walker.reset("episode_start")
        frame = EpisodeFrame.from_pose(walker.state.pose())
        obs = walker.observation()
        ep_return = 0.0
        ep_steps = 0
        reset_cost = 0.0

        while ep_steps < cfg.horizon and state.steps < budget:
            prev_prev = walker.state.prev_prev_action
            prev = walker.state.prev_action
            action = learner.act(obs)
            res = walker.step(action)
            r_task = cfg.reward_scale * task_reward(
                frame, res.pose_before, res.pose_after, (prev_prev, prev, action), task
            )
            r_train = r_task + fixed_weight * res.safety
            ep_steps += 1
            if res.events.fall:
                kind = TerminationKind.FALL_TERMINAL
            elif res.events.out_of_workspace or res.events.near_boundary_outbound:
                kind = TerminationKind.BOUNDARY_TIMEOUT
            elif ep_steps == cfg.horizon:
                kind = TerminationKind.EPISODE_TIMEOUT
            else:
                kind = TerminationKind.RUNNING
            buffer.push(Transition(obs, action, r_train, res.observation, res.safety, kind))
            learner.train_step(buffer)
            ep_return += r_task
            state.steps += 1
            obs = res.observation

            if res.events.fall:
                state.falls += 1
                _, reset_cost = walker.reset("after_fall")
                break
            if res.events.out_of_workspace:
                state.oob_events += 1
                _, reset_cost = walker.reset("after_escape")
                break
            if res.events.near_boundary_outbound:
                break

        state.episodes += 1
        state.sim_time_s += ep_steps * DT + reset_cost
        rec = RunRecord(
            seed=cfg.seed,
            episode=state.episodes,
            task=task.name,
            steps=ep_steps,
            episode_return=ep_return,
            cum_falls=state.falls,
            cum_oob=state.oob_events,
            cum_sim_time_s=state.sim_time_s,
            lam=learner.lam,
            alpha=learner.alpha,
        )
        records.append(rec)
        if on_episode is not None:
            on_episode(rec)
    return state, records


class UnknownTaskError(KeyError):
    pass


def compose_controller(policies, command_stream, walker=None, record_reward_for=None):
    """Drive the walker by switching among per-task policies step by step.

    `policies` maps task name to an object with act(obs, stochastic);
    `command_stream` yields one task name per control step. Runs policies
    in deterministic mode and returns the trajectory rows.
    """
    if walker is None:
        walker = PlanarWalker()
    trajectory = []
    frame = EpisodeFrame.from_pose(walker.state.pose())
    obs = walker.observation()
    for t, name in enumerate(command_stream):
        if name not in policies:
            raise UnknownTaskError(f"no policy for task {name!r}")
        prev_prev = walker.state.prev_prev_action
        prev = walker.state.prev_action
        action = policies[name].act(obs, stochastic=False)
        res = walker.step(action)
        reward = 0.0
        if record_reward_for is not None:
            reward = task_reward(
                frame, res.pose_before, res.pose_after, (prev_prev, prev, action),
                record_reward_for,
            )
        trajectory.append(envmod.trajectory_record(t, res, reward, task=name))
        obs = res.observation
        if res.events.fall:
            walker.reset("after_fall")
            frame = EpisodeFrame.from_pose(walker.state.pose())
            obs = walker.observation()
    return trajectory
