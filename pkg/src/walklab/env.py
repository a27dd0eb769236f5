"""Deterministic seeded planar-walker simulator.

The walker is a point body in the plane with yaw, roll, and pitch, driven
by a four-channel action: stride drive, balance, turn drive, and gait
frequency trim. Commands pass through a first-order low-pass filter
(5 Hz cutoff at 50 Hz control). One control step:

1.  validate the raw action, measure command jerk ||a_t - a_{t-1}||;
2.  filter the action, advance the gait phase by
    2*pi*2.5*(0.5 + 0.5*filt4)*dt;
3.  on the doormat, release a snag when jerk exceeds the shake threshold,
    otherwise maybe start one (one uniform draw per non-snagged step);
4.  thrust u = 0.5*filt1*sin(phase); displace u*slip*dt along current yaw
    (slip is scaled down while snagged); then turn by 1.5*filt3*|sin z|*dt;
5.  tilt update (decay 0.95 per step, drives scaled by dt, one pair of
    normal draws per step when the terrain is noisy):
        pitch <- 0.95*p + (SPEED_TILT*|u| + JERK_TILT*jerk
                           - BALANCE_RELIEF*filt2*p)*dt + sigma*sqrt(dt)*n1
        roll  <- 0.95*r + (TURN_TILT*|turn rate| + JERK_TILT*jerk)*dt
                           + sigma*sqrt(dt)*n2
6.  a fall is declared exactly when the tilt margin goes negative;
    otherwise the workspace boundary rule runs.

Speed and command jerk excite tilt while the balance channel relieves it,
so fast or jerky control is exactly what risks a fall; locomotion itself
requires phase-synchronized stride commands. Tilt gains and noise levels
are calibrated so that unmanaged aggressive control tips the walker while
a balanced gait keeps a healthy margin.

Observations never include absolute position or yaw: six stacked frames
of [roll, pitch, sin z, cos z, previous action], 48 numbers.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

DT = 0.02  # 50 Hz control
FILTER_CUTOFF_HZ = 5.0
FILTER_COEFF = math.exp(-2.0 * math.pi * FILTER_CUTOFF_HZ * DT)
GAIT_BASE_HZ = 2.5
THRUST_GAIN = 0.5  # m/s at full stride drive
TURN_GAIN = 1.5  # rad/s at full turn drive

PITCH_LIMIT = math.pi / 12.0
ROLL_LIMIT = math.pi / 6.0

TILT_DECAY = 0.95
SPEED_TILT = 1.0
TURN_TILT = 0.6
JERK_TILT = 0.25
BALANCE_RELIEF = 6.0

BOUNDARY_MARGIN = 0.3  # m; early-termination band at the workspace edge
OUTBOUND_SPEED_FLOOR = 0.05  # m/s; slower outward drift is jitter, not motion
RESET_COST_S = 12.0
RESET_TILT_JITTER = 0.02

ACTION_DIM = 4
HISTORY_LEN = 6
FRAME_WIDTH = 4 + ACTION_DIM
OBS_DIM = HISTORY_LEN * FRAME_WIDTH


class ActionRangeError(ValueError):
    """An action component left [-1, 1]."""


@dataclass(frozen=True)
class Terrain:
    """Ground model: slip gain, tilt noise, and optional crevice snags."""

    name: str
    slip_gain: float
    tilt_noise: float  # rad / sqrt(s)
    snag_prob: float = 0.0
    snag_slip_factor: float = 0.1
    snag_release_jerk: float = 0.8


TERRAINS = {
    "flat": Terrain("flat", slip_gain=1.0, tilt_noise=0.05),
    "mattress": Terrain("mattress", slip_gain=0.6, tilt_noise=0.12),
    "doormat": Terrain("doormat", slip_gain=1.0, tilt_noise=0.08, snag_prob=0.02),
}


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned training rectangle centered on the origin."""

    half_width: float
    half_height: float

    @classmethod
    def preset(cls, name):
        try:
            return cls(*WORKSPACE_PRESETS[name])
        except KeyError:
            raise KeyError(
                f"unknown workspace preset {name!r}; choose from {sorted(WORKSPACE_PRESETS)}"
            ) from None

    def contains(self, x, y):
        return abs(x) <= self.half_width and abs(y) <= self.half_height


# full width x height in meters -> (half_width, half_height)
WORKSPACE_PRESETS = {
    "5.0x2.0": (2.5, 1.0),
    "2.0x1.4": (1.0, 0.7),
    "1.2x0.8": (0.6, 0.4),
}


@dataclass
class WalkerState:
    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    prev_roll: float = 0.0
    prev_pitch: float = 0.0
    phase: float = 0.0
    filt_action: np.ndarray = field(default_factory=lambda: np.zeros(ACTION_DIM))
    prev_action: np.ndarray = field(default_factory=lambda: np.zeros(ACTION_DIM))
    prev_prev_action: np.ndarray = field(default_factory=lambda: np.zeros(ACTION_DIM))
    snagged: bool = False
    step_index: int = 0
    last_dx: float = 0.0
    last_dy: float = 0.0

    def copy(self):
        return replace(
            self,
            filt_action=self.filt_action.copy(),
            prev_action=self.prev_action.copy(),
            prev_prev_action=self.prev_prev_action.copy(),
        )

    def pose(self):
        return (self.x, self.y, self.yaw)


@dataclass(frozen=True)
class StepEvents:
    fall: bool = False
    out_of_workspace: bool = False
    near_boundary_outbound: bool = False
    snag_started: bool = False
    snag_ended: bool = False


@dataclass(frozen=True)
class StepResult:
    state: WalkerState
    observation: np.ndarray
    pose_before: tuple
    pose_after: tuple
    safety: float
    events: StepEvents


def wrap_angle(a):
    """Wrap to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def butterworth(prev_filtered, raw):
    """First-order low-pass step: y = c*prev + (1-c)*raw, unit DC gain."""
    return FILTER_COEFF * prev_filtered + (1.0 - FILTER_COEFF) * raw


def safety_margin(state):
    """Tilt headroom before a fall; negative means fallen."""
    return min(PITCH_LIMIT - abs(state.pitch), ROLL_LIMIT - abs(state.roll))


def boundary_check(state, workspace):
    """Classify the pose as inside / near_and_outbound / outside.

    Velocity is the last step's displacement over dt; "near" means the
    nearest wall is closer than BOUNDARY_MARGIN and the walker is moving
    along that wall's outward normal faster than the jitter floor.
    """
    if not workspace.contains(state.x, state.y):
        return "outside"
    vx = state.last_dx / DT
    vy = state.last_dy / DT
    # (distance, outward velocity component) per wall: east, west, north, south
    walls = [
        (workspace.half_width - state.x, vx),
        (workspace.half_width + state.x, -vx),
        (workspace.half_height - state.y, vy),
        (workspace.half_height + state.y, -vy),
    ]
    dist, outward = min(walls, key=lambda w: w[0])
    if dist < BOUNDARY_MARGIN and outward > OUTBOUND_SPEED_FLOOR:
        return "near_and_outbound"
    return "inside"


def observe(history):
    """Stack the last six frames into the 48-number observation.

    A frame is (roll, pitch, phase, action); histories younger than six
    steps are padded on the old side with their first frame. Oldest first.
    """
    if not history:
        raise ValueError("observe needs at least one frame")
    frames = list(history)[-HISTORY_LEN:]
    frames = [frames[0]] * (HISTORY_LEN - len(frames)) + frames
    out = np.empty(OBS_DIM)
    for i, (roll, pitch, phase, action) in enumerate(frames):
        base = i * FRAME_WIDTH
        out[base] = roll
        out[base + 1] = pitch
        out[base + 2] = math.sin(phase)
        out[base + 3] = math.cos(phase)
        out[base + 4 : base + 8] = action
    return out


class PlanarWalker:
    """One simulator instance: state, terrain, workspace, and rng stream.

    Deterministic given the seed and the action sequence. Owned by a
    single training session; instances are cheap and share nothing.
    """

    def __init__(self, terrain="flat", workspace="5.0x2.0", rng=None, seed=0):
        self.terrain = TERRAINS[terrain] if isinstance(terrain, str) else terrain
        self.workspace = (
            Workspace.preset(workspace) if isinstance(workspace, str) else workspace
        )
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.state = WalkerState()
        self.history = []
        self._push_frame()

    def _push_frame(self):
        s = self.state
        self.history.append((s.roll, s.pitch, s.phase, s.prev_action.copy()))
        del self.history[:-HISTORY_LEN]

    def observation(self):
        return observe(self.history)

    def set_state(self, state):
        """Install a state directly and restart the observation history."""
        self.state = state
        self.history = []
        self._push_frame()
        return self.state

    def reset(self, mode="episode_start"):
        """Start a new episode; returns (state, time_cost_seconds).

        episode_start chains in place (position and yaw kept, zero cost);
        after_fall and after_escape teleport to the workspace center with
        a fresh uniform yaw and cost the full manual-reset time. All modes
        zero tilt, phase, and filters, then jitter tilt slightly.
        """
        if mode not in ("episode_start", "after_fall", "after_escape"):
            raise ValueError(f"unknown reset mode {mode!r}")
        s = self.state
        if mode == "episode_start":
            x, y, yaw = s.x, s.y, s.yaw
            cost = 0.0
        else:
            x, y = 0.0, 0.0
            yaw = self.rng.uniform(-math.pi, math.pi)
            cost = RESET_COST_S
        roll, pitch = self.rng.uniform(-RESET_TILT_JITTER, RESET_TILT_JITTER, size=2)
        self.state = WalkerState(x=x, y=y, yaw=yaw, roll=roll, pitch=pitch)
        self.history = []
        self._push_frame()
        return self.state, cost

    def step(self, action):
        """Advance one control step; state must not be fallen."""
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (ACTION_DIM,):
            raise ActionRangeError(f"action shape {action.shape} != ({ACTION_DIM},)")
        if np.any(np.abs(action) > 1.0) or not np.all(np.isfinite(action)):
            raise ActionRangeError(f"action components must lie in [-1, 1]: {action}")

        s = self.state
        t = self.terrain
        pose_before = s.pose()
        jerk = float(np.linalg.norm(action - s.prev_action))
        filt = butterworth(s.filt_action, action)

        phase = wrap_positive(s.phase + 2.0 * math.pi * GAIT_BASE_HZ * (0.5 + 0.5 * filt[3]) * DT)

        snag_started = snag_ended = False
        snagged = s.snagged
        if t.snag_prob > 0.0:
            if snagged and jerk > t.snag_release_jerk:
                snagged = False
                snag_ended = True
            elif not snagged and self.rng.uniform() < t.snag_prob:
                snagged = True
                snag_started = True

        slip = t.slip_gain * (t.snag_slip_factor if snagged else 1.0)
        u = THRUST_GAIN * filt[0] * math.sin(phase)
        dx = math.cos(s.yaw) * u * slip * DT
        dy = math.sin(s.yaw) * u * slip * DT
        x = s.x + dx
        y = s.y + dy
        turn_rate = TURN_GAIN * filt[2] * abs(math.sin(phase))
        yaw = wrap_angle(s.yaw + turn_rate * DT)

        if t.tilt_noise > 0.0:
            eta = self.rng.standard_normal(2)
        else:
            eta = (0.0, 0.0)
        noise_scale = t.tilt_noise * math.sqrt(DT)
        pitch = (
            TILT_DECAY * s.pitch
            + (SPEED_TILT * abs(u) + JERK_TILT * jerk - BALANCE_RELIEF * filt[1] * s.pitch) * DT
            + noise_scale * eta[0]
        )
        roll = (
            TILT_DECAY * s.roll
            + (TURN_TILT * abs(turn_rate) + JERK_TILT * jerk) * DT
            + noise_scale * eta[1]
        )

        new = WalkerState(
            x=x,
            y=y,
            yaw=yaw,
            roll=roll,
            pitch=pitch,
            prev_roll=s.roll,
            prev_pitch=s.pitch,
            phase=phase,
            filt_action=filt,
            prev_action=action.copy(),
            prev_prev_action=s.prev_action.copy(),
            snagged=snagged,
            step_index=s.step_index + 1,
            last_dx=dx,
            last_dy=dy,
        )
        margin = safety_margin(new)
        fall = margin < 0.0
        near = outside = False
        if not fall:
            region = boundary_check(new, self.workspace)
            near = region == "near_and_outbound"
            outside = region == "outside"
        events = StepEvents(
            fall=fall,
            out_of_workspace=outside,
            near_boundary_outbound=near,
            snag_started=snag_started,
            snag_ended=snag_ended,
        )
        self.state = new
        self._push_frame()
        return StepResult(
            state=new,
            observation=self.observation(),
            pose_before=pose_before,
            pose_after=new.pose(),
            safety=margin,
            events=events,
        )


def wrap_positive(a):
    """Wrap to [0, 2*pi) for the gait phase."""
    a = math.fmod(a, 2.0 * math.pi)
    return a + 2.0 * math.pi if a < 0.0 else a


def trajectory_record(t, result, reward, task=None):
    """One self-describing trajectory row (JSON-serializable dict)."""
    s = result.state
    e = result.events
    rec = {
        "t": t,
        "x": round(s.x, 9),
        "y": round(s.y, 9),
        "yaw": round(s.yaw, 9),
        "roll": round(s.roll, 9),
        "pitch": round(s.pitch, 9),
        "action": [round(float(v), 9) for v in s.prev_action],
        "reward": round(float(reward), 9),
        "f_s": round(result.safety, 9),
        "fall": e.fall,
        "out_of_workspace": e.out_of_workspace,
        "near_boundary_outbound": e.near_boundary_outbound,
        "snagged": s.snagged,
    }
    if task is not None:
        rec["task"] = task
    return rec
