"""Probe the walker dynamics under scripted policies to tune tilt constants.

Targets:
  random policy      -> falls every ~100-300 steps, small positive margins
  scripted gait      -> episode return >= 25 at the default reward scale,
                        falls rare
  balanced gait      -> comfortable margin, no falls
  standing           -> never falls
  terrain ordering   -> displacement flat > doormat > mattress,
                        tilt variance mattress > flat
"""

import math
import sys

import numpy as np

sys.path.insert(0, "src")

from walklab import env as E
from walklab.tasks import EpisodeFrame, TASK_PRESETS, task_reward


def scripted_action(state, kind):
    a = np.zeros(4)
    if kind in ("gait", "balanced"):
        a[0] = math.copysign(1.0, math.sin(state.phase)) if math.sin(state.phase) != 0 else 1.0
    if kind == "balanced":
        a[1] = 1.0
    return a


def probe(kind, terrain="flat", steps=6000, seed=0, horizon=500, scale=15.0):
    rng = np.random.default_rng(seed)
    walker = E.PlanarWalker(terrain, "5.0x2.0", rng=np.random.default_rng(seed + 1))
    falls = 0
    margins = []
    pitches = []
    returns = []
    ep_ret = 0.0
    ep_steps = 0
    frame = EpisodeFrame.from_pose(walker.state.pose())
    fwd = TASK_PRESETS["two-task"][0]
    disp = 0.0
    for t in range(steps):
        if kind == "random":
            a = rng.uniform(-1, 1, 4)
        elif kind == "standing":
            a = np.zeros(4)
        else:
            a = scripted_action(walker.state, kind)
        prev_prev = walker.state.prev_prev_action
        prev = walker.state.prev_action
        res = walker.step(a)
        r = scale * task_reward(frame, res.pose_before, res.pose_after, (prev_prev, prev, a), fwd)
        ep_ret += r
        ep_steps += 1
        margins.append(res.safety)
        pitches.append(res.state.pitch)
        disp += math.hypot(res.state.last_dx, res.state.last_dy)
        ended = False
        if res.events.fall:
            falls += 1
            walker.reset("after_fall")
            ended = True
        elif ep_steps >= horizon:
            walker.reset("after_fall")  # teleport so the gait keeps road
            ended = True
        if ended:
            returns.append(ep_ret)
            ep_ret, ep_steps = 0.0, 0
            frame = EpisodeFrame.from_pose(walker.state.pose())
    margins = np.array(margins)
    pitches = np.array(pitches)
    print(
        f"{kind:9s} {terrain:8s} falls/1k={1000*falls/steps:6.2f} "
        f"margin mean={margins.mean():+.3f} p10={np.percentile(margins,10):+.3f} "
        f"|pitch| mean={np.abs(pitches).mean():.3f} "
        f"tiltvar={pitches.var():.5f} "
        f"disp/step={disp/steps*1000:.2f}mm "
        f"ep_ret={'%.1f' % np.mean(returns) if returns else 'n/a'}"
    )
    return dict(falls_per_1k=1000 * falls / steps, margin=margins.mean(),
                returns=returns, tiltvar=float(pitches.var()), disp=disp / steps)


if __name__ == "__main__":
    for kind in ("random", "standing", "gait", "balanced"):
        probe(kind)
    for terrain in ("flat", "mattress", "doormat"):
        probe("gait", terrain=terrain, steps=4000)
