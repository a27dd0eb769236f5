"""Teleop policy server: one simulation loop, any number of viewers.

Wire protocol (JSON text frames over a websocket):
  client -> server: {"type": "set_task", "name": <task>} | {"type": "pause"}
                    | {"type": "resume"} | {"type": "reset"}
  server -> client: {"type": "state", t, x, y, yaw, roll, pitch, f_s,
                     reward, task, fall_count, workspace: {w, h}}
                    | {"type": "error", "message": <text>}

The loop steps the walker at 50 Hz wall pace (scaled by --speed), runs the
policy selected by the latest command, and broadcasts one state frame per
step to every client. With no clients connected the simulation idles.
Malformed client messages are answered with an error frame and ignored.
"""

import asyncio
import json

import numpy as np

from ..env import DT, PlanarWalker
from ..tasks import EpisodeFrame, task_reward, task_set
from .checkpoint import load_checkpoint, restore_learners
from .records import write_jsonl

try:  # websockets >= 13
    from websockets.asyncio.server import serve as ws_serve
except ImportError:  # pragma: no cover
    from websockets.server import serve as ws_serve


class TeleopServer:
    """Single-loop simulator broadcasting state frames to all clients."""

    def __init__(self, cfg, learners, speed=1.0, log_path=None, seed=2026):
        self.cfg = cfg
        self.policies = learners
        self.vectors = {t.name: t for t in task_set(cfg.task_set)}
        self.speed = speed
        self.log_path = log_path
        self.walker = PlanarWalker(
            cfg.terrain, cfg.workspace, rng=np.random.default_rng(seed)
        )
        self.task = next(iter(learners))
        self.frame_anchor = EpisodeFrame.from_pose(self.walker.state.pose())
        self.clients = set()
        self.user_paused = False
        self.fall_count = 0
        self.t = 0
        self.trajectory = []
        self._stop = asyncio.Event()

    # -- client side --------------------------------------------------

    async def handle(self, ws):
        self.clients.add(ws)
        try:
            async for raw in ws:
                reply = self._on_message(raw)
                if reply is not None:
                    await ws.send(json.dumps(reply))
        finally:
            self.clients.discard(ws)

    def _on_message(self, raw):
        try:
            msg = json.loads(raw)
            mtype = msg["type"]
        except (ValueError, TypeError, KeyError):
            return {"type": "error", "message": "malformed message"}
        if mtype == "set_task":
            name = msg.get("name")
            if name not in self.policies:
                return {"type": "error", "message": f"unknown task {name!r}"}
            if name != self.task:
                self.task = name
                self.frame_anchor = EpisodeFrame.from_pose(self.walker.state.pose())
            return None
        if mtype == "pause":
            self.user_paused = True
            return None
        if mtype == "resume":
            self.user_paused = False
            return None
        if mtype == "reset":
            self.walker.reset("after_escape")
            self.frame_anchor = EpisodeFrame.from_pose(self.walker.state.pose())
            return None
        return {"type": "error", "message": f"unknown message type {mtype!r}"}

    # -- simulation side ----------------------------------------------

    def step_once(self):
        """Advance one control step and build the broadcast frame."""
        walker = self.walker
        prev_prev = walker.state.prev_prev_action
        prev = walker.state.prev_action
        action = self.policies[self.task].act(walker.observation(), stochastic=False)
        res = walker.step(action)
        reward = self.cfg.reward_scale * task_reward(
            self.frame_anchor,
            res.pose_before,
            res.pose_after,
            (prev_prev, prev, action),
            self.vectors[self.task],
        )
        if res.events.fall:
            self.fall_count += 1
            walker.reset("after_fall")
            self.frame_anchor = EpisodeFrame.from_pose(walker.state.pose())
        s = res.state
        self.t += 1
        frame = {
            "type": "state",
            "t": self.t,
            "x": round(s.x, 6),
            "y": round(s.y, 6),
            "yaw": round(s.yaw, 6),
            "roll": round(s.roll, 6),
            "pitch": round(s.pitch, 6),
            "f_s": round(res.safety, 6),
            "reward": round(reward, 6),
            "task": self.task,
            "fall_count": self.fall_count,
            "workspace": {
                "w": 2.0 * walker.workspace.half_width,
                "h": 2.0 * walker.workspace.half_height,
            },
        }
        if self.log_path is not None:
            self.trajectory.append(frame)
        return frame

    async def loop(self):
        try:
            while not self._stop.is_set():
                if not self.clients or self.user_paused:
                    await asyncio.sleep(0.02)
                    continue
                data = json.dumps(self.step_once())
                for ws in list(self.clients):
                    try:
                        await ws.send(data)
                    except Exception:
                        self.clients.discard(ws)
                await asyncio.sleep(DT / self.speed)
        finally:
            if self.log_path is not None:
                write_jsonl(self.log_path, self.trajectory)

    def stop(self):
        self._stop.set()

    async def run(self, host, port, ready=None):
        async with ws_serve(self.handle, host, port) as server:
            if ready is not None:
                ready(server)
            await self.loop()


def serve_teleop(checkpoint_path, port=8765, host="127.0.0.1", speed=1.0, log_path=None):
    """Blocking entry point used by the CLI."""
    doc = load_checkpoint(checkpoint_path)
    cfg, learners = restore_learners(doc)
    server = TeleopServer(cfg, learners, speed=speed, log_path=log_path)

    def ready(_server):
        print(f"teleop server on ws://{host}:{port} tasks={list(learners)}", flush=True)

    try:
        asyncio.run(server.run(host, port, ready=ready))
    except KeyboardInterrupt:
        print("teleop server stopped")
    return 0
