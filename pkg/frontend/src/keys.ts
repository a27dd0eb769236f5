// Keyboard bindings: WASD pick the walking direction, space toggles
// pause, R recenters.

import { Command } from "./protocol.js";

const TASK_KEYS: Record<string, string> = {
  w: "forward",
  s: "backward",
  a: "turn-left",
  d: "turn-right",
};

export function keyToCommand(key: string, paused: boolean): Command | null {
  const k = key.toLowerCase();
  if (k in TASK_KEYS) return { type: "set_task", name: TASK_KEYS[k] };
  if (k === " ") return { type: paused ? "resume" : "pause" };
  if (k === "r") return { type: "reset" };
  return null;
}
