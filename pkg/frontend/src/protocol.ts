// Wire protocol with the walklab teleop server: JSON text frames over a
// websocket. Mirrors the server-side frame layout exactly; anything that
// does not validate is dropped by the caller (never rendered).

export interface StateFrame {
  type: "state";
  t: number;
  x: number;
  y: number;
  yaw: number;
  roll: number;
  pitch: number;
  f_s: number;
  reward: number;
  task: string;
  fall_count: number;
  workspace: { w: number; h: number };
}

export interface ErrorFrame {
  type: "error";
  message: string;
}

export type ServerFrame = StateFrame | ErrorFrame;

export type Command =
  | { type: "set_task"; name: string }
  | { type: "pause" }
  | { type: "resume" }
  | { type: "reset" };

const STATE_NUMBER_FIELDS = [
  "t", "x", "y", "yaw", "roll", "pitch", "f_s", "reward", "fall_count",
] as const;

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Parse one incoming frame; null means malformed (caller counts drops). */
export function parseFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const obj = data as Record<string, unknown>;
  if (obj.type === "error") {
    return typeof obj.message === "string"
      ? { type: "error", message: obj.message }
      : null;
  }
  if (obj.type !== "state") return null;
  for (const field of STATE_NUMBER_FIELDS) {
    if (!isFiniteNumber(obj[field])) return null;
  }
  if (typeof obj.task !== "string") return null;
  const ws = obj.workspace as Record<string, unknown> | undefined;
  if (!ws || !isFiniteNumber(ws.w) || !isFiniteNumber(ws.h)) return null;
  return obj as unknown as StateFrame;
}

export function encodeCommand(cmd: Command): string {
  return JSON.stringify(cmd);
}
