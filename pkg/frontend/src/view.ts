// View-model math and canvas drawing for the top-down workspace view.
// The pure computeView function carries all geometry so it can be tested
// without a DOM; render() just puts pixels on it.

import { StateFrame } from "./protocol.js";
import { Telemetry } from "./telemetry.js";

export const PITCH_LIMIT = Math.PI / 12;
export const ROLL_LIMIT = Math.PI / 6;
export const DANGER_MARGIN = 0.05;

export interface ViewModel {
  rect: { x: number; y: number; w: number; h: number };
  robot: { cx: number; cy: number; angle: number };
  outside: boolean;
  pitchFrac: number; // |pitch| / limit, clipped to [0, 1]
  rollFrac: number;
  danger: boolean; // tilt margin under the red-line threshold
}

/** Map one state frame onto a canvas of the given size. */
export function computeView(
  frame: StateFrame,
  canvasW: number,
  canvasH: number,
  margin = 20,
): ViewModel {
  const scale = Math.min(
    (canvasW - 2 * margin) / frame.workspace.w,
    (canvasH - 2 * margin) / frame.workspace.h,
  );
  const w = frame.workspace.w * scale;
  const h = frame.workspace.h * scale;
  const rect = { x: (canvasW - w) / 2, y: (canvasH - h) / 2, w, h };
  const cx = canvasW / 2 + frame.x * scale;
  const cy = canvasH / 2 - frame.y * scale; // canvas y grows downward
  const halfW = frame.workspace.w / 2;
  const halfH = frame.workspace.h / 2;
  return {
    rect,
    robot: { cx, cy, angle: -frame.yaw },
    outside: Math.abs(frame.x) > halfW || Math.abs(frame.y) > halfH,
    pitchFrac: Math.min(Math.abs(frame.pitch) / PITCH_LIMIT, 1),
    rollFrac: Math.min(Math.abs(frame.roll) / ROLL_LIMIT, 1),
    danger: frame.f_s < DANGER_MARGIN,
  };
}

function sparkline(
  ctx: CanvasRenderingContext2D,
  values: readonly number[],
  x: number,
  y: number,
  w: number,
  h: number,
  color: string,
): void {
  ctx.strokeStyle = "#445";
  ctx.strokeRect(x, y, w, h);
  if (values.length < 2) return;
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (hi - lo < 1e-9) {
    lo -= 1;
    hi += 1;
  }
  ctx.strokeStyle = color;
  ctx.beginPath();
  values.forEach((v, i) => {
    const px = x + (i / (values.length - 1)) * w;
    const py = y + h - ((v - lo) / (hi - lo)) * h;
    if (i === 0) ctx.moveTo(px, py);
    else ctx.lineTo(px, py);
  });
  ctx.stroke();
}

function gauge(
  ctx: CanvasRenderingContext2D,
  label: string,
  frac: number,
  x: number,
  y: number,
  w: number,
  danger: boolean,
): void {
  ctx.fillStyle = "#ccd";
  ctx.fillText(label, x, y - 4);
  ctx.strokeStyle = "#445";
  ctx.strokeRect(x, y, w, 10);
  ctx.fillStyle = danger ? "#e33" : frac > 0.7 ? "#ea3" : "#3b6";
  ctx.fillRect(x, y, w * frac, 10);
  ctx.strokeStyle = "#e33";
  ctx.beginPath();
  ctx.moveTo(x + w, y - 2);
  ctx.lineTo(x + w, y + 12);
  ctx.stroke();
}

export function render(
  ctx: CanvasRenderingContext2D,
  frame: StateFrame,
  telemetry: Telemetry,
): void {
  const { width, height } = ctx.canvas;
  const vm = computeView(frame, width, height);
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, width, height);

  ctx.strokeStyle = vm.outside ? "#e33" : "#8af";
  ctx.lineWidth = 2;
  ctx.strokeRect(vm.rect.x, vm.rect.y, vm.rect.w, vm.rect.h);

  // oriented arrow for the walker
  ctx.save();
  ctx.translate(vm.robot.cx, vm.robot.cy);
  ctx.rotate(vm.robot.angle);
  ctx.fillStyle = vm.danger ? "#e33" : "#fd5";
  ctx.beginPath();
  ctx.moveTo(14, 0);
  ctx.lineTo(-8, 7);
  ctx.lineTo(-4, 0);
  ctx.lineTo(-8, -7);
  ctx.closePath();
  ctx.fill();
  ctx.restore();

  ctx.font = "12px monospace";
  gauge(ctx, `pitch ${frame.pitch.toFixed(3)} (limit pi/12)`, vm.pitchFrac, 12, 24, 150, vm.danger);
  gauge(ctx, `roll  ${frame.roll.toFixed(3)} (limit pi/6)`, vm.rollFrac, 12, 52, 150, vm.danger);

  ctx.fillStyle = vm.danger ? "#e33" : "#ccd";
  ctx.fillText(`f_s ${frame.f_s.toFixed(3)}${vm.danger ? "  DANGER" : ""}`, 12, 78);
  ctx.fillStyle = "#ccd";
  ctx.fillText(`task ${frame.task}  falls ${frame.fall_count}  t ${frame.t}`, 12, 94);

  sparkline(ctx, telemetry.reward.values(), width - 170, 16, 150, 44, "#5c8");
  ctx.fillStyle = "#ccd";
  ctx.fillText(`reward ${frame.reward.toFixed(3)}`, width - 170, 74);
}
