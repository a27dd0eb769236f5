import { describe, expect, it } from "vitest";

import { computeView, DANGER_MARGIN, PITCH_LIMIT, ROLL_LIMIT } from "../src/view.js";
import { stateFrame } from "./protocol.test.js";

describe("computeView", () => {
  it("puts a centered robot at the canvas center pointing along +x", () => {
    const vm = computeView(stateFrame({ x: 0, y: 0, yaw: 0 }), 760, 400);
    expect(vm.robot.cx).toBeCloseTo(380);
    expect(vm.robot.cy).toBeCloseTo(200);
    expect(vm.robot.angle).toBeCloseTo(0);
    expect(vm.outside).toBe(false);
  });

  it("draws the workspace rectangle to scale and centered", () => {
    const vm = computeView(stateFrame(), 760, 400, 20);
    // 5x2 m at the fitting scale: width is the binding constraint
    const scale = Math.min((760 - 40) / 5, (400 - 40) / 2);
    expect(vm.rect.w).toBeCloseTo(5 * scale);
    expect(vm.rect.h).toBeCloseTo(2 * scale);
    expect(vm.rect.x).toBeCloseTo((760 - 5 * scale) / 2);
    expect(vm.rect.y).toBeCloseTo((400 - 2 * scale) / 2);
  });

  it("flips the y axis and negates yaw for canvas coordinates", () => {
    const vm = computeView(stateFrame({ x: 1, y: 0.5, yaw: Math.PI / 2 }), 760, 400, 20);
    expect(vm.robot.cx).toBeGreaterThan(380);
    expect(vm.robot.cy).toBeLessThan(200); // +y in the world is up on screen
    expect(vm.robot.angle).toBeCloseTo(-Math.PI / 2);
  });

  it("marks danger exactly below the margin threshold", () => {
    expect(computeView(stateFrame({ f_s: DANGER_MARGIN + 1e-9 }), 400, 300).danger).toBe(false);
    expect(computeView(stateFrame({ f_s: DANGER_MARGIN - 1e-9 }), 400, 300).danger).toBe(true);
    expect(computeView(stateFrame({ f_s: -0.02 }), 400, 300).danger).toBe(true);
  });

  it("normalizes tilt gauges against the fall limits", () => {
    const vm = computeView(
      stateFrame({ pitch: PITCH_LIMIT / 2, roll: -ROLL_LIMIT / 4 }),
      400,
      300,
    );
    expect(vm.pitchFrac).toBeCloseTo(0.5);
    expect(vm.rollFrac).toBeCloseTo(0.25);
    const capped = computeView(stateFrame({ pitch: PITCH_LIMIT * 3 }), 400, 300);
    expect(capped.pitchFrac).toBe(1);
  });

  it("flags the robot outside the rectangle", () => {
    expect(computeView(stateFrame({ x: 2.6 }), 400, 300).outside).toBe(true);
    expect(computeView(stateFrame({ x: 2.4 }), 400, 300).outside).toBe(false);
  });

  it("derives everything from the frame alone (no hidden state)", () => {
    const frame = stateFrame({ x: 0.7, yaw: 1.0 });
    const a = computeView(frame, 500, 300);
    const b = computeView(frame, 500, 300);
    expect(a).toEqual(b);
  });
});
