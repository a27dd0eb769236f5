// DOM wiring: connect to the server named by ?server=, render every
// received state frame, and forward button/keyboard commands.

import { TeleopClient } from "./client.js";
import { keyToCommand } from "./keys.js";
import { Command, StateFrame } from "./protocol.js";
import { makeTelemetry } from "./telemetry.js";
import { render } from "./view.js";

const params = new URLSearchParams(window.location.search);
const url = params.get("server") ?? "ws://127.0.0.1:8765";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const noticeEl = document.getElementById("notice")!;
const dropsEl = document.getElementById("drops")!;

const telemetry = makeTelemetry();
let paused = false;

function onFrame(frame: StateFrame): void {
  telemetry.reward.push(frame.reward);
  telemetry.pitch.push(frame.pitch);
  telemetry.roll.push(frame.roll);
  telemetry.margin.push(frame.f_s);
  render(ctx, frame, telemetry);
  dropsEl.textContent = String(client.droppedFrames);
}

const client = new TeleopClient(url, {
  onFrame: (frame) => {
    if (frame.type === "state") onFrame(frame);
    else noticeEl.textContent = `server error: ${frame.message}`;
  },
  onStatus: (status) => {
    statusEl.textContent = status;
    statusEl.className = status;
  },
  onNotice: (text) => {
    noticeEl.textContent = text;
  },
});

function issue(cmd: Command): void {
  if (client.send(cmd)) {
    if (cmd.type === "pause") paused = true;
    if (cmd.type === "resume") paused = false;
    noticeEl.textContent = cmd.type === "set_task" ? `task: ${cmd.name}` : cmd.type;
  }
}

for (const button of document.querySelectorAll<HTMLButtonElement>("button[data-task]")) {
  button.addEventListener("click", () => issue({ type: "set_task", name: button.dataset.task! }));
}
document.getElementById("pause")!.addEventListener("click", () =>
  issue({ type: paused ? "resume" : "pause" }),
);
document.getElementById("reset")!.addEventListener("click", () => issue({ type: "reset" }));

window.addEventListener("keydown", (ev) => {
  const cmd = keyToCommand(ev.key, paused);
  if (cmd !== null) {
    ev.preventDefault();
    issue(cmd);
  }
});

statusEl.textContent = "connecting";
client.connect();
