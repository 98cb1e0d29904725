// Operator UI wiring: one WebSocket session, one state store, one canvas.

import { Client } from "./client.js";
import { expirePending, initialState, visibleLocks } from "./state.js";
import { LockPhase } from "./protocol.js";
import { areaColor, render } from "./render.js";

const state = initialState();
let client: Client | null = null;
let animTick = 0;

const canvas = document.getElementById("map") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner")!;
const scoreboard = document.getElementById("scores")!;
const lockPanel = document.getElementById("locks")!;
const tickLabel = document.getElementById("tick")!;
const urlInput = document.getElementById("url") as HTMLInputElement;

document.getElementById("connect")!.addEventListener("click", () => {
  client?.stop();
  state.cells.clear();
  state.meta = null;
  client = new Client(urlInput.value, state);
  client.connect();
});

const PAN: [string, number, number][] = [
  ["E", 1, 0],
  ["NE", 1, -1],
  ["NW", 0, -1],
  ["W", -1, 0],
  ["SW", -1, 1],
  ["SE", 0, 1],
];
const panPanel = document.getElementById("pan")!;
for (const [label, dq, dr] of PAN) {
  const button = document.createElement("button");
  button.textContent = label;
  button.addEventListener("click", () => client?.panLocus(dq, dr));
  panPanel.appendChild(button);
}

const PHASE_NAMES: Record<number, string> = {
  [LockPhase.LowOpen]: "low open",
  [LockPhase.Raising]: "raising",
  [LockPhase.HighOpen]: "high open",
  [LockPhase.Lowering]: "lowering",
};

function refreshPanels(): void {
  banner.textContent = state.failed ?? state.banner ?? "";
  banner.className = state.banner || state.failed ? "banner visible" : "banner";
  tickLabel.textContent = state.lastTick > 0 ? `tick ${state.lastTick}` : "";

  scoreboard.replaceChildren();
  for (const [area, total] of [...state.scores.entries()].sort((a, b) => a[0] - b[0])) {
    const row = document.createElement("div");
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = areaColor(area);
    row.append(swatch, ` area ${area}: ${total}`);
    scoreboard.appendChild(row);
  }

  lockPanel.replaceChildren();
  const pendingLocks = new Set(
    [...state.pending.values()].filter((p) => p.kind === "operate_lock").map((p) => p.lockId),
  );
  for (const lk of visibleLocks(state)) {
    const button = document.createElement("button");
    const phase = PHASE_NAMES[lk.phase] ?? "?";
    button.textContent = `lock ${lk.lockId} (${phase})`;
    if (pendingLocks.has(lk.lockId)) {
      button.disabled = true;
      button.textContent += " …";
    }
    button.addEventListener("click", () => client?.operateLock(lk.lockId));
    lockPanel.appendChild(button);
  }
}

function frameLoop(): void {
  animTick++;
  expirePending(state, Date.now());
  if (state.dirty) {
    state.dirty = false;
    render(ctx, state, animTick);
    refreshPanels();
  } else if (animTick % 4 === 0) {
    render(ctx, state, animTick); // keep transit glyphs animating
  }
  requestAnimationFrame(frameLoop);
}

function fitCanvas(): void {
  canvas.width = canvas.clientWidth;
  canvas.height = canvas.clientHeight;
  state.dirty = true;
}

window.addEventListener("resize", fitCanvas);
fitCanvas();
requestAnimationFrame(frameLoop);
