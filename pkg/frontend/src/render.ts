// Canvas renderer: pointy-top hexes for exactly the cells of the latest
// reconstruction; everything outside the locus stays dark.

import { CellRecord, Coord, LockPhase } from "./protocol.js";
import { ViewState } from "./state.js";

const SQRT3 = Math.sqrt(3);

const KIND_FILL: Record<number, string> = {
  0: "#2b4a66", // channel
  1: "#3a5f80", // junction
  2: "#6b4a2b", // lock chamber
  3: "#2e6b3a", // supply dock
  4: "#8a6a1f", // delivery dock
};

const AREA_COLORS = ["#ff5d5d", "#4da3ff", "#ffd34d", "#5dff9e", "#c77dff", "#ff9e5d"];

const PHASE_GLYPH: Record<number, string> = {
  [LockPhase.LowOpen]: "▽",
  [LockPhase.Raising]: "↑",
  [LockPhase.HighOpen]: "△",
  [LockPhase.Lowering]: "↓",
};

export function areaColor(area: number): string {
  return AREA_COLORS[area % AREA_COLORS.length];
}

export function hexToPixel(c: Coord, size: number): { x: number; y: number } {
  return {
    x: size * (SQRT3 * c.q + (SQRT3 / 2) * c.r),
    y: size * 1.5 * c.r,
  };
}

function hexPath(ctx: CanvasRenderingContext2D, x: number, y: number, size: number): void {
  ctx.beginPath();
  for (let i = 0; i < 6; i++) {
    const angle = (Math.PI / 180) * (60 * i - 30);
    const px = x + size * Math.cos(angle);
    const py = y + size * Math.sin(angle);
    if (i === 0) {
      ctx.moveTo(px, py);
    } else {
      ctx.lineTo(px, py);
    }
  }
  ctx.closePath();
}

export function render(ctx: CanvasRenderingContext2D, state: ViewState, animTick: number): void {
  const canvas = ctx.canvas;
  ctx.fillStyle = "#10141a";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  if (state.cells.size === 0) {
    return;
  }

  const size = Math.max(
    8,
    Math.min(28, Math.floor(canvas.width / (SQRT3 * (2 * state.locus.radius + 3)))),
  );
  const center = hexToPixel(state.locus.center, size);
  const offsetX = canvas.width / 2 - center.x;
  const offsetY = canvas.height / 2 - center.y;

  for (const rec of state.cells.values()) {
    drawCell(ctx, rec, size, offsetX, offsetY, animTick);
  }
}

function drawCell(
  ctx: CanvasRenderingContext2D,
  rec: CellRecord,
  size: number,
  offsetX: number,
  offsetY: number,
  animTick: number,
): void {
  const { x, y } = hexToPixel({ q: rec.q, r: rec.r }, size);
  const cx = x + offsetX;
  const cy = y + offsetY;
  hexPath(ctx, cx, cy, size * 0.96);
  ctx.fillStyle = KIND_FILL[rec.cellKind] ?? "#444";
  ctx.fill();
  ctx.strokeStyle = "#0c0f14";
  ctx.lineWidth = 1;
  ctx.stroke();

  if (rec.lockPhase !== 0xff) {
    const transit = rec.lockPhase === LockPhase.Raising || rec.lockPhase === LockPhase.Lowering;
    const bob = transit ? Math.sin(animTick / 4) * size * 0.12 : 0;
    ctx.fillStyle = transit ? "#ffca3a" : "#d9e6f2";
    ctx.font = `${Math.floor(size)}px monospace`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(PHASE_GLYPH[rec.lockPhase] ?? "?", cx, cy - size * 0.45 + bob);
  }

  let slotIndex = 0;
  for (const slot of rec.slots) {
    if (slot !== null) {
      const bx = cx + (slotIndex - (rec.slots.length - 1) / 2) * size * 0.55;
      ctx.beginPath();
      ctx.arc(bx, cy + size * 0.2, size * 0.26, 0, Math.PI * 2);
      ctx.fillStyle = areaColor(slot.area);
      ctx.fill();
      if (slot.cargo > 0) {
        ctx.beginPath();
        ctx.arc(bx, cy + size * 0.2, size * 0.1, 0, Math.PI * 2);
        ctx.fillStyle = "#1b1b1b";
        ctx.fill();
      }
    }
    slotIndex++;
  }
}
