// Single state store fed by server messages and user actions.
// Rendered cells come exclusively from the latest snapshot plus deltas;
// a fresh snapshot (e.g. after panning) replaces the whole map.

import {
  Ack,
  CellRecord,
  Coord,
  ErrMsg,
  LocusEmission,
  ScoreEvent,
  ScoreSummary,
  ServerMessage,
  WorldMeta,
  applyRecords,
  cellKey,
  parseRecords,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed" | "version-error";

export interface PendingCommand {
  kind: string;
  sentAt: number;
  lockId?: number;
}

export interface ViewState {
  status: ConnectionStatus;
  banner: string | null;
  meta: WorldMeta | null;
  locus: { id: number; center: Coord; radius: number; stride: number };
  cells: Map<string, CellRecord>;
  lastTick: number;
  scores: Map<number, number>;
  pending: Map<number, PendingCommand>;
  failed: string | null;
  eventLog: ScoreEvent[];
  dirty: boolean;
}

export const ACK_TIMEOUT_MS = 2000;
const EVENT_LOG_LIMIT = 8;

export function initialState(): ViewState {
  return {
    status: "connecting",
    banner: "connecting...",
    meta: null,
    locus: { id: 1, center: { q: 0, r: 0 }, radius: 6, stride: 1 },
    cells: new Map(),
    lastTick: 0,
    scores: new Map(),
    pending: new Map(),
    failed: null,
    eventLog: [],
    dirty: true,
  };
}

export function onServerMessage(state: ViewState, msg: ServerMessage): void {
  state.dirty = true;
  switch (msg.kind) {
    case "world_meta":
      onWorldMeta(state, msg);
      return;
    case "snapshot":
    case "delta":
      onEmission(state, msg);
      return;
    case "event":
      onEvent(state, msg);
      return;
    case "ack":
      onAck(state, msg);
      return;
    case "score_summary":
      onSummary(state, msg);
      return;
    case "err":
      onErr(state, msg);
      return;
  }
}

function onWorldMeta(state: ViewState, msg: WorldMeta): void {
  state.meta = msg;
  const [minQ, minR, maxQ, maxR] = msg.bounds;
  state.locus.center = { q: Math.round((minQ + maxQ) / 2), r: Math.round((minR + maxR) / 2) };
  state.banner = null;
}

function onEmission(state: ViewState, msg: LocusEmission): void {
  if (!state.meta || msg.locusId !== state.locus.id) {
    return;
  }
  const records = parseRecords(msg.records, state.meta.slotCapacity);
  if (msg.kind === "snapshot") {
    state.cells = new Map();
  }
  applyRecords(state.cells, records);
  state.lastTick = msg.tick;
}

function onEvent(state: ViewState, msg: ScoreEvent): void {
  state.scores.set(msg.areaId, msg.total);
  state.eventLog.unshift(msg);
  state.eventLog.length = Math.min(state.eventLog.length, EVENT_LOG_LIMIT);
}

function onSummary(state: ViewState, msg: ScoreSummary): void {
  for (const [area, total] of msg.totals) {
    state.scores.set(area, total);
  }
}

function onAck(state: ViewState, msg: Ack): void {
  state.pending.delete(msg.commandId);
}

function onErr(state: ViewState, msg: ErrMsg): void {
  if (msg.commandId && state.pending.has(msg.commandId)) {
    state.pending.delete(msg.commandId);
  }
  state.failed = `server error ${msg.code}: ${msg.message}`;
}

/** Drop pending commands whose ACK never arrived; returns the expired ones. */
export function expirePending(state: ViewState, now: number): PendingCommand[] {
  const expired: PendingCommand[] = [];
  for (const [cid, cmd] of state.pending) {
    if (now - cmd.sentAt > ACK_TIMEOUT_MS) {
      state.pending.delete(cid);
      expired.push(cmd);
      state.dirty = true;
    }
  }
  if (expired.length > 0) {
    state.failed = `${expired.length} command(s) timed out; retry`;
  }
  return expired;
}

export function lockPhaseAt(state: ViewState, chamber: Coord): number | null {
  const rec = state.cells.get(cellKey(chamber.q, chamber.r));
  return rec && rec.lockPhase !== 0xff ? rec.lockPhase : null;
}

/** Locks whose chamber currently lies inside the rendered locus. */
export function visibleLocks(state: ViewState): { lockId: number; chamber: Coord; phase: number }[] {
  if (!state.meta) {
    return [];
  }
  const out = [];
  for (const lk of state.meta.locks) {
    const phase = lockPhaseAt(state, lk.chamber);
    if (phase !== null) {
      out.push({ lockId: lk.lockId, chamber: lk.chamber, phase });
    }
  }
  return out;
}
