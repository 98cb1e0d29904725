// Wire protocol codec, mirrored byte-for-byte from the server side.
// Frames: "NBCA" | u8 version | u8 type | u8 flags | u8 reserved |
// u32le length | payload. One frame per WebSocket binary message.

export const PROTOCOL_VERSION = 1;
export const HEADER_SIZE = 12;

export const enum MsgType {
  Hello = 0x01,
  WorldMeta = 0x02,
  LocusSnapshot = 0x03,
  LocusDelta = 0x04,
  Event = 0x05,
  Ack = 0x06,
  ScoreSummary = 0x07,
  CmdOperateLock = 0x10,
  CmdLocusCreate = 0x11,
  CmdLocusMove = 0x12,
  CmdLocusDestroy = 0x13,
  CmdSetSpeed = 0x14,
  CmdPauseResume = 0x15,
  Err = 0x7f,
}

export const enum LockPhase {
  LowOpen = 0,
  Raising = 1,
  HighOpen = 2,
  Lowering = 3,
}

export interface Coord {
  q: number;
  r: number;
}

export interface LockInfo {
  lockId: number;
  chamber: Coord;
  lowGate: Coord;
  highGate: Coord;
  raiseTicks: number;
  lowerTicks: number;
  capacity: number;
  autoCycle: boolean;
}

export interface DockInfo {
  coord: Coord;
  areaId: number;
  dockClass: number;
  role: number; // 0 supply, 1 delivery
  resource: number; // 0 coal, 1 grain
}

export interface WorldMeta {
  kind: "world_meta";
  name: string;
  slotCapacity: number;
  bounds: [number, number, number, number];
  locks: LockInfo[];
  docks: DockInfo[];
}

export interface BoatSlot {
  boatId: number;
  cargo: number;
  area: number;
}

export interface CellRecord {
  q: number;
  r: number;
  cellKind: number;
  lockPhase: number; // 0xff when not a chamber
  occupancy: number;
  slots: (BoatSlot | null)[];
}

export interface LocusEmission {
  kind: "snapshot" | "delta";
  locusId: number;
  tick: number;
  count: number;
  records: Uint8Array;
}

export interface ScoreEvent {
  kind: "event";
  tick: number;
  areaId: number;
  coord: Coord;
  total: number;
}

export interface Ack {
  kind: "ack";
  commandId: number;
  effectiveTick: number;
}

export interface ScoreSummary {
  kind: "score_summary";
  tick: number;
  totals: [number, number][];
}

export interface ErrMsg {
  kind: "err";
  commandId: number;
  code: number;
  message: string;
}

export type ServerMessage = WorldMeta | LocusEmission | ScoreEvent | Ack | ScoreSummary | ErrMsg;

export const ERR_UNSUPPORTED_VERSION = 1;
export const ERR_SLOW_CONSUMER = 8;

export class WireFormatError extends Error {}

const MAGIC = [0x4e, 0x42, 0x43, 0x41]; // "NBCA"

function checkHeader(view: DataView): { type: number; length: number } {
  if (view.byteLength < HEADER_SIZE) {
    throw new WireFormatError(`frame of ${view.byteLength} bytes is shorter than the header`);
  }
  for (let i = 0; i < 4; i++) {
    if (view.getUint8(i) !== MAGIC[i]) {
      throw new WireFormatError("bad magic");
    }
  }
  const version = view.getUint8(4);
  if (version !== PROTOCOL_VERSION) {
    throw new WireFormatError(`unsupported protocol version ${version}`);
  }
  const type = view.getUint8(5);
  const length = view.getUint32(8, true);
  if (HEADER_SIZE + length !== view.byteLength) {
    throw new WireFormatError(`declared ${length} payload bytes, frame has ${view.byteLength - HEADER_SIZE}`);
  }
  return { type, length };
}

class Reader {
  private pos: number;
  constructor(private view: DataView, offset: number) {
    this.pos = offset;
  }

  private need(n: number): void {
    if (this.pos + n > this.view.byteLength) {
      throw new WireFormatError("payload shorter than its fields");
    }
  }

  u8(): number {
    this.need(1);
    return this.view.getUint8(this.pos++);
  }

  u16(): number {
    this.need(2);
    const v = this.view.getUint16(this.pos, true);
    this.pos += 2;
    return v;
  }

  i16(): number {
    this.need(2);
    const v = this.view.getInt16(this.pos, true);
    this.pos += 2;
    return v;
  }

  u32(): number {
    this.need(4);
    const v = this.view.getUint32(this.pos, true);
    this.pos += 4;
    return v;
  }

  u64(): number {
    this.need(8);
    const v = this.view.getBigUint64(this.pos, true);
    this.pos += 8;
    return Number(v);
  }

  str(): string {
    const n = this.u16();
    this.need(n);
    const bytes = new Uint8Array(this.view.buffer, this.view.byteOffset + this.pos, n);
    this.pos += n;
    return new TextDecoder().decode(bytes);
  }

  rest(): Uint8Array {
    const out = new Uint8Array(
      this.view.buffer.slice(this.view.byteOffset + this.pos, this.view.byteOffset + this.view.byteLength),
    );
    this.pos = this.view.byteLength;
    return out;
  }

  coord(): Coord {
    return { q: this.i16(), r: this.i16() };
  }

  done(): void {
    if (this.pos !== this.view.byteLength) {
      throw new WireFormatError(`${this.view.byteLength - this.pos} trailing payload bytes`);
    }
  }
}

export function decodeFrame(data: Uint8Array): ServerMessage {
  const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
  const { type } = checkHeader(view);
  const r = new Reader(view, HEADER_SIZE);
  switch (type) {
    case MsgType.WorldMeta: {
      const name = r.str();
      const slotCapacity = r.u8();
      const bounds: [number, number, number, number] = [r.i16(), r.i16(), r.i16(), r.i16()];
      const locks: LockInfo[] = [];
      const nLocks = r.u16();
      for (let i = 0; i < nLocks; i++) {
        locks.push({
          lockId: r.u32(),
          chamber: r.coord(),
          lowGate: r.coord(),
          highGate: r.coord(),
          raiseTicks: r.u16(),
          lowerTicks: r.u16(),
          capacity: r.u8(),
          autoCycle: r.u8() !== 0,
        });
      }
      const docks: DockInfo[] = [];
      const nDocks = r.u16();
      for (let i = 0; i < nDocks; i++) {
        const coord = r.coord();
        const areaId = r.u8();
        r.u8(); // pad
        docks.push({ coord, areaId, dockClass: r.u16(), role: r.u8(), resource: r.u8() });
      }
      r.done();
      return { kind: "world_meta", name, slotCapacity, bounds, locks, docks };
    }
    case MsgType.LocusSnapshot:
    case MsgType.LocusDelta: {
      const locusId = r.u32();
      const tick = r.u64();
      const count = r.u16();
      const records = r.rest();
      if (count > 0 && records.byteLength % count !== 0) {
        throw new WireFormatError("record blob not divisible by record count");
      }
      return {
        kind: type === MsgType.LocusSnapshot ? "snapshot" : "delta",
        locusId,
        tick,
        count,
        records,
      };
    }
    case MsgType.Event: {
      const tick = r.u64();
      const areaId = r.u8();
      r.u8();
      const coord = r.coord();
      const total = r.u64();
      r.done();
      return { kind: "event", tick, areaId, coord, total };
    }
    case MsgType.Ack: {
      const commandId = r.u32();
      const effectiveTick = r.u64();
      r.done();
      return { kind: "ack", commandId, effectiveTick };
    }
    case MsgType.ScoreSummary: {
      const tick = r.u64();
      const n = r.u16();
      const totals: [number, number][] = [];
      for (let i = 0; i < n; i++) {
        const area = r.u8();
        r.u8();
        totals.push([area, r.u64()]);
      }
      r.done();
      return { kind: "score_summary", tick, totals };
    }
    case MsgType.Err: {
      const commandId = r.u32();
      const code = r.u16();
      const n = r.u16();
      const bytes = r.rest();
      if (bytes.byteLength !== n) {
        throw new WireFormatError("error message length mismatch");
      }
      return { kind: "err", commandId, code, message: new TextDecoder().decode(bytes) };
    }
    default:
      throw new WireFormatError(`unknown message type 0x${type.toString(16)}`);
  }
}

export function recordSize(slotCapacity: number): number {
  return 8 + 8 * slotCapacity;
}

export function parseRecords(blob: Uint8Array, slotCapacity: number): CellRecord[] {
  const size = recordSize(slotCapacity);
  if (blob.byteLength % size !== 0) {
    throw new WireFormatError(`record blob of ${blob.byteLength} bytes is not a multiple of ${size}`);
  }
  const view = new DataView(blob.buffer, blob.byteOffset, blob.byteLength);
  const out: CellRecord[] = [];
  for (let off = 0; off < blob.byteLength; off += size) {
    const slots: (BoatSlot | null)[] = [];
    for (let s = 0; s < slotCapacity; s++) {
      const base = off + 8 + 8 * s;
      const boatId = view.getUint32(base, true);
      if (boatId === 0xffffffff) {
        slots.push(null);
      } else {
        slots.push({ boatId, cargo: view.getUint8(base + 4), area: view.getUint8(base + 5) });
      }
    }
    out.push({
      q: view.getInt16(off, true),
      r: view.getInt16(off + 2, true),
      cellKind: view.getUint8(off + 4),
      lockPhase: view.getUint8(off + 5),
      occupancy: view.getUint8(off + 6),
      slots,
    });
  }
  return out;
}

export function cellKey(q: number, r: number): string {
  return `${q},${r}`;
}

/** Replace changed cells in-place; snapshots should rebuild the map instead. */
export function applyRecords(cells: Map<string, CellRecord>, records: CellRecord[]): void {
  for (const rec of records) {
    cells.set(cellKey(rec.q, rec.r), rec);
  }
}

// -- encoders ---------------------------------------------------------------

function frame(type: MsgType, payload: Uint8Array): Uint8Array {
  const out = new Uint8Array(HEADER_SIZE + payload.byteLength);
  out.set(MAGIC, 0);
  out[4] = PROTOCOL_VERSION;
  out[5] = type;
  new DataView(out.buffer).setUint32(8, payload.byteLength, true);
  out.set(payload, HEADER_SIZE);
  return out;
}

export function encodeHello(name: string): Uint8Array {
  const raw = new TextEncoder().encode(name);
  const payload = new Uint8Array(3 + raw.byteLength);
  const view = new DataView(payload.buffer);
  view.setUint8(0, PROTOCOL_VERSION);
  view.setUint16(1, raw.byteLength, true);
  payload.set(raw, 3);
  return frame(MsgType.Hello, payload);
}

export function encodeOperateLock(commandId: number, lockId: number): Uint8Array {
  const payload = new Uint8Array(8);
  const view = new DataView(payload.buffer);
  view.setUint32(0, commandId, true);
  view.setUint32(4, lockId, true);
  return frame(MsgType.CmdOperateLock, payload);
}

export function encodeLocusCreate(
  commandId: number,
  locusId: number,
  center: Coord,
  radius: number,
  stride: number,
): Uint8Array {
  const payload = new Uint8Array(16);
  const view = new DataView(payload.buffer);
  view.setUint32(0, commandId, true);
  view.setUint32(4, locusId, true);
  view.setInt16(8, center.q, true);
  view.setInt16(10, center.r, true);
  view.setUint8(12, radius);
  view.setUint8(13, 0);
  view.setUint16(14, stride, true);
  return frame(MsgType.CmdLocusCreate, payload);
}

export function encodeLocusMove(commandId: number, locusId: number, center: Coord): Uint8Array {
  const payload = new Uint8Array(12);
  const view = new DataView(payload.buffer);
  view.setUint32(0, commandId, true);
  view.setUint32(4, locusId, true);
  view.setInt16(8, center.q, true);
  view.setInt16(10, center.r, true);
  return frame(MsgType.CmdLocusMove, payload);
}

export function encodeLocusDestroy(commandId: number, locusId: number): Uint8Array {
  const payload = new Uint8Array(8);
  const view = new DataView(payload.buffer);
  view.setUint32(0, commandId, true);
  view.setUint32(4, locusId, true);
  return frame(MsgType.CmdLocusDestroy, payload);
}
