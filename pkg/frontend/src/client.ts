// WebSocket session: handshake, command sending, reconnect with backoff.
// A protocol version rejection parks the client permanently; everything
// else retries.

import {
  ERR_UNSUPPORTED_VERSION,
  ServerMessage,
  decodeFrame,
  encodeHello,
  encodeLocusCreate,
  encodeLocusMove,
  encodeOperateLock,
} from "./protocol.js";
import { ViewState, onServerMessage } from "./state.js";

const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 8000;

export class Client {
  private socket: WebSocket | null = null;
  private backoff = BACKOFF_START_MS;
  private nextCommandId = 1;
  private locusCreated = false;
  private stopped = false;

  constructor(
    private url: string,
    private state: ViewState,
    private name = "operator-ui",
  ) {}

  connect(): void {
    if (this.stopped) {
      return;
    }
    this.state.status = "connecting";
    this.state.banner = `connecting to ${this.url}...`;
    this.state.dirty = true;
    const socket = new WebSocket(this.url);
    socket.binaryType = "arraybuffer";
    this.socket = socket;
    this.locusCreated = false;

    socket.onopen = () => {
      this.backoff = BACKOFF_START_MS;
      socket.send(encodeHello(this.name));
    };
    socket.onmessage = (ev: MessageEvent<ArrayBuffer>) => {
      const msg = decodeFrame(new Uint8Array(ev.data));
      this.inspect(msg);
      onServerMessage(this.state, msg);
      if (msg.kind === "world_meta" && !this.locusCreated) {
        this.locusCreated = true;
        this.state.status = "open";
        this.sendLocusCreate();
      }
    };
    socket.onclose = () => {
      if (this.state.status === "version-error" || this.stopped) {
        return;
      }
      this.state.status = "closed";
      this.state.banner = `connection lost; retrying in ${this.backoff / 1000}s`;
      this.state.dirty = true;
      setTimeout(() => this.connect(), this.backoff);
      this.backoff = Math.min(this.backoff * 2, BACKOFF_MAX_MS);
    };
    socket.onerror = () => socket.close();
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }

  private inspect(msg: ServerMessage): void {
    if (msg.kind === "err" && msg.code === ERR_UNSUPPORTED_VERSION) {
      this.state.status = "version-error";
      this.state.banner = `protocol version mismatch: ${msg.message}`;
      this.state.dirty = true;
    }
  }

  private send(data: Uint8Array): void {
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(data);
    }
  }

  private claimId(kind: string, extra: Partial<{ lockId: number }> = {}): number {
    const cid = this.nextCommandId++;
    this.state.pending.set(cid, { kind, sentAt: Date.now(), ...extra });
    this.state.dirty = true;
    return cid;
  }

  sendLocusCreate(): void {
    const { id, center, radius, stride } = this.state.locus;
    this.send(encodeLocusCreate(this.claimId("locus_create"), id, center, radius, stride));
  }

  operateLock(lockId: number): void {
    this.send(encodeOperateLock(this.claimId("operate_lock", { lockId }), lockId));
  }

  panLocus(dq: number, dr: number): void {
    const c = this.state.locus.center;
    this.state.locus.center = { q: c.q + dq, r: c.r + dr };
    this.send(encodeLocusMove(this.claimId("locus_move"), this.state.locus.id, this.state.locus.center));
  }
}
