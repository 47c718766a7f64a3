/**
 * WebSocket client with a strict handshake: the first message must be a
 * hello envelope with a protocol version we speak, or the connection is
 * abandoned without retry. Transport drops retry with exponential
 * backoff; protocol disagreements never do.
 */

import { Command, Envelope, ProtocolError, encodeCommand, parseEnvelope, versionMismatch } from "./protocol.js";

export type ClientStatus = "connecting" | "live" | "retrying" | "closed" | "incompatible";

export interface ClientHooks {
  onEnvelope: (env: Envelope) => void;
  onStatus: (status: ClientStatus, detail?: string) => void;
}

export const RETRY_BASE_MS = 500;
export const RETRY_CAP_MS = 15000;

export function retryDelayMs(attempt: number): number {
  return Math.min(RETRY_BASE_MS * 2 ** attempt, RETRY_CAP_MS);
}

/** Minimal surface this client needs from a WebSocket implementation. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  readyState: number;
}

const OPEN = 1;

export class EngineClient {
  private socket: SocketLike | null = null;
  private attempts = 0;
  private stopped = false;
  private sawHello = false;
  private reported = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private url: string,
    private hooks: ClientHooks,
    private makeSocket: (url: string) => SocketLike = (u) => new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    this.stopped = false;
    this.reported = false;
    this.open();
  }

  private open(): void {
    this.sawHello = false;
    this.hooks.onStatus("connecting");
    const ws = this.makeSocket(this.url);
    this.socket = ws;

    ws.onopen = () => {
      this.attempts = 0;
    };

    ws.onmessage = (ev) => {
      let env: Envelope;
      try {
        env = parseEnvelope(String(ev.data));
      } catch (e) {
        if (e instanceof ProtocolError) {
          this.giveUp(ws, e.message);
          return;
        }
        throw e;
      }
      if (!this.sawHello) {
        if (env.type !== "hello") {
          this.giveUp(ws, `expected hello, got ${env.type}`);
          return;
        }
        const reason = versionMismatch(env);
        if (reason !== null) {
          this.giveUp(ws, reason);
          return;
        }
        this.sawHello = true;
        this.hooks.onStatus("live");
      }
      this.hooks.onEnvelope(env);
    };

    ws.onclose = () => {
      if (this.socket !== ws) return;
      this.socket = null;
      if (this.stopped) {
        if (!this.reported) {
          this.reported = true;
          this.hooks.onStatus("closed");
        }
        return;
      }
      const delay = retryDelayMs(this.attempts);
      this.attempts += 1;
      this.hooks.onStatus("retrying", `reconnecting in ${delay}ms`);
      this.timer = setTimeout(() => this.open(), delay);
    };
  }

  private giveUp(ws: SocketLike, reason: string): void {
    this.reported = true;
    this.hooks.onStatus("incompatible", reason);
    this.stop(ws);
  }

  send(command: Command): boolean {
    if (this.socket === null || this.socket.readyState !== OPEN || !this.sawHello) return false;
    this.socket.send(encodeCommand(command));
    return true;
  }

  close(): void {
    this.stop(this.socket);
  }

  private stop(ws: SocketLike | null): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    if (ws !== null) ws.close();
  }
}
