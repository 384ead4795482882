// WebSocket transport with the session rules the edge service expects:
// per-session strictly increasing msg_id, reply demux by msg_id, pushes
// forwarded as events. A connection lost with requests in flight triggers
// one reconnect (the server hands the session over to the new socket) and
// each pending request is retried exactly once under a fresh msg_id.

import { buildRequest, parseFrame, type Envelope } from "./protocol";
import type { ConsoleEvent } from "./state";

// Structural subset shared by the browser WebSocket and the ws package.
// Handler params are deliberately loose so both event families fit.
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

interface Pending {
  kind: string;
  payload: Record<string, unknown>;
  retried: boolean;
  resolve: (frame: Envelope) => void;
  reject: (err: Error) => void;
}

export class ConsoleTransport {
  private socket: SocketLike | null = null;
  private nextMsgId = 1;
  private pending = new Map<number, Pending>();
  private closed = false;

  constructor(
    private readonly url: string,
    readonly sessionId: string,
    private readonly factory: SocketFactory,
    private readonly onEvent: (ev: ConsoleEvent) => void,
  ) {}

  static async connect(
    url: string,
    sessionId: string,
    factory: SocketFactory,
    onEvent: (ev: ConsoleEvent) => void,
  ): Promise<ConsoleTransport> {
    const t = new ConsoleTransport(url, sessionId, factory, onEvent);
    await t.open();
    return t;
  }

  private open(): Promise<void> {
    return new Promise((resolve, reject) => {
      const sock = this.factory(this.url);
      sock.onopen = () => {
        this.socket = sock;
        this.onEvent({ type: "connected" });
        resolve();
      };
      sock.onmessage = (ev) => this.receive(String(ev.data));
      sock.onerror = () => {
        if (this.socket !== sock) reject(new Error(`cannot reach ${this.url}`));
      };
      sock.onclose = () => {
        if (this.socket === sock) {
          this.socket = null;
          void this.handleDrop();
        }
      };
    });
  }

  private receive(data: string): void {
    let frame: Envelope;
    try {
      frame = parseFrame(data);
    } catch {
      return; // an unparseable server frame is dropped, not fatal
    }
    this.onEvent({ type: "frame", frame });
    if (frame.msg_id !== null && frame.msg_id !== undefined) {
      const entry = this.pending.get(frame.msg_id);
      if (entry) {
        this.pending.delete(frame.msg_id);
        entry.resolve(frame);
      }
    }
  }

  private async handleDrop(): Promise<void> {
    this.onEvent({ type: "disconnected" });
    if (this.closed) {
      this.failAll(new Error("connection closed"));
      return;
    }
    const dropped = [...this.pending.values()];
    this.pending.clear();
    try {
      await this.open(); // same session id: the server hands the session over
    } catch (err) {
      for (const p of dropped) p.reject(err as Error);
      return;
    }
    for (const p of dropped) {
      if (p.retried) {
        p.reject(new Error(`${p.kind} lost twice, giving up`));
        continue;
      }
      this.onEvent({ type: "retrying", kind: p.kind });
      const msgId = this.nextMsgId++;
      this.pending.set(msgId, { ...p, retried: true });
      this.socket!.send(JSON.stringify(buildRequest(msgId, this.sessionId, p.kind, p.payload)));
    }
  }

  private failAll(err: Error): void {
    for (const p of this.pending.values()) p.reject(err);
    this.pending.clear();
  }

  request(kind: string, payload: Record<string, unknown> = {}): Promise<Envelope> {
    if (!this.socket) return Promise.reject(new Error("not connected"));
    const msgId = this.nextMsgId++;
    const body = JSON.stringify(buildRequest(msgId, this.sessionId, kind, payload));
    return new Promise((resolve, reject) => {
      this.pending.set(msgId, { kind, payload, retried: false, resolve, reject });
      this.socket!.send(body);
    });
  }

  close(): void {
    this.closed = true;
    this.socket?.close();
  }
}
