/**
 * WebSocket connection manager: parses frames, tracks liveness, and
 * reconnects after silence. The WebSocket implementation is injectable so
 * tests can run under node.
 */
import {
  isErrorFrame,
  parseFrame,
  SchemaError,
  type ErrorFrame,
  type StateMessage,
} from "./protocol.js";

export type ConnectionStatus =
  | "connecting"
  | "live"
  | "stale"
  | "closed"
  | "schema-mismatch";

export interface ClientHooks {
  onState?: (msg: StateMessage) => void;
  onError?: (frame: ErrorFrame) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

interface WebSocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

type WebSocketCtor = new (url: string) => WebSocketLike;

export class ControlClient {
  readonly staleAfterMs: number;
  private ws: WebSocketLike | null = null;
  private status: ConnectionStatus = "closed";
  private staleTimer: ReturnType<typeof setTimeout> | null = null;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private closedByUser = false;

  constructor(
    private readonly url: string,
    private readonly hooks: ClientHooks = {},
    private readonly WebSocketImpl: WebSocketCtor = (globalThis as never)[
      "WebSocket"
    ],
    staleAfterMs = 1000,
  ) {
    this.staleAfterMs = staleAfterMs;
  }

  get currentStatus(): ConnectionStatus {
    return this.status;
  }

  private setStatus(status: ConnectionStatus): void {
    if (status !== this.status) {
      this.status = status;
      this.hooks.onStatus?.(status);
    }
  }

  connect(): void {
    this.closedByUser = false;
    this.setStatus("connecting");
    const ws = new this.WebSocketImpl(this.url);
    this.ws = ws;
    ws.onopen = () => this.armStaleTimer();
    ws.onmessage = (ev) => this.handleFrame(String(ev.data));
    ws.onclose = () => this.handleClosed();
    ws.onerror = () => {
      /* onclose follows */
    };
  }

  private handleFrame(raw: string): void {
    let frame: StateMessage | ErrorFrame;
    try {
      frame = parseFrame(raw);
    } catch (err) {
      if (err instanceof SchemaError) {
        this.setStatus("schema-mismatch");
        this.ws?.close();
        return;
      }
      throw err;
    }
    this.armStaleTimer();
    this.setStatus("live");
    if (isErrorFrame(frame)) {
      this.hooks.onError?.(frame);
    } else {
      this.hooks.onState?.(frame);
    }
  }

  private armStaleTimer(): void {
    if (this.staleTimer !== null) clearTimeout(this.staleTimer);
    this.staleTimer = setTimeout(() => {
      this.setStatus("stale");
      // silent link: force a fresh socket
      this.ws?.close();
    }, this.staleAfterMs);
  }

  private handleClosed(): void {
    if (this.staleTimer !== null) clearTimeout(this.staleTimer);
    this.staleTimer = null;
    if (this.closedByUser) {
      this.setStatus("closed");
      return;
    }
    if (this.status !== "schema-mismatch" && this.status !== "stale") {
      this.setStatus("closed");
    }
    this.reconnectTimer = setTimeout(() => this.connect(), 500);
  }

  send(payload: string): boolean {
    if (this.ws && this.status === "live") {
      this.ws.send(payload);
      return true;
    }
    return false;
  }

  close(): void {
    this.closedByUser = true;
    if (this.staleTimer !== null) clearTimeout(this.staleTimer);
    if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
    this.staleTimer = null;
    this.reconnectTimer = null;
    this.ws?.close();
    this.setStatus("closed");
  }
}
