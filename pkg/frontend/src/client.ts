// Connection management: subscribe to state frames, send commands, and
// reconnect with exponential backoff when the server goes away. The
// client owns no physics; every rendered value comes from the last
// server frame.

import { Command, ServerFrame, encodeCommand, parseFrame } from "./protocol.js";

export type ConnectionStatus = "connecting" | "connected" | "disconnected";

/** The subset of the WebSocket surface the client uses (injectable in tests). */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export interface ClientCallbacks {
  onFrame?: (frame: ServerFrame) => void;
  onStatus?: (status: ConnectionStatus) => void;
  onNotice?: (text: string) => void;
}

export interface BackoffOptions {
  baseMs?: number;
  maxMs?: number;
}

export class TeleopClient {
  status: ConnectionStatus = "disconnected";
  droppedFrames = 0;
  private socket: SocketLike | null = null;
  private attempts = 0;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
  private readonly baseMs: number;
  private readonly maxMs: number;

  constructor(
    readonly url: string,
    private readonly callbacks: ClientCallbacks = {},
    private readonly socketFactory: SocketFactory = (u) =>
      new WebSocket(u) as unknown as SocketLike,
    backoff: BackoffOptions = {},
  ) {
    this.baseMs = backoff.baseMs ?? 500;
    this.maxMs = backoff.maxMs ?? 10_000;
  }

  connect(): void {
    this.closed = false;
    this.setStatus("connecting");
    let socket: SocketLike;
    try {
      socket = this.socketFactory(this.url);
    } catch {
      this.scheduleReconnect();
      return;
    }
    this.socket = socket;
    socket.onopen = () => {
      this.attempts = 0;
      this.setStatus("connected");
    };
    socket.onmessage = (ev) => {
      const frame = parseFrame(String(ev.data));
      if (frame === null) {
        this.droppedFrames += 1;
        return;
      }
      this.callbacks.onFrame?.(frame);
    };
    const onGone = () => {
      if (this.socket !== socket) return;
      this.socket = null;
      this.setStatus("disconnected");
      this.scheduleReconnect();
    };
    socket.onclose = onGone;
    socket.onerror = onGone;
  }

  /** Send a command; refused (with a visible notice) while disconnected. */
  send(cmd: Command): boolean {
    if (this.status !== "connected" || this.socket === null) {
      this.callbacks.onNotice?.(`not connected: ${cmd.type} ignored`);
      return false;
    }
    this.socket.send(encodeCommand(cmd));
    return true;
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
    this.socket = null;
    this.setStatus("disconnected");
  }

  /** Backoff delay for the n-th consecutive failed attempt (0-based). */
  backoffDelay(attempt: number): number {
    return Math.min(this.baseMs * 2 ** attempt, this.maxMs);
  }

  private scheduleReconnect(): void {
    if (this.closed || this.reconnectTimer !== null) return;
    const delay = this.backoffDelay(this.attempts);
    this.attempts += 1;
    this.callbacks.onNotice?.(`reconnecting in ${Math.round(delay)} ms`);
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      if (!this.closed) this.connect();
    }, delay);
  }

  private setStatus(status: ConnectionStatus): void {
    if (status === this.status) return;
    this.status = status;
    this.callbacks.onStatus?.(status);
  }
}
