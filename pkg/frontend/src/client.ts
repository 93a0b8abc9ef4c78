/** Thin transport over the control-service HTTP and WebSocket contract. */

import type { ModelResponse, OperatorAction } from "./types.js";

export class RequestRejected extends Error {
  constructor(
    public readonly code: string,
    detail: string,
  ) {
    super(detail);
  }
}

export interface CommandReply {
  [key: string]: unknown;
  effective_cycle?: number;
  process_id?: string;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request(method: string, path: string, body?: unknown): Promise<CommandReply> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body !== undefined ? { "content-type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    const payload = (await response.json().catch(() => ({}))) as Record<string, unknown>;
    if (!response.ok) {
      const code = typeof payload.error === "string" ? payload.error : `HTTP_${response.status}`;
      const detail = typeof payload.detail === "string" ? payload.detail : response.statusText;
      throw new RequestRejected(code, detail);
    }
    return payload as CommandReply;
  }

  getState(): Promise<CommandReply> {
    return this.request("GET", "/api/state");
  }

  async getModel(): Promise<ModelResponse> {
    return (await this.request("GET", "/api/model")) as unknown as ModelResponse;
  }

  /** Every operator action maps onto exactly one service request. */
  send(action: OperatorAction): Promise<CommandReply> {
    switch (action.kind) {
      case "START_A":
        return this.request("POST", "/api/process", { recipe: "A", config: action.parameters });
      case "START_B":
        return this.request("POST", "/api/process", { recipe: "B", config: action.parameters });
      case "ABORT":
        return this.request("DELETE", `/api/process/${action.target}`);
      case "TOGGLE_ACTUATOR":
        return this.request("POST", `/api/silo/${action.target}/actuator`, {
          actuator: action.actuator,
          value: action.value,
        });
      case "PAUSE":
        return this.request("POST", "/api/sim/pause");
      case "RESUME":
        return this.request("POST", "/api/sim/resume");
      case "STEP":
        return this.request("POST", `/api/sim/step?n=${action.n ?? 1}`);
    }
  }

  websocketUrl(): string {
    return this.baseUrl.replace(/^http/, "ws") + "/api/events";
  }
}

export interface WebSocketLike {
  onmessage: ((event: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((err?: unknown) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface EventStreamOptions {
  reconnectDelayMs?: number;
  makeSocket?: WebSocketFactory;
}

/** Auto-reconnecting event stream; the consumer gets parsed JSON messages. */
export class EventStream {
  private socket: WebSocketLike | null = null;
  private stopped = false;
  private reconnectDelay: number;
  private makeSocket: WebSocketFactory;
  onMessage: (message: unknown) => void = () => undefined;
  onDown: () => void = () => undefined;

  constructor(
    private readonly url: string,
    options: EventStreamOptions = {},
  ) {
    this.reconnectDelay = options.reconnectDelayMs ?? 1000;
    this.makeSocket =
      options.makeSocket ??
      ((u: string) => new (globalThis as { WebSocket: new (url: string) => WebSocketLike }).WebSocket(u));
  }

  start(): void {
    this.stopped = false;
    this.connect();
  }

  private connect(): void {
    if (this.stopped) return;
    let socket: WebSocketLike;
    try {
      socket = this.makeSocket(this.url);
    } catch {
      this.onDown();
      setTimeout(() => this.connect(), this.reconnectDelay);
      return;
    }
    this.socket = socket;
    socket.onmessage = (event) => {
      try {
        this.onMessage(JSON.parse(String(event.data)));
      } catch {
        // Non-JSON frames are ignored; the stream stays up.
      }
    };
    const retry = () => {
      if (this.stopped) return;
      this.onDown();
      setTimeout(() => this.connect(), this.reconnectDelay);
    };
    socket.onclose = retry;
    socket.onerror = () => undefined; // close always follows an error
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
    this.socket = null;
  }
}
