// WebSocket bus client with automatic reconnect. On every (re)connect it
// re-subscribes and re-advertises, so latched topics repopulate the view
// model without any client-side persistence.

import type { BusFrame } from "./protocol.js";
import { parseFrame, serializeFrame } from "./protocol.js";

const SUBSCRIBE_TOPICS = ["/areas_description", "/env/spec", "/env/world", "/trace"];
const ADVERTISE_TOPICS: [string, string][] = [
  ["/plan", "string"],
  ["/command", "string"],
  ["/env/regenerate", "env_spec"],
];
const MAX_AGENT_SUBSCRIPTIONS = 8;
const BACKOFF_START_MS = 500;
const BACKOFF_MAX_MS = 8000;

export interface BusEvents {
  onFrame: (frame: BusFrame) => void;
  onConnection: (state: "connecting" | "connected" | "disconnected") => void;
}

export class BusClient {
  private socket: WebSocket | null = null;
  private backoff = BACKOFF_START_MS;
  private closed = false;
  private reconnectTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(private url: string, private events: BusEvents) {}

  connect(): void {
    this.closed = false;
    this.events.onConnection("connecting");
    const socket = new WebSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoff = BACKOFF_START_MS;
      this.events.onConnection("connected");
      for (const topic of SUBSCRIBE_TOPICS) {
        this.send({ op: "subscribe", topic });
      }
      for (let i = 0; i < MAX_AGENT_SUBSCRIPTIONS; i++) {
        this.send({ op: "subscribe", topic: `/agent${i}/odom` });
        this.send({ op: "subscribe", topic: `/agent${i}/scan` });
      }
      for (const [topic, type] of ADVERTISE_TOPICS) {
        this.send({ op: "advertise", topic, type });
      }
    };
    socket.onmessage = (event: MessageEvent) => {
      const frame = parseFrame(String(event.data));
      if (frame) {
        this.events.onFrame(frame);
      }
    };
    socket.onclose = () => this.scheduleReconnect();
    socket.onerror = () => socket.close();
  }

  private scheduleReconnect(): void {
    this.socket = null;
    if (this.closed) {
      return;
    }
    this.events.onConnection("disconnected");
    if (this.reconnectTimer !== null) {
      return;
    }
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect();
    }, this.backoff);
    this.backoff = Math.min(this.backoff * 2, BACKOFF_MAX_MS);
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer !== null) {
      clearTimeout(this.reconnectTimer);
      this.reconnectTimer = null;
    }
    this.socket?.close();
  }

  send(frame: BusFrame): boolean {
    if (this.socket && this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(serializeFrame(frame));
      return true;
    }
    return false;
  }

  publish(topic: string, type: string, msg: unknown, id?: string): boolean {
    return this.send({ op: "publish", topic, type, msg, id });
  }
}
