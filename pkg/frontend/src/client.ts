// WebSocket wiring: connect, join, funnel messages through the reducer,
// forward keystrokes, and reconnect with backoff. Inputs are disabled while
// disconnected; a rejoin gets a fresh snapshot from the authoritative server.

import { keyboardToMessage } from "./input.js";
import { decode, encode, joinMessage } from "./protocol.js";
import { ViewModel, apply, initialViewModel, setConnection } from "./state.js";

export interface ClientOptions {
  url: string;
  sessionId: string;
  playerName: string;
  onChange: (vm: ViewModel) => void;
}

export class GameClient {
  private vm: ViewModel = initialViewModel();
  private ws: WebSocket | null = null;
  private retryMs = 500;
  private closed = false;

  constructor(private options: ClientOptions) {}

  start(): void {
    this.connect();
    window.addEventListener("keydown", (event) => {
      if (this.vm.connection !== "connected") return;
      const msg = keyboardToMessage(event);
      if (msg !== null) {
        event.preventDefault();
        this.ws?.send(encode(msg));
      }
    });
  }

  stop(): void {
    this.closed = true;
    this.ws?.close();
  }

  private update(vm: ViewModel): void {
    this.vm = vm;
    this.options.onChange(vm);
  }

  private connect(): void {
    this.update(setConnection(this.vm, "connecting"));
    const ws = new WebSocket(this.options.url);
    this.ws = ws;

    ws.onopen = () => {
      this.retryMs = 500;
      ws.send(encode(joinMessage(this.options.sessionId, this.options.playerName)));
    };
    ws.onmessage = (frame) => {
      const msg = decode(String(frame.data));
      if (msg !== null) {
        this.update(apply(this.vm, msg));
      }
    };
    ws.onclose = () => {
      if (this.closed) return;
      this.update(setConnection(this.vm, "disconnected"));
      setTimeout(() => this.connect(), this.retryMs);
      this.retryMs = Math.min(this.retryMs * 2, 8000);
    };
    ws.onerror = () => ws.close();
  }
}
