// WebSocket connection to the session server's browser bridge.

import { encodeMessage, parseServerMessage } from './protocol.js';
import type { ClientMessage, ServerMessage } from './protocol.js';

export class Connection {
  private socket: WebSocket;

  constructor(url: string,
              private onMessage: (msg: ServerMessage) => void,
              private onClose: () => void) {
    this.socket = new WebSocket(url);
    this.socket.onmessage = (event) => {
      const msg = parseServerMessage(String(event.data));
      if (msg === null) {
        console.warn('ignoring malformed frame', event.data);
        return;
      }
      this.onMessage(msg);
    };
    this.socket.onclose = () => this.onClose();
    this.socket.onerror = () => this.onClose();
  }

  whenOpen(): Promise<void> {
    if (this.socket.readyState === WebSocket.OPEN) return Promise.resolve();
    return new Promise((resolve, reject) => {
      this.socket.addEventListener('open', () => resolve(), { once: true });
      this.socket.addEventListener('error', () => reject(new Error('connect failed')),
                                   { once: true });
    });
  }

  send(msg: ClientMessage): void {
    if (this.socket.readyState === WebSocket.OPEN) {
      this.socket.send(encodeMessage(msg));
    }
  }

  close(): void {
    this.socket.close();
  }
}
