// Client-side session state: a small machine fed by server messages.
// Rendering reads only the latest frame, so a slow display never queues
// stale positions.

import type { FrameMessage, ServerMessage } from './protocol.js';

export type Phase = 'connecting' | 'lobby' | 'countdown' | 'running' | 'ended';

export class ClientState {
  phase: Phase = 'connecting';
  index: number | null = null;
  role: string | null = null;
  countdown: number | null = null;
  frame: FrameMessage | null = null;
  endReason: 'complete' | 'abort' | null = null;
  errorMessage: string | null = null;

  apply(msg: ServerMessage): void {
    switch (msg.t) {
      case 'joined':
        this.index = msg.index;
        this.role = msg.role;
        this.phase = 'lobby';
        this.errorMessage = null;
        break;
      case 'countdown':
        this.countdown = msg.s;
        if (this.phase === 'lobby' || this.phase === 'connecting') {
          this.phase = 'countdown';
        }
        break;
      case 'frame':
        this.frame = msg;
        this.countdown = null;
        this.phase = 'running';
        break;
      case 'end':
        this.endReason = msg.reason;
        this.phase = 'ended';
        break;
      case 'error':
        this.errorMessage = msg.reason;
        break;
    }
  }

  get statusLine(): string {
    switch (this.phase) {
      case 'connecting':
        return this.errorMessage ?? 'connecting…';
      case 'lobby':
        return this.errorMessage ?? `joined as player ${this.index} (${this.role}); waiting for players`;
      case 'countdown':
        return `starting in ${this.countdown ?? 0} s`;
      case 'running':
        return this.role && this.role !== 'none' ? `role: ${this.role}` : '';
      case 'ended':
        return this.endReason === 'complete' ? 'trial complete' : 'trial aborted';
    }
  }
}
