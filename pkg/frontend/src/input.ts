// Pointer input: the horizontal coordinate maps linearly onto the game
// area, the vertical one is ignored. Position messages go out on a fixed
// client tick (30 Hz) with strictly increasing timestamps; moving the
// pointer faster than the tick never produces extra messages.

import { GAME_AREA_MAX_DM, GAME_AREA_MIN_DM } from './protocol.js';
import type { PosMessage } from './protocol.js';

export const CLIENT_TICK_HZ = 30;

export function pointerToDm(clientX: number, left: number, width: number): number {
  const frac = (clientX - left) / width;
  const span = GAME_AREA_MAX_DM - GAME_AREA_MIN_DM;
  const dm = GAME_AREA_MIN_DM + frac * span;
  return Math.min(Math.max(dm, GAME_AREA_MIN_DM), GAME_AREA_MAX_DM);
}

export class InputLoop {
  private lastX: number | null = null;
  private lastSentMs = -Infinity;
  private active = false;

  constructor(private send: (msg: PosMessage) => void,
              private clock: () => number = () => Date.now()) {}

  start(): void {
    this.active = true;
  }

  stop(): void {
    this.active = false;
  }

  pointerMoved(xDm: number): void {
    this.lastX = xDm;
  }

  /** One client tick: emit the latest pointer sample, if any. */
  tick(): void {
    if (!this.active || this.lastX === null) return;
    const now = this.clock();
    if (now <= this.lastSentMs) return; // clock must advance between sends
    this.lastSentMs = now;
    this.send({ t: 'pos', ms: now, x: this.lastX });
  }
}
