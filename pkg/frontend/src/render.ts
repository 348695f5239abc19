// Canvas rendering: the player's own motion is a blue circle, every peer
// in the latest frame is an orange circle, each on its own fixed horizontal
// track. Peers are anonymized: stable track order, no labels.

import { GAME_AREA_MAX_DM, GAME_AREA_MIN_DM } from './protocol.js';
import type { ClientState } from './state.js';

export const SELF_COLOR = '#2464d8';
export const PEER_COLOR = '#e8832a';
export const CIRCLE_RADIUS_PX = 18;
const MARGIN_PX = 40;
const HEADER_PX = 48;

export interface Circle {
  x: number;
  y: number;
  radius: number;
  color: string;
}

export function positionToPx(xDm: number, width: number): number {
  const span = GAME_AREA_MAX_DM - GAME_AREA_MIN_DM;
  const frac = (xDm - GAME_AREA_MIN_DM) / span;
  return MARGIN_PX + Math.min(Math.max(frac, 0), 1) * (width - 2 * MARGIN_PX);
}

/** Pure layout: exactly one blue circle for self plus one orange circle per
 * peer in the frame, on evenly spaced tracks (self on the first). */
export function layoutCircles(frame: { self: number; peers: Record<string, number> },
                              width: number, height: number): Circle[] {
  const peerKeys = Object.keys(frame.peers).sort((a, b) => Number(a) - Number(b));
  const tracks = peerKeys.length + 1;
  const usable = height - HEADER_PX;
  const trackY = (slot: number) => HEADER_PX + ((slot + 1) * usable) / (tracks + 1);
  const circles: Circle[] = [{
    x: positionToPx(frame.self, width),
    y: trackY(0),
    radius: CIRCLE_RADIUS_PX,
    color: SELF_COLOR,
  }];
  peerKeys.forEach((key, slot) => {
    circles.push({
      x: positionToPx(frame.peers[key], width),
      y: trackY(slot + 1),
      radius: CIRCLE_RADIUS_PX,
      color: PEER_COLOR,
    });
  });
  return circles;
}

export interface Canvas2D {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  fillStyle: string | CanvasGradient | CanvasPattern;
  font: string;
  textAlign: CanvasTextAlign;
}

export function drawScene(ctx: Canvas2D, state: ClientState,
                          width: number, height: number): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = '#222222';
  ctx.font = '16px sans-serif';

  if (state.index !== null) {
    ctx.textAlign = 'left';
    ctx.fillText(`player ${state.index}`, 12, 24);
  }
  if (state.phase === 'countdown' && state.countdown !== null) {
    ctx.textAlign = 'right';
    ctx.font = '28px sans-serif';
    ctx.fillText(`${state.countdown}`, width - 16, 34);
    ctx.font = '16px sans-serif';
  }
  const status = state.statusLine;
  if (status) {
    ctx.textAlign = 'left';
    ctx.fillText(status, 12, height - 12);
  }

  if (state.phase !== 'running' || state.frame === null) {
    return;
  }
  for (const circle of layoutCircles(state.frame, width, height)) {
    ctx.fillStyle = circle.color;
    ctx.beginPath();
    ctx.arc(circle.x, circle.y, circle.radius, 0, 2 * Math.PI);
    ctx.fill();
  }
}
