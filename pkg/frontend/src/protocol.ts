// Wire protocol shared with the session server: one JSON object per
// WebSocket text frame, identical payloads to the TCP transport.

export interface JoinMessage {
  t: 'join';
  session: string;
  index: number;
}

export interface PosMessage {
  t: 'pos';
  ms: number;
  x: number;
}

export interface QuitMessage {
  t: 'quit';
}

export type ClientMessage = JoinMessage | PosMessage | QuitMessage;

export interface JoinedMessage {
  t: 'joined';
  index: number;
  role: string;
}

export interface CountdownMessage {
  t: 'countdown';
  s: number;
}

export interface FrameMessage {
  t: 'frame';
  ms: number;
  self: number;
  peers: Record<string, number>;
}

export interface EndMessage {
  t: 'end';
  reason: 'complete' | 'abort';
}

export interface ErrorMessage {
  t: 'error';
  reason: string;
}

export type ServerMessage =
  | JoinedMessage
  | CountdownMessage
  | FrameMessage
  | EndMessage
  | ErrorMessage;

export function encodeMessage(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === 'number' && Number.isFinite(v);
}

/** Parse and shape-check a server payload; null for anything malformed. */
export function parseServerMessage(text: string): ServerMessage | null {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    return null;
  }
  if (typeof raw !== 'object' || raw === null) return null;
  const msg = raw as Record<string, unknown>;
  switch (msg.t) {
    case 'joined':
      if (isFiniteNumber(msg.index) && typeof msg.role === 'string') {
        return { t: 'joined', index: msg.index, role: msg.role };
      }
      return null;
    case 'countdown':
      return isFiniteNumber(msg.s) ? { t: 'countdown', s: msg.s } : null;
    case 'frame': {
      if (!isFiniteNumber(msg.ms) || !isFiniteNumber(msg.self)) return null;
      if (typeof msg.peers !== 'object' || msg.peers === null) return null;
      const peers: Record<string, number> = {};
      for (const [key, value] of Object.entries(msg.peers as Record<string, unknown>)) {
        if (!isFiniteNumber(value)) return null;
        peers[key] = value;
      }
      return { t: 'frame', ms: msg.ms, self: msg.self, peers };
    }
    case 'end':
      if (msg.reason === 'complete' || msg.reason === 'abort') {
        return { t: 'end', reason: msg.reason };
      }
      return null;
    case 'error':
      return typeof msg.reason === 'string' ? { t: 'error', reason: msg.reason } : null;
    default:
      return null;
  }
}

export const GAME_AREA_MIN_DM = 0;
export const GAME_AREA_MAX_DM = 10;
