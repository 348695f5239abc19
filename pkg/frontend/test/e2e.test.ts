// Browser-client end to end: a real server process, two WebSocket players
// completing a full 30 s dyadic trial, and the persisted files checked on
// disk.

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, readFileSync, readdirSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join, resolve } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';
import WebSocket from 'ws';

const TRIAL_S = 30;
const BASE_PORT = 18000 + Math.floor(Math.random() * 2000);
const WS_URL = `ws://127.0.0.1:${BASE_PORT + 1}`;

let server: ChildProcess;
let dataRoot: string;

function connect(): Promise<WebSocket> {
  return new Promise((resolveWs, reject) => {
    const ws = new WebSocket(WS_URL);
    ws.once('open', () => resolveWs(ws));
    ws.once('error', reject);
  });
}

async function connectWithRetry(attempts = 50): Promise<WebSocket> {
  for (let i = 0; i < attempts; i++) {
    try {
      return await connect();
    } catch {
      await new Promise((r) => setTimeout(r, 200));
    }
  }
  throw new Error('server never came up');
}

function request(ws: WebSocket, msg: object): Promise<Record<string, unknown>> {
  return new Promise((resolveMsg) => {
    ws.once('message', (data) => resolveMsg(JSON.parse(String(data))));
    ws.send(JSON.stringify(msg));
  });
}

const CONFIG = [
  'trial_type=dyadic_hp_hp',
  `duration_s=${TRIAL_S}.0`,
  'record_rate_hz=10.0',
  'role.1=leader',
  'role.2=follower',
  'topology:',
  '0 1',
  '1 0',
  '',
].join('\n');

beforeAll(async () => {
  dataRoot = mkdtempSync(join(tmpdir(), 'synclab-e2e-'));
  server = spawn('python3', ['-m', 'synclab.cli', 'serve',
                             '--host', '127.0.0.1',
                             '--port', String(BASE_PORT),
                             '--data-root', dataRoot],
                 { cwd: resolve(__dirname, '..', '..'), stdio: 'ignore' });
  const probe = await connectWithRetry();
  probe.close();
}, 30_000);

afterAll(() => {
  server?.kill();
});

interface PlayerOutcome {
  joined: Record<string, unknown>;
  frames: number;
  peerKeys: Set<string>;
  endReason: string;
}

function play(index: number, phase: number): Promise<PlayerOutcome> {
  return new Promise((resolveOutcome, reject) => {
    const ws = new WebSocket(WS_URL);
    const outcome: PlayerOutcome = {
      joined: {}, frames: 0, peerKeys: new Set(), endReason: '',
    };
    ws.once('error', reject);
    ws.on('open', () => {
      ws.send(JSON.stringify({ t: 'join', session: 'E2E', index }));
    });
    ws.on('message', (data) => {
      const msg = JSON.parse(String(data));
      if (msg.t === 'joined') {
        outcome.joined = msg;
      } else if (msg.t === 'frame') {
        outcome.frames += 1;
        for (const key of Object.keys(msg.peers)) outcome.peerKeys.add(key);
        const x = 5.0 + Math.sin((2 * Math.PI * 0.25 * msg.ms) / 1000 + phase);
        ws.send(JSON.stringify({ t: 'pos', ms: msg.ms, x }));
      } else if (msg.t === 'end') {
        outcome.endReason = msg.reason;
        ws.close();
        resolveOutcome(outcome);
      } else if (msg.t === 'error') {
        reject(new Error(String(msg.reason)));
      }
    });
  });
}

describe('browser-protocol end to end', () => {
  it('two clients complete a 30 s dyadic trial and the server persists 2 valid files',
     async () => {
    const admin = await connect();
    const created = await request(admin, { t: 'create', session: 'E2E',
                                           config: CONFIG, trial: 7 });
    expect(created.t).toBe('created');

    const donePromise: Promise<Record<string, unknown>> = new Promise((resolveDone) => {
      admin.on('message', (data) => {
        const msg = JSON.parse(String(data));
        if (msg.t === 'done') resolveDone(msg);
      });
    });
    admin.send(JSON.stringify({ t: 'watch', session: 'E2E' }));

    const [a, b] = await Promise.all([play(1, 0.0), play(2, 0.4)]);
    expect(a.joined.role).toBe('leader');
    expect(b.joined.role).toBe('follower');
    expect(a.endReason).toBe('complete');
    expect(b.endReason).toBe('complete');
    expect(a.peerKeys).toEqual(new Set(['2']));
    expect(b.peerKeys).toEqual(new Set(['1']));
    expect(a.frames).toBeGreaterThan(TRIAL_S * 40); // ~50 Hz for 30 s

    const done = await donePromise;
    expect(done.aborted).toBe(false);
    admin.close();

    const sessionDir = join(dataRoot, 'E2E');
    const names = readdirSync(sessionDir).sort();
    expect(names).toEqual(['P2_07_F_1d.txt', 'P2_07_L_1d.txt', 'P2_07_meta.json']);
    for (const name of ['P2_07_L_1d.txt', 'P2_07_F_1d.txt']) {
      const lines = readFileSync(join(sessionDir, name), 'utf-8').trim().split('\n');
      expect(Math.abs(lines.length - TRIAL_S * 10)).toBeLessThanOrEqual(1);
      for (const line of lines) {
        const cols = line.split('\t');
        expect(cols).toHaveLength(2);
        expect(Number.isFinite(Number(cols[0]))).toBe(true);
        const x = Number(cols[1]);
        expect(x).toBeGreaterThanOrEqual(0);
        expect(x).toBeLessThanOrEqual(10);
      }
    }
  }, 90_000);
});
