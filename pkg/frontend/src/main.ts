// Entry point: join form, canvas loop, pointer capture, q-to-quit.

import { Connection } from './connection.js';
import { CLIENT_TICK_HZ, InputLoop, pointerToDm } from './input.js';
import { drawScene } from './render.js';
import { ClientState } from './state.js';

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
}

function start(): void {
  const form = byId<HTMLFormElement>('join-form');
  const canvas = byId<HTMLCanvasElement>('game');
  const banner = byId<HTMLDivElement>('banner');
  const ctx = canvas.getContext('2d');
  if (!ctx) throw new Error('canvas 2d context unavailable');

  const state = new ClientState();
  let connection: Connection | null = null;
  let inputLoop: InputLoop | null = null;
  let ticker: ReturnType<typeof setInterval> | null = null;

  const showBanner = (text: string) => {
    banner.textContent = text;
    banner.style.display = text ? 'block' : 'none';
  };

  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const server = byId<HTMLInputElement>('server').value.trim();
    const session = byId<HTMLInputElement>('session').value.trim();
    const index = Number(byId<HTMLInputElement>('index').value);
    showBanner('');

    connection = new Connection(`ws://${server}`, (msg) => {
      state.apply(msg);
      if (msg.t === 'error') {
        showBanner(msg.reason);
      }
      if (msg.t === 'frame') {
        inputLoop?.start();
      }
      if (msg.t === 'end') {
        inputLoop?.stop();
      }
    }, () => {
      if (state.phase !== 'ended') {
        showBanner('connection lost');
        state.apply({ t: 'end', reason: 'abort' });
      }
    });

    inputLoop = new InputLoop((msg) => connection?.send(msg));
    connection.whenOpen().then(() => {
      connection?.send({ t: 'join', session, index });
      form.style.display = 'none';
      canvas.style.display = 'block';
    }).catch(() => showBanner('cannot reach server'));

    if (ticker) clearInterval(ticker);
    ticker = setInterval(() => inputLoop?.tick(), 1000 / CLIENT_TICK_HZ);
  });

  canvas.addEventListener('pointermove', (event) => {
    const rect = canvas.getBoundingClientRect();
    inputLoop?.pointerMoved(pointerToDm(event.clientX, rect.left, rect.width));
  });

  window.addEventListener('keydown', (event) => {
    if (event.key === 'q' && connection) {
      connection.send({ t: 'quit' });
      inputLoop?.stop();
    }
  });

  const repaint = () => {
    drawScene(ctx, state, canvas.width, canvas.height);
    requestAnimationFrame(repaint);
  };
  requestAnimationFrame(repaint);
}

start();
