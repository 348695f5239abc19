"""Authoritative session core: lobby, countdown, tick loop, topology-routed
frame broadcast, virtual-player hosting, recording, and persistence.

The core is transport-free and clockless: a driver (the network server or
the headless harness) injects join/pos/quit events and calls tick() at the
server rate, draining ``outbox`` — a list of (player_index, message dict)
pairs — after each call. That keeps every trial deterministic under
scripted drivers and lets tests instrument exactly what would be serialized
to each client.

Timing: routing ticks at 50 Hz; virtual players integrate at 100 Hz with
the neighbor snapshot held over the tick (zero-order hold); recordings are
decimated to the configured storage rate (10 Hz by default).
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import TrialConfig
from .core import (GAME_AREA_DM, GAME_CENTER_DM, MotionKind, Role, Trajectory,
                   TrialType, ValidationError, neighbors_of)
from .dynamics import (VP_TICK_HZ, CouplingInput, SignaturePlayer, VpState,
                       VirtualPlayerConfig, aggregate_neighbors, step_vp)
from .records import TrialRecord, player_tag, velocity_from_position

TICK_HZ = 50.0
COUNTDOWN_S = 3
# Human velocity is estimated by a finite difference across the last 0.3 s of
# held positions; wide enough to keep cursor jitter out of the VP couplings,
# short against the ~4 s oscillation period.
VELOCITY_WINDOW_TICKS = 15


class SessionPhase(str, enum.Enum):
    LOBBY = "lobby"
    COUNTDOWN = "countdown"
    RUNNING = "running"
    FINISHED = "finished"


@dataclass
class VpRuntime:
    config: VirtualPlayerConfig
    state: VpState
    signature: SignaturePlayer | None


class PlayerSlot:
    """One roster entry; positions are game coordinates in [0, 10] dm."""

    def __init__(self, index: int, kind: str, name: str | None = None):
        self.index = index
        self.kind = kind  # "human" | "virtual"
        self.name = name or f"player{index}"
        self.position = GAME_CENTER_DM
        self.history: deque[float] = deque(maxlen=VELOCITY_WINDOW_TICKS + 1)
        self.vp: VpRuntime | None = None
        self.quit = False

    @property
    def is_virtual(self) -> bool:
        return self.kind == "virtual"

    def velocity_estimate(self, tick_dt: float) -> float:
        if self.vp is not None:
            return self.vp.state.v
        if len(self.history) < 2:
            return 0.0
        span = (len(self.history) - 1) * tick_dt
        return (self.history[-1] - self.history[0]) / span


def clamp_position(x: float) -> float:
    lo, hi = GAME_AREA_DM
    return min(max(float(x), lo), hi)


class SessionCore:
    def __init__(self, config: TrialConfig, session_id: str = "S1",
                 trial_number: int = 1, signature_store=None,
                 signatures: dict[int, object] | None = None):
        self.config = config
        self.session_id = session_id
        self.trial_number = trial_number
        self.phase = SessionPhase.LOBBY
        self.outbox: list[tuple[int, dict]] = []
        self.tick_dt = 1.0 / TICK_HZ
        self.tick_count = 0
        self.partial = False
        self.end_reason: str | None = None
        self.roster: dict[int, PlayerSlot] = {}
        self._neighbor_rows = {i: [j + 1 for j in neighbors_of(config.topology, i - 1)]
                               for i in range(1, config.n_players + 1)}
        self._countdown_left = 0.0
        self._next_record_t = 0.0
        self.buffers: dict[int, list[float]] = {}
        self._record_times: list[float] = []
        self._vp_substeps = int(round(VP_TICK_HZ / TICK_HZ))

        for index, vp_cfg in config.vp_configs.items():
            sig = None
            if vp_cfg.needs_signature():
                sig = self._resolve_signature(vp_cfg, signature_store, signatures, index)
            slot = PlayerSlot(index, "virtual", name=f"vp{index}")
            slot.vp = VpRuntime(config=vp_cfg, state=VpState(), signature=sig)
            if not self._neighbor_rows[index]:
                raise ValidationError(f"virtual player {index} has no visible neighbor")
            self.roster[index] = slot

    @staticmethod
    def _resolve_signature(vp_cfg: VirtualPlayerConfig, store, signatures, index):
        if signatures and index in signatures:
            sig = signatures[index]
        elif vp_cfg.signature_ref and store is not None:
            owner, _, kind = vp_cfg.signature_ref.partition(":")
            sig = store.load(owner, MotionKind(kind or MotionKind.FREE.value))
        else:
            raise ValidationError(
                f"virtual player {index} needs a motor signature but none was provided")
        return SignaturePlayer(sig, tick_hz=VP_TICK_HZ, offset=GAME_CENTER_DM)

    # ---- lobby -----------------------------------------------------------

    @property
    def roster_complete(self) -> bool:
        return len(self.roster) == self.config.n_players

    def join(self, index: int, name: str | None = None) -> dict:
        """Register a human player. A successful ack is also queued to the
        player's outbox slot; rejections are only returned, since the index
        may belong to someone else."""
        if self.phase is not SessionPhase.LOBBY:
            return {"t": "error", "reason": "trial already started"}
        if not 1 <= index <= self.config.n_players:
            return {"t": "error", "reason": f"index {index} out of range 1..{self.config.n_players}"}
        if index in self.roster:
            return {"t": "error", "reason": f"index {index} already claimed"}
        self.roster[index] = PlayerSlot(index, "human", name)
        role = self.config.role_map()[index]
        msg = {"t": "joined", "index": index, "role": role.value}
        self.outbox.append((index, msg))
        return msg

    def lobby_status(self) -> dict:
        return {"joined": len(self.roster), "total": self.config.n_players,
                "phase": self.phase.value}

    def start_trial(self) -> None:
        if not self.roster_complete:
            raise ValidationError(
                f"roster incomplete: {len(self.roster)}/{self.config.n_players}")
        if self.phase is not SessionPhase.LOBBY:
            raise ValidationError(f"cannot start from phase {self.phase.value}")
        self.phase = SessionPhase.COUNTDOWN
        self._countdown_left = float(COUNTDOWN_S)
        self._broadcast({"t": "countdown", "s": COUNTDOWN_S})

    # ---- events ----------------------------------------------------------

    def handle_pos(self, index: int, ms: float, x: float) -> None:
        """Latest-value-wins position update; ignored outside running."""
        if self.phase is not SessionPhase.RUNNING:
            return
        slot = self.roster.get(index)
        if slot is None or slot.is_virtual or slot.quit:
            return
        slot.position = clamp_position(x)

    def handle_quit(self, index: int) -> None:
        slot = self.roster.get(index)
        if slot is None:
            return
        if self.phase is SessionPhase.LOBBY:
            del self.roster[index]
            return
        if self.phase in (SessionPhase.COUNTDOWN, SessionPhase.RUNNING):
            slot.quit = True
            self.abort(f"player {index} quit")

    def abort(self, reason: str) -> None:
        if self.phase is SessionPhase.FINISHED:
            return
        self.partial = True
        self.end_reason = "abort"
        self.abort_detail = reason
        self.phase = SessionPhase.FINISHED
        self._broadcast({"t": "end", "reason": "abort"})

    # ---- tick loop -------------------------------------------------------

    @property
    def trial_time_s(self) -> float:
        return self.tick_count * self.tick_dt

    def tick(self) -> None:
        """Advance one server tick (1/50 s)."""
        if self.phase is SessionPhase.COUNTDOWN:
            before = self._countdown_left
            self._countdown_left -= self.tick_dt
            remaining = int(np.ceil(self._countdown_left - 1e-9))
            if 0 < remaining < int(np.ceil(before - 1e-9)):
                self._broadcast({"t": "countdown", "s": remaining})
            if self._countdown_left <= 1e-9:
                self.phase = SessionPhase.RUNNING
                self.tick_count = 0
                self._next_record_t = 0.0
                self.buffers = {i: [] for i in self.roster}
                self._record_times = []
            return
        if self.phase is not SessionPhase.RUNNING:
            return

        t = self.trial_time_s
        for slot in self.roster.values():
            slot.history.append(slot.position)

        frames = route_frame(self, t)
        for index in sorted(frames):
            if not self.roster[index].is_virtual:
                self.outbox.append((index, frames[index]))

        if t >= self._next_record_t - 1e-9:
            for index, slot in self.roster.items():
                self.buffers[index].append(slot.position)
            self._record_times.append(t)
            self._next_record_t += 1.0 / self.config.record_rate_hz

        self.step_virtuals()
        self.tick_count += 1

        if self.trial_time_s >= self.config.duration_s - 1e-9:
            self.phase = SessionPhase.FINISHED
            self.end_reason = "complete"
            self._broadcast({"t": "end", "reason": "complete"})

    def step_virtuals(self) -> None:
        """Advance every VP by one tick (substeps at the VP rate, neighbor
        snapshot held constant)."""
        snapshot = {i: s.position for i, s in self.roster.items()}
        vel = {i: s.velocity_estimate(self.tick_dt) for i, s in self.roster.items()}
        t = self.trial_time_s
        for index, slot in self.roster.items():
            if slot.vp is None:
                continue
            rows = self._neighbor_rows[index]
            y_bar, ydot_bar = aggregate_neighbors([snapshot[j] for j in rows],
                                                  [vel[j] for j in rows])
            inp_base = dict(y_bar=y_bar - GAME_CENTER_DM, ydot_bar=ydot_bar)
            dt = 1.0 / VP_TICK_HZ
            state = slot.vp.state
            for s in range(self._vp_substeps):
                sigma = sigma_dot = None
                if slot.vp.signature is not None:
                    sigma, sigma_dot = slot.vp.signature.at_time(t + s * dt)
                inp = CouplingInput(sigma=sigma, sigma_dot=sigma_dot, **inp_base)
                state = step_vp(state, slot.vp.config.dynamics,
                                slot.vp.config.controller, inp, dt)
            slot.vp.state = state
            slot.position = clamp_position(state.x + GAME_CENTER_DM)

    def _broadcast(self, msg: dict) -> None:
        for index in sorted(self.roster):
            if not self.roster[index].is_virtual:
                self.outbox.append((index, msg))

    # ---- persistence -----------------------------------------------------

    def to_record(self) -> TrialRecord:
        if self.phase is not SessionPhase.FINISHED:
            raise ValidationError("record is only available after the trial ends")
        if not self.buffers or not any(self.buffers.values()):
            raise ValidationError("nothing was recorded")
        roles = self.config.role_map()
        positions, velocities, labels = {}, {}, {}
        for index in sorted(self.buffers):
            samples = np.asarray(self.buffers[index], dtype=float)
            pos = Trajectory(t0_ms=0.0, rate_hz=self.config.record_rate_hz, samples=samples)
            positions[index] = pos
            labels[index] = player_tag(self.config.trial_type, index, roles,
                                       self.config.solo_owner)
            if self.config.trial_type is TrialType.SOLO:
                velocities[index] = velocity_from_position(pos)
        return TrialRecord(
            trial_type=self.config.trial_type,
            trial_number=self.trial_number,
            duration_s=self.config.duration_s,
            record_rate_hz=self.config.record_rate_hz,
            topology=self.config.topology,
            roles={i: r for i, r in roles.items() if r is not Role.NONE},
            positions=positions,
            velocities=velocities,
            labels=labels,
            solo_kind=self.config.solo_kind if self.config.trial_type is TrialType.SOLO else None,
            partial=self.partial,
        )

    def persist(self, directory: Path) -> list[Path]:
        return self.to_record().save(Path(directory))


def route_frame(session: SessionCore, t_s: float | None = None) -> dict[int, dict]:
    """Pure visibility projection: player i's frame carries its own position
    plus exactly the positions of the players its topology row allows."""
    if t_s is None:
        t_s = session.trial_time_s
    ms = int(round(t_s * 1000.0))
    frames = {}
    for index, slot in session.roster.items():
        peers = {str(j): session.roster[j].position
                 for j in session._neighbor_rows[index] if j in session.roster}
        frames[index] = {"t": "frame", "ms": ms, "self": slot.position, "peers": peers}
    return frames


class SignatureStore:
    """File-backed motor-signature store: solo-format trial files under a
    root directory plus a tab-separated index."""

    INDEX_NAME = "signatures.tsv"

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.index_path = self.root / self.INDEX_NAME
        self._index: dict[tuple[str, str, int], str] = {}
        if self.index_path.exists():
            for line in self.index_path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                owner, kind, nt, fname = line.split("\t")
                self._index[(owner, kind, int(nt))] = fname

    def entries(self) -> list[tuple[str, str, int, str]]:
        return sorted((o, k, n, f) for (o, k, n), f in self._index.items())

    def next_trial_number(self, owner: str, kind: MotionKind) -> int:
        kind = MotionKind(kind).value
        have = [n for (o, k, n) in self._index if o == owner and k == kind]
        return max(have, default=0) + 1

    def store(self, record: TrialRecord, owner: str | None = None) -> tuple[str, str, int]:
        """File a completed solo record as a signature; returns its key."""
        if record.trial_type is not TrialType.SOLO:
            raise ValidationError("only solo records become signatures")
        if record.solo_kind is None:
            raise ValidationError("solo record is missing the motion kind")
        owner = owner or record.labels[1]
        kind = record.solo_kind.value
        key = (owner, kind, record.trial_number)
        if key in self._index:
            raise ValidationError(f"signature {key} already stored")
        paths = record.save(self.root)
        self._index[key] = record.filename_for(1)
        self._append_index_line(owner, kind, record.trial_number, self._index[key])
        return key

    def _append_index_line(self, owner, kind, nt, fname):
        with open(self.index_path, "a", encoding="utf-8") as fh:
            fh.write(f"{owner}\t{kind}\t{nt}\t{fname}\n")

    def load(self, owner: str, kind: MotionKind, trial_number: int | None = None):
        from .core import MotorSignature
        from .records import read_trial_file
        kind = MotionKind(kind)
        if trial_number is None:
            have = [n for (o, k, n) in self._index if o == owner and k == kind.value]
            if not have:
                raise ValidationError(f"no signature stored for {owner}/{kind.value}")
            trial_number = max(have)
        key = (owner, kind.value, trial_number)
        if key not in self._index:
            raise ValidationError(f"no signature stored for {key}")
        pos, vel = read_trial_file(self.root / self._index[key])
        if vel is None:
            vel = velocity_from_position(pos)
        return MotorSignature(owner=owner, kind=kind, position=pos, velocity=vel)
