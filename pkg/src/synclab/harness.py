"""Headless experiment runner: scripted human surrogates drive the session
core in-process, so every experiment type runs deterministically without
sockets or real players.

Surrogate sources:
  * sinusoid     — fixed-amplitude sine around the area center;
  * signature    — playback of a stored motor signature;
  * coupled_hkb  — an HKB oscillator with proportional-derivative coupling
                   toward the mean of the neighbors visible in its frames,
                   the default human-like group member.

All randomness (initial conditions, natural-frequency jitter, position
jitter) flows from per-player integer seeds, so a (config, seeds) pair maps
to byte-identical trial files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import TrialConfig
from .core import (GAME_CENTER_DM, MotorSignature, Role, Topology, TrialType,
                   ValidationError, complete_topology)
from .dynamics import (ControllerKind, ControllerParams, DynamicsParams,
                       SignaturePlayer, VirtualPlayerConfig, inner_dynamics,
                       synth_sinusoid_signature)
from .metrics import analyze_trial
from .records import TrialRecord
from .session import TICK_HZ, SessionCore, SessionPhase, clamp_position

SURROGATE_SUBSTEPS = 2  # 100 Hz internal stepping, like the virtual players
DEFAULT_COUPLING_GAIN = 0.8
DEFAULT_NOISE_STD_DM = 0.05
DEFAULT_FREQ_JITTER = 0.15


@dataclass(frozen=True)
class SinusoidSource:
    amplitude_dm: float = 1.0
    freq_hz: float = 0.25
    phase_rad: float = 0.0


@dataclass(frozen=True)
class SignatureSource:
    signature: MotorSignature


@dataclass(frozen=True)
class CoupledHkbSource:
    dynamics: DynamicsParams = field(default_factory=DynamicsParams)
    coupling_gain: float = DEFAULT_COUPLING_GAIN


@dataclass(frozen=True)
class ScriptedPlayer:
    source: SinusoidSource | SignatureSource | CoupledHkbSource
    noise_std_dm: float = 0.0
    seed: int = 0


class _ScriptedRuntime:
    """Produces one scripted player's position at each server tick."""

    def __init__(self, spec: ScriptedPlayer):
        self.spec = spec
        self.rng = np.random.default_rng(spec.seed)
        self.player: SignaturePlayer | None = None
        if isinstance(spec.source, SignatureSource):
            self.player = SignaturePlayer(spec.source.signature, tick_hz=TICK_HZ,
                                          offset=GAME_CENTER_DM)
        self.x = 0.0
        self.v = 0.0
        if isinstance(spec.source, CoupledHkbSource):
            self.x = float(self.rng.uniform(-1.0, 1.0))
            self.v = float(self.rng.uniform(-0.5, 0.5))
        self._last_peer_mean: float | None = None
        self._peer_hist: list[float] = []

    PEER_HISTORY = 6  # velocity of the observed peer mean over ~0.1 s

    def observe(self, frame: dict, tick_dt: float) -> None:
        peers = frame.get("peers", {})
        if not peers:
            return
        mean = sum(peers.values()) / len(peers)
        self._peer_hist.append(mean)
        if len(self._peer_hist) > self.PEER_HISTORY:
            self._peer_hist.pop(0)
        self._last_peer_mean = mean

    def _peer_velocity(self, tick_dt: float) -> float:
        if len(self._peer_hist) < 2:
            return 0.0
        span = (len(self._peer_hist) - 1) * tick_dt
        return (self._peer_hist[-1] - self._peer_hist[0]) / span

    def position_at(self, tick_index: int, tick_dt: float) -> float:
        src = self.spec.source
        t = tick_index * tick_dt
        if isinstance(src, SinusoidSource):
            x = src.amplitude_dm * math.sin(2 * math.pi * src.freq_hz * t + src.phase_rad)
        elif isinstance(src, SignatureSource):
            x, _ = self.player.at_tick(tick_index)
        else:
            x = self._step_coupled(tick_dt)
        if self.spec.noise_std_dm > 0:
            x += self.spec.noise_std_dm * float(self.rng.standard_normal())
        return clamp_position(x + GAME_CENTER_DM)

    def _step_coupled(self, tick_dt: float) -> float:
        src = self.spec.source
        out = self.x
        y = self._last_peer_mean - GAME_CENTER_DM if self._last_peer_mean is not None else None
        ydot = self._peer_velocity(tick_dt)
        dt = tick_dt / SURROGATE_SUBSTEPS

        def accel(x, v):
            a = inner_dynamics(x, v, src.dynamics)
            if y is not None:
                a += src.coupling_gain * ((y - x) + (ydot - v))
            return a

        x, v = self.x, self.v
        for _ in range(SURROGATE_SUBSTEPS):
            k1x, k1v = v, accel(x, v)
            k2x, k2v = v + dt / 2 * k1v, accel(x + dt / 2 * k1x, v + dt / 2 * k1v)
            k3x, k3v = v + dt / 2 * k2v, accel(x + dt / 2 * k2x, v + dt / 2 * k2v)
            k4x, k4v = v + dt * k3v, accel(x + dt * k3x, v + dt * k3v)
            x += dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
            v += dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
        self.x, self.v = x, v
        return out


@dataclass
class HeadlessResult:
    record: TrialRecord
    report: object
    files: list[Path] = field(default_factory=list)
    frames_seen: dict[int, list[dict]] = field(default_factory=dict)


def run_headless(config: TrialConfig, scripted: dict[int, ScriptedPlayer],
                 signatures: dict[int, MotorSignature] | None = None,
                 data_dir: Path | None = None,
                 capture_frames: bool = False,
                 trial_number: int = 1,
                 analyze: bool = True,
                 signature_store=None) -> HeadlessResult:
    """Run one trial end to end with scripted humans standing in for every
    non-VP index. Deterministic in (config, scripted seeds)."""
    human_indices = [i for i in range(1, config.n_players + 1) if i not in config.vp_configs]
    if sorted(scripted) != human_indices:
        raise ValidationError(f"scripted players must cover indices {human_indices}, "
                              f"got {sorted(scripted)}")

    core = SessionCore(config, trial_number=trial_number, signatures=signatures,
                       signature_store=signature_store)
    runtimes = {i: _ScriptedRuntime(spec) for i, spec in scripted.items()}
    for i in human_indices:
        ack = core.join(i, name=f"scripted{i}")
        if ack["t"] != "joined":
            raise ValidationError(f"scripted join failed: {ack}")
    core.outbox.clear()
    core.start_trial()

    frames_seen: dict[int, list[dict]] = {i: [] for i in human_indices}
    tick_dt = core.tick_dt
    running_tick = 0
    while core.phase is not SessionPhase.FINISHED:
        if core.phase is SessionPhase.RUNNING:
            for i, rt in runtimes.items():
                core.handle_pos(i, running_tick * tick_dt * 1000.0,
                                rt.position_at(running_tick, tick_dt))
            running_tick += 1
        core.tick()
        for index, msg in core.outbox:
            if msg.get("t") == "frame" and index in runtimes:
                runtimes[index].observe(msg, tick_dt)
                if capture_frames:
                    frames_seen[index].append(msg)
        core.outbox.clear()

    record = core.to_record()
    files: list[Path] = []
    if data_dir is not None:
        files = record.save(Path(data_dir))
    report = None
    if analyze and config.trial_type is not TrialType.SOLO:
        report = analyze_trial(record)
    return HeadlessResult(record=record, report=report, files=files,
                          frames_seen=frames_seen)


# ---- scenario files ---------------------------------------------------------


def parse_scenario(text: str, signature_store=None):
    """Scenario file: a trial config plus `player.N.*` scripted-player lines.

    Sources: `sinusoid` (amplitude, freq, phase), `signature` (signature=
    owner:kind, resolved from the store), `coupled_hkb` (gain, omega and the
    other oscillator coefficients). Every player takes `noise` (std dm) and
    `seed`. Returns (config, scripted_players).
    """
    from .config import parse_trial_config

    config_lines, player_entries = [], {}
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("player."):
            key, _, value = line.partition("=")
            parts = key.split(".")
            if len(parts) != 3:
                raise ValidationError(f"bad scenario key {key!r}")
            player_entries.setdefault(int(parts[1]), {})[parts[2]] = value.strip()
        else:
            config_lines.append(raw)
    config = parse_trial_config("\n".join(config_lines))

    scripted = {}
    for index, entries in sorted(player_entries.items()):
        kind = entries.get("source", "sinusoid")
        if kind == "sinusoid":
            source = SinusoidSource(
                amplitude_dm=float(entries.get("amplitude", 1.0)),
                freq_hz=float(entries.get("freq", 0.25)),
                phase_rad=float(entries.get("phase", 0.0)))
        elif kind == "signature":
            ref = entries.get("signature")
            if not ref or signature_store is None:
                raise ValidationError(
                    f"player {index}: signature sources need signature=owner:kind "
                    f"and a signature store")
            owner, _, sig_kind = ref.partition(":")
            source = SignatureSource(signature_store.load(owner, sig_kind))
        elif kind == "coupled_hkb":
            dyn = DynamicsParams(
                model="hkb",
                alpha=float(entries.get("alpha", 1.0)),
                beta=float(entries.get("beta", 1.0)),
                gamma=float(entries.get("gamma", 1.0)),
                omega=float(entries.get("omega", 2 * math.pi * 0.25)))
            source = CoupledHkbSource(dynamics=dyn,
                                      coupling_gain=float(entries.get("gain",
                                                                      DEFAULT_COUPLING_GAIN)))
        else:
            raise ValidationError(f"player {index}: unknown source {kind!r}")
        scripted[index] = ScriptedPlayer(source=source,
                                         noise_std_dm=float(entries.get("noise", 0.0)),
                                         seed=int(entries.get("seed", index)))
    return config, scripted


def run_scenario(text: str, data_dir: Path | None = None,
                 signature_store=None, trial_number: int = 1) -> HeadlessResult:
    """Run a scenario file end to end; returns record, report, and files."""
    config, scripted = parse_scenario(text, signature_store)
    return run_headless(config, scripted, data_dir=data_dir,
                        trial_number=trial_number, signature_store=signature_store)


# ---- scenario builders -----------------------------------------------------


def surrogate_group(topology: Topology, seed: int,
                    coupling_gain: float = DEFAULT_COUPLING_GAIN,
                    noise_std_dm: float = DEFAULT_NOISE_STD_DM,
                    freq_jitter: float = DEFAULT_FREQ_JITTER,
                    indices: list[int] | None = None) -> dict[int, ScriptedPlayer]:
    """Coupled-HKB surrogates for every (or the given) player index, each
    with a seeded natural-frequency perturbation."""
    indices = indices or list(range(1, topology.n_players + 1))
    players = {}
    for i in indices:
        rng = np.random.default_rng((seed, i, 1))  # stream distinct from the runtime's
        omega = 2 * math.pi * 0.25 * (1.0 + freq_jitter * float(rng.uniform(-1, 1)))
        dyn = DynamicsParams(model="hkb", alpha=1.0, beta=1.0, gamma=1.0, omega=omega)
        players[i] = ScriptedPlayer(
            source=CoupledHkbSource(dynamics=dyn, coupling_gain=coupling_gain),
            noise_std_dm=noise_std_dm,
            seed=seed * 1000 + i,
        )
    return players


def group_trial_config(topology: Topology, duration_s: float = 30.0,
                       vp_configs: dict[int, VirtualPlayerConfig] | None = None,
                       roles: dict[int, Role] | None = None) -> TrialConfig:
    return TrialConfig(trial_type=TrialType.GROUP, duration_s=duration_s,
                       topology=topology, roles=roles or {},
                       vp_configs=vp_configs or {})


def run_group_trial(topology: Topology, seed: int, duration_s: float = 30.0,
                    vp_configs: dict[int, VirtualPlayerConfig] | None = None,
                    signatures: dict[int, MotorSignature] | None = None,
                    **surrogate_kw) -> HeadlessResult:
    config = group_trial_config(topology, duration_s, vp_configs)
    human = [i for i in range(1, topology.n_players + 1)
             if i not in (vp_configs or {})]
    scripted = surrogate_group(topology, seed, indices=human, **surrogate_kw)
    return run_headless(config, scripted, signatures=signatures)


@dataclass
class SweepRow:
    label: str
    rho_g_mean: float
    rho_g_std: float
    per_trial: list[float]


def sweep(topologies: dict[str, Topology], trials_per_topology: int,
          seed_base: int = 0, duration_s: float = 30.0,
          **surrogate_kw) -> list[SweepRow]:
    """Mean and std of the group sync index per topology over repeated
    seeded trials."""
    rows = []
    for label, topology in topologies.items():
        vals = []
        for k in range(trials_per_topology):
            result = run_group_trial(topology, seed=seed_base + k,
                                     duration_s=duration_s, **surrogate_kw)
            vals.append(result.report.rho_g_mean)
        rows.append(SweepRow(label=label,
                             rho_g_mean=float(np.mean(vals)),
                             rho_g_std=float(np.std(vals)),
                             per_trial=vals))
    return rows


def format_sweep(rows: list[SweepRow]) -> str:
    width = max(len(r.label) for r in rows)
    lines = [f"{'topology':<{width}}  rho_g (mean +/- std over trials)"]
    for r in rows:
        lines.append(f"{r.label:<{width}}  {r.rho_g_mean:.4f} +/- {r.rho_g_std:.4f}")
    return "\n".join(lines)


# ---- canned experiments mirrored from the study design ---------------------


def vp_attached_topology(n_humans: int, vp_links: list[int]) -> Topology:
    """All-to-all among the humans plus undirected links between the extra
    virtual player (index n_humans+1) and the given human indices."""
    n = n_humans + 1
    a = np.ones((n, n), dtype=bool)
    np.fill_diagonal(a, False)
    a[n - 1, :] = False
    a[:, n - 1] = False
    for i in vp_links:
        a[n - 1, i - 1] = a[i - 1, n - 1] = True
    return Topology(n, tuple(tuple(bool(v) for v in row) for row in a))


VP_LEADER_SIGNATURE_FREQ_HZ = 0.3  # a tempo off the surrogates' 0.25 Hz
VP_LEADER_SIGNATURE_AMP_DM = 0.8


def run_vp_role_trial(mode: str | None, seed: int, duration_s: float = 30.0,
                      n_humans: int = 4) -> HeadlessResult:
    """One trial of the virtual-player role study: `None` runs the plain
    all-to-all human group; "follower" attaches an adaptive-follower VP to
    every human; "leader" attaches an adaptive-leader VP (driven by a
    sinusoid signature at its own tempo) to one human."""
    if mode is None:
        return run_group_trial(complete_topology(n_humans), seed=seed,
                               duration_s=duration_s)
    vp_index = n_humans + 1
    links = list(range(1, n_humans + 1)) if mode == "follower" else [1]
    topology = vp_attached_topology(n_humans, links)
    vp = VirtualPlayerConfig(
        controller=ControllerParams(controller=ControllerKind.ADAPTIVE, mode=Role(mode)))
    signatures = None
    if mode == "leader":
        sig = synth_sinusoid_signature(
            f"vp{vp_index}", VP_LEADER_SIGNATURE_AMP_DM, VP_LEADER_SIGNATURE_FREQ_HZ,
            duration_s=duration_s + 1.0, center_dm=GAME_CENTER_DM)
        signatures = {vp_index: sig}
    config = group_trial_config(topology, duration_s, vp_configs={vp_index: vp},
                                roles={vp_index: Role(mode)})
    scripted = surrogate_group(topology, seed=seed,
                               indices=list(range(1, n_humans + 1)))
    return run_headless(config, scripted, signatures=signatures)


def dyad_leader_vp_follower(seed: int = 0, duration_s: float = 30.0,
                            amplitude_dm: float = 1.0,
                            freq_hz: float = 0.25) -> HeadlessResult:
    """Scripted sinusoid leader at index 1 with a PD-follower VP at index 2."""
    from .core import validate_topology
    from .dynamics import pd_follower_params
    topology = validate_topology([[0, 1], [1, 0]], TrialType.DYADIC_HP_VP)
    vp = VirtualPlayerConfig(controller=pd_follower_params())
    sig = synth_sinusoid_signature("vp2", amplitude_dm, freq_hz, duration_s=duration_s + 1,
                                   center_dm=GAME_CENTER_DM)
    config = TrialConfig(trial_type=TrialType.DYADIC_HP_VP, duration_s=duration_s,
                         topology=topology, roles={1: Role.LEADER, 2: Role.FOLLOWER},
                         vp_configs={2: vp})
    leader = ScriptedPlayer(source=SinusoidSource(amplitude_dm, freq_hz), seed=seed)
    return run_headless(config, {1: leader}, signatures={2: sig})
