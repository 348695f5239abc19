"""Recorded trials and their on-disk form.

Each player's recording is one plain-text file named
``P{Np}_0{Nt}_{Z}_1d.txt`` where Np is the number of players in the trial,
Nt the trial number, and Z the player tag (solo: the player's name plus the
motion kind; leader-follower dyads: L or F; joint improvisation: JI1/JI2;
group: the player's index). Columns are tab-separated: time in ms, position
in dm, and (solo only) velocity in dm/s. Numbers are written with repr-level
precision so a load/save round trip is lossless.

A per-trial JSON sidecar carries the metadata the text files cannot
(topology, roles, record rate, partial flag) so recorded trials can be
re-analyzed without the original session.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (MotionKind, Role, Topology, Trajectory, TrialType,
                   ValidationError, resample_cubic)

FILE_PATTERN = re.compile(
    r"^P(?P<np>\d+)_(?P<nt>\d+)_(?P<z>.+?)(?:_(?P<kind>sinusoidal|free))?_1d\.txt$")


def trial_filename(n_players: int, trial_number: int, z: str,
                   kind: MotionKind | None = None) -> str:
    parts = [f"P{n_players}", f"{trial_number:02d}", z]
    if kind is not None:
        parts.append(MotionKind(kind).value)
    parts.append("1d")
    return "_".join(parts) + ".txt"


def player_tag(trial_type: TrialType, index: int, roles: dict[int, Role],
               solo_owner: str = "Player") -> str:
    ttype = TrialType(trial_type)
    if ttype is TrialType.SOLO:
        return solo_owner
    if ttype.is_dyadic:
        role = roles.get(index, Role.NONE)
        if role is Role.LEADER:
            return "L"
        if role is Role.FOLLOWER:
            return "F"
        return f"JI{index}"
    return str(index)


def _fmt(x: float) -> str:
    return repr(float(x))


def write_trial_file(path: Path, position: Trajectory,
                     velocity: Trajectory | None = None) -> None:
    times = position.times_ms()
    cols = [times, position.samples]
    if velocity is not None:
        if len(velocity) != len(position):
            raise ValidationError("velocity column length differs from position")
        cols.append(velocity.samples)
    with open(path, "w", encoding="utf-8") as fh:
        for row in zip(*cols):
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


def read_trial_file(path: Path, rate_hz: float | None = None):
    """Read a trial file; returns (position, velocity-or-None).

    When rate_hz is not given it is inferred from the time column.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([float(tok) for tok in line.split()])
    if not rows:
        raise ValidationError(f"{path} holds no samples")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] not in (2, 3):
        raise ValidationError(f"{path} has {data.shape[1]} columns, expected 2 or 3")
    t = data[:, 0]
    if rate_hz is None:
        if len(t) < 2:
            raise ValidationError(f"{path}: cannot infer rate from one sample")
        rate_hz = 1000.0 / float(np.mean(np.diff(t)))
    pos = Trajectory(t0_ms=float(t[0]), rate_hz=rate_hz, samples=data[:, 1])
    vel = None
    if data.shape[1] == 3:
        vel = Trajectory(t0_ms=float(t[0]), rate_hz=rate_hz, samples=data[:, 2])
    return pos, vel


def velocity_from_position(position: Trajectory, analysis_rate_hz: float = 100.0) -> Trajectory:
    """Velocity estimate: centered finite differences on the position
    resampled to the analysis rate, sampled back onto the record grid."""
    if len(position) < 4:
        samples = np.gradient(position.samples, 1.0 / position.rate_hz)
        return Trajectory(position.t0_ms, position.rate_hz, samples)
    hi = resample_cubic(position, analysis_rate_hz)
    v_hi = np.gradient(hi.samples, 1.0 / hi.rate_hz)
    v_rec = np.interp(position.times_s(), hi.times_s(), v_hi)
    return Trajectory(position.t0_ms, position.rate_hz, v_rec)


@dataclass
class TrialRecord:
    trial_type: TrialType
    trial_number: int
    duration_s: float
    record_rate_hz: float
    topology: Topology | None
    roles: dict[int, Role]
    positions: dict[int, Trajectory]  # keyed by 1-based player index
    velocities: dict[int, Trajectory] = field(default_factory=dict)
    labels: dict[int, str] = field(default_factory=dict)
    solo_kind: MotionKind | None = None
    partial: bool = False

    def __post_init__(self):
        self.trial_type = TrialType(self.trial_type)
        if not self.positions:
            raise ValidationError("trial record holds no trajectories")
        if not self.labels:
            self.labels = {i: player_tag(self.trial_type, i, self.roles)
                           for i in self.positions}

    @property
    def n_players(self) -> int:
        return len(self.positions)

    def filename_for(self, index: int) -> str:
        kind = self.solo_kind if self.trial_type is TrialType.SOLO else None
        return trial_filename(self.n_players, self.trial_number, self.labels[index], kind)

    def meta_filename(self) -> str:
        return f"P{self.n_players}_{self.trial_number:02d}_meta.json"

    def save(self, directory: Path) -> list[Path]:
        """Write one txt per player plus the metadata sidecar."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = []
        for index in sorted(self.positions):
            path = directory / self.filename_for(index)
            write_trial_file(path, self.positions[index], self.velocities.get(index))
            paths.append(path)
        meta = {
            "trial_type": self.trial_type.value,
            "trial_number": self.trial_number,
            "duration_s": self.duration_s,
            "record_rate_hz": self.record_rate_hz,
            "topology": [[int(v) for v in row] for row in self.topology.adjacency]
            if self.topology else None,
            "roles": {str(i): r.value for i, r in sorted(self.roles.items())},
            "labels": {str(i): z for i, z in sorted(self.labels.items())},
            "solo_kind": self.solo_kind.value if self.solo_kind else None,
            "partial": self.partial,
            "files": {str(i): self.filename_for(i) for i in sorted(self.positions)},
        }
        meta_path = directory / self.meta_filename()
        meta_path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
        paths.append(meta_path)
        return paths

    @classmethod
    def load(cls, meta_path: Path) -> "TrialRecord":
        meta_path = Path(meta_path)
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        trial_type = TrialType(meta["trial_type"])
        topology = None
        if meta.get("topology") is not None:
            topology = Topology(
                n_players=len(meta["topology"]),
                adjacency=tuple(tuple(bool(v) for v in row) for row in meta["topology"]))
        rate = float(meta["record_rate_hz"])
        positions, velocities = {}, {}
        for key, fname in meta["files"].items():
            pos, vel = read_trial_file(meta_path.parent / fname, rate_hz=rate)
            positions[int(key)] = pos
            if vel is not None:
                velocities[int(key)] = vel
        return cls(
            trial_type=trial_type,
            trial_number=int(meta["trial_number"]),
            duration_s=float(meta["duration_s"]),
            record_rate_hz=rate,
            topology=topology,
            roles={int(i): Role(r) for i, r in meta.get("roles", {}).items()},
            positions=positions,
            velocities=velocities,
            labels={int(i): z for i, z in meta.get("labels", {}).items()},
            solo_kind=MotionKind(meta["solo_kind"]) if meta.get("solo_kind") else None,
            partial=bool(meta.get("partial", False)),
        )


def load_record_from_files(paths: list[Path]) -> TrialRecord:
    """Reconstruct a record from bare trial txt files (no sidecar), inferring
    type, roles and indices from the file names."""
    paths = [Path(p) for p in paths]
    if not paths:
        raise ValidationError("no trial files given")
    entries = []
    for path in paths:
        m = FILE_PATTERN.match(path.name)
        if not m:
            raise ValidationError(f"{path.name} does not follow the trial naming scheme")
        entries.append((path, m))
    n_players = int(entries[0][1]["np"])
    trial_number = int(entries[0][1]["nt"])
    if any(int(m["np"]) != n_players or int(m["nt"]) != trial_number for _, m in entries):
        raise ValidationError("files mix different trials")

    positions, velocities, labels, roles = {}, {}, {}, {}
    solo_kind = None
    if n_players == 1:
        trial_type = TrialType.SOLO
    elif n_players == 2:
        trial_type = TrialType.DYADIC_HP_HP
    else:
        trial_type = TrialType.GROUP

    for slot, (path, m) in enumerate(sorted(entries, key=lambda e: e[0].name), start=1):
        z = m["z"]
        if m["kind"]:
            solo_kind = MotionKind(m["kind"])
        if trial_type is TrialType.GROUP:
            index = int(z)
        elif trial_type.is_dyadic and z in ("L", "F"):
            index = slot
            roles[index] = Role.LEADER if z == "L" else Role.FOLLOWER
        elif trial_type.is_dyadic and z.startswith("JI"):
            index = int(z[2:])
            roles[index] = Role.JOINT_IMPROVISER
        else:
            index = slot
        pos, vel = read_trial_file(path)
        positions[index] = pos
        if vel is not None:
            velocities[index] = vel
        labels[index] = z

    duration = max(p.duration_s for p in positions.values())
    rate = next(iter(positions.values())).rate_hz
    return TrialRecord(trial_type=trial_type, trial_number=trial_number,
                       duration_s=duration, record_rate_hz=rate, topology=None,
                       roles=roles, positions=positions, velocities=velocities,
                       labels=labels, solo_kind=solo_kind)
