"""Domain types shared by every layer: visibility topologies, sampled
trajectories, motor signatures, phase series, and trajectory resampling.

Positions are expressed in decimeters (dm) on a horizontal game area of
[0, 10] dm; times are milliseconds at the storage layer and seconds inside
the solvers. All values here are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

GAME_AREA_DM = (0.0, 10.0)
GAME_CENTER_DM = 5.0

GROUP_SIZE_RANGE = (3, 7)


class ValidationError(ValueError):
    """A configuration value violates a domain invariant."""


class TrialType(str, enum.Enum):
    SOLO = "solo"
    DYADIC_HP_HP = "dyadic_hp_hp"
    DYADIC_HP_VP = "dyadic_hp_vp"
    GROUP = "group"

    @property
    def is_dyadic(self) -> bool:
        return self in (TrialType.DYADIC_HP_HP, TrialType.DYADIC_HP_VP)


class Role(str, enum.Enum):
    LEADER = "leader"
    FOLLOWER = "follower"
    JOINT_IMPROVISER = "joint"
    NONE = "none"


class MotionKind(str, enum.Enum):
    SINUSOIDAL = "sinusoidal"
    FREE = "free"


def wrap_angle(a):
    """Wrap angle(s) to [-pi, pi]; values just past pi wrap negative.

    Uses round-to-even rather than a modulo so negation symmetry is exact:
    wrap(-a) == -wrap(a) bit for bit, which keeps pairwise phase metrics
    exactly symmetric.
    """
    a = np.asarray(a, dtype=float)
    return a - 2.0 * np.pi * np.round(a / (2.0 * np.pi))


@dataclass(frozen=True)
class Topology:
    """Directed visibility relation: adjacency[i][j] means row-i player sees
    the motion of row-j player. Rows are 0-based; the 1-based player index
    used on the wire and in file names is row + 1.
    """

    n_players: int
    adjacency: tuple[tuple[bool, ...], ...]

    @property
    def undirected(self) -> bool:
        a = self.adjacency
        n = self.n_players
        return all(a[i][j] == a[j][i] for i in range(n) for j in range(i + 1, n))

    def as_array(self) -> np.ndarray:
        return np.array(self.adjacency, dtype=bool)

    def sees(self, i: int, j: int) -> bool:
        return self.adjacency[i][j]

    def to_text(self) -> str:
        """The administrator matrix form: n lines of n space-separated 0/1."""
        return "\n".join(" ".join("1" if v else "0" for v in row) for row in self.adjacency)


def topology_from_text(text: str, trial_type: TrialType) -> Topology:
    rows = []
    for line in text.strip().splitlines():
        line = line.strip()
        if not line:
            continue
        try:
            rows.append([bool(int(tok)) for tok in line.split()])
        except ValueError as exc:
            raise ValidationError(f"topology line is not 0/1 digits: {line!r}") from exc
    return validate_topology(rows, trial_type)


def validate_topology(raw, trial_type: TrialType) -> Topology:
    """Check a raw 0/1 visibility matrix and classify it.

    Rejects self-edges, player counts outside the range allowed for the
    trial type, and (for group trials) isolated players with neither
    incoming nor outgoing edges.
    """
    mat = np.asarray(raw)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValidationError(f"topology matrix must be square, got shape {mat.shape}")
    n = int(mat.shape[0])
    mat = mat.astype(bool)

    if np.any(np.diag(mat)):
        raise ValidationError("topology has self-edges; the diagonal must be all 0")

    ttype = TrialType(trial_type)
    if ttype is TrialType.SOLO:
        if n != 1:
            raise ValidationError(f"solo trials have exactly 1 player, got {n}")
    elif ttype.is_dyadic:
        if n != 2:
            raise ValidationError(f"dyadic trials have exactly 2 players, got {n}")
    else:
        lo, hi = GROUP_SIZE_RANGE
        if not lo <= n <= hi:
            raise ValidationError(f"group trials need {lo}..{hi} players, got {n}")
        isolated = ~(mat.any(axis=1) | mat.any(axis=0))
        if isolated.any():
            bad = [int(i) + 1 for i in np.flatnonzero(isolated)]
            raise ValidationError(f"players {bad} have no edges in either direction")

    return Topology(n_players=n, adjacency=tuple(tuple(bool(v) for v in row) for row in mat))


def neighbors_of(topology: Topology, i: int) -> tuple[int, ...]:
    """Indices (0-based rows) visible to player at row i, ascending."""
    if not 0 <= i < topology.n_players:
        raise IndexError(f"row {i} out of range for {topology.n_players} players")
    return tuple(j for j, v in enumerate(topology.adjacency[i]) if v)


def complete_topology(n: int) -> Topology:
    a = np.ones((n, n), dtype=bool)
    np.fill_diagonal(a, False)
    return Topology(n, tuple(tuple(bool(v) for v in row) for row in a))


def ring_topology(n: int) -> Topology:
    a = np.zeros((n, n), dtype=bool)
    for i in range(n):
        a[i, (i + 1) % n] = a[i, (i - 1) % n] = True
    return Topology(n, tuple(tuple(bool(v) for v in row) for row in a))


def path_topology(n: int) -> Topology:
    a = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = True
    return Topology(n, tuple(tuple(bool(v) for v in row) for row in a))


def star_topology(n: int, center: int = 0) -> Topology:
    a = np.zeros((n, n), dtype=bool)
    for i in range(n):
        if i != center:
            a[i, center] = a[center, i] = True
    return Topology(n, tuple(tuple(bool(v) for v in row) for row in a))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniformly sampled 1-D position series.

    t0_ms is the timestamp of the first sample; spacing is 1/rate_hz.
    """

    t0_ms: float
    rate_hz: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1 or samples.size == 0:
            raise ValidationError("trajectory needs a non-empty 1-D sample array")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("trajectory samples must be finite")
        if not (self.rate_hz > 0 and math.isfinite(self.rate_hz)):
            raise ValidationError(f"rate must be positive, got {self.rate_hz}")
        samples = samples.copy()
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return int(self.samples.size)

    @property
    def duration_s(self) -> float:
        return (len(self) - 1) / self.rate_hz

    def times_s(self) -> np.ndarray:
        return self.t0_ms / 1000.0 + np.arange(len(self)) / self.rate_hz

    def times_ms(self) -> np.ndarray:
        return self.t0_ms + np.arange(len(self)) * (1000.0 / self.rate_hz)


def resample_cubic(traj: Trajectory, target_rate_hz: float) -> Trajectory:
    """Resample through a cubic spline (not-a-knot ends, so polynomials up
    to degree 3 are reproduced exactly) onto a uniform grid that spans
    exactly the original time range.

    The output step count is round(duration * target_rate), so the first
    and last timestamps are preserved; the realized rate equals the target
    whenever original and target grids are commensurate (10 Hz or 13 Hz
    records onto 100 Hz both are) and is within half a step of it otherwise.
    """
    if target_rate_hz <= 0:
        raise ValidationError(f"target rate must be positive, got {target_rate_hz}")
    if len(traj) < 4:
        raise ValidationError(f"cubic resampling needs >= 4 samples, got {len(traj)}")
    t = traj.times_s()
    spline = CubicSpline(t, traj.samples, bc_type="not-a-knot")
    duration = t[-1] - t[0]
    m = max(1, round(duration * target_rate_hz))
    grid = t[0] + np.arange(m + 1) * (duration / m)
    return Trajectory(t0_ms=traj.t0_ms, rate_hz=m / duration, samples=spline(grid))


@dataclass(frozen=True, eq=False)
class PhaseSeries:
    """Instantaneous phase in radians, wrapped to [-pi, pi]."""

    rate_hz: float
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValidationError("phase series needs a non-empty 1-D array")
        if not np.all(np.isfinite(values)):
            raise ValidationError("phase values must be finite")
        if np.any(values < -np.pi) or np.any(values > np.pi):
            raise ValidationError("phase values must lie in [-pi, pi]")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class MotorSignature:
    """A player's recorded position/velocity profile from a solo trial."""

    owner: str
    kind: MotionKind
    position: Trajectory
    velocity: Trajectory

    def __post_init__(self):
        if len(self.position) != len(self.velocity):
            raise ValidationError("signature position and velocity lengths differ")
        if self.position.rate_hz != self.velocity.rate_hz:
            raise ValidationError("signature position and velocity rates differ")
        object.__setattr__(self, "kind", MotionKind(self.kind))
