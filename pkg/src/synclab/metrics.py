"""Coordination metrics: instantaneous phase via the analytic signal,
relative phase, dyadic and group synchronization indices, RMS position
error, and relative-phase distributions.

Phases come from the frequency-domain analytic signal of the mean-centered
position (negative frequencies zeroed, positive doubled, FFT length the
next power of two). A fraction of each end of the phase series is discarded
to keep FFT edge artifacts out of the indices. All trial analysis happens
on data resampled to 100 Hz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import (GAME_AREA_DM, PhaseSeries, Topology, Trajectory, TrialType,
                   ValidationError, resample_cubic, wrap_angle)
from .records import TrialRecord

ANALYSIS_RATE_HZ = 100.0
EDGE_DISCARD_FRAC = 0.05
MIN_PHASE_SAMPLES = 64
DEFAULT_PDF_BINS = 24
DEGENERATE_CLUSTER_TOL = 1e-12
POSITION_RANGE_DM = GAME_AREA_DM[1] - GAME_AREA_DM[0]


def _values(series) -> np.ndarray:
    if isinstance(series, PhaseSeries):
        return series.values
    return np.asarray(series, dtype=float)


def analytic_phase(traj: Trajectory, edge_discard_frac: float = EDGE_DISCARD_FRAC) -> PhaseSeries:
    """Instantaneous phase of a trajectory via the analytic signal."""
    x = traj.samples
    n = len(x)
    if n < MIN_PHASE_SAMPLES:
        raise ValidationError(f"phase estimation needs >= {MIN_PHASE_SAMPLES} samples, got {n}")
    if np.ptp(x) == 0.0:
        raise ValidationError("phase of a constant signal is undefined")
    if not 0.0 <= edge_discard_frac < 0.5:
        raise ValidationError(f"edge discard fraction must be in [0, 0.5), got {edge_discard_frac}")

    centered = x - x.mean()
    nfft = 1 << (n - 1).bit_length()
    spectrum = np.fft.fft(centered, nfft)
    weights = np.zeros(nfft)
    weights[0] = 1.0
    weights[nfft // 2] = 1.0
    weights[1:nfft // 2] = 2.0
    analytic = np.fft.ifft(spectrum * weights)[:n]
    phase = np.angle(analytic)

    k = int(n * edge_discard_frac)
    if k:
        phase = phase[k:n - k]
    return PhaseSeries(rate_hz=traj.rate_hz, values=wrap_angle(phase))


def relative_phase(ph_h: PhaseSeries, ph_k: PhaseSeries) -> PhaseSeries:
    """Wrapped phase difference h minus k (leader first by convention)."""
    if len(ph_h) != len(ph_k):
        raise ValidationError(f"phase series lengths differ: {len(ph_h)} vs {len(ph_k)}")
    if ph_h.rate_hz != ph_k.rate_hz:
        raise ValidationError("phase series rates differ")
    return PhaseSeries(rate_hz=ph_h.rate_hz, values=wrap_angle(ph_h.values - ph_k.values))


def dyadic_sync_index(phi) -> float:
    """Mean resultant length of the relative phase, in [0, 1]."""
    values = _values(phi)
    if values.size == 0:
        raise ValidationError("dyadic sync index of an empty series")
    return float(np.abs(np.exp(1j * values).mean()))


def rms_position_error(traj_h, traj_k, position_range_dm: float = POSITION_RANGE_DM) -> float:
    """RMS position mismatch normalized by the admissible range; in [0, 1]
    for in-range signals (multiply by 100 to report a percentage)."""
    xh = traj_h.samples if isinstance(traj_h, Trajectory) else np.asarray(traj_h, dtype=float)
    xk = traj_k.samples if isinstance(traj_k, Trajectory) else np.asarray(traj_k, dtype=float)
    if xh.shape != xk.shape:
        raise ValidationError(f"trajectory lengths differ: {xh.shape} vs {xk.shape}")
    if not position_range_dm > 0:
        raise ValidationError(f"position range must be positive, got {position_range_dm}")
    return float(np.sqrt(np.mean((xh - xk) ** 2)) / position_range_dm)


class ClusterPhase(NamedTuple):
    q_complex: complex
    q_angle: float
    degenerate: bool


def cluster_phase(thetas) -> ClusterPhase:
    """Kuramoto order parameter of one time slice of N >= 2 phases."""
    values = _values(thetas)
    if values.size < 2:
        raise ValidationError("cluster phase needs at least 2 agents")
    q_complex = complex(np.exp(1j * values).mean())
    if abs(q_complex) < DEGENERATE_CLUSTER_TOL:
        return ClusterPhase(q_complex, 0.0, True)
    return ClusterPhase(q_complex, math.atan2(q_complex.imag, q_complex.real), False)


@dataclass
class GroupSync:
    rho_g_series: np.ndarray
    rho_g_mean: float
    phi_bar_complex: np.ndarray  # per-agent time-averaged relative-phase phasor
    phi_bar: np.ndarray          # its angle per agent


def group_sync_series(phases: list[PhaseSeries]) -> GroupSync:
    """Group synchronization from per-agent phase series.

    Per time step the group phase q(t) is the order-parameter angle; each
    agent's deviation phi_k(t) = theta_k(t) - q(t) is averaged over time as
    a phasor to get its own offset phi_bar_k, and rho_g(t) is the resultant
    length of the offset-corrected deviations.
    """
    if len(phases) < 3:
        raise ValidationError(f"group sync needs >= 3 agents, got {len(phases)}")
    lengths = {len(p) for p in phases}
    if len(lengths) != 1:
        raise ValidationError(f"phase series lengths differ: {sorted(lengths)}")
    if len({p.rate_hz for p in phases}) != 1:
        raise ValidationError("phase series rates differ")

    theta = np.vstack([p.values for p in phases])  # (N, T)
    phasors = np.exp(1j * theta)
    q = np.angle(phasors.mean(axis=0))             # (T,)
    z = phasors * np.exp(-1j * q)                  # e^{j(theta_k - q)}
    phi_bar_complex = z.mean(axis=1)               # (N,)
    phi_bar = np.angle(phi_bar_complex)
    rho_series = np.abs((z * np.exp(-1j * phi_bar)[:, None]).mean(axis=0))
    return GroupSync(rho_g_series=rho_series,
                     rho_g_mean=float(rho_series.mean()),
                     phi_bar_complex=phi_bar_complex,
                     phi_bar=phi_bar)


@dataclass
class PhaseHistogram:
    bin_edges: np.ndarray  # n_bins + 1 edges over [-pi, pi]
    density: np.ndarray    # mass / bin width; sums to 1 when multiplied by widths


def relative_phase_pdf(phi, n_bins: int = DEFAULT_PDF_BINS) -> PhaseHistogram:
    values = _values(phi)
    if values.size == 0:
        raise ValidationError("relative-phase pdf of an empty series")
    if n_bins < 8:
        raise ValidationError(f"need at least 8 bins, got {n_bins}")
    density, edges = np.histogram(values, bins=n_bins, range=(-np.pi, np.pi), density=True)
    return PhaseHistogram(bin_edges=edges, density=density)


@dataclass
class DyadReport:
    leader_index: int
    follower_index: int
    rho_d: float
    eps: float
    phi_series: PhaseSeries
    phi_pdf: PhaseHistogram
    partial: bool = False


@dataclass
class GroupReport:
    player_indices: list[int]
    rho_g_series: np.ndarray
    rho_g_mean: float
    phi_bar: dict[int, float]
    phi_bar_complex: dict[int, complex]
    pairwise_rho_d: dict[tuple[int, int], float]
    topology: Topology | None = None
    partial: bool = False


def _resampled_positions(record: TrialRecord) -> dict[int, np.ndarray]:
    out = {}
    for index, traj in sorted(record.positions.items()):
        out[index] = resample_cubic(traj, ANALYSIS_RATE_HZ)
    n = min(len(t) for t in out.values())
    return {i: Trajectory(t.t0_ms, t.rate_hz, t.samples[:n]) for i, t in out.items()}


def analyze_trial(record: TrialRecord,
                  edge_discard_frac: float = EDGE_DISCARD_FRAC,
                  position_range_dm: float = POSITION_RANGE_DM):
    """Full offline analysis of a recorded trial: DyadReport for dyadic
    trials, GroupReport for group trials."""
    if record.trial_type is TrialType.SOLO:
        raise ValidationError("solo trials have no coordination metrics")
    resampled = _resampled_positions(record)
    phases = {i: analytic_phase(t, edge_discard_frac) for i, t in resampled.items()}

    if record.trial_type.is_dyadic:
        indices = sorted(resampled)
        leader = next((i for i in indices if record.roles.get(i) == "leader"), indices[0])
        follower = next(i for i in indices if i != leader)
        phi = relative_phase(phases[leader], phases[follower])
        return DyadReport(
            leader_index=leader,
            follower_index=follower,
            rho_d=dyadic_sync_index(phi),
            eps=rms_position_error(resampled[leader], resampled[follower], position_range_dm),
            phi_series=phi,
            phi_pdf=relative_phase_pdf(phi),
            partial=record.partial,
        )

    indices = sorted(resampled)
    gs = group_sync_series([phases[i] for i in indices])
    pairwise = {}
    for a_pos, h in enumerate(indices):
        for k in indices[a_pos + 1:]:
            rho = dyadic_sync_index(relative_phase(phases[h], phases[k]))
            pairwise[(h, k)] = rho
            pairwise[(k, h)] = rho
    return GroupReport(
        player_indices=indices,
        rho_g_series=gs.rho_g_series,
        rho_g_mean=gs.rho_g_mean,
        phi_bar={i: float(gs.phi_bar[a]) for a, i in enumerate(indices)},
        phi_bar_complex={i: complex(gs.phi_bar_complex[a]) for a, i in enumerate(indices)},
        pairwise_rho_d=pairwise,
        topology=record.topology,
        partial=record.partial,
    )


def format_report(report) -> str:
    """UTF-8 table form of a report (pairwise matrix rows marked with `*`
    between topologically connected players)."""
    if isinstance(report, DyadReport):
        lines = [
            f"dyadic trial (leader={report.leader_index}, follower={report.follower_index})"
            + (" [partial]" if report.partial else ""),
            f"  rho_d = {report.rho_d:.4f}",
            f"  eps   = {report.eps * 100:.2f} %",
            f"  mean relative phase = {circular_mean(report.phi_series.values):+.4f} rad",
        ]
        return "\n".join(lines)

    topo = report.topology
    ids = report.player_indices
    lines = [f"group trial, {len(ids)} players"
             + (" [partial]" if report.partial else ""),
             f"  rho_g = {report.rho_g_mean:.4f}",
             "  pairwise rho_d (* = topologically connected):"]
    header = "       " + "".join(f"{i:>9d}" for i in ids)
    lines.append(header)
    for h in ids:
        cells = []
        for k in ids:
            if h == k:
                cells.append(f"{'-':>9}")
                continue
            mark = ""
            if topo is not None and (topo.sees(h - 1, k - 1) or topo.sees(k - 1, h - 1)):
                mark = "*"
            cells.append(f"{report.pairwise_rho_d[(h, k)]:>8.4f}{mark or ' '}")
        lines.append(f"{h:>7d}" + "".join(cells))
    return "\n".join(lines)


def summary_lines(report) -> list[str]:
    """Machine-readable per-trial summary: one `name<TAB>value` per line."""
    if isinstance(report, DyadReport):
        out = [f"rho_d\t{report.rho_d!r}",
               f"eps\t{report.eps!r}",
               f"phi_mean\t{circular_mean(report.phi_series.values)!r}"]
        return out
    out = [f"rho_g\t{report.rho_g_mean!r}"]
    for i in report.player_indices:
        out.append(f"phi_bar.{i}\t{report.phi_bar[i]!r}")
    for h in report.player_indices:
        for k in report.player_indices:
            if h < k:
                out.append(f"rho_d.{h}.{k}\t{report.pairwise_rho_d[(h, k)]!r}")
    return out


def circular_mean(angles) -> float:
    z = np.exp(1j * _values(angles)).mean()
    return float(np.angle(z))
