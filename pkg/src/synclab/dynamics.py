"""Virtual-player engine: inner dynamics models, coupling controllers,
neighbor aggregation, and deterministic fixed-step integration.

A virtual player is a second-order system  x_dd = f(x, x_d) + u  where f is
one of three inner-dynamics models (harmonic, HKB, double integrator) and u
is a coupling law (PD or adaptive, in leader or follower mode) driven by the
average position/velocity of the visible neighbors and, for signature-based
laws, by a prerecorded motor signature (sigma, sigma_d).

Positions here are in the centered frame (game position minus the area
center) so that the oscillators' rest point is the middle of the screen;
the session layer converts both ways.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import (MotionKind, MotorSignature, Role, Trajectory,
                   ValidationError, resample_cubic)

# Magnitude floor for the adaptive parameters: the adaptation laws divide by
# psi and chi, so their magnitudes are never allowed below this.
ADAPTIVE_FLOOR = 1e-3


# Internal integration tick for virtual players.
VP_TICK_HZ = 100.0

SIGNATURE_FADE_S = 0.5


class DegenerateAdaptationError(RuntimeError):
    """An adaptive parameter fell below the magnitude floor."""


class NonFiniteStateError(RuntimeError):
    """Integration produced a non-finite state; the trial must abort."""


class DynamicsModel(str, enum.Enum):
    HARMONIC = "harmonic"
    HKB = "hkb"
    DOUBLE_INTEGRATOR = "double_integrator"


class ControllerKind(str, enum.Enum):
    PD = "pd"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class DynamicsParams:
    model: DynamicsModel = DynamicsModel.HKB
    # harmonic: viscous damping a, elastic coefficient b
    a: float = 1.0
    b: float = 4.0
    # HKB: damping shape alpha/beta/gamma, frequency-setting omega
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    omega: float = 2.0 * math.pi * 0.25

    def __post_init__(self):
        object.__setattr__(self, "model", DynamicsModel(self.model))
        if self.model is DynamicsModel.HKB and not self.omega > 0:
            raise ValidationError(f"hkb needs omega > 0, got {self.omega}")
        if self.model is DynamicsModel.HARMONIC and (self.b <= 0 or self.a < 0):
            raise ValidationError(f"harmonic needs b > 0 and a >= 0, got a={self.a} b={self.b}")


@dataclass(frozen=True)
class ControllerParams:
    controller: ControllerKind = ControllerKind.PD
    mode: Role = Role.FOLLOWER
    # PD gains: position tracking kp, signature-velocity tracking ksigma
    kp: float = 2.0
    ksigma: float = 0.2
    # adaptive gains; c sized so the exponential-weighted position spring
    # entrains a ~0.25 Hz ensemble without the adaptive terms' help
    c: float = 3.0
    delta: float = 1.0
    k: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "controller", ControllerKind(self.controller))
        object.__setattr__(self, "mode", Role(self.mode))
        if self.mode not in (Role.LEADER, Role.FOLLOWER):
            raise ValidationError(f"controller mode must be leader or follower, got {self.mode}")
        for name in ("kp", "ksigma", "c", "delta", "k"):
            if getattr(self, name) < 0:
                raise ValidationError(f"gain {name} must be nonnegative")
        if self.controller is ControllerKind.ADAPTIVE and not self.delta > 0:
            raise ValidationError("adaptive control needs delta > 0")


def pd_leader_params(**kw) -> ControllerParams:
    """PD weighted toward signature-velocity tracking."""
    return ControllerParams(controller=ControllerKind.PD, mode=Role.LEADER,
                            kp=0.2, ksigma=2.0, **kw)


def pd_follower_params(**kw) -> ControllerParams:
    """PD weighted toward neighbor-position tracking."""
    return ControllerParams(controller=ControllerKind.PD, mode=Role.FOLLOWER,
                            kp=2.0, ksigma=0.2, **kw)


@dataclass(frozen=True)
class VpState:
    x: float = 0.0
    v: float = 0.0
    psi: float = 1.0
    chi: float = 1.0

    def __post_init__(self):
        vals = (self.x, self.v, self.psi, self.chi)
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteStateError(f"non-finite VP state {vals}")


@dataclass(frozen=True)
class CouplingInput:
    """Snapshot of what the VP senses during one integration step.

    y_bar / ydot_bar are the mean position and velocity of the visible
    neighbors; sigma / sigma_dot are the signature sample at the current
    time. Fields are None when the active controller does not use them.
    """

    y_bar: float | None = None
    ydot_bar: float | None = None
    sigma: float | None = None
    sigma_dot: float | None = None


@dataclass(frozen=True)
class VirtualPlayerConfig:
    dynamics: DynamicsParams = DynamicsParams()
    controller: ControllerParams = ControllerParams()
    signature_ref: str | None = None  # "owner:kind" into the signature store

    def needs_signature(self) -> bool:
        if self.controller.controller is ControllerKind.PD:
            return True
        return self.controller.mode is Role.LEADER


def aggregate_neighbors(positions, velocities) -> tuple[float, float]:
    """Arithmetic mean of the visible neighbors' positions and velocities."""
    positions = np.asarray(positions, dtype=float)
    velocities = np.asarray(velocities, dtype=float)
    if positions.size == 0:
        raise ValidationError("a virtual player needs at least one visible neighbor")
    if positions.shape != velocities.shape:
        raise ValidationError("neighbor position/velocity lists differ in length")
    return float(positions.mean()), float(velocities.mean())


def inner_dynamics(x: float, v: float, params: DynamicsParams) -> float:
    """Acceleration of the uncoupled model at (x, v)."""
    if not (math.isfinite(x) and math.isfinite(v)):
        raise NonFiniteStateError(f"non-finite dynamics input x={x} v={v}")
    if params.model is DynamicsModel.HARMONIC:
        return -(params.a * v + params.b * x)
    if params.model is DynamicsModel.HKB:
        return -(params.alpha * x * x + params.beta * v * v - params.gamma) * v \
            - params.omega * params.omega * x
    return 0.0


def _require(value: float | None, name: str) -> float:
    if value is None:
        raise ValidationError(f"controller input {name} is required here but absent")
    return value


def _check_adaptive_floor(psi: float, chi: float) -> None:
    if abs(psi) < ADAPTIVE_FLOOR or abs(chi) < ADAPTIVE_FLOOR:
        raise DegenerateAdaptationError(
            f"adaptive parameters degenerate: psi={psi} chi={chi} (floor {ADAPTIVE_FLOOR})")


def clamp_adaptive(value: float, floor: float = ADAPTIVE_FLOOR) -> float:
    """Push magnitude up to the floor, preserving sign (0 counts as +)."""
    if abs(value) >= floor:
        return value
    return floor if value >= 0 else -floor


def control_pd(x: float, v: float, inp: CouplingInput, params: ControllerParams) -> float:
    """u = kp (y - x) + ksigma (sigma_d - x_d)."""
    sigma_dot = _require(inp.sigma_dot, "sigma_dot")
    y_bar = _require(inp.y_bar, "y_bar")
    return params.kp * (y_bar - x) + params.ksigma * (sigma_dot - v)


def control_adaptive_follower(state: VpState, inp: CouplingInput,
                              params: ControllerParams,
                              dyn: DynamicsParams) -> tuple[float, float, float]:
    """Adaptive follower law; returns (u, psi_dot, chi_dot).

    u    = [psi + chi (x-y)^2](x_d - y_d) - C e^{-delta (x_d - y_d)^2} (x-y)
    psi_d = -(1/psi)[(x-y)(x_d-y_d) + (x-y)^2]
    chi_d = -(1/chi)(x_d-y_d)[f(x, x_d) + u]
    """
    y = _require(inp.y_bar, "y_bar")
    ydot = _require(inp.ydot_bar, "ydot_bar")
    _check_adaptive_floor(state.psi, state.chi)
    dx = state.x - y
    dv = state.v - ydot
    u = (state.psi + state.chi * dx * dx) * dv \
        - params.c * math.exp(-params.delta * dv * dv) * dx
    psi_dot = -(1.0 / state.psi) * (dx * dv + dx * dx)
    chi_dot = -(1.0 / state.chi) * dv * (inner_dynamics(state.x, state.v, dyn) + u)
    return u, psi_dot, chi_dot


def control_adaptive_leader(state: VpState, inp: CouplingInput,
                            params: ControllerParams,
                            dyn: DynamicsParams) -> tuple[float, float, float]:
    """Adaptive leader law; returns (u, psi_dot, chi_dot).

    lambda = e^{-delta |x - y|} blends a signature-tracking term (the
    follower law aimed at sigma) with a plain neighbor coupling
    (1 - lambda) K (y - x). The adaptive parameters evolve against the
    signature, mirroring the follower update with y replaced by sigma.
    """
    y = _require(inp.y_bar, "y_bar")
    sigma = _require(inp.sigma, "sigma")
    sigma_dot = _require(inp.sigma_dot, "sigma_dot")
    _check_adaptive_floor(state.psi, state.chi)
    lam = math.exp(-params.delta * abs(state.x - y))
    dxs = state.x - sigma
    dvs = state.v - sigma_dot
    track = (state.psi + state.chi * dxs * dxs) * dvs \
        - params.c * math.exp(-params.delta * dvs * dvs) * dxs
    u = lam * track + (1.0 - lam) * params.k * (y - state.x)
    psi_dot = -(1.0 / state.psi) * (dxs * dvs + dxs * dxs)
    chi_dot = -(1.0 / state.chi) * dvs * (inner_dynamics(state.x, state.v, dyn) + u)
    return u, psi_dot, chi_dot


def control(state: VpState, inp: CouplingInput, ctl: ControllerParams,
            dyn: DynamicsParams) -> tuple[float, float, float]:
    """Dispatch to the configured coupling law; (u, psi_dot, chi_dot)."""
    if ctl.controller is ControllerKind.PD:
        return control_pd(state.x, state.v, inp, ctl), 0.0, 0.0
    if ctl.mode is Role.FOLLOWER:
        return control_adaptive_follower(state, inp, ctl, dyn)
    return control_adaptive_leader(state, inp, ctl, dyn)


def _signed_square(p: float) -> float:
    return 0.5 * p * abs(p)


def _from_signed_square(w: float) -> float:
    root = math.sqrt(2.0 * abs(w))
    return clamp_adaptive(root if w >= 0 else -root)


def step_vp(state: VpState, dyn: DynamicsParams, ctl: ControllerParams,
            inp: CouplingInput, dt_s: float) -> VpState:
    """One classical RK4 step of (x, v, psi, chi) with the coupling input
    held constant (zero-order hold). Deterministic: identical inputs give
    bit-identical outputs.

    The adaptive parameters are advanced in signed-square coordinates
    w = psi|psi|/2: since dw/dt = |psi| dpsi/dt, the 1/psi factor in the
    adaptation law cancels and the integrated right-hand side stays bounded
    through sign changes, where the raw form is stiff.
    """
    if not 0.0 < dt_s <= 0.05:
        raise ValidationError(f"dt must be in (0, 0.05] s, got {dt_s}")

    def rhs(x, v, w_psi, w_chi):
        psi = _from_signed_square(w_psi)
        chi = _from_signed_square(w_chi)
        stage = VpState(x, v, psi, chi)
        u, psi_dot, chi_dot = control(stage, inp, ctl, dyn)
        return v, inner_dynamics(x, v, dyn) + u, abs(psi) * psi_dot, abs(chi) * chi_dot

    s = (state.x, state.v, _signed_square(state.psi), _signed_square(state.chi))
    k1 = rhs(*s)
    k2 = rhs(*(si + 0.5 * dt_s * ki for si, ki in zip(s, k1)))
    k3 = rhs(*(si + 0.5 * dt_s * ki for si, ki in zip(s, k2)))
    k4 = rhs(*(si + dt_s * ki for si, ki in zip(s, k3)))
    nxt = [si + (dt_s / 6.0) * (a + 2 * b + 2 * c + d)
           for si, a, b, c, d in zip(s, k1, k2, k3, k4)]
    if not all(math.isfinite(v) for v in nxt):
        raise NonFiniteStateError(f"integration diverged: state {nxt}")
    return VpState(nxt[0], nxt[1], _from_signed_square(nxt[2]), _from_signed_square(nxt[3]))


class SignaturePlayer:
    """Plays a motor signature back at the integration tick, looping with a
    cosine crossfade so position and velocity stay continuous across loops.

    offset is subtracted from stored positions (used to recenter game
    coordinates onto the oscillator frame).
    """

    def __init__(self, signature: MotorSignature, tick_hz: float = VP_TICK_HZ,
                 offset: float = 0.0, fade_s: float = SIGNATURE_FADE_S):
        pos = resample_cubic(signature.position, tick_hz)
        vel = resample_cubic(signature.velocity, tick_hz)
        self._pos = pos.samples - offset
        self._vel = vel.samples.copy()
        self.tick_hz = float(tick_hz)
        n = len(self._pos)
        fade = int(round(fade_s * tick_hz))
        self._fade = max(0, min(fade, n // 2))
        self._period = n - self._fade  # >= n/2 >= 2

    def at_tick(self, k: int) -> tuple[float, float]:
        p = self._period
        cycle, tau = divmod(k, p)
        if cycle == 0 or self._fade == 0 or tau >= self._fade:
            return float(self._pos[tau]), float(self._vel[tau])
        w = 0.5 * (1.0 - math.cos(math.pi * tau / self._fade))
        i_tail = p + tau  # continuation of the previous pass
        pos = (1.0 - w) * self._pos[i_tail] + w * self._pos[tau]
        vel = (1.0 - w) * self._vel[i_tail] + w * self._vel[tau]
        return float(pos), float(vel)

    def at_time(self, t_s: float) -> tuple[float, float]:
        return self.at_tick(int(round(t_s * self.tick_hz)))


def synth_sinusoid_signature(owner: str, amplitude_dm: float, freq_hz: float,
                             duration_s: float = 60.0, rate_hz: float = 100.0,
                             center_dm: float = 0.0, phase_rad: float = 0.0) -> MotorSignature:
    """Synthesize the sinusoidal-solo signature used by scripted scenarios."""
    n = int(round(duration_s * rate_hz)) + 1
    t = np.arange(n) / rate_hz
    w = 2.0 * math.pi * freq_hz
    pos = center_dm + amplitude_dm * np.sin(w * t + phase_rad)
    vel = amplitude_dm * w * np.cos(w * t + phase_rad)
    return MotorSignature(
        owner=owner, kind=MotionKind.SINUSOIDAL,
        position=Trajectory(0.0, rate_hz, pos),
        velocity=Trajectory(0.0, rate_hz, vel),
    )
