import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from synclab.core import ValidationError
from synclab.dynamics import (ADAPTIVE_FLOOR, ControllerParams,
                              CouplingInput, DegenerateAdaptationError,
                              DynamicsParams, NonFiniteStateError,
                              SignaturePlayer, VpState, aggregate_neighbors,
                              clamp_adaptive, control_adaptive_follower,
                              control_adaptive_leader, control_pd,
                              inner_dynamics, step_vp,
                              synth_sinusoid_signature)

from oracles import (adaptive_follower_ref, adaptive_leader_ref,
                     inner_dynamics_ref, pd_ref)

finite = st.floats(-3.0, 3.0, allow_nan=False)


def hkb(alpha=1.0, beta=1.0, gamma=1.0, omega=1.0):
    return DynamicsParams(model="hkb", alpha=alpha, beta=beta, gamma=gamma, omega=omega)


def harmonic(a=1.0, b=4.0):
    return DynamicsParams(model="harmonic", a=a, b=b)


DOUBLE = DynamicsParams(model="double_integrator")


class TestInnerDynamics:
    def test_harmonic_equilibrium(self):
        assert inner_dynamics(0.0, 0.0, harmonic()) == 0.0

    def test_hkb_unit_case(self):
        assert inner_dynamics(1.0, 0.0, hkb()) == pytest.approx(-1.0)

    def test_hkb_damping_term(self):
        assert inner_dynamics(0.0, 1.0, hkb(alpha=0.5, beta=0.5, gamma=1.0, omega=2.0)) \
            == pytest.approx(0.5)

    def test_double_integrator_is_zero(self):
        assert inner_dynamics(1.7, -2.2, DOUBLE) == 0.0

    def test_rejects_nan(self):
        with pytest.raises(NonFiniteStateError):
            inner_dynamics(float("nan"), 0.0, hkb())

    @given(finite, finite)
    def test_harmonic_matches_reference(self, x, v):
        got = inner_dynamics(x, v, harmonic(a=0.7, b=2.1))
        assert got == pytest.approx(inner_dynamics_ref("harmonic", x, v, a=0.7, b=2.1), abs=1e-12)

    @given(finite, finite)
    def test_hkb_matches_reference(self, x, v):
        got = inner_dynamics(x, v, hkb(0.9, 1.1, 0.8, 1.3))
        ref = inner_dynamics_ref("hkb", x, v, alpha=0.9, beta=1.1, gamma=0.8, omega=1.3)
        assert got == pytest.approx(ref, abs=1e-12)


class TestControlPd:
    def test_zero_at_agreement(self):
        inp = CouplingInput(y_bar=0.4, sigma_dot=-0.2)
        assert control_pd(0.4, -0.2, inp, ControllerParams(kp=2.0, ksigma=0.2)) == 0.0

    def test_position_term(self):
        inp = CouplingInput(y_bar=0.3, sigma_dot=0.0)
        assert control_pd(0.0, 0.0, inp, ControllerParams(kp=1.0, ksigma=0.0)) \
            == pytest.approx(0.3)

    def test_mixed_terms(self):
        inp = CouplingInput(y_bar=0.1, sigma_dot=-0.02)
        got = control_pd(0.0, 0.0, inp, ControllerParams(kp=2.0, ksigma=5.0))
        assert got == pytest.approx(0.1)

    def test_missing_signature_velocity(self):
        with pytest.raises(ValidationError, match="sigma_dot"):
            control_pd(0.0, 0.0, CouplingInput(y_bar=0.0), ControllerParams())

    @given(finite, finite, finite, finite)
    def test_matches_reference(self, x, v, y, sd):
        got = control_pd(x, v, CouplingInput(y_bar=y, sigma_dot=sd),
                         ControllerParams(kp=1.3, ksigma=0.4))
        assert got == pytest.approx(pd_ref(x, v, y, sd, 1.3, 0.4), abs=1e-15)


def adaptive_params(c=1.0, delta=1.0, k=2.0, mode="follower"):
    return ControllerParams(controller="adaptive", mode=mode, c=c, delta=delta, k=k)


class TestAdaptiveFollower:
    def test_zero_at_perfect_agreement(self):
        state = VpState(x=0.3, v=-0.5, psi=1.0, chi=1.0)
        inp = CouplingInput(y_bar=0.3, ydot_bar=-0.5)
        u, psi_dot, chi_dot = control_adaptive_follower(state, inp, adaptive_params(), hkb())
        assert u == 0.0
        assert psi_dot == 0.0

    def test_position_mismatch_case(self):
        state = VpState(x=1.0, v=0.0, psi=1.0, chi=1.0)
        inp = CouplingInput(y_bar=0.0, ydot_bar=0.0)
        u, psi_dot, _ = control_adaptive_follower(state, inp,
                                                  adaptive_params(c=1.0, delta=1.0), hkb())
        assert u == pytest.approx(-1.0)
        assert psi_dot == pytest.approx(-1.0)

    def test_floor_violation_raises(self):
        state = VpState(x=0.0, v=0.0, psi=ADAPTIVE_FLOOR / 2, chi=1.0)
        inp = CouplingInput(y_bar=0.1, ydot_bar=0.0)
        with pytest.raises(DegenerateAdaptationError):
            control_adaptive_follower(state, inp, adaptive_params(), hkb())

    def test_random_states_match_reference(self):
        rng = np.random.default_rng(11)
        dyn = hkb(0.8, 1.2, 0.9, 1.7)
        params = adaptive_params(c=1.4, delta=0.6)
        for _ in range(10_000):
            x, v, y, ydot = rng.uniform(-2, 2, 4)
            psi, chi = rng.choice([-1, 1], 2) * rng.uniform(0.01, 3.0, 2)
            state = VpState(x=x, v=v, psi=psi, chi=chi)
            got = control_adaptive_follower(state, CouplingInput(y_bar=y, ydot_bar=ydot),
                                            params, dyn)
            f_xv = inner_dynamics_ref("hkb", x, v, alpha=0.8, beta=1.2, gamma=0.9, omega=1.7)
            ref = adaptive_follower_ref(x, v, psi, chi, y, ydot, 1.4, 0.6, f_xv)
            assert got == pytest.approx(ref, abs=1e-12)


class TestAdaptiveLeader:
    def test_pure_signature_tracking_when_on_neighbor(self):
        # x == y_bar -> lambda = 1, the coupling term vanishes
        state = VpState(x=0.5, v=0.2, psi=1.0, chi=1.0)
        inp = CouplingInput(y_bar=0.5, sigma=0.1, sigma_dot=0.0)
        u, _, _ = control_adaptive_leader(state, inp, adaptive_params(mode="leader"), hkb())
        ref = adaptive_follower_ref(0.5, 0.2, 1.0, 1.0, 0.1, 0.0, 1.0, 1.0, 0.0)[0]
        assert u == pytest.approx(ref)

    def test_pure_coupling_when_on_signature(self):
        # x == sigma and v == sigma_dot -> tracking term vanishes
        state = VpState(x=0.2, v=-0.1, psi=1.0, chi=1.0)
        inp = CouplingInput(y_bar=1.0, sigma=0.2, sigma_dot=-0.1)
        params = adaptive_params(k=2.0, delta=1.0, mode="leader")
        u, _, _ = control_adaptive_leader(state, inp, params, hkb())
        lam = math.exp(-abs(0.2 - 1.0))
        assert u == pytest.approx((1 - lam) * 2.0 * (1.0 - 0.2))

    def test_random_states_match_reference(self):
        rng = np.random.default_rng(12)
        dyn = hkb(1.1, 0.7, 1.3, 2.1)
        params = adaptive_params(c=0.9, delta=1.2, k=1.8, mode="leader")
        for _ in range(10_000):
            x, v, y, sig, sigd = rng.uniform(-2, 2, 5)
            psi, chi = rng.choice([-1, 1], 2) * rng.uniform(0.01, 3.0, 2)
            state = VpState(x=x, v=v, psi=psi, chi=chi)
            inp = CouplingInput(y_bar=y, sigma=sig, sigma_dot=sigd)
            got = control_adaptive_leader(state, inp, params, dyn)
            f_xv = inner_dynamics_ref("hkb", x, v, alpha=1.1, beta=0.7, gamma=1.3, omega=2.1)
            ref = adaptive_leader_ref(x, v, psi, chi, y, sig, sigd, 0.9, 1.2, 1.8, f_xv)
            assert got == pytest.approx(ref, abs=1e-12)

    def test_missing_sigma_raises(self):
        state = VpState()
        with pytest.raises(ValidationError):
            control_adaptive_leader(state, CouplingInput(y_bar=0.0),
                                    adaptive_params(mode="leader"), hkb())


class TestAggregateNeighbors:
    def test_single_neighbor_identity(self):
        assert aggregate_neighbors([0.7], [-0.1]) == (0.7, -0.1)

    def test_mean(self):
        y, yd = aggregate_neighbors([0.2, 0.4], [1.0, 3.0])
        assert y == pytest.approx(0.3)
        assert yd == pytest.approx(2.0)

    def test_empty_rejected(self):
        with pytest.raises(ValidationError, match="neighbor"):
            aggregate_neighbors([], [])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            aggregate_neighbors([1.0], [1.0, 2.0])


def free_input():
    return CouplingInput(y_bar=0.0, ydot_bar=0.0, sigma=0.0, sigma_dot=0.0)


def simulate(state, dyn, ctl, inp, dt, steps):
    out = [state]
    for _ in range(steps):
        state = step_vp(state, dyn, ctl, inp, dt)
        out.append(state)
    return out


ZERO_PD = ControllerParams(controller="pd", kp=0.0, ksigma=0.0)


class TestStepVp:
    def test_rk4_error_shrinks_16x_when_halving_dt(self):
        # u = 0, harmonic with a=0, b=omega^2: closed form x(t) = cos(omega t)
        omega = 2.0
        dyn = DynamicsParams(model="harmonic", a=0.0, b=omega ** 2)
        errs = {}
        for dt in (0.01, 0.005):
            n = int(round(2.0 / dt))
            states = simulate(VpState(x=1.0, v=0.0), dyn, ZERO_PD, free_input(), dt, n)
            t = np.arange(n + 1) * dt
            xs = np.array([s.x for s in states])
            errs[dt] = np.max(np.abs(xs - np.cos(omega * t)))
        ratio = errs[0.01] / errs[0.005]
        assert 12.0 <= ratio <= 20.0

    def test_double_integrator_free_motion_exact(self):
        # every controller input matched -> u stays 0 and the motion is the
        # straight line x0 + v0 t, which RK4 reproduces exactly
        state = VpState(x=0.25, v=-0.4)
        states = simulate(state, DOUBLE, ZERO_PD, free_input(), 0.02, 100)
        t = np.arange(101) * 0.02
        xs = np.array([s.x for s in states])
        assert np.allclose(xs, 0.25 - 0.4 * t, atol=1e-12)

    def test_double_integrator_held_pd_input_one_step(self):
        # with kp = 0 the PD law reads u = ksigma (sigma_dot - v), so
        # vdot = 2 - v: v(t) = 2(1 - e^{-t}), x(t) = 2(t - 1 + e^{-t});
        # one RK4 step tracks that to its local O(dt^5) accuracy
        ctl = ControllerParams(controller="pd", kp=0.0, ksigma=1.0)
        inp = CouplingInput(y_bar=0.0, sigma_dot=2.0)
        out = step_vp(VpState(), DOUBLE, ctl, inp, 0.01)
        assert out.v == pytest.approx(2 * (1 - math.exp(-0.01)), abs=1e-10)
        assert out.x == pytest.approx(2 * (0.01 - 1 + math.exp(-0.01)), abs=1e-10)

    def test_hkb_rest_stays_at_rest(self):
        states = simulate(VpState(), hkb(), ZERO_PD, free_input(), 0.01, 200)
        assert states[-1].x == 0.0
        assert states[-1].v == 0.0

    def test_dt_bounds(self):
        with pytest.raises(ValidationError):
            step_vp(VpState(), hkb(), ZERO_PD, free_input(), 0.06)
        with pytest.raises(ValidationError):
            step_vp(VpState(), hkb(), ZERO_PD, free_input(), 0.0)

    def test_harmonic_energy_non_increasing(self):
        dyn = harmonic(a=0.5, b=4.0)
        states = simulate(VpState(x=1.0, v=0.0), dyn, ZERO_PD, free_input(), 0.001, 5000)
        energy = [(s.v ** 2 + 4.0 * s.x ** 2) / 2 for s in states]
        diffs = np.diff(energy)
        assert np.all(diffs <= 1e-9)

    def test_hkb_free_response_bounded_with_peak_near_omega(self):
        omega = 2 * math.pi * 0.25
        dyn = hkb(1.0, 1.0, 1.0, omega)
        states = simulate(VpState(x=1.0, v=0.0), dyn, ZERO_PD, free_input(), 0.01, 6000)
        xs = np.array([s.x for s in states])
        assert np.max(np.abs(xs)) < 10.0
        tail = xs[1000:] - xs[1000:].mean()
        spectrum = np.abs(np.fft.rfft(tail * np.hanning(len(tail))))
        freqs = np.fft.rfftfreq(len(tail), 0.01)
        peak = freqs[np.argmax(spectrum)]
        assert abs(peak - 0.25) / 0.25 < 0.10

    def test_deterministic(self):
        dyn = hkb()
        ctl = adaptive_params(mode="follower")
        inp = CouplingInput(y_bar=0.4, ydot_bar=-0.2)
        a = simulate(VpState(x=0.1, v=0.0), dyn, ctl, inp, 0.01, 500)
        b = simulate(VpState(x=0.1, v=0.0), dyn, ctl, inp, 0.01, 500)
        assert all(s1 == s2 for s1, s2 in zip(a, b))

    def test_adaptive_stays_above_floor(self):
        dyn = hkb()
        ctl = adaptive_params(mode="follower")
        inp = CouplingInput(y_bar=1.0, ydot_bar=0.0)
        states = simulate(VpState(), dyn, ctl, inp, 0.01, 2000)
        assert all(abs(s.psi) >= ADAPTIVE_FLOOR for s in states)
        assert all(abs(s.chi) >= ADAPTIVE_FLOOR for s in states)

    def test_pd_leaves_adaptive_params_untouched(self):
        states = simulate(VpState(psi=1.0, chi=1.0), hkb(),
                          ControllerParams(controller="pd", kp=1.0, ksigma=0.5),
                          free_input(), 0.01, 100)
        assert states[-1].psi == 1.0
        assert states[-1].chi == 1.0


class TestClampAdaptive:
    @given(st.floats(-2.0, 2.0, allow_nan=False))
    def test_magnitude_floor(self, v):
        c = clamp_adaptive(v)
        assert abs(c) >= ADAPTIVE_FLOOR
        if abs(v) >= ADAPTIVE_FLOOR:
            assert c == v

    def test_zero_goes_positive(self):
        assert clamp_adaptive(0.0) == ADAPTIVE_FLOOR


class TestSignaturePlayer:
    def test_playback_matches_signature_before_loop(self):
        sig = synth_sinusoid_signature("a", 1.0, 0.25, duration_s=10.0)
        player = SignaturePlayer(sig, tick_hz=100.0)
        for k in (0, 10, 500, 900):
            pos, vel = player.at_tick(k)
            t = k / 100.0
            assert pos == pytest.approx(math.sin(2 * math.pi * 0.25 * t), abs=1e-6)
            assert vel == pytest.approx(2 * math.pi * 0.25 * math.cos(2 * math.pi * 0.25 * t),
                                        abs=1e-4)

    def test_loop_is_continuous(self):
        sig = synth_sinusoid_signature("a", 1.0, 0.31, duration_s=4.0)
        player = SignaturePlayer(sig, tick_hz=100.0)
        positions = np.array([player.at_tick(k)[0] for k in range(2000)])
        jumps = np.abs(np.diff(positions))
        # a hard cut would jump by O(amplitude) in one 10 ms step
        assert np.max(jumps) < 0.1

    def test_offset_recenters(self):
        sig = synth_sinusoid_signature("a", 1.0, 0.25, duration_s=5.0, center_dm=5.0)
        player = SignaturePlayer(sig, tick_hz=100.0, offset=5.0)
        pos, _ = player.at_tick(0)
        assert pos == pytest.approx(0.0, abs=1e-9)
