"""Dissipator: rates, detailed balance, elementary stepping, closed forms."""

import numpy as np
import pytest

from qstirling.lindblad import (COHERENCE_DROP, DissipatorConfig, build_transitions,
                                default_delta_tau, elementary_step, thermalize,
                                thermalize_stepwise, transition_rates, with_delta_tau)
from qstirling.spectrum import ModelParams, solve_spectrum
from qstirling.state import BathParams, DensityMatrix, IntegrityError, gibbs_state

P = ModelParams()
ALPHA_REF = P.alpha_from_g(np.pi**2 / 8.0)
DELTA_TAU = default_delta_tau(P)
CONFIG = DissipatorConfig(delta_tau=DELTA_TAU)


def random_state(seed, alpha):
    rng = np.random.default_rng(seed)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = M @ M.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(rho, alpha)


def test_default_delta_tau_frozen():
    # 2 pi hbar / (10000 * 7 E_1), bare-box anchor
    assert DELTA_TAU == pytest.approx(2.5138820449498723e-16, rel=1e-15)


def test_detailed_balance():
    for T in (0.05, 0.1, 1.0):
        bath = BathParams.for_temperature(T, P)
        for alpha in (0.0, ALPHA_REF, 40 * ALPHA_REF):
            s = solve_spectrum(P, alpha)
            tr = build_transitions(s, bath, CONFIG)
            dE = np.diff(s.E)
            ratio = tr.up_rate / tr.down_rate
            assert np.allclose(ratio, np.exp(-bath.beta * dE), rtol=1e-12)
            assert np.all(tr.up_rate < tr.down_rate)


def test_rate_degenerate_limit():
    # delta_omega -> 0: both rates -> kB T / (hbar gamma_divisor)
    bath = BathParams.for_temperature(0.05, P)
    E = np.array([0.0, 1e-40, 2e-40, 3e-40])
    up, down = transition_rates(E, bath.beta, P.hbar, 50.0, 1e-6)
    limit = 1.0 / (50.0 * bath.beta * P.hbar)
    assert np.allclose(up, limit, rtol=1e-6)
    assert np.allclose(down, limit, rtol=1e-6)
    assert np.all(up < down)


def test_rate_large_gap_limit():
    # beta hbar delta_omega ~ 190: up-rate numerically zero, down = dE/(50 hbar)
    bath = BathParams.for_temperature(0.1, P)
    s = solve_spectrum(P, 0.0)
    x = bath.beta * (s.E[3] - s.E[2])
    assert x == pytest.approx(7 * 27.272805193674817, rel=1e-12)
    tr = build_transitions(s, bath, CONFIG)
    assert tr.up_rate[2] == pytest.approx(0.0, abs=1e-70)
    assert tr.down_rate[2] == pytest.approx((s.E[3] - s.E[2]) / (P.hbar * 50.0),
                                            rel=1e-12)


def test_rates_continuous_at_threshold():
    bath = BathParams.for_temperature(0.05, P)
    x0 = 1e-6
    dE = x0 / bath.beta
    E = np.array([0.0, dE])
    up_s, down_s = transition_rates(E, bath.beta, P.hbar, 50.0, 2 * x0)
    up_r, down_r = transition_rates(E, bath.beta, P.hbar, 50.0, 0.5 * x0)
    assert up_s[0] == pytest.approx(up_r[0], rel=1e-6)
    assert down_s[0] == pytest.approx(down_r[0], rel=1e-6)


def test_gibbs_stationary():
    for T, alpha in [(0.1, 0.0), (0.05, ALPHA_REF), (0.1, 25 * ALPHA_REF)]:
        s = solve_spectrum(P, alpha)
        bath = BathParams.for_temperature(T, P)
        rho = gibbs_state(s, bath)
        tr = build_transitions(s, bath, CONFIG)
        out = elementary_step(rho, s, tr, DELTA_TAU)
        assert np.abs(out.populations - rho.populations).max() < 1e-15


def test_trace_conserved_per_step():
    s = solve_spectrum(P, ALPHA_REF)
    bath = BathParams.for_temperature(0.05, P)
    tr = build_transitions(s, bath, CONFIG)
    rho = random_state(23, ALPHA_REF)
    for _ in range(50):
        before = rho.trace
        rho = elementary_step(rho, s, tr, DELTA_TAU)
        assert abs(rho.trace - before) < 1e-14


def test_diagonal_stays_diagonal():
    s = solve_spectrum(P, 0.0)
    bath = BathParams.for_temperature(0.1, P)
    tr = build_transitions(s, bath, CONFIG)
    rho = DensityMatrix(np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex), 0.0)
    out = elementary_step(rho, s, tr, DELTA_TAU)
    off = out.elements - np.diag(np.diag(out.elements))
    assert np.abs(off).max() == 0.0


def test_two_level_decay_closed_form():
    # pure excited level 2, cold bath: p_22 follows (1 - down dtau)^s exactly
    params = ModelParams(n_max=2)
    s = solve_spectrum(params, 0.0)
    bath = BathParams.for_temperature(1e-3, params)   # N ~ 0
    cfg = DissipatorConfig(delta_tau=default_delta_tau(params))
    tr = build_transitions(s, bath, cfg)
    rho = DensityMatrix(np.diag([0.0, 1.0]).astype(complex), 0.0)
    steps = 200
    for _ in range(steps):
        rho = elementary_step(rho, s, tr, cfg.delta_tau)
    euler = (1.0 - tr.down_rate[0] * cfg.delta_tau) ** steps
    assert rho.populations[1] == pytest.approx(euler, rel=1e-12)
    # gamma dtau << 1, so the Euler chain also matches the exponential
    gdt = tr.down_rate[0] * cfg.delta_tau
    assert gdt < 1e-4
    exact = np.exp(-tr.down_rate[0] * cfg.delta_tau * steps)
    assert rho.populations[1] == pytest.approx(exact, rel=1e-4)


def test_euler_order_of_accuracy():
    # halving delta_tau halves the error against the two-level exponential
    params = ModelParams(n_max=2)
    s = solve_spectrum(params, 0.0)
    bath = BathParams.for_temperature(0.05, params)
    rho0 = DensityMatrix(np.diag([0.3, 0.7]).astype(complex), 0.0)

    probe = build_transitions(s, bath, DissipatorConfig(delta_tau=1e-16))
    total = probe.down_rate[0] + probe.up_rate[0]
    p_eq = probe.up_rate[0] / total

    def final_error(delta_tau, steps):
        cfg = DissipatorConfig(delta_tau=delta_tau)
        rho, _ = thermalize(rho0, s, bath, steps, cfg)
        exact = p_eq + (0.7 - p_eq) * np.exp(-total * delta_tau * steps)
        return rho.populations[1] - exact

    # fixed physical time total * t = 2, rate * dt = 0.05 resp. 0.025
    dt = 0.05 / total
    e1 = final_error(dt, 40)
    e2 = final_error(dt / 2, 80)
    assert e1 / e2 == pytest.approx(2.0, rel=0.1)


def test_thermalize_matches_stepwise():
    s = solve_spectrum(P, ALPHA_REF)
    bath = BathParams.for_temperature(0.05, P)
    rho = random_state(31, ALPHA_REF)
    fast, q_fast = thermalize(rho, s, bath, 37, CONFIG)
    slow, q_slow = thermalize_stepwise(rho, s, bath, 37, CONFIG)
    assert np.abs(fast.elements - slow.elements).max() < 1e-13
    assert q_fast == pytest.approx(q_slow, abs=1e-36)


def test_thermalize_drop_coherences():
    cfg = DissipatorConfig(delta_tau=DELTA_TAU, coherence_mode=COHERENCE_DROP)
    s = solve_spectrum(P, ALPHA_REF)
    bath = BathParams.for_temperature(0.05, P)
    rho = random_state(37, ALPHA_REF)
    out, _ = thermalize(rho, s, bath, 5, cfg)
    off = out.elements - np.diag(np.diag(out.elements))
    assert np.abs(off).max() == 0.0
    out2, _ = thermalize_stepwise(rho, s, bath, 5, cfg)
    assert np.abs(out.elements - out2.elements).max() < 1e-15


def test_relative_entropy_monotone():
    # S(rho_t || gibbs) decreases along the population dynamics
    s = solve_spectrum(P, 0.0)
    bath = BathParams.for_temperature(0.1, P)
    gibbs = gibbs_state(s, bath).populations   # all strictly positive here
    rho = DensityMatrix(np.diag([0.1, 0.2, 0.3, 0.4]).astype(complex), 0.0)
    tr = build_transitions(s, bath, CONFIG)

    def rel_entropy(p):
        mask = (p > 0) & (gibbs > 0)
        return float(np.sum(p[mask] * (np.log(p[mask]) - np.log(gibbs[mask]))))

    last = rel_entropy(rho.populations)
    for _ in range(30):
        rho = elementary_step(rho, s, tr, DELTA_TAU)
        cur = rel_entropy(rho.populations)
        assert cur <= last + 1e-15
        last = cur


def test_heat_sign_towards_equilibrium():
    s = solve_spectrum(P, 0.0)
    bath = BathParams.for_temperature(0.1, P)
    hot = DensityMatrix(np.diag([0.25, 0.25, 0.25, 0.25]).astype(complex), 0.0)
    _, q = thermalize(hot, s, bath, 1000, CONFIG)
    assert q < 0.0    # over-excited state sheds energy to the bath
    cold = DensityMatrix(np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex), 0.0)
    _, q2 = thermalize(cold, s, bath, 1000, CONFIG)
    assert q2 >= 0.0


def test_positivity_abort_on_oversized_step():
    s = solve_spectrum(P, 0.0)
    bath = BathParams.for_temperature(0.1, P)
    cfg = with_delta_tau(CONFIG, DELTA_TAU * 1e7)
    rho = DensityMatrix(np.diag([0.0, 0.0, 0.0, 1.0]).astype(complex), 0.0)
    with pytest.raises(IntegrityError, match="negative"):
        thermalize(rho, s, bath, 50, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        DissipatorConfig(delta_tau=-1.0)
    with pytest.raises(ValueError):
        DissipatorConfig(delta_tau=1e-16, gamma_divisor=0.0)
    with pytest.raises(ValueError):
        DissipatorConfig(delta_tau=1e-16, coherence_mode="bogus")
    with pytest.raises(ValueError):
        thermalize(random_state(1, 0.0), solve_spectrum(P, 0.0),
                   BathParams.for_temperature(0.1, P), 0, CONFIG)
