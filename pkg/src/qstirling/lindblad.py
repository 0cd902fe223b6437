"""Thermalization at fixed barrier strength.

The dissipator couples adjacent levels only, through jump operators that are
matrix units in the instantaneous eigenbasis.  Rates are Ohmic,
gamma_k = delta_omega_k / gamma_divisor, weighted by Bose-Einstein
occupations, so detailed balance holds and the Gibbs state is stationary.

The elementary step splits the generator: the coherent part is applied as an
exact phase rotation of the off-diagonal elements (a plain Euler update of
the commutator is unstable at the default delta_tau, where phase increments
reach ~1 rad per step), and only the dissipator is integrated forward-Euler.
Populations are unaffected by the splitting choice.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .spectrum import ModelParams, Spectrum
from .state import BathParams, DensityMatrix, IntegrityError, POSITIVITY_TOL

COHERENCE_EXACT_PHASE = "exact-phase"
COHERENCE_DROP = "drop-coherences"

DEFAULT_TAU_DIVISOR = 10000.0


@dataclass(frozen=True)
class DissipatorConfig:
    delta_tau: float                        # s
    gamma_divisor: float = 50.0             # gamma_k = delta_omega_k / gamma_divisor
    degenerate_gap_threshold: float = 1e-6  # beta hbar delta_omega below which series limits apply
    coherence_mode: str = COHERENCE_EXACT_PHASE

    def __post_init__(self):
        if not self.gamma_divisor > 0:
            raise ValueError(f"gamma_divisor must be positive, got {self.gamma_divisor}")
        if not self.delta_tau > 0:
            raise ValueError(f"delta_tau must be positive, got {self.delta_tau}")
        if self.coherence_mode not in (COHERENCE_EXACT_PHASE, COHERENCE_DROP):
            raise ValueError(f"unknown coherence mode {self.coherence_mode!r}")


def default_delta_tau(params: ModelParams, tau_divisor: float = DEFAULT_TAU_DIVISOR) -> float:
    """Elementary time step, 2 pi hbar / (tau_divisor (E_4 - E_3)) at alpha = 0.

    The bare-box gap E_4 - E_3 = 7 E_1 is the only alpha-independent anchor,
    so the step stays constant over the whole cycle.
    """
    return 2.0 * np.pi * params.hbar / (tau_divisor * 7.0 * params.ground_energy)


@dataclass(frozen=True, eq=False)
class TransitionSet:
    """Adjacent-level rates at one spectrum; index t couples levels t <-> t+1 (0-based)."""

    delta_omega: np.ndarray   # (n_max - 1,) rad/s
    occupation: np.ndarray    # Bose-Einstein N at each transition
    down_rate: np.ndarray     # gamma (N + 1), 1/s
    up_rate: np.ndarray       # gamma N, 1/s


def transition_rates(energies, beta, hbar, gamma_divisor, gap_threshold):
    """Up/down rates for adjacent-level transitions; vectorized over leading axes.

    ``energies`` has shape (..., n_max).  Where beta hbar delta_omega < the
    threshold the rates go over to their analytic near-degenerate limits
    kB T / (hbar gamma_divisor) (1 -+ x/2), keeping both the finiteness of
    x / (e^x - 1) at x = 0 and the strict up < down ordering.
    """
    dE = np.diff(energies, axis=-1)
    x = beta * dE
    small = x < gap_threshold
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        N = 1.0 / np.expm1(np.where(small, 1.0, x))
        gamma = dE / (hbar * gamma_divisor)
        up_reg = gamma * N
        down_reg = gamma * (N + 1.0)
    limit = 1.0 / (gamma_divisor * beta * hbar)
    up = np.where(small, limit * (1.0 - 0.5 * x), up_reg)
    down = np.where(small, limit * (1.0 + 0.5 * x), down_reg)
    return up, down


def build_transitions(spectrum: Spectrum, bath: BathParams,
                      config: DissipatorConfig) -> TransitionSet:
    dE = np.diff(spectrum.E)
    hbar = spectrum.params.hbar
    up, down = transition_rates(spectrum.E, bath.beta, hbar,
                                config.gamma_divisor, config.degenerate_gap_threshold)
    with np.errstate(over="ignore", divide="ignore"):
        N = 1.0 / np.expm1(bath.beta * dE)
    return TransitionSet(delta_omega=dE / hbar, occupation=N, down_rate=down, up_rate=up)


def _population_generator(transitions: TransitionSet, n: int) -> np.ndarray:
    """Birth-death generator M with p_dot = M p (columns sum to zero)."""
    M = np.zeros((n, n))
    t = np.arange(n - 1)
    M[t, t + 1] += transitions.down_rate
    M[t + 1, t + 1] -= transitions.down_rate
    M[t + 1, t] += transitions.up_rate
    M[t, t] -= transitions.up_rate
    return M


def _level_outflow(transitions: TransitionSet, n: int) -> np.ndarray:
    """Total incoherent departure rate from each level."""
    out = np.zeros(n)
    out[1:] += transitions.down_rate
    out[:-1] += transitions.up_rate
    return out


def elementary_step(rho: DensityMatrix, spectrum: Spectrum, transitions: TransitionSet,
                    delta_tau: float,
                    coherence_mode: str = COHERENCE_EXACT_PHASE) -> DensityMatrix:
    """One split step: exact phase rotation, then forward-Euler dissipator.

    The dissipator is traceless, so the trace is conserved exactly (up to
    roundoff); diagonal states stay diagonal.
    """
    if rho.basis_alpha != spectrum.alpha:
        raise IntegrityError(
            f"state tagged alpha={rho.basis_alpha!r}, spectrum is at {spectrum.alpha!r}")
    n = spectrum.params.n_max
    out = rho.elements.copy()
    if coherence_mode == COHERENCE_DROP:
        out[~np.eye(n, dtype=bool)] = 0.0
    else:
        phase = np.exp(-1j * spectrum.E * delta_tau / spectrum.params.hbar)
        rot = np.outer(phase, phase.conj())
        np.fill_diagonal(rot, 1.0)   # keep populations exactly untouched
        out *= rot
    # dissipator: populations via the birth-death ladder, coherences damped
    p = np.diag(out).real
    M = _population_generator(transitions, n)
    damp = _level_outflow(transitions, n)
    off = out - np.diag(np.diag(out))
    off *= 1.0 - 0.5 * delta_tau * (damp[:, None] + damp[None, :])
    new_p = p + delta_tau * (M @ p)
    if new_p.min() < POSITIVITY_TOL:
        raise IntegrityError(
            f"population went negative ({new_p.min():.3e}); delta_tau too large for these rates")
    np.fill_diagonal(off, new_p)
    return DensityMatrix(off, rho.basis_alpha)


def thermalize(rho: DensityMatrix, spectrum: Spectrum, bath: BathParams, r: int,
               config: DissipatorConfig) -> tuple[DensityMatrix, float]:
    """Apply r elementary steps at fixed spectrum; return (state, heat absorbed).

    The r-fold composition is evaluated in closed form -- populations through
    the r-th power of the one-step matrix, coherences through scalar powers of
    their per-step factor -- which is algebraically identical to stepping and
    differs only in roundoff (see thermalize_stepwise for the literal loop).
    """
    if r < 1:
        raise ValueError(f"r must be a positive integer, got {r}")
    if rho.basis_alpha != spectrum.alpha:
        raise IntegrityError(
            f"state tagged alpha={rho.basis_alpha!r}, spectrum is at {spectrum.alpha!r}")
    n = spectrum.params.n_max
    transitions = build_transitions(spectrum, bath, config)
    p = rho.populations
    A = np.eye(n) + config.delta_tau * _population_generator(transitions, n)
    new_p = np.linalg.matrix_power(A, r) @ p
    if new_p.min() < POSITIVITY_TOL:
        raise IntegrityError(
            f"population went negative ({new_p.min():.3e}); delta_tau too large for these rates")
    out = np.zeros_like(rho.elements)
    if config.coherence_mode == COHERENCE_EXACT_PHASE:
        damp = _level_outflow(transitions, n)
        phase = np.exp(-1j * spectrum.E * config.delta_tau / spectrum.params.hbar)
        factor = (np.outer(phase, phase.conj())
                  * (1.0 - 0.5 * config.delta_tau * (damp[:, None] + damp[None, :])))
        off_mask = ~np.eye(n, dtype=bool)
        out[off_mask] = rho.elements[off_mask] * (factor[off_mask] ** r)
    np.fill_diagonal(out, new_p)
    result = DensityMatrix(out, rho.basis_alpha)
    heat = float(np.dot(spectrum.E, new_p - p))
    return result, heat


def thermalize_stepwise(rho: DensityMatrix, spectrum: Spectrum, bath: BathParams, r: int,
                        config: DissipatorConfig) -> tuple[DensityMatrix, float]:
    """Literal r-fold loop over elementary_step; oracle for ``thermalize``."""
    if r < 1:
        raise ValueError(f"r must be a positive integer, got {r}")
    transitions = build_transitions(spectrum, bath, config)
    u_before = float(np.dot(spectrum.E, rho.populations))
    out = rho
    for _ in range(r):
        out = elementary_step(out, spectrum, transitions, config.delta_tau,
                              config.coherence_mode)
    heat = float(np.dot(spectrum.E, out.populations)) - u_before
    return out, heat


def with_delta_tau(config: DissipatorConfig, delta_tau: float) -> DissipatorConfig:
    return replace(config, delta_tau=delta_tau)
