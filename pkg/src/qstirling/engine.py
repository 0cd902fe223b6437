"""Four-stroke finite-time Stirling cycle and its thermodynamic ledger.

Cycle: insert the barrier at T_h, switch baths to T_c (instantaneous Gibbs
reset), remove the barrier at T_c, switch back to T_h.  Each barrier stroke
alternates sudden quenches alpha -> alpha +- delta_alpha with r elementary
thermalizations at the new spectrum.

Sign conventions: quench work is the work done ON the system; the ledger
reports W with engine-output sign (positive when the cycle delivers work),
with the raw on-system sums retained alongside.  Heat is positive when
absorbed by the working substance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernel, lindblad
from .lindblad import COHERENCE_DROP, DissipatorConfig, default_delta_tau, transition_rates
from .spectrum import (BasisChange, ModelParams, Spectrum, antinode_overlap_block,
                       antinode_root, solve_spectrum)
from .state import (BasisMismatchError, BathParams, DensityMatrix, IntegrityError,
                    gibbs_state, internal_energy, transform, warn_if_leaky)

TRAJECTORY_MAX_SAMPLES = 10000
DEFAULT_N_STEPS_CAP = 10**7

QUENCH_FREEZE = "freeze"     # carry p_nm over unchanged (first order in delta_alpha)
QUENCH_PROJECT = "project"   # re-express the state through the overlap matrix


class EngineError(RuntimeError):
    pass


class ScheduleOverflowError(EngineError):
    """Insertion would need more quench steps than the configured cap."""


@dataclass(frozen=True)
class CycleConfig:
    model: ModelParams
    dissipator: DissipatorConfig
    T_h: float = 0.1                 # K
    T_c: float = 0.05                # K
    sigma: float = 50.0              # delta_alpha = E_1 a / sigma
    r: int = 100                     # elementary thermalizations per quench
    gap_tolerance: float = 0.05      # stop insertion at E_2 - E_1 <= tol * kB T_c
    tau_divisor: float = lindblad.DEFAULT_TAU_DIVISOR
    quench_model: str = QUENCH_FREEZE
    record_trajectory: bool = False
    n_steps_cap: int = DEFAULT_N_STEPS_CAP

    def __post_init__(self):
        if not self.T_h > self.T_c > 0:
            raise ValueError(f"need T_h > T_c > 0, got T_h={self.T_h}, T_c={self.T_c}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.r < 1:
            raise ValueError(f"r must be a positive integer, got {self.r}")
        if not 0.0 < self.gap_tolerance < 1.0:
            raise ValueError(f"gap_tolerance must lie in (0, 1), got {self.gap_tolerance}")
        if self.quench_model not in (QUENCH_FREEZE, QUENCH_PROJECT):
            raise ValueError(f"unknown quench model {self.quench_model!r}")

    @property
    def bath_hot(self) -> BathParams:
        return BathParams.for_temperature(self.T_h, self.model)

    @property
    def bath_cold(self) -> BathParams:
        return BathParams.for_temperature(self.T_c, self.model)


def default_config(**overrides) -> CycleConfig:
    """CycleConfig with the reference operating point; overrides applied on top.

    Model-level overrides (a, m, n_max) and dissipator-level overrides
    (gamma_divisor, coherence_mode) are accepted alongside CycleConfig fields.
    """
    model_kw = {k: overrides.pop(k) for k in ("a", "m", "n_max") if k in overrides}
    model = ModelParams(**model_kw)
    tau_divisor = overrides.pop("tau_divisor", lindblad.DEFAULT_TAU_DIVISOR)
    diss_kw = {k: overrides.pop(k) for k in ("gamma_divisor", "coherence_mode",
                                             "degenerate_gap_threshold") if k in overrides}
    dissipator = DissipatorConfig(delta_tau=default_delta_tau(model, tau_divisor), **diss_kw)
    return CycleConfig(model=model, dissipator=dissipator, tau_divisor=tau_divisor,
                       **overrides)


# ---------------------------------------------------------------------------
# quench schedule


@dataclass(frozen=True, eq=False)
class QuenchSchedule:
    """Precomputed insertion path: spectra and overlap blocks for every quench.

    Index i runs over barrier strengths g_i = i * dg, i = 0..n_steps; removal
    traverses the same path in reverse.  Only the antinode-sector overlap
    block is stored -- the node sector is exactly the identity.
    """

    params: ModelParams
    sigma: float
    gap_tolerance: float
    dg: float
    g: np.ndarray              # (n_steps + 1,)
    energies: np.ndarray       # (n_steps + 1, n_max)
    k: np.ndarray              # (n_steps + 1, n_max)
    blocks: np.ndarray         # (n_steps, s, s), quench i: basis i -> i+1
    n_steps: int

    @property
    def alpha_max(self) -> float:
        return self.params.alpha_from_g(self.g[-1])

    def alpha_at(self, i: int) -> float:
        return self.params.alpha_from_g(self.g[i])

    def spectrum_at(self, i: int) -> Spectrum:
        return Spectrum(params=self.params, alpha=self.alpha_at(i),
                        k=self.k[i], E=self.energies[i])

    def change_at(self, i: int, reverse: bool = False) -> BasisChange:
        """BasisChange for quench step i (basis i -> i+1, or reversed)."""
        n = self.params.n_max
        S = np.eye(n)
        idx = np.arange(0, n, 2)
        block = self.blocks[i].T if reverse else self.blocks[i]
        S[np.ix_(idx, idx)] = block
        old, new = (i + 1, i) if reverse else (i, i + 1)
        return BasisChange(S=S, alpha_old=self.alpha_at(old), alpha_new=self.alpha_at(new),
                           leakage=1.0 - (S**2).sum(axis=0))


def _pair_gap(params: ModelParams, g: float) -> float:
    """E_2 - E_1 at dimensionless barrier strength g."""
    y1 = float(antinode_root(g, 1)[0])
    e1 = (params.hbar * y1 / params.a) ** 2 / (2.0 * params.m)
    e2 = (params.hbar * np.pi / params.a) ** 2 / (2.0 * params.m)
    return e2 - e1


@lru_cache(maxsize=16)
def _build_schedule(params: ModelParams, sigma: float, gap_tolerance: float,
                    T_c: float, cap: int) -> QuenchSchedule:
    dg = (np.pi**2 / 8.0) / sigma
    threshold = gap_tolerance * params.kB * T_c
    if _pair_gap(params, cap * dg) > threshold:
        raise ScheduleOverflowError(
            f"insertion needs more than {cap} quench steps to close the gap "
            f"to {gap_tolerance} * kB T_c")
    # gap is strictly decreasing in g: binary search for the first step past it
    lo, hi = 0, cap   # gap(lo * dg) > threshold >= gap(hi * dg)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _pair_gap(params, mid * dg) <= threshold:
            hi = mid
        else:
            lo = mid
    n_steps = hi

    g = np.arange(n_steps + 1, dtype=float) * dg
    n = params.n_max
    s = n // 2
    k = np.empty((n_steps + 1, n))
    for level in range(1, n + 1):
        if level % 2 == 0:
            k[:, level - 1] = level * np.pi / (2.0 * params.a)
        else:
            p = (level + 1) // 2
            k[:, level - 1] = antinode_root(g, p) / params.a
    energies = (params.hbar * k) ** 2 / (2.0 * params.m)

    k_odd = k[:, 0::2]
    A_odd = (params.a - np.sin(2.0 * k_odd * params.a) / (2.0 * k_odd)) ** -0.5
    blocks = antinode_overlap_block(params.a, k_odd[1:], A_odd[1:], k_odd[:-1], A_odd[:-1])
    assert blocks.shape == (n_steps, s, s)
    return QuenchSchedule(params=params, sigma=sigma, gap_tolerance=gap_tolerance,
                          dg=dg, g=g, energies=energies, k=k, blocks=blocks,
                          n_steps=n_steps)


def get_schedule(config: CycleConfig) -> QuenchSchedule:
    return _build_schedule(config.model, config.sigma, config.gap_tolerance,
                           config.T_c, config.n_steps_cap)


# ---------------------------------------------------------------------------
# primitive operations


def quench_work(rho_before: DensityMatrix, spec_old: Spectrum, spec_new: Spectrum,
                change: BasisChange) -> float:
    """Work done on the system by one sudden quench, Tr[H_new rho'] - Tr[H_old rho]."""
    rho_after, _ = transform(rho_before, change)
    return internal_energy(rho_after, spec_new) - internal_energy(rho_before, spec_old)


@dataclass(eq=False)
class StrokeTrajectory:
    """Decimated per-step record of one barrier stroke (raw on-system work)."""

    step: np.ndarray
    alpha: np.ndarray
    w_on_cum: np.ndarray
    q_cum: np.ndarray
    populations: np.ndarray


@dataclass(frozen=True)
class StrokeResult:
    end: DensityMatrix
    w_on: float          # work done on the system over all quenches
    q: float             # heat absorbed from the bath
    n_steps: int
    leaked: float
    trajectory: StrokeTrajectory | None = None


def _stroke_arrays(schedule: QuenchSchedule, direction: str):
    if direction == "insert":
        return schedule.energies, schedule.blocks
    if direction == "remove":
        energies = np.ascontiguousarray(schedule.energies[::-1])
        blocks = np.ascontiguousarray(np.transpose(schedule.blocks[::-1], (0, 2, 1)))
        return energies, blocks
    raise ValueError(f"direction must be 'insert' or 'remove', got {direction!r}")


def barrier_stroke(start: DensityMatrix, bath: BathParams, direction: str,
                   config: CycleConfig,
                   schedule: QuenchSchedule | None = None) -> StrokeResult:
    """Run one full barrier stroke (all quenches with interleaved thermalization)."""
    if schedule is None:
        schedule = get_schedule(config)
    expected = schedule.alpha_at(0) if direction == "insert" else schedule.alpha_max
    if start.basis_alpha != expected:
        raise BasisMismatchError(
            f"{direction} stroke must start at alpha={expected!r}, "
            f"state is at {start.basis_alpha!r}")

    energies, blocks = _stroke_arrays(schedule, direction)
    diss = config.dissipator
    up, down = transition_rates(energies, bath.beta, config.model.hbar,
                                diss.gamma_divisor, diss.degenerate_gap_threshold)

    if config.record_trajectory:
        return _python_stroke(start, bath, direction, config, schedule)

    rho = np.ascontiguousarray(start.elements, dtype=np.complex128).copy()
    trace_in = float(np.trace(rho).real)
    w_on, q, ok = _kernel.run_stroke(
        rho, energies, blocks, up, down, int(config.r), diss.delta_tau,
        config.model.hbar, diss.coherence_mode == COHERENCE_DROP,
        config.quench_model == QUENCH_FREEZE)
    if not ok:
        raise IntegrityError(
            f"positivity breach during {direction} stroke (r={config.r}, "
            f"sigma={config.sigma})")
    end_alpha = schedule.alpha_max if direction == "insert" else schedule.alpha_at(0)
    end = DensityMatrix(rho, end_alpha)
    leaked = trace_in - end.trace
    warn_if_leaky(leaked, f"{direction} stroke")
    return StrokeResult(end=end, w_on=float(w_on), q=float(q),
                        n_steps=schedule.n_steps, leaked=leaked)


def _python_stroke(start: DensityMatrix, bath: BathParams, direction: str,
                   config: CycleConfig, schedule: QuenchSchedule) -> StrokeResult:
    """Reference stroke built from the module primitives; records a trajectory."""
    n_steps = schedule.n_steps
    order = range(n_steps) if direction == "insert" else range(n_steps - 1, -1, -1)
    stride = max(1, math.ceil(n_steps / TRAJECTORY_MAX_SAMPLES))
    rec_step, rec_alpha, rec_w, rec_q, rec_pop = [], [], [], [], []

    rho = start.copy()
    trace_in = rho.trace
    w_on = 0.0
    q = 0.0
    for count, i in enumerate(order):
        reverse = direction == "remove"
        spec_old = schedule.spectrum_at(i + 1 if reverse else i)
        spec_new = schedule.spectrum_at(i if reverse else i + 1)
        u_before = internal_energy(rho, spec_old)
        if config.quench_model == QUENCH_PROJECT:
            change = schedule.change_at(i, reverse=reverse)
            rho, _ = transform(rho, change)
        else:
            rho = DensityMatrix(rho.elements, spec_new.alpha)
        w_on += internal_energy(rho, spec_new) - u_before
        rho, dq = lindblad.thermalize(rho, spec_new, bath, config.r, config.dissipator)
        q += dq
        if count % stride == 0 or count == n_steps - 1:
            rec_step.append(count)
            rec_alpha.append(spec_new.alpha)
            rec_w.append(w_on)
            rec_q.append(q)
            rec_pop.append(rho.populations)
    leaked = trace_in - rho.trace
    warn_if_leaky(leaked, f"{direction} stroke")
    trajectory = StrokeTrajectory(step=np.array(rec_step), alpha=np.array(rec_alpha),
                                  w_on_cum=np.array(rec_w), q_cum=np.array(rec_q),
                                  populations=np.array(rec_pop))
    return StrokeResult(end=rho, w_on=w_on, q=q, n_steps=n_steps, leaked=leaked,
                        trajectory=trajectory)


def isochoric_switch(end_state: DensityMatrix, spectrum: Spectrum,
                     new_bath: BathParams) -> tuple[DensityMatrix, float]:
    """Instantaneous bath exchange at fixed spectrum: Gibbs reset, heat only."""
    if end_state.basis_alpha != spectrum.alpha:
        raise BasisMismatchError(
            f"state tagged alpha={end_state.basis_alpha!r}, spectrum is at {spectrum.alpha!r}")
    gibbs = gibbs_state(spectrum, new_bath)
    q = internal_energy(gibbs, spectrum) - internal_energy(end_state, spectrum)
    return gibbs, q


# ---------------------------------------------------------------------------
# full cycle


@dataclass(frozen=True)
class CycleLedger:
    """Per-stroke energy bookkeeping for one cycle (engine-output sign for W)."""

    W_ins: float
    W_rem: float
    Q_ins: float
    Q_hc: float
    Q_rem: float
    Q_ch: float
    W_total: float
    Q_total: float
    eta: float
    P: float                  # W (watts), insertion+removal strokes only
    n_steps: int              # quench steps per barrier stroke
    leakage: float
    alpha_max: float
    w_on_ins: float           # raw on-system quench-work sums
    w_on_rem: float
    trajectories: tuple[StrokeTrajectory, ...] | None = None

    @property
    def engine_flag(self) -> bool:
        return self.W_total > 0.0


def run_cycle(config: CycleConfig) -> CycleLedger:
    """Execute insert@T_h -> switch to T_c -> remove@T_c -> switch to T_h.

    Starts from Gibbs(alpha=0, T_h); stroke 4 reconstructs that state, so the
    cycle closes identically.  A non-engine outcome (W_total <= 0) is a valid
    ledger, not an error.
    """
    schedule = get_schedule(config)
    spec0 = schedule.spectrum_at(0)
    spec_max = schedule.spectrum_at(schedule.n_steps)
    bath_h, bath_c = config.bath_hot, config.bath_cold

    rho = gibbs_state(spec0, bath_h)
    ins = barrier_stroke(rho, bath_h, "insert", config, schedule)
    rho, q_hc = isochoric_switch(ins.end, spec_max, bath_c)
    rem = barrier_stroke(rho, bath_c, "remove", config, schedule)
    _, q_ch = isochoric_switch(rem.end, spec0, bath_h)

    w_total = -(ins.w_on + rem.w_on)
    q_total = ins.q + q_hc + rem.q + q_ch
    denom = q_ch + ins.q
    eta = 1.0 + (q_hc + rem.q) / denom if denom != 0.0 else float("nan")
    stroke_time = 2.0 * config.r * schedule.n_steps * config.dissipator.delta_tau
    power = w_total / stroke_time

    trajectories = None
    if config.record_trajectory:
        trajectories = (ins.trajectory, rem.trajectory)
    return CycleLedger(
        W_ins=-ins.w_on, W_rem=-rem.w_on,
        Q_ins=ins.q, Q_hc=q_hc, Q_rem=rem.q, Q_ch=q_ch,
        W_total=w_total, Q_total=q_total, eta=eta, P=power,
        n_steps=schedule.n_steps, leakage=ins.leaked + rem.leaked,
        alpha_max=schedule.alpha_max,
        w_on_ins=ins.w_on, w_on_rem=rem.w_on,
        trajectories=trajectories)


def quasistatic_work_limit(config: CycleConfig) -> float:
    """kB (T_h - T_c) ln 2, the quasistatic low-temperature work output."""
    return config.model.kB * (config.T_h - config.T_c) * math.log(2.0)
