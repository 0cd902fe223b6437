"""Parameter sweeps over operating speed r and quench-size parameter sigma.

Grid points are independent; evaluation may fan out over a bounded thread
pool (QSTIRLING_WORKERS), with results keyed by (r, sigma) and merged in a
fixed order so parallel and serial runs produce identical tables.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

from .engine import CycleConfig, EngineError, run_cycle

WORKERS_ENV = "QSTIRLING_WORKERS"
LONG_RUNNING_R_CAP = 10**6
COARSE_GRID_POINTS = 20


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SweepRecord:
    """One (r, sigma) operating point, ready for CSV serialization."""

    r: int
    sigma: float
    W_over_kTc: float
    eta: float
    P_attowatts: float
    Q_ins: float
    Q_hc: float
    Q_rem: float
    Q_ch: float
    n_steps: int
    leakage: float
    engine_flag: bool
    wall_time: float = 0.0
    error: str | None = None     # not serialized; per-row failure note


def _evaluate(config: CycleConfig, r: int, sigma: float) -> SweepRecord:
    point = replace(config, r=int(r), sigma=float(sigma), record_trajectory=False)
    t0 = time.perf_counter()
    try:
        ledger = run_cycle(point)
    except EngineError as exc:
        nan = float("nan")
        return SweepRecord(r=int(r), sigma=float(sigma), W_over_kTc=nan, eta=nan,
                           P_attowatts=nan, Q_ins=nan, Q_hc=nan, Q_rem=nan, Q_ch=nan,
                           n_steps=0, leakage=nan, engine_flag=False,
                           wall_time=time.perf_counter() - t0, error=str(exc))
    kTc = config.model.kB * config.T_c
    return SweepRecord(
        r=int(r), sigma=float(sigma),
        W_over_kTc=ledger.W_total / kTc, eta=ledger.eta,
        P_attowatts=ledger.P / 1e-18,
        Q_ins=ledger.Q_ins, Q_hc=ledger.Q_hc, Q_rem=ledger.Q_rem, Q_ch=ledger.Q_ch,
        n_steps=ledger.n_steps, leakage=ledger.leakage,
        engine_flag=ledger.engine_flag,
        wall_time=time.perf_counter() - t0)


def _evaluate_many(config: CycleConfig, points: list[tuple[int, float]]) -> dict:
    """Evaluate (r, sigma) points concurrently; deterministic keyed results."""
    workers = min(worker_count(), max(1, len(points)))
    if workers == 1:
        return {pt: _evaluate(config, *pt) for pt in points}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pt: pool.submit(_evaluate, config, *pt) for pt in points}
    return {pt: fut.result() for pt, fut in futures.items()}


def sweep_r(config: CycleConfig, r_values: list[int]) -> list[SweepRecord]:
    """One cycle per r at the config's sigma, in the given order."""
    if not r_values:
        raise ValueError("r_values must be nonempty")
    results = _evaluate_many(config, [(int(r), config.sigma) for r in r_values])
    return [results[(int(r), config.sigma)] for r in r_values]


def _coarse_grid(r_lo: int, r_hi: int, n: int = COARSE_GRID_POINTS) -> list[int]:
    if r_hi - r_lo + 1 <= n:
        return list(range(r_lo, r_hi + 1))
    ratio = (r_hi / r_lo) ** (1.0 / (n - 1))
    grid = sorted({min(r_hi, max(r_lo, round(r_lo * ratio**i))) for i in range(n)})
    return grid


def max_power_search(config: CycleConfig, r_lo: int, r_hi: int
                     ) -> tuple[int, SweepRecord] | tuple[None, None]:
    """Locate the interior power maximum over integer r in [r_lo, r_hi].

    Coarse geometric grid, then integer ternary refinement on the bracket
    around the empirical peak.  Returns (None, None) when no grid point
    operates as an engine.
    """
    if not r_lo < r_hi:
        raise ValueError(f"need r_lo < r_hi, got {r_lo}, {r_hi}")
    cache: dict[int, SweepRecord] = {}

    def power(r: int) -> float:
        if r not in cache:
            cache[r] = _evaluate(config, r, config.sigma)
        p = cache[r].P_attowatts
        return p if math.isfinite(p) else float("-inf")

    grid = _coarse_grid(r_lo, r_hi)
    cache.update(_evaluate_many(config, [(r, config.sigma) for r in grid]))
    best = max(grid, key=power)
    if not cache[best].engine_flag:
        return None, None

    i = grid.index(best)
    lo = grid[i - 1] if i > 0 else r_lo
    hi = grid[i + 1] if i + 1 < len(grid) else r_hi
    while hi - lo > 2:
        m1 = lo + (hi - lo) // 3
        m2 = hi - (hi - lo) // 3
        if power(m1) < power(m2):
            lo = m1 + 1
        else:
            hi = m2 - 1
    for r in range(lo, hi + 1):
        power(r)
    r_star = max(cache, key=power)
    return r_star, cache[r_star]


def sweep_sigma(config: CycleConfig, sigma_values: list[float],
                r_lo: int = 10, r_hi: int = 20000,
                allow_long_running: bool = False,
                long_running_r_cap: int = LONG_RUNNING_R_CAP) -> list[SweepRecord]:
    """max_power_search per sigma; one record per sigma (NaN row if not found).

    sigma < 4 needs r far beyond any practical bracket and is refused unless
    explicitly allowed, in which case the bracket is clamped to the cap.
    """
    if not sigma_values:
        raise ValueError("sigma_values must be nonempty")
    rows = []
    for sigma in sigma_values:
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if sigma < 4 and not allow_long_running:
            raise EngineError(
                f"sigma={sigma} < 4 requires very large r; pass allow_long_running")
        hi = min(r_hi, long_running_r_cap) if sigma < 4 else r_hi
        point = replace(config, sigma=float(sigma))
        r_star, record = max_power_search(point, r_lo, hi)
        if record is None:
            nan = float("nan")
            record = SweepRecord(r=0, sigma=float(sigma), W_over_kTc=nan, eta=nan,
                                 P_attowatts=nan, Q_ins=nan, Q_hc=nan, Q_rem=nan,
                                 Q_ch=nan, n_steps=0, leakage=nan, engine_flag=False,
                                 error="no engine regime in bracket")
        rows.append(record)
    return rows


def contour_grid(config: CycleConfig, r_values: list[int],
                 sigma_values: list[float]) -> list[list[SweepRecord]]:
    """Full Cartesian product; rows follow r_values, columns sigma_values."""
    if not r_values or not sigma_values:
        raise ValueError("r_values and sigma_values must be nonempty")
    points = [(int(r), float(s)) for r in r_values for s in sigma_values]
    results = _evaluate_many(config, points)
    return [[results[(int(r), float(s))] for s in sigma_values] for r in r_values]
