"""Density matrices in the instantaneous eigenbasis, Gibbs construction.

The matrix elements are the expansion coefficients p_nm of the state over the
eigenbasis at a given barrier strength; the ``basis_alpha`` tag records which
basis that is so that mismatched uses fail loudly instead of silently.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .spectrum import BasisChange, ModelParams, Spectrum

log = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-12
TRACE_EXCESS_TOL = 1e-12
POSITIVITY_TOL = -1e-10
STROKE_LEAKAGE_WARN = 1e-4


class IntegrityError(RuntimeError):
    """State violated a structural invariant (run aborted, never patched up)."""


class BasisMismatchError(IntegrityError):
    """Operands expressed in different instantaneous eigenbases."""


@dataclass(frozen=True)
class BathParams:
    T: float       # K
    beta: float    # 1/J

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"bath temperature must be positive, got {self.T}")

    @classmethod
    def for_temperature(cls, T: float, params: ModelParams) -> "BathParams":
        if not T > 0:
            raise ValueError(f"bath temperature must be positive, got {T}")
        return cls(T=float(T), beta=1.0 / (params.kB * T))


@dataclass(eq=False)
class DensityMatrix:
    elements: np.ndarray   # complex (n_max, n_max)
    basis_alpha: float

    @property
    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    @property
    def populations(self) -> np.ndarray:
        return np.diag(self.elements).real.copy()

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.elements.copy(), self.basis_alpha)

    def check(self, leakage_budget: float = 0.0) -> None:
        """Abort with a diagnostic on Hermiticity/trace/positivity violations.

        Negative eigenvalues are never clipped; a breach means the integrator
        or its configuration is wrong and the run must not continue.
        """
        rho = self.elements
        herm = np.abs(rho - rho.conj().T).max()
        if herm > HERMITICITY_TOL:
            raise IntegrityError(f"state not Hermitian: max |rho - rho^dag| = {herm:.3e}")
        tr = self.trace
        if not (1.0 - leakage_budget - TRACE_EXCESS_TOL <= tr <= 1.0 + TRACE_EXCESS_TOL):
            raise IntegrityError(
                f"trace {tr!r} outside [1 - {leakage_budget:.3e}, 1 + {TRACE_EXCESS_TOL:.0e}]")
        lam_min = float(np.linalg.eigvalsh(rho).min())
        if lam_min < POSITIVITY_TOL:
            raise IntegrityError(f"state not positive: smallest eigenvalue {lam_min:.3e}")


def gibbs_state(spectrum: Spectrum, bath: BathParams) -> DensityMatrix:
    """Thermal state over the retained levels, p_n = exp(-beta E_n) / Z.

    Energies are shifted by the ground level before exponentiation; the shift
    cancels in the ratio and keeps the exponentials away from underflow.
    """
    w = np.exp(-bath.beta * (spectrum.E - spectrum.E[0]))
    p = w / w.sum()
    return DensityMatrix(np.diag(p).astype(complex), spectrum.alpha)


def transform(rho: DensityMatrix, change: BasisChange) -> tuple[DensityMatrix, float]:
    """Re-express ``rho`` in the eigenbasis at ``change.alpha_new``.

    Sudden approximation: the state operator itself is unchanged; only its
    matrix S rho S^T in the new basis is returned, together with the
    probability leaked out of the retained subspace.  The state is never
    renormalized -- leakage is the caller's to account for.
    """
    if rho.basis_alpha != change.alpha_old:
        raise BasisMismatchError(
            f"state tagged alpha={rho.basis_alpha!r}, change expects {change.alpha_old!r}")
    out = change.S @ rho.elements @ change.S.T
    leaked = rho.trace - float(np.trace(out).real)
    return DensityMatrix(out, change.alpha_new), leaked


def internal_energy(rho: DensityMatrix, spectrum: Spectrum) -> float:
    """Tr[H rho] with H diagonal in the tagged eigenbasis."""
    if rho.basis_alpha != spectrum.alpha:
        raise BasisMismatchError(
            f"state tagged alpha={rho.basis_alpha!r}, spectrum is at {spectrum.alpha!r}")
    return float(np.dot(spectrum.E, rho.populations))


def warn_if_leaky(leaked: float, where: str) -> None:
    if leaked > STROKE_LEAKAGE_WARN:
        log.warning("%s leaked %.3e probability out of the retained levels", where, leaked)
