"""Eigenproblem of a 1-D infinite box with a central delta barrier.

The box spans (-a, a); the barrier is alpha * delta(x).  Levels with a node at
the center (even index n = 2, 4, ...) are unaffected by the barrier and keep
k_n = n pi / (2a) for every alpha.  Levels with an antinode at the center
(odd index n = 1, 3, ...) satisfy the transcendental condition

    g sin(y) + y cos(y) = 0,      y = k a,  g = m alpha a / hbar^2,

which is the pole-free form of tan(ka) = -hbar^2 k / (m alpha) and stays
finite both at the tangent poles and at alpha = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import ELECTRON_MASS, HBAR, K_B

PARITY_EVEN = "even"   # symmetric under x -> -x (antinode at center; odd index n)
PARITY_ODD = "odd"     # antisymmetric (node at center; even index n)

_BISECT_RTOL = 1e-14


class SpectrumError(ValueError):
    """Invalid input to the spectral solver."""


@dataclass(frozen=True)
class ModelParams:
    """Geometry, particle and unit constants shared by every computation."""

    a: float = 20e-9            # box half-width (m)
    m: float = ELECTRON_MASS    # particle mass (kg)
    hbar: float = HBAR          # J s
    kB: float = K_B             # J/K
    n_max: int = 4              # retained levels; even so degenerate pairs stay complete

    def __post_init__(self):
        if not self.a > 0:
            raise SpectrumError(f"box half-width must be positive, got {self.a}")
        if not self.m > 0:
            raise SpectrumError(f"mass must be positive, got {self.m}")
        if self.n_max < 2 or self.n_max % 2 != 0:
            raise SpectrumError(f"n_max must be even and >= 2, got {self.n_max}")

    @property
    def ground_energy(self) -> float:
        """E_1 of the bare box (alpha = 0)."""
        return (np.pi * self.hbar) ** 2 / (8.0 * self.m * self.a**2)

    def barrier_g(self, alpha: float) -> float:
        """Dimensionless barrier strength g = m alpha a / hbar^2."""
        return self.m * alpha * self.a / self.hbar**2

    def alpha_from_g(self, g: float) -> float:
        return g * self.hbar**2 / (self.m * self.a)


class Level(NamedTuple):
    n: int          # 1-based index
    k: float        # wavenumber (1/m)
    E: float        # energy (J)
    parity: str


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Retained levels of the box + barrier at one barrier strength."""

    params: ModelParams
    alpha: float
    k: np.ndarray   # (n_max,)
    E: np.ndarray   # (n_max,)

    @property
    def parities(self) -> list[str]:
        return [PARITY_EVEN if n % 2 == 1 else PARITY_ODD
                for n in range(1, self.params.n_max + 1)]

    def levels(self) -> list[Level]:
        return [Level(n + 1, self.k[n], self.E[n], p)
                for n, p in enumerate(self.parities)]


def antinode_root(g, p, rtol=_BISECT_RTOL, maxiter=200):
    """Root y = k a of g sin(y) + y cos(y) = 0 on ((2p-1) pi/2, p pi).

    Vectorized over ``g``; p = 1, 2, ... labels the p-th antinode level
    (1-based index n = 2p - 1).  At g = 0 the root is exactly (2p-1) pi/2.
    """
    g = np.atleast_1d(np.asarray(g, dtype=float))
    if np.any(g < 0):
        raise SpectrumError("barrier strength must be nonnegative")
    lo = np.full(g.shape, (2 * p - 1) * np.pi / 2.0)
    hi = np.full(g.shape, p * np.pi)
    # f(lo) = +-g, f(hi) = -+ p pi: opposite signs whenever g > 0.
    sign_lo = np.where(p % 2 == 1, np.sign(g), -np.sign(g))
    active = g > 0
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        fm = g * np.sin(mid) + mid * np.cos(mid)
        go_right = active & (np.sign(fm) == sign_lo)
        lo = np.where(go_right, mid, lo)
        hi = np.where(active & ~go_right, mid, hi)
        if np.all((hi - lo <= rtol * lo) | ~active):
            break
    else:  # pragma: no cover - brackets are valid by construction
        raise RuntimeError("bisection failed to converge; invalid bracket (bug)")
    root = 0.5 * (lo + hi)
    return np.where(active, root, (2 * p - 1) * np.pi / 2.0)


def solve_spectrum(params: ModelParams, alpha: float) -> Spectrum:
    """Solve the instantaneous eigenproblem at barrier strength ``alpha``."""
    if alpha < 0:
        raise SpectrumError(f"barrier strength must be nonnegative, got {alpha}")
    g = params.barrier_g(alpha)
    k = np.empty(params.n_max)
    for n in range(1, params.n_max + 1):
        if n % 2 == 0:
            k[n - 1] = n * np.pi / (2.0 * params.a)
        else:
            p = (n + 1) // 2
            k[n - 1] = antinode_root(g, p)[0] / params.a
    E = (params.hbar * k) ** 2 / (2.0 * params.m)
    return Spectrum(params=params, alpha=float(alpha), k=k, E=E)


def normalization(params: ModelParams, spectrum: Spectrum, n: int) -> float:
    """Amplitude A_n such that the wavefunction is unit-normalized.

    A_n = (a - sin(2 k_n a) / (2 k_n))^(-1/2); B_n = -A_n for odd n and
    B_n = A_n for even n, giving probability 1/2 in each half-box.
    """
    if not 1 <= n <= params.n_max:
        raise IndexError(f"level index {n} outside 1..{params.n_max}")
    k = spectrum.k[n - 1]
    return float((params.a - np.sin(2.0 * k * params.a) / (2.0 * k)) ** -0.5)


@dataclass(frozen=True, eq=False)
class BasisChange:
    """Overlap matrix between eigenbases at two barrier strengths.

    S[m, n] = <psi_m(alpha_new) | psi_n(alpha_old)>.  Cross-parity entries
    vanish identically and the center-node sector is exactly the identity.
    ``leakage[n]`` = 1 - sum_m S[m, n]^2 is the probability lost from old
    level n to levels above n_max.
    """

    S: np.ndarray
    alpha_old: float
    alpha_new: float
    leakage: np.ndarray


def _antinode_amplitudes(params: ModelParams, spec: Spectrum):
    idx = np.arange(0, params.n_max, 2)           # 0-based indices of odd-n levels
    k = spec.k[idx]
    A = (params.a - np.sin(2.0 * k * params.a) / (2.0 * k)) ** -0.5
    return idx, k, A


def antinode_overlap_block(a, k_new, A_new, k_old, A_old):
    """Closed-form overlaps between antinode-sector eigenstates.

    Both half-box integrals contribute equally; the k -> k' limit of
    sin((k - k') a)/(k - k') is evaluated through sinc, which is exact at
    zero argument and free of cancellation.
    """
    dk = k_new[..., :, None] - k_old[..., None, :]
    sk = k_new[..., :, None] + k_old[..., None, :]
    amp = A_new[..., :, None] * A_old[..., None, :]
    return amp * (a * np.sinc(dk * a / np.pi) - np.sin(sk * a) / sk)


def overlap_matrix(params: ModelParams, spec_old: Spectrum, spec_new: Spectrum) -> BasisChange:
    """Overlap matrix S between the eigenbases of two spectra."""
    if spec_old.params != params or spec_new.params != params:
        raise SpectrumError("spectra were built from different model parameters")
    S = np.eye(params.n_max)
    idx, k_old, A_old = _antinode_amplitudes(params, spec_old)
    _, k_new, A_new = _antinode_amplitudes(params, spec_new)
    S[np.ix_(idx, idx)] = antinode_overlap_block(params.a, k_new, A_new, k_old, A_old)
    leakage = 1.0 - (S**2).sum(axis=0)
    return BasisChange(S=S, alpha_old=spec_old.alpha, alpha_new=spec_new.alpha,
                       leakage=leakage)
