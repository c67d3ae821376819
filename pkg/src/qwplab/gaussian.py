"""
Chirped Gaussian packets

    psi(x) = (pi alpha)^(-1/4) exp(-(x-x0)^2/(2 alpha) + i p0 (x-x0)/hbar
                                   + i a (x-x0)^2 + i phi)

and their relation to the moment triple.  Every Gaussian saturates the
generalized uncertainty inequality, U = hbar^2/4, and stays Gaussian under
at most quadratic Hamiltonians, so the chirp history follows from the
canonical uncertainty orbits.

The global phase ``phi`` is carried along but never evolved.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .analytic import MAX_HYPERBOLIC_ARG
from .core import (
    Harmonic,
    InvalidOrbitError,
    Linear,
    PhasePoint,
    QWPError,
    RangeError,
    Regime,
    UncertaintyState,
)
from .grid import Grid, GridResolutionError, GridWavefunction, InsufficientCoverageError


class NotGaussianError(QWPError, ValueError):
    pass


@dataclass(frozen=True)
class GaussianParams:
    alpha: float
    a: float = 0.0
    x0: float = 0.0
    p0: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not all(math.isfinite(v) for v in (self.a, self.x0, self.p0, self.phi)):
            raise ValueError(f"non-finite Gaussian parameters: {self}")


class GaussianClass(enum.Enum):
    COHERENT = "coherent"
    SQUEEZED = "squeezed"
    GENERAL = "general"


@dataclass(frozen=True)
class ChirpExtrema:
    tau_max: float
    a_max: float
    tau_min: float
    a_min: float


def moments_from_gaussian(g: GaussianParams, hbar: float = 1.0):
    """Return ``(UncertaintyState, PhasePoint)`` of the packet."""
    dx2 = 0.5 * g.alpha
    dxp = 2.0 * g.a * hbar * dx2
    dp2 = hbar * hbar / (4.0 * dx2) + 4.0 * g.a * g.a * hbar * hbar * dx2
    return UncertaintyState(dx2, dp2, dxp), PhasePoint(g.x0, g.p0)


def gaussian_from_moments(s: UncertaintyState, q: PhasePoint, hbar: float = 1.0,
                          tol: float | None = None) -> GaussianParams:
    """Invert :func:`moments_from_gaussian`.

    Raises NotGaussianError unless ``dx2*dp2 - dxp**2`` equals ``hbar**2/4``
    within ``tol`` (default ``1e-9 hbar**2``).
    """
    if tol is None:
        tol = 1e-9 * hbar * hbar
    U = s.dx2 * s.dp2 - s.dxp * s.dxp
    if abs(U - 0.25 * hbar * hbar) > tol:
        raise NotGaussianError(
            f"U = {U!r} differs from hbar^2/4 = {0.25 * hbar * hbar!r} by more than {tol}"
        )
    return GaussianParams(alpha=2.0 * s.dx2, a=s.dxp / (2.0 * hbar * s.dx2),
                          x0=q.x, p0=q.p, phi=0.0)


def chirp_history(k: float, regime: Regime, m: float = 1.0, hbar: float = 1.0, tau=0.0):
    """Chirp along the canonical Gaussian orbit (tau = 0 at minimal width).

    ``k`` is ``K/(m w hbar)`` for the oscillators; in the linear regime it is
    ``K = (dp0)^2`` itself.  Broadcasts over array ``tau``.
    """
    tau = np.asarray(tau, dtype=float)
    if isinstance(regime, Linear):
        K = float(k)
        if not K > 0:
            raise InvalidOrbitError(f"linear orbit needs K = dp2 > 0, got {K}")
        b2 = (m * hbar / (2.0 * K)) ** 2
        out = (m / (2.0 * hbar)) * tau / (tau * tau + b2)
        return out if out.ndim else float(out)
    w = regime.omega
    scale = m * w / (2.0 * hbar)
    if isinstance(regime, Harmonic):
        if k < 1:
            raise InvalidOrbitError(f"harmonic Gaussian orbits need k >= 1, got {k}")
        if k == 1:
            out = np.zeros_like(tau)
        else:
            c = k / math.sqrt(k * k - 1.0)
            out = scale * np.sin(2 * w * tau) / (c - np.cos(2 * w * tau))
        return out if out.ndim else float(out)
    if np.max(np.abs(2 * w * tau)) > MAX_HYPERBOLIC_ARG:
        raise RangeError(f"|2 omega tau| exceeds {MAX_HYPERBOLIC_ARG}")
    c = k / math.sqrt(k * k + 1.0)
    # sinh/(cosh - c) written with tanh and sech to stay finite for large |tau|
    x = 2 * w * tau
    out = scale * np.tanh(x) / (1.0 - c / np.cosh(x))
    return out if out.ndim else float(out)


def chirp_extrema(k: float, regime: Regime, m: float = 1.0,
                  hbar: float = 1.0) -> ChirpExtrema | None:
    """Chirp maximum and minimum on the canonical Gaussian orbit.

    Returns None when there are none: the inverted regime with ``k <= 0``
    (chirp increases monotonically) and the coherent harmonic orbit
    ``k == 1`` (chirp vanishes identically).
    """
    if isinstance(regime, Linear):
        K = float(k)
        if not K > 0:
            raise InvalidOrbitError(f"linear orbit needs K = dp2 > 0, got {K}")
        tau_max = hbar * m / (2.0 * K)
        a_max = K / (2.0 * hbar * hbar)
        return ChirpExtrema(tau_max, a_max, -tau_max, -a_max)
    w = regime.omega
    scale = m * w / (2.0 * hbar)
    if isinstance(regime, Harmonic):
        if k < 1:
            raise InvalidOrbitError(f"harmonic Gaussian orbits need k >= 1, got {k}")
        if k == 1:
            return None
        root = math.sqrt(k * k - 1.0)
        tau_max = math.acos(root / k) / (2 * w)
        return ChirpExtrema(tau_max, scale * root, math.pi / w - tau_max, -scale * root)
    if k <= 0:
        return None
    # cosh(2 w tau_max) = sqrt(k^2+1)/k, i.e. sinh(2 w tau_max) = 1/k
    tau_max = math.asinh(1.0 / k) / (2 * w)
    a_max = scale * math.sqrt(1.0 + k * k)
    return ChirpExtrema(tau_max, a_max, -tau_max, -a_max)


def classify_gaussian(g: GaussianParams, m: float, omega: float, hbar: float = 1.0,
                      tol: float = 1e-9) -> GaussianClass:
    s, _ = moments_from_gaussian(g, hbar)
    if abs(g.a) > tol:
        return GaussianClass.GENERAL
    target = (m * omega) ** 2 * s.dx2
    if abs(s.dp2 - target) <= tol * target:
        return GaussianClass.COHERENT
    return GaussianClass.SQUEEZED


def sample_wavefunction(g: GaussianParams, grid: Grid, hbar: float = 1.0) -> GridWavefunction:
    reach = 8.0 * math.sqrt(g.alpha)
    if g.x0 - reach < grid.x_min or g.x0 + reach > grid.x_max:
        raise InsufficientCoverageError(
            f"grid [{grid.x_min}, {grid.x_max}] does not cover x0 +- 8 sqrt(alpha) = "
            f"[{g.x0 - reach}, {g.x0 + reach}]"
        )
    u = grid.x - g.x0
    arg = (-u * u / (2 * g.alpha)
           + 1j * (g.p0 * u / hbar + g.a * u * u + g.phi))
    return GridWavefunction((math.pi * g.alpha) ** -0.25 * np.exp(arg), grid)


def sample_superposition(packets, grid: Grid, hbar: float = 1.0,
                         weights=None) -> GridWavefunction:
    """Normalized weighted sum of Gaussian packets (not itself Gaussian)."""
    if weights is None:
        weights = [1.0] * len(packets)
    total = sum(w * sample_wavefunction(g, grid, hbar).samples
                for g, w in zip(packets, weights))
    return GridWavefunction(total, grid).normalized()


def two_gaussian_superposition(separation: float, alpha: float = 1.0, center: float = 0.0):
    """Packets for an equal-weight pair centered at ``center +- separation/2``."""
    h = 0.5 * separation
    return [GaussianParams(alpha, x0=center - h), GaussianParams(alpha, x0=center + h)]


def superposition_moments(separation: float, alpha: float = 1.0, center: float = 0.0,
                          hbar: float = 1.0):
    """Exact ``(UncertaintyState, PhasePoint)`` of the normalized pair from
    :func:`two_gaussian_superposition`.

    With half-separation ``c`` and overlap ``E = exp(-c^2/alpha)``:
    ``dx2 = alpha/2 + c^2/(1+E)``, ``dxp = 0`` and
    ``dp2 = hbar^2 (1/(2 alpha) + E (1/(2 alpha) - c^2/alpha^2)) / (1+E)``.
    """
    c = 0.5 * separation
    E = math.exp(-c * c / alpha)
    dx2 = 0.5 * alpha + c * c / (1.0 + E)
    dp2 = hbar * hbar * (0.5 / alpha + E * (0.5 / alpha - c * c / alpha**2)) / (1.0 + E)
    return UncertaintyState(dx2, dp2, 0.0), PhasePoint(center, 0.0)


def spectral_derivative(psi: GridWavefunction) -> np.ndarray:
    k = psi.grid.k.copy()
    k[psi.grid.n // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(psi.samples))


def coherent_eigenvalue_residual(g: GaussianParams, m: float, omega: float,
                                 hbar: float = 1.0, grid: Grid | None = None) -> float:
    """Relative L2 residual of the annihilation-operator eigenvalue equation.

    Evaluates ``(m w x + hbar d/dx) psi / sqrt 2`` against
    ``(m w x0 + i p0) psi / sqrt 2``; zero (to discretization) iff the packet
    is a coherent state.
    """
    if grid is None:
        grid = Grid.centered(g.x0, 12 * math.sqrt(g.alpha), 4096)
    psi = sample_wavefunction(g, grid, hbar)
    norm = psi.norm()
    if abs(1.0 - norm * norm) > 1e-8:
        raise GridResolutionError(f"norm deficit {1.0 - norm * norm:.3e} exceeds 1e-8")
    mw = m * omega
    lhs = (mw * grid.x * psi.samples + hbar * spectral_derivative(psi)) / math.sqrt(2)
    rhs = (mw * g.x0 + 1j * g.p0) * psi.samples / math.sqrt(2)
    diff = lhs - rhs
    return math.sqrt(grid.dx * float(np.sum(np.abs(diff) ** 2))) / norm
