"""
Closed-form uncertainty dynamics in at most quadratic potentials.

All three regimes share the constants of motion ``K`` and ``U``.  The
harmonic and inverted solutions are written in the sum/difference variables
``(K, Z)`` and the uncertainties are reconstructed from them, so ``K`` is
preserved to rounding by construction.

Times may be negative; every closed form is global in time.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    REGIME_EPS,
    Harmonic,
    Inverted,
    InvalidOrbitError,
    Linear,
    PhasePoint,
    PotentialSpec,
    RangeError,
    Regime,
    UncertaintyState,
    UnsupportedRegimeError,
    classify_regime,
    constants_of_motion,
)

#: Largest |2 omega t| evaluated before cosh/sinh would approach overflow.
MAX_HYPERBOLIC_ARG = 350.0


@dataclass(frozen=True)
class ZKState:
    """Regime-dependent sum/difference variables.

    Harmonic: ``K = dp2 + (m w)^2 dx2``, ``Z = dp2 - (m w)^2 dx2``.
    Inverted: ``K = dp2 - (m w)^2 dx2``, ``Z = dp2 + (m w)^2 dx2``.
    """

    K: float
    Z: float


@dataclass(frozen=True)
class CanonicalOrbit:
    """Uncertainty history parameterized by its constants of motion.

    ``T`` is the time (in the original clock) at which the mixed uncertainty
    vanishes and the uncertainty product reaches its minimum ``U``; for the
    harmonic regime it is the instant of minimal position variance.
    """

    regime: Regime
    K: float
    U: float
    m: float = 1.0
    T: float = 0.0

    def __post_init__(self):
        if isinstance(self.regime, Linear) and not self.K > 0:
            raise InvalidOrbitError(f"linear orbit needs K = dp2 > 0, got {self.K}")
        if isinstance(self.regime, Harmonic) and _harmonic_disc(self) < 0:
            raise InvalidOrbitError(
                f"harmonic orbit needs K^2 - 4 m^2 w^2 U >= 0 (K={self.K}, U={self.U})"
            )
        if not self.U > 0:
            raise InvalidOrbitError(f"U must be positive, got {self.U}")

    def state_at(self, t: float) -> UncertaintyState:
        return canonical_orbit_state(self, t - self.T)


def _harmonic_disc(orbit: CanonicalOrbit) -> float:
    mw = orbit.m * orbit.regime.omega
    disc = orbit.K**2 - 4.0 * mw**2 * orbit.U
    # rounding from K^2 ~ 4 m^2 w^2 U on coherent orbits
    if -1e-12 * orbit.K**2 <= disc < 0:
        return 0.0
    return disc


def _guard_hyperbolic(omega: float, t) -> None:
    if np.max(np.abs(2.0 * omega * np.asarray(t, dtype=float))) > MAX_HYPERBOLIC_ARG:
        raise RangeError(f"|2 omega t| exceeds {MAX_HYPERBOLIC_ARG}; cosh would overflow")


def to_zk(s: UncertaintyState, regime: Regime, m: float) -> ZKState:
    if isinstance(regime, Linear):
        raise UnsupportedRegimeError("Z variable is defined only for oscillator regimes")
    a = (m * regime.omega) ** 2 * s.dx2
    if isinstance(regime, Harmonic):
        return ZKState(K=s.dp2 + a, Z=s.dp2 - a)
    return ZKState(K=s.dp2 - a, Z=s.dp2 + a)


def from_zk(zk: ZKState, dxp: float, regime: Regime, m: float) -> UncertaintyState:
    if isinstance(regime, Linear):
        raise UnsupportedRegimeError("Z variable is defined only for oscillator regimes")
    mw2 = (m * regime.omega) ** 2
    if isinstance(regime, Harmonic):
        return UncertaintyState((zk.K - zk.Z) / (2 * mw2), (zk.K + zk.Z) / 2, dxp)
    return UncertaintyState((zk.Z - zk.K) / (2 * mw2), (zk.Z + zk.K) / 2, dxp)


def _evolve_arrays(dx2, dp2, dxp, regime: Regime, m: float, t):
    """Evaluate the closed forms; broadcasts over array-valued ``t``."""
    t = np.asarray(t, dtype=float)
    if isinstance(regime, Linear):
        r = t / m
        return (dx2 + r * r * dp2 + 2.0 * r * dxp,
                np.broadcast_to(np.asarray(dp2, dtype=float), t.shape) + 0.0,
                dxp + r * dp2)
    w = regime.omega
    mw = m * w
    if isinstance(regime, Harmonic):
        K = dp2 + mw * mw * dx2
        Z0 = dp2 - mw * mw * dx2
        c, s = np.cos(2 * w * t), np.sin(2 * w * t)
        Z = Z0 * c - dxp * 2 * mw * s
        X = dxp * c + Z0 / (2 * mw) * s
        return (K - Z) / (2 * mw * mw), (K + Z) / 2, X
    _guard_hyperbolic(w, t)
    K = dp2 - mw * mw * dx2
    Z0 = dp2 + mw * mw * dx2
    ch, sh = np.cosh(2 * w * t), np.sinh(2 * w * t)
    Z = Z0 * ch + dxp * 2 * mw * sh
    X = dxp * ch + Z0 / (2 * mw) * sh
    return (Z - K) / (2 * mw * mw), (Z + K) / 2, X


def _state(values) -> UncertaintyState:
    return UncertaintyState(*(float(v) for v in values))


def evolve_linear(s0: UncertaintyState, m: float, t: float) -> UncertaintyState:
    return _state(_evolve_arrays(s0.dx2, s0.dp2, s0.dxp, Linear(), m, t))


def evolve_harmonic(s0: UncertaintyState, m: float, omega: float, t: float) -> UncertaintyState:
    return _state(_evolve_arrays(s0.dx2, s0.dp2, s0.dxp, Harmonic(omega), m, t))


def evolve_inverted(s0: UncertaintyState, m: float, omega: float, t: float) -> UncertaintyState:
    return _state(_evolve_arrays(s0.dx2, s0.dp2, s0.dxp, Inverted(omega), m, t))


def evolve(s0: UncertaintyState, pot: PotentialSpec, t: float,
           eps: float = REGIME_EPS) -> UncertaintyState:
    """Evolve ``s0`` by ``t``; ``B`` and ``C`` play no role in the uncertainties."""
    regime = classify_regime(pot, eps)
    return _state(_evolve_arrays(s0.dx2, s0.dp2, s0.dxp, regime, pot.m, t))


def evolve_series(s0: UncertaintyState, pot: PotentialSpec, ts, eps: float = REGIME_EPS):
    """Vectorized :func:`evolve`; returns arrays ``(dx2, dp2, dxp)`` over ``ts``."""
    regime = classify_regime(pot, eps)
    return _evolve_arrays(s0.dx2, s0.dp2, s0.dxp, regime, pot.m, ts)


def time_of_zero_mixed(s0: UncertaintyState, pot: PotentialSpec,
                       eps: float = REGIME_EPS) -> float:
    """Time at which the mixed uncertainty vanishes.

    Linear and inverted regimes have exactly one zero, returned with its
    sign.  In the harmonic regime the smallest non-negative zero is
    returned, and 0 for the degenerate constant orbit.
    """
    regime = classify_regime(pot, eps)
    m, D = pot.m, s0.dxp
    if isinstance(regime, Linear):
        return -m * D / s0.dp2
    w = regime.omega
    mw = m * w
    if isinstance(regime, Inverted):
        Z0 = s0.dp2 + mw * mw * s0.dx2
        return math.atanh(-2 * mw * D / Z0) / (2 * w)
    Z0 = s0.dp2 - mw * mw * s0.dx2
    S = Z0 / (2 * mw)
    K = s0.dp2 + mw * mw * s0.dx2
    if math.hypot(D, S) <= 1e-15 * K / (2 * mw):
        return 0.0
    theta = math.atan2(S, D)
    return ((theta + 0.5 * math.pi) % math.pi) / (2 * w)


def narrowing_time_bound(s0: UncertaintyState, pot: PotentialSpec,
                         eps: float = REGIME_EPS) -> float:
    """Upper bound on the narrowing time shared by all states with the
    same uncertainty product ``dx2*dp2`` and the same ``U``.

    Only the inverted oscillator has a finite bound.
    """
    regime = classify_regime(pot, eps)
    if not isinstance(regime, Inverted):
        raise UnsupportedRegimeError(
            f"no finite narrowing bound in the {type(regime).__name__.lower()} regime"
        )
    U = s0.dx2 * s0.dp2 - s0.dxp**2
    return narrowing_bound_from_product(s0.dx2 * s0.dp2, U, regime.omega)


def narrowing_bound_from_product(product: float, U: float, omega: float) -> float:
    if product < U:
        raise ValueError(f"product {product} below U {U}")
    return math.atanh(math.sqrt(1.0 - U / product)) / (2 * omega)


def canonical_orbit_state(orbit: CanonicalOrbit, tau: float) -> UncertaintyState:
    return _state(_canonical_arrays(orbit, tau))


def canonical_orbit_series(orbit: CanonicalOrbit, taus):
    return _canonical_arrays(orbit, taus)


def _canonical_arrays(orbit: CanonicalOrbit, tau):
    tau = np.asarray(tau, dtype=float)
    K, U, m = orbit.K, orbit.U, orbit.m
    regime = orbit.regime
    if isinstance(regime, Linear):
        dx2 = K * tau * tau / (m * m) + U / K
        return dx2, np.broadcast_to(K, tau.shape) + 0.0, K * tau / m
    w = regime.omega
    mw = m * w
    if isinstance(regime, Harmonic):
        W = math.sqrt(_harmonic_disc(orbit))
        c, s = np.cos(2 * w * tau), np.sin(2 * w * tau)
        return (K - W * c) / (2 * mw * mw), (K + W * c) / 2, W * s / (2 * mw)
    _guard_hyperbolic(w, tau)
    W = math.sqrt(K * K + 4 * mw * mw * U)
    ch, sh = np.cosh(2 * w * tau), np.sinh(2 * w * tau)
    return (W * ch - K) / (2 * mw * mw), (W * ch + K) / 2, W * sh / (2 * mw)


def orbit_from_state(s0: UncertaintyState, pot: PotentialSpec,
                     eps: float = REGIME_EPS) -> CanonicalOrbit:
    """Canonical orbit through ``s0`` at t = 0, with its minimum time ``T``."""
    regime = classify_regime(pot, eps)
    c = constants_of_motion(s0, pot)
    m = pot.m
    if isinstance(regime, Harmonic):
        mw = m * regime.omega
        Z0 = s0.dp2 - mw * mw * s0.dx2
        # Z(t) = Zmax cos(2 w t + beta) peaks at the position-variance minimum
        beta = math.atan2(2 * mw * s0.dxp, Z0)
        T = -beta / (2 * regime.omega) if math.hypot(Z0, 2 * mw * s0.dxp) > 0 else 0.0
    else:
        T = time_of_zero_mixed(s0, pot, eps)
    return CanonicalOrbit(regime, c.K, c.U, m, T)


def gaussian_orbit(k: float, regime: Regime, m: float = 1.0,
                   hbar: float = 1.0) -> CanonicalOrbit:
    """Canonical orbit of a Gaussian packet (U = hbar^2/4).

    ``k`` is ``K/(m w hbar)`` for the oscillators and ``K = (dp0)^2`` itself
    in the linear regime.
    """
    U = 0.25 * hbar * hbar
    if isinstance(regime, Linear):
        return CanonicalOrbit(regime, float(k), U, m)
    if isinstance(regime, Harmonic) and k < 1:
        raise InvalidOrbitError(f"harmonic Gaussian orbits need k >= 1, got {k}")
    return CanonicalOrbit(regime, k * m * regime.omega * hbar, U, m)


def classical_trajectory(q0: PhasePoint, pot: PotentialSpec, t: float,
                         eps: float = REGIME_EPS) -> PhasePoint:
    """Exact solution of ``dx/dt = p/m``, ``dp/dt = -2 A x - B``."""
    regime = classify_regime(pot, eps)
    x, p = _trajectory_arrays(q0.x, q0.p, pot, regime, t)
    return PhasePoint(float(x), float(p))


def _trajectory_arrays(x0, p0, pot: PotentialSpec, regime: Regime, t):
    t = np.asarray(t, dtype=float)
    m, A, B = pot.m, pot.A, pot.B
    if isinstance(regime, Linear):
        return x0 + p0 * t / m - 0.5 * B * t * t / m, p0 - B * t
    w = regime.omega
    mw = m * w
    xe = -B / (2 * A)
    u = x0 - xe
    if isinstance(regime, Harmonic):
        c, s = np.cos(w * t), np.sin(w * t)
        return xe + u * c + p0 / mw * s, p0 * c - mw * u * s
    _guard_hyperbolic(w, t)
    ch, sh = np.cosh(w * t), np.sinh(w * t)
    return xe + u * ch + p0 / mw * sh, p0 * ch + mw * u * sh


def trajectory_series(q0: PhasePoint, pot: PotentialSpec, ts, eps: float = REGIME_EPS):
    return _trajectory_arrays(q0.x, q0.p, pot, classify_regime(pot, eps), ts)
