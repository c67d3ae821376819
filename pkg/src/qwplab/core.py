"""
State and potential types shared by every other module.

An :class:`UncertaintyState` is the triple of second moments
``(dx2, dp2, dxp)`` = ((Δx)², (Δp)², Δ_xp) at one instant.  Potentials are
at most quadratic, ``V(x) = A x**2 + B x + C``, and fall into one of three
regimes that fix the shape of the closed-form solutions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

#: Default threshold on ``|A|`` below which a potential counts as linear.
REGIME_EPS = 1e-12
#: Accepted violation of the generalized uncertainty inequality.
INEQUALITY_TOL = 1e-9


class QWPError(Exception):
    """Base class for every physics/numerics error raised by qwplab."""


class InvalidPotentialError(QWPError, ValueError):
    pass


class UnphysicalStateError(QWPError, ValueError):
    pass


class InvalidOrbitError(QWPError, ValueError):
    pass


class UnsupportedRegimeError(QWPError, ValueError):
    pass


class RangeError(QWPError, OverflowError):
    """Evaluation would overflow double precision (hyperbolic growth)."""


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class UnitsConfig:
    hbar: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise ValueError(f"hbar must be positive, got {self.hbar}")


@dataclass(frozen=True)
class UncertaintyState:
    """Position variance, momentum variance and mixed uncertainty.

    The plain constructor checks positivity only.  Use :meth:`physical` to
    also enforce ``dx2*dp2 - dxp**2 >= hbar**2/4`` and :meth:`unchecked`
    for raw measured moments that must not be rejected.
    """

    dx2: float
    dp2: float
    dxp: float

    def __post_init__(self):
        if not _finite(self.dx2, self.dp2, self.dxp):
            raise UnphysicalStateError(f"non-finite moments: {self}")
        if self.dx2 <= 0 or self.dp2 <= 0:
            raise UnphysicalStateError(
                f"variances must be positive, got dx2={self.dx2!r}, dp2={self.dp2!r}"
            )

    @classmethod
    def physical(cls, dx2: float, dp2: float, dxp: float, hbar: float = 1.0,
                 tol: float = INEQUALITY_TOL) -> "UncertaintyState":
        s = cls(float(dx2), float(dp2), float(dxp))
        margin = check_generalized_uncertainty(s, hbar)
        if margin < -tol:
            raise UnphysicalStateError(
                f"dx2*dp2 - dxp^2 falls below hbar^2/4 by {-margin:.3e}"
            )
        return s

    @classmethod
    def unchecked(cls, dx2: float, dp2: float, dxp: float) -> "UncertaintyState":
        s = object.__new__(cls)
        object.__setattr__(s, "dx2", float(dx2))
        object.__setattr__(s, "dp2", float(dp2))
        object.__setattr__(s, "dxp", float(dxp))
        return s

    @property
    def product(self) -> float:
        return self.dx2 * self.dp2

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.dx2, self.dp2, self.dxp)


@dataclass(frozen=True)
class PhasePoint:
    x: float
    p: float

    def __post_init__(self):
        if not _finite(self.x, self.p):
            raise ValueError(f"non-finite phase point: {self}")


@dataclass(frozen=True)
class PotentialSpec:
    """Coefficients of ``V(x) = A x**2 + B x + C`` together with the mass."""

    A: float = 0.0
    B: float = 0.0
    C: float = 0.0
    m: float = 1.0

    def __post_init__(self):
        if not _finite(self.A, self.B, self.C, self.m):
            raise InvalidPotentialError(f"non-finite coefficients: {self}")
        if self.m <= 0:
            raise InvalidPotentialError(f"mass must be positive, got {self.m}")

    @classmethod
    def harmonic(cls, omega: float, m: float = 1.0, B: float = 0.0,
                 C: float = 0.0) -> "PotentialSpec":
        return cls(A=0.5 * m * omega**2, B=B, C=C, m=m)

    @classmethod
    def inverted(cls, omega: float, m: float = 1.0, B: float = 0.0,
                 C: float = 0.0) -> "PotentialSpec":
        return cls(A=-0.5 * m * omega**2, B=B, C=C, m=m)

    def __call__(self, x):
        return self.A * x * x + self.B * x + self.C


@dataclass(frozen=True)
class Linear:
    pass


@dataclass(frozen=True)
class Harmonic:
    omega: float


@dataclass(frozen=True)
class Inverted:
    omega: float


Regime = Union[Linear, Harmonic, Inverted]


@dataclass(frozen=True)
class Constants:
    """Constants of motion ``K = dp2 + 2 m A dx2`` and ``U = dx2 dp2 - dxp**2``."""

    K: float
    U: float


def classify_regime(pot: PotentialSpec, eps: float = REGIME_EPS) -> Regime:
    if eps < 0:
        raise ValueError("eps must be non-negative")
    A, m = pot.A, pot.m
    if not math.isfinite(A) or not (m > 0):
        raise InvalidPotentialError(f"invalid potential: {pot}")
    if abs(A) <= eps:
        return Linear()
    omega = math.sqrt(2.0 * abs(A) / m)
    return Harmonic(omega) if A > 0 else Inverted(omega)


def constants_of_motion(s: UncertaintyState, pot: PotentialSpec) -> Constants:
    K = s.dp2 + 2.0 * pot.m * pot.A * s.dx2
    U = s.dx2 * s.dp2 - s.dxp * s.dxp
    return Constants(K, U)


def check_generalized_uncertainty(s: UncertaintyState, hbar: float = 1.0) -> float:
    """Margin ``dx2*dp2 - dxp**2 - hbar**2/4``; negative means unphysical."""
    return s.dx2 * s.dp2 - s.dxp * s.dxp - 0.25 * hbar * hbar


def spreading_sign(s: UncertaintyState) -> int:
    """Sign of d(dx2)/dt, which equals the sign of the mixed uncertainty.

    Holds for any potential, not only quadratic ones.
    """
    if s.dxp > 0:
        return 1
    if s.dxp < 0:
        return -1
    return 0
