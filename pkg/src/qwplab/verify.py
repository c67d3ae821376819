"""
Property suites behind ``qwplab verify``.

Each suite returns a list of :class:`PropertyResult`; a suite passes when
every property does.  All randomness flows from one seeded
``numpy.random.Generator`` so reports are reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import analytic
from .core import (
    PotentialSpec,
    UncertaintyState,
    classify_regime,
    constants_of_motion,
)
from .gaussian import (
    GaussianParams,
    gaussian_from_moments,
    moments_from_gaussian,
    sample_wavefunction,
)
from .grid import Grid
from .oracle import (
    PotentialFn,
    auto_grid,
    propagate_to_times,
    rk4_moments,
    verify_general_first_derivative,
)

REGIMES = ("linear", "harmonic", "inverted")
#: Grid time steps per regime; free propagation is exact in time.
GRID_DT = {"linear": 1e-2, "harmonic": 5e-4, "inverted": 2e-4}
GRID_T_END = {"linear": 5.0, "harmonic": 5.0, "inverted": 2.0}


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    max_deviation: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name:<44} max_dev={self.max_deviation:.3e}  tol={self.tolerance:.0e}"


def _result(name: str, deviation: float, tol: float) -> PropertyResult:
    deviation = float(deviation)
    return PropertyResult(name, bool(deviation <= tol), deviation, tol)


def random_state(rng: np.random.Generator, hbar: float = 1.0) -> UncertaintyState:
    """A physical state with moments of order one: U between hbar^2/4 and ~10x that."""
    U = 0.25 * hbar * hbar * (1.0 + 10 ** rng.uniform(-3, 1))
    dx2 = 10 ** rng.uniform(-0.5, 0.5)
    dxp = rng.uniform(-1.0, 1.0) * hbar
    return UncertaintyState(dx2, (U + dxp * dxp) / dx2, dxp)


def random_potential(rng: np.random.Generator, kind: str) -> PotentialSpec:
    """Random potential of the given regime, for use with |t| <= 10.

    ``U`` is a small difference of two products that grow like (t/m)^4 or
    e^{4 w t}, so its relative rounding error is about 1e-16 times that
    growth.  Masses stay >= 1 and inverted frequencies <= 0.25 to keep it
    below 1e-10.
    """
    m = rng.uniform(1.0, 2.0)
    B = rng.uniform(-2.0, 2.0)
    if kind == "linear":
        return PotentialSpec(0.0, B, 0.0, m)
    if kind == "harmonic":
        return PotentialSpec.harmonic(rng.uniform(0.5, 2.0), m, B)
    return PotentialSpec.inverted(rng.uniform(0.05, 0.25), m, B)


def random_gaussian(rng: np.random.Generator) -> GaussianParams:
    return GaussianParams(alpha=rng.uniform(0.5, 2.0), a=rng.uniform(-0.5, 0.5),
                          x0=rng.uniform(-1.0, 1.0), p0=rng.uniform(-1.0, 1.0))


def _triples(rng, n):
    for i in range(n):
        kind = REGIMES[i % 3]
        yield random_state(rng), random_potential(rng, kind), rng.uniform(-10, 10)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(1.0, abs(b))


def suite_conservation(seed: int = 0, n: int = 1000) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    dK = dU = group = constraint = first = minprod = 0.0
    for s0, pot, t in _triples(rng, n):
        c0 = constants_of_motion(s0, pot)
        s = analytic.evolve(s0, pot, t)
        c = constants_of_motion(s, pot)
        dK = max(dK, abs(c.K - c0.K) / max(1.0, abs(c0.K)))
        dU = max(dU, abs(c.U - c0.U) / c0.U)

        t1 = rng.uniform(-5, 5)
        a = analytic.evolve(analytic.evolve(s0, pot, t1), pot, t - t1)
        group = max(group, *(_rel(x, y) for x, y in zip(a.as_tuple(), s.as_tuple())))

        h = 1e-4
        sp, sm = analytic.evolve(s0, pot, t + h), analytic.evolve(s0, pot, t - h)
        k_of = lambda st: 2 * pot.m * pot.A * st.dx2 + st.dp2  # noqa: E731
        constraint = max(constraint, abs(k_of(sp) - k_of(sm)) / (2 * h))
        first = max(first, abs((sp.dx2 - sm.dx2) / (2 * h) - 2 * s.dxp / pot.m))

        T = analytic.time_of_zero_mixed(s0, pot)
        sT = analytic.evolve(s0, pot, T)
        minprod = max(minprod, abs(sT.dx2 * sT.dp2 - c0.U) / c0.U)

    out = [
        _result("K conserved (relative)", dK, 1e-10),
        _result("U conserved (relative)", dU, 1e-10),
        _result("group law evolve(t1+t2)", group, 1e-10),
        _result("constraint d/dt(2mA dx2 + dp2) = 0", constraint, 1e-6),
        _result("first-derivative law d(dx2)/dt = 2dxp/m", first, 1e-6),
        _result("minimum product at zero of dxp", minprod, 1e-10),
    ]

    period = 0.0
    for _ in range(200):
        s0 = random_state(rng)
        pot = random_potential(rng, "harmonic")
        w = classify_regime(pot).omega
        s = analytic.evolve(s0, pot, math.pi / w)
        period = max(period, *(_rel(x, y) for x, y in zip(s.as_tuple(), s0.as_tuple())))
    out.append(_result("harmonic period pi/omega", period, 1e-10))
    return out


def suite_oracle_ode(seed: int = 0, cases: int = 20) -> list[PropertyResult]:
    """RK4 (dt = 1e-4) against the closed forms, and U/K drift along RK4."""
    rng = np.random.default_rng(seed)
    out = []
    for kind in REGIMES:
        t_max = 2.0 if kind == "inverted" else 10.0
        states, pots, ts = [], [], []
        for _ in range(cases):
            g = random_gaussian(rng)
            states.append(moments_from_gaussian(g)[0])
            w = rng.uniform(0.5, 1.5)
            m = rng.uniform(0.5, 2.0)
            pots.append({"linear": PotentialSpec(0.0, 0.0, 0.0, m),
                         "harmonic": PotentialSpec.harmonic(w, m),
                         "inverted": PotentialSpec.inverted(w, m)}[kind])
            ts.append(rng.uniform(0.5, t_max))
        dx2, dp2, dxp = rk4_moments([s.dx2 for s in states], [s.dp2 for s in states],
                                    [s.dxp for s in states], [p.A for p in pots],
                                    [p.m for p in pots], ts, 1e-4)
        dev = 0.0
        for i, (s0, pot, t) in enumerate(zip(states, pots, ts)):
            ex = analytic.evolve(s0, pot, t)
            got = (dx2[i], dp2[i], dxp[i])
            dev = max(dev, *(abs(x - y) for x, y in zip(got, ex.as_tuple())))
        out.append(_result(f"RK4 vs analytic ({kind})", dev, 1e-8))
    dK, dU = rk4_drift(rng, cases * 10)
    out.append(_result("RK4 K drift (relative)", dK, 1e-9))
    out.append(_result("RK4 U drift (relative)", dU, 1e-9))
    return out


def rk4_drift(rng: np.random.Generator, n: int, dt: float = 1e-4) -> tuple[float, float]:
    """Largest relative change of K and U along a batch of RK4 trajectories."""
    triples = list(_triples(rng, n))
    states = [s for s, _, _ in triples]
    pots = [p for _, p, _ in triples]
    dx2, dp2, dxp = rk4_moments([s.dx2 for s in states], [s.dp2 for s in states],
                                [s.dxp for s in states], [p.A for p in pots],
                                [p.m for p in pots], [t for _, _, t in triples], dt)
    dK = dU = 0.0
    for i, (s0, pot) in enumerate(zip(states, pots)):
        c0 = constants_of_motion(s0, pot)
        c = constants_of_motion(UncertaintyState(dx2[i], dp2[i], dxp[i]), pot)
        dK = max(dK, abs(c.K - c0.K) / max(1.0, abs(c0.K)))
        dU = max(dU, abs(c.U - c0.U) / c0.U)
    return dK, dU


def grid_agreement(g: GaussianParams, pot: PotentialSpec, t_end: float, dt: float,
                   samples: int = 11, hbar: float = 1.0) -> float:
    """Max-abs deviation of grid-measured moments from the closed form."""
    grid = auto_grid(g, pot, t_end, hbar)
    psi = sample_wavefunction(g, grid, hbar)
    ts = np.linspace(0.0, t_end, samples)
    hist = propagate_to_times(psi, pot, ts, pot.m, hbar, dt)
    s0, _ = moments_from_gaussian(g, hbar)
    ex = analytic.evolve_series(s0, pot, ts)
    return max(float(np.max(np.abs(h - e))) for h, e in zip((hist.dx2, hist.dp2, hist.dxp), ex))


def suite_oracle_grid(seed: int = 0, cases: int = 20) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    pots = {"linear": PotentialSpec(), "harmonic": PotentialSpec.harmonic(1.0),
            "inverted": PotentialSpec.inverted(1.0)}
    out = []
    for kind in REGIMES:
        dev = max(grid_agreement(random_gaussian(rng), pots[kind], GRID_T_END[kind],
                                 GRID_DT[kind]) for _ in range(cases))
        out.append(_result(f"split-step vs analytic ({kind})", dev, 1e-6))
    return out


def suite_gaussian_roundtrip(seed: int = 0, n: int = 1000) -> list[PropertyResult]:
    rng = np.random.default_rng(seed)
    trip = gauss_u = closure = 0.0
    for i in range(n):
        g = GaussianParams(alpha=10 ** rng.uniform(-1, 1), a=rng.uniform(-2, 2),
                           x0=rng.uniform(-5, 5), p0=rng.uniform(-5, 5))
        s, q = moments_from_gaussian(g)
        back = gaussian_from_moments(s, q)
        trip = max(trip, _rel(back.alpha, g.alpha), _rel(back.a, g.a),
                   abs(back.x0 - g.x0), abs(back.p0 - g.p0))
        gauss_u = max(gauss_u, abs(s.dx2 * s.dp2 - s.dxp**2 - 0.25) / max(1.0, s.dx2 * s.dp2))
        pot = random_potential(rng, REGIMES[i % 3])
        st = analytic.evolve(s, pot, rng.uniform(-3, 3))
        closure = max(closure, abs(st.dx2 * st.dp2 - st.dxp**2 - 0.25) / max(1.0, st.dx2 * st.dp2))
    return [
        _result("gaussian round trip", trip, 1e-12),
        _result("Gaussian U = hbar^2/4", gauss_u, 1e-14),
        _result("Gaussian closure under evolution", closure, 1e-9),
    ]


def suite_general_potential(seed: int = 0) -> list[PropertyResult]:
    g = GaussianParams(alpha=1.0, x0=0.5)
    grid = Grid(-12.0, 12.0, 2048)
    psi = sample_wavefunction(g, grid)
    quartic, _ = verify_general_first_derivative(psi, PotentialFn.power(1.0, 4), 1.0, 1.0,
                                                 1e-4, 10000)
    pot = PotentialSpec.harmonic(1.0)
    quad, hist = verify_general_first_derivative(psi, PotentialFn.from_spec(pot), 1.0, 1.0,
                                                 1e-4, 10000)
    s0, _ = moments_from_gaussian(g)
    ex_dx2, _, _ = analytic.evolve_series(s0, pot, hist.t)
    return [
        _result("first-derivative law, V = x^4", quartic, 1e-5),
        _result("first-derivative law, V = x^2/2", quad, 1e-6),
        _result("grid dx2 vs analytic, V = x^2/2", np.max(np.abs(hist.dx2 - ex_dx2)), 1e-6),
    ]


SUITES = {
    "conservation": suite_conservation,
    "oracle-grid": suite_oracle_grid,
    "oracle-ode": suite_oracle_ode,
    "gaussian-roundtrip": suite_gaussian_roundtrip,
    "general-potential": suite_general_potential,
}


def run_suite(name: str, seed: int = 0) -> list[PropertyResult]:
    if name == "all":
        return [r for suite in SUITES.values() for r in suite(seed)]
    return SUITES[name](seed)
