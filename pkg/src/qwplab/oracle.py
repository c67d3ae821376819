"""
Numerical oracles for the closed-form dynamics.

* A Strang-split Fourier propagator for the 1-D Schrödinger equation on a
  periodic grid, with spectral moment extraction.  Works for any packet and
  any potential, quadratic or not.
* A fixed-step RK4 integrator for the linear moment equations of a
  quadratic potential.

Neither route uses the closed forms in :mod:`qwplab.analytic`; the only
exception is :func:`auto_grid`, which sizes the grid from the predicted
packet extent.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .analytic import evolve_series, trajectory_series
from .core import PhasePoint, PotentialSpec, QWPError, UncertaintyState
from .gaussian import GaussianParams, moments_from_gaussian, sample_wavefunction
from .grid import Grid, GridResolutionError, GridWavefunction

#: Edge amplitude above which a propagation is considered contaminated.
EDGE_TOL = 1e-6
#: Accepted deviation of the squared norm from one when measuring.
NORM_TOL = 1e-8
#: Largest RK4 step accepted by :func:`integrate_moment_odes`.
MAX_ODE_DT = 1e-3


class BoundaryContaminationError(QWPError):
    pass


class NormError(QWPError):
    pass


class StepSizeError(QWPError, ValueError):
    pass


@dataclass(frozen=True)
class PotentialFn:
    """A potential ``V(x)`` evaluated on the grid.

    ``force`` is ``F = -V'`` and ``force_prime`` is ``F' = -V''``; both are
    optional and only informational for the propagator.  ``quadratic`` holds
    the coefficients when the potential is exactly ``A x^2 + B x + C``.
    """

    func: Callable[[np.ndarray], np.ndarray]
    quadratic: PotentialSpec | None = None
    force: Callable[[np.ndarray], np.ndarray] | None = None
    force_prime: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, x):
        return self.func(x)

    @classmethod
    def from_spec(cls, pot: PotentialSpec) -> "PotentialFn":
        A, B = pot.A, pot.B
        return cls(func=pot, quadratic=pot,
                   force=lambda x: -(2 * A * x + B),
                   force_prime=lambda x: np.full_like(np.asarray(x, dtype=float), -2 * A))

    @classmethod
    def power(cls, coef: float = 1.0, n: int = 4) -> "PotentialFn":
        """``coef * x**n``."""
        return cls(func=lambda x: coef * x**n,
                   force=lambda x: -n * coef * x ** (n - 1),
                   force_prime=lambda x: -n * (n - 1) * coef * x ** (n - 2))


@dataclass(frozen=True)
class MomentSet:
    mean_x: float
    mean_p: float
    mean_x2: float
    mean_p2: float
    mean_sym_xp: float

    @property
    def state(self) -> UncertaintyState:
        return UncertaintyState.unchecked(
            self.mean_x2 - self.mean_x**2,
            self.mean_p2 - self.mean_p**2,
            self.mean_sym_xp - self.mean_x * self.mean_p,
        )

    @property
    def phase(self) -> PhasePoint:
        return PhasePoint(self.mean_x, self.mean_p)


def measure_moments(psi: GridWavefunction, hbar: float = 1.0,
                    norm_tol: float = NORM_TOL) -> MomentSet:
    """First and second moments of position and momentum.

    Position moments by the (periodic) trapezoidal rule, momentum moments
    in the Fourier representation, and the symmetrized product as
    ``Re <psi| x (-i hbar d/dx) |psi>``.
    """
    g = psi.grid
    x = g.x
    samples = psi.samples
    rho = np.abs(samples) ** 2
    norm = g.dx * float(np.sum(rho))
    if abs(norm - 1.0) > norm_tol:
        raise NormError(f"squared norm {norm!r} deviates from 1 by more than {norm_tol}")
    mean_x = g.dx * float(np.dot(x, rho)) / norm
    mean_x2 = g.dx * float(np.dot(x * x, rho)) / norm

    phi = np.fft.fft(samples)
    weights = np.abs(phi) ** 2
    weights /= weights.sum()
    k = g.k
    mean_p = hbar * float(np.dot(k, weights))
    mean_p2 = hbar * hbar * float(np.dot(k * k, weights))

    k_odd = k.copy()
    k_odd[g.n // 2] = 0.0
    dpsi = np.fft.ifft(1j * k_odd * phi)
    xp = g.dx * np.vdot(samples, x * (-1j * hbar) * dpsi)
    return MomentSet(mean_x, mean_p, mean_x2, mean_p2, float(xp.real) / norm)


def _edge_amplitude(psi: GridWavefunction) -> tuple[float, float]:
    """Largest |psi| in the outer position cells and largest normalized
    momentum amplitude in the outer wavenumber cells."""
    n = psi.grid.n
    w = max(4, n // 64)
    s = psi.samples
    pos = max(float(np.max(np.abs(s[:w]))), float(np.max(np.abs(s[-w:]))))
    phi = np.fft.fftshift(np.fft.fft(s)) * psi.grid.dx / math.sqrt(2 * math.pi)
    mom = max(float(np.max(np.abs(phi[:w]))), float(np.max(np.abs(phi[-w:]))))
    return pos, mom


def check_boundaries(psi: GridWavefunction, tol: float = EDGE_TOL) -> None:
    pos, mom = _edge_amplitude(psi)
    if pos > tol:
        raise BoundaryContaminationError(
            f"position-space edge amplitude {pos:.2e} exceeds {tol:.0e}; widen the grid"
        )
    if mom > tol:
        raise BoundaryContaminationError(
            f"momentum-space edge amplitude {mom:.2e} exceeds {tol:.0e}; refine the grid"
        )


class SplitStepPropagator:
    """Strang splitting ``e^{-iV dt/2hbar} e^{-i p^2 dt/2m hbar} e^{-iV dt/2hbar}``.

    Holds the precomputed phase factors for one grid, potential and step.
    The propagator owns its wavefunction; callers get copies.
    """

    def __init__(self, psi0: GridWavefunction, V, m: float = 1.0, hbar: float = 1.0,
                 dt: float = 1e-3, check_every: int = 200, edge_tol: float = EDGE_TOL):
        self.grid = psi0.grid
        self.m, self.hbar = m, hbar
        self.check_every = check_every
        self.edge_tol = edge_tol
        self._V = np.asarray(V(self.grid.x), dtype=float)
        if not np.all(np.isfinite(self._V)):
            raise ValueError("potential is not finite on the grid")
        self._k2 = self.grid.k ** 2
        self.set_dt(dt)
        self.psi = psi0.samples.copy()
        self.t = 0.0
        self.steps_taken = 0
        self._unchecked = 0
        check_boundaries(psi0, edge_tol)

    def set_dt(self, dt: float) -> None:
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = dt
        self._half = np.exp(-0.5j * self._V * dt / self.hbar)
        self._full = self._half * self._half
        self._kin = np.exp(-0.5j * self.hbar * self._k2 * dt / self.m)

    @property
    def wavefunction(self) -> GridWavefunction:
        return GridWavefunction(self.psi.copy(), self.grid)

    def advance(self, steps: int) -> None:
        """Take ``steps`` Strang steps, merging adjacent potential half-steps.

        Edges are checked every ``check_every`` steps and at the end.
        """
        fft, ifft = np.fft.fft, np.fft.ifft
        done = 0
        while done < steps:
            chunk = min(steps - done, self.check_every - self._unchecked)
            psi = self.psi * self._half
            for i in range(chunk):
                psi = ifft(self._kin * fft(psi))
                if i < chunk - 1:
                    psi *= self._full
            psi *= self._half
            self.psi = psi
            done += chunk
            self.steps_taken += chunk
            self.t += chunk * self.dt
            self._unchecked += chunk
            if self._unchecked >= self.check_every or done == steps and steps > 1:
                self.check()

    def check(self) -> None:
        check_boundaries(GridWavefunction(self.psi, self.grid), self.edge_tol)
        self._unchecked = 0


def propagate(psi0: GridWavefunction, V, m: float = 1.0, hbar: float = 1.0,
              dt: float = 1e-3, steps: int = 0) -> GridWavefunction:
    prop = SplitStepPropagator(psi0, V, m, hbar, dt)
    prop.advance(steps)
    return prop.wavefunction


@dataclass
class MomentHistory:
    t: np.ndarray
    dx2: np.ndarray
    dp2: np.ndarray
    dxp: np.ndarray
    mean_x: np.ndarray
    mean_p: np.ndarray
    snapshots: list = field(default_factory=list)

    def state(self, i: int) -> UncertaintyState:
        return UncertaintyState.unchecked(self.dx2[i], self.dp2[i], self.dxp[i])


def moment_history(psi0: GridWavefunction, V, m: float = 1.0, hbar: float = 1.0,
                   dt: float = 1e-3, steps: int = 0, every: int = 1,
                   keep_snapshots: bool = False) -> MomentHistory:
    """Propagate and measure moments at ``t = 0, every*dt, 2*every*dt, ...``."""
    prop = SplitStepPropagator(psi0, V, m, hbar, dt)
    rows, snaps = [], []

    def record():
        wf = prop.wavefunction
        ms = measure_moments(wf, hbar)
        s = ms.state
        rows.append((prop.t, s.dx2, s.dp2, s.dxp, ms.mean_x, ms.mean_p))
        if keep_snapshots:
            snaps.append(wf)

    record()
    while prop.steps_taken < steps:
        prop.advance(min(every, steps - prop.steps_taken))
        record()
    cols = np.array(rows).T
    return MomentHistory(*cols, snapshots=snaps)


def propagate_to_times(psi0: GridWavefunction, V, times, m: float = 1.0,
                       hbar: float = 1.0, dt: float = 1e-3,
                       keep_snapshots: bool = False) -> MomentHistory:
    """Moments at the requested non-negative, non-decreasing ``times``.

    Each interval is covered with an integer number of steps no longer
    than ``dt``; the sampled times are reproduced exactly only when they
    fall on that step lattice.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and non-decreasing")
    prop = SplitStepPropagator(psi0, V, m, hbar, dt)
    rows, snaps = [], []
    t_now = 0.0
    for t in times:
        span = t - t_now
        if span > 0:
            n = max(1, math.ceil(span / dt - 1e-9))
            if n * prop.dt != span:
                prop.set_dt(span / n)
            prop.advance(n)
        t_now = t
        wf = prop.wavefunction
        ms = measure_moments(wf, hbar)
        s = ms.state
        rows.append((t, s.dx2, s.dp2, s.dxp, ms.mean_x, ms.mean_p))
        if keep_snapshots:
            snaps.append(wf)
    cols = np.array(rows).T.reshape(6, -1)
    return MomentHistory(*cols, snapshots=snaps)


def moment_field(A, m):
    """Matrix ``M`` of the moment equations ``d/dt (dx2, dp2, dxp) = M (dx2, dp2, dxp)``:

        d(dx2)/dt = 2 dxp / m
        d(dp2)/dt = -4 A dxp
        d(dxp)/dt = dp2 / m - 2 A dx2

    Broadcasts over ``A`` and ``m``; the result has shape ``(..., 3, 3)``.
    """
    A, m = np.broadcast_arrays(np.asarray(A, dtype=float), np.asarray(m, dtype=float))
    M = np.zeros(A.shape + (3, 3))
    M[..., 0, 2] = 2.0 / m
    M[..., 1, 2] = -4.0 * A
    M[..., 2, 1] = 1.0 / m
    M[..., 2, 0] = -2.0 * A
    return M


def rk4_increment(M, h):
    """Increment matrix ``D`` of one classical RK4 step for ``y' = M y``.

    The four stages are evaluated on the identity, so ``y_{n+1} = y_n + D y_n``
    is the stage-by-stage RK4 update.  Keeping ``D`` apart from the identity
    stops its rounding from compounding systematically over many steps.
    """
    h = np.asarray(h, dtype=float)[..., None, None]
    eye = np.broadcast_to(np.eye(3), M.shape)
    k1 = M @ eye
    k2 = M @ (eye + 0.5 * h * k1)
    k3 = M @ (eye + 0.5 * h * k2)
    k4 = M @ (eye + h * k3)
    return h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_linear(M, y0, t, dt: float):
    """Integrate ``y' = M y`` from ``y0`` over ``t`` with fixed RK4 steps.

    ``M`` has shape ``(..., 3, 3)`` and ``y0``, ``t`` broadcast against its
    batch shape.  Every trajectory uses the same number of steps
    ``ceil(max|t|/dt)``; its own step is ``t/n``, never longer than ``dt``.
    The update uses compensated summation: plain accumulation of 1e5
    rounding errors on growing moments would shift the conserved
    ``dx2*dp2 - dxp**2`` by more than one part in 1e9.
    """
    if not 0 < dt <= MAX_ODE_DT:
        raise StepSizeError(f"RK4 step must lie in (0, {MAX_ODE_DT}], got {dt}")
    t = np.broadcast_to(np.asarray(t, dtype=float), M.shape[:-2])
    y = np.array(np.broadcast_to(y0, M.shape[:-1]), dtype=float)[..., None]
    n = int(math.ceil(float(np.max(np.abs(t))) / dt - 1e-9)) if t.size else 0
    if n:
        D = rk4_increment(M, t / n)
        carry = np.zeros_like(y)
        for _ in range(n):
            inc = D @ y + carry
            nxt = y + inc
            carry = inc - (nxt - y)
            y = nxt
    return y[..., 0]


def rk4_moments(dx2, dp2, dxp, A, m, t, dt: float = 1e-4):
    """Fixed-step RK4 integration of the moment equations over ``t``.

    Arguments broadcast, so a batch of trajectories is integrated at once.
    """
    dx2, dp2, dxp, A, m, t = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (dx2, dp2, dxp, A, m, t)))
    y = _rk4_linear(moment_field(A, m), np.stack([dx2, dp2, dxp], axis=-1), t, dt)
    return y[..., 0].copy(), y[..., 1].copy(), y[..., 2].copy()


def rk4_means(x0, p0, A, B, m, t, dt: float = 1e-4):
    """RK4 for Newton's equations ``x' = p/m``, ``p' = -2 A x - B``.

    The affine force is handled by a constant third component.
    """
    x0, p0, A, B, m, t = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (x0, p0, A, B, m, t)))
    M = np.zeros(A.shape + (3, 3))
    M[..., 0, 1] = 1.0 / m
    M[..., 1, 0] = -2.0 * A
    M[..., 1, 2] = -B
    y = _rk4_linear(M, np.stack([x0, p0, np.ones_like(x0)], axis=-1), t, dt)
    return y[..., 0].copy(), y[..., 1].copy()


def integrate_moment_odes(s0: UncertaintyState, A: float, m: float, t: float,
                          dt: float = 1e-4) -> UncertaintyState:
    dx2, dp2, dxp = rk4_moments(s0.dx2, s0.dp2, s0.dxp, A, m, t, dt)
    return UncertaintyState(float(dx2), float(dp2), float(dxp))


def moment_ode_series(s0: UncertaintyState, A: float, m: float, times,
                      dt: float = 1e-4):
    """RK4 moments at each of ``times`` (measured from t = 0), integrating
    segment by segment from the previous sample."""
    times = np.asarray(times, dtype=float)
    out = np.empty((3, times.size))
    y = (s0.dx2, s0.dp2, s0.dxp)
    t_prev = 0.0
    for i, t in enumerate(times):
        y = tuple(float(v) for v in rk4_moments(*y, A, m, t - t_prev, dt))
        out[:, i] = y
        t_prev = t
    return out[0], out[1], out[2]


def verify_general_first_derivative(psi0: GridWavefunction, V, m: float = 1.0,
                                    hbar: float = 1.0, dt: float = 1e-4,
                                    steps: int = 10000):
    """Largest ``|d(dx2)/dt - 2 dxp/m|`` along a propagation, the derivative
    taken by central differences between consecutive steps.

    Returns ``(max_deviation, history)``.
    """
    hist = moment_history(psi0, V, m, hbar, dt, steps, every=1)
    deriv = (hist.dx2[2:] - hist.dx2[:-2]) / (2 * dt)
    dev = np.abs(deriv - 2.0 * hist.dxp[1:-1] / m)
    return float(np.max(dev)), hist


def auto_grid(g: GaussianParams | None, pot: PotentialSpec, t_end: float,
              hbar: float = 1.0, n: int | None = None, sigmas: float = 12.0,
              state: UncertaintyState | None = None,
              phase: PhasePoint | None = None) -> Grid:
    """Grid sized from the predicted packet extent over ``[0, t_end]``.

    The half-width covers the classical excursion plus ``sigmas`` position
    standard deviations; the spacing resolves the largest momentum plus
    ``sigmas`` momentum standard deviations.  With ``n`` unset, the smallest
    sufficient power of two (at least 256) is used; with ``n`` given and too
    small, GridResolutionError is raised.
    """
    if g is not None:
        state, phase = moments_from_gaussian(g, hbar)
    if state is None or phase is None:
        raise ValueError("need a Gaussian or an explicit (state, phase)")
    ts = np.linspace(0.0, t_end, 401)
    dx2, dp2, _ = evolve_series(state, pot, ts)
    xs, ps = trajectory_series(phase, pot, ts)
    lo = float(np.min(xs - sigmas * np.sqrt(dx2)))
    hi = float(np.max(xs + sigmas * np.sqrt(dx2)))
    p_reach = float(np.max(np.abs(ps) + sigmas * np.sqrt(dp2)))
    center, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    # k_max = pi/dx must exceed p_reach/hbar
    needed = 2 * half * p_reach / (math.pi * hbar)
    if n is None:
        n = 256
        while n < needed:
            n *= 2
    elif n < needed:
        raise GridResolutionError(f"n={n} cannot resolve momenta up to {p_reach:.3g}; "
                                  f"need at least {needed:.0f} points")
    return Grid.centered(center, half, n)


@dataclass(frozen=True)
class ConvergenceProblem:
    g: GaussianParams
    pot: PotentialSpec
    t_end: float
    hbar: float = 1.0
    half_width: float | None = None


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    n: int
    error: float


def convergence_report(problem: ConvergenceProblem, dt_list, n_list) -> list[ConvergenceRow]:
    """Max-abs error of the grid moments at ``t_end`` against the closed form,
    for every combination of step and grid size."""
    s0, q0 = moments_from_gaussian(problem.g, problem.hbar)
    exact = np.array([v[()] for v in evolve_series(s0, problem.pot, problem.t_end)])
    rows = []
    for n in n_list:
        if problem.half_width is None:
            grid = auto_grid(problem.g, problem.pot, problem.t_end, problem.hbar)
            grid = Grid(grid.x_min, grid.x_max, n)
        else:
            grid = Grid.centered(problem.g.x0, problem.half_width, n)
        psi0 = sample_wavefunction(problem.g, grid, problem.hbar)
        for dt in dt_list:
            steps = int(round(problem.t_end / dt))
            if not math.isclose(steps * dt, problem.t_end, rel_tol=1e-12):
                raise ValueError(f"t_end={problem.t_end} is not a multiple of dt={dt}")
            psi = propagate(psi0, problem.pot, problem.pot.m, problem.hbar, dt, steps)
            got = np.array(measure_moments(psi, problem.hbar).state.as_tuple())
            rows.append(ConvergenceRow(dt, n, float(np.max(np.abs(got - exact)))))
    return rows
