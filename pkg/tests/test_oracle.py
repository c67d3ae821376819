import math

import numpy as np
import pytest

from qwplab.analytic import evolve, evolve_series, trajectory_series
from qwplab.core import PhasePoint, PotentialSpec, UncertaintyState
from qwplab.gaussian import GaussianParams, moments_from_gaussian, sample_superposition, sample_wavefunction, two_gaussian_superposition
from qwplab.grid import SNAPSHOT_MAGIC, Grid, GridWavefunction, dump_snapshot, load_snapshot
from qwplab.oracle import (
    BoundaryContaminationError,
    ConvergenceProblem,
    NormError,
    PotentialFn,
    SplitStepPropagator,
    StepSizeError,
    auto_grid,
    convergence_report,
    integrate_moment_odes,
    measure_moments,
    moment_history,
    moment_ode_series,
    propagate,
    propagate_to_times,
    rk4_means,
    rk4_moments,
    verify_general_first_derivative,
)

GRID = Grid(-12.0, 12.0, 2048)


class TestGrid:
    def test_power_of_two(self):
        with pytest.raises(ValueError):
            Grid(-1, 1, 1000)
        with pytest.raises(ValueError):
            Grid(-1, 1, 128)

    def test_geometry(self):
        g = Grid(-2.0, 2.0, 256)
        assert g.dx == 4.0 / 256
        assert g.x[0] == -2.0 and g.x[-1] == pytest.approx(2.0 - g.dx)
        assert g.k_max == pytest.approx(np.max(np.abs(g.k)))


class TestMeasure:
    def test_plain_gaussian(self):
        ms = measure_moments(sample_wavefunction(GaussianParams(1.0), GRID))
        assert ms.state.as_tuple() == pytest.approx((0.5, 0.5, 0.0), abs=1e-8)

    def test_chirped_gaussian(self):
        ms = measure_moments(sample_wavefunction(GaussianParams(1.0, 0.5, 0.3, -0.7), GRID))
        assert ms.state.as_tuple() == pytest.approx((0.5, 1.0, 0.5), abs=1e-8)
        assert (ms.mean_x, ms.mean_p) == pytest.approx((0.3, -0.7), abs=1e-10)

    def test_superposition_exceeds_bound(self):
        psi = sample_superposition(two_gaussian_superposition(4.0), Grid(-16, 16, 2048))
        s = measure_moments(psi).state
        assert s.dx2 * s.dp2 - s.dxp ** 2 > 0.25
        # quadrature baseline, see test_gaussian
        assert s.as_tuple() == pytest.approx((4.428055160151634, 0.4280551601516337, 0.0), abs=1e-10)

    def test_hbar_scaling(self):
        ms = measure_moments(sample_wavefunction(GaussianParams(1.0, 0.2), GRID, hbar=0.5), hbar=0.5)
        s, _ = moments_from_gaussian(GaussianParams(1.0, 0.2), 0.5)
        assert ms.state.as_tuple() == pytest.approx(s.as_tuple(), abs=1e-9)

    def test_unnormalized(self):
        psi = sample_wavefunction(GaussianParams(1.0), GRID)
        with pytest.raises(NormError):
            measure_moments(GridWavefunction(2 * psi.samples, GRID))


class TestPropagator:
    def test_zero_steps_identity(self):
        psi = sample_wavefunction(GaussianParams(1.0), GRID)
        out = propagate(psi, PotentialSpec.harmonic(1.0), steps=0)
        assert np.array_equal(out.samples, psi.samples)

    def test_unitary(self):
        psi = sample_wavefunction(GaussianParams(1.0, 0.3, 0.5), GRID)
        out = propagate(psi, PotentialFn.power(0.1, 4), dt=1e-3, steps=500)
        assert out.norm() == pytest.approx(1.0, abs=1e-12)

    def test_free_moments_match_closed_form(self):
        g = GaussianParams(1.0, -0.2, 0.0, 0.5)
        hist = moment_history(sample_wavefunction(g, GRID), PotentialSpec(), dt=1e-2, steps=200, every=50)
        s0, q0 = moments_from_gaussian(g)
        ex = evolve_series(s0, PotentialSpec(), hist.t)
        for got, want in zip((hist.dx2, hist.dp2, hist.dxp), ex):
            assert got == pytest.approx(want, abs=1e-10)
        xs, ps = trajectory_series(q0, PotentialSpec(), hist.t)
        assert hist.mean_x == pytest.approx(xs, abs=1e-10)

    def test_times_on_lattice(self):
        psi = sample_wavefunction(GaussianParams(1.0), GRID)
        hist = propagate_to_times(psi, PotentialSpec.harmonic(1.0), [0.0, 0.25, 0.3, 1.0], dt=1e-3)
        assert list(hist.t) == [0.0, 0.25, 0.3, 1.0]
        assert hist.dx2 == pytest.approx(0.5, abs=1e-6)

    def test_times_must_increase(self):
        psi = sample_wavefunction(GaussianParams(1.0), GRID)
        with pytest.raises(ValueError):
            propagate_to_times(psi, PotentialSpec(), [1.0, 0.5])

    def test_boundary_at_start(self):
        g = Grid(-5.0, 5.0, 256)
        psi = GridWavefunction(np.exp(-g.x ** 2 / 8), g).normalized()
        with pytest.raises(BoundaryContaminationError):
            SplitStepPropagator(psi, PotentialSpec())

    def test_boundary_after_spreading(self):
        g = Grid(-10.0, 10.0, 256)
        psi = sample_wavefunction(GaussianParams(1.0), g)
        with pytest.raises(BoundaryContaminationError):
            propagate(psi, PotentialSpec(), dt=1e-2, steps=2000)

    def test_momentum_edge(self):
        g = Grid(-12.0, 12.0, 256)
        psi = sample_wavefunction(GaussianParams(1.0, p0=31.0), g)
        with pytest.raises(BoundaryContaminationError):
            SplitStepPropagator(psi, PotentialSpec())


class TestConvergence:
    PROBLEM = ConvergenceProblem(GaussianParams(2.0, 0.3, 0.5, 1.0), PotentialSpec.harmonic(1.3), 1.0, 1.0)

    def test_second_order_in_dt(self):
        rows = convergence_report(self.PROBLEM, [0.04, 0.02, 0.01], [512])
        for a, b in zip(rows, rows[1:]):
            assert a.error / b.error == pytest.approx(4.0, rel=0.2)

    def test_spectral_floor(self):
        rows = convergence_report(self.PROBLEM, [1e-3], [512, 1024, 2048])
        errs = [r.error for r in rows]
        assert max(errs) - min(errs) <= 1e-3 * min(errs)

    def test_requires_whole_steps(self):
        with pytest.raises(ValueError):
            convergence_report(self.PROBLEM, [0.3], [512])


class TestAutoGrid:
    def test_covers_spreading_packet(self):
        g = GaussianParams(0.5, 0.0, 1.0, 2.0)
        pot = PotentialSpec.inverted(0.5)
        grid = auto_grid(g, pot, 2.0)
        hist = propagate_to_times(sample_wavefunction(g, grid), pot, [0.0, 2.0], dt=2e-4)
        s0, q0 = moments_from_gaussian(g)
        assert hist.dx2[-1] == pytest.approx(evolve(s0, pot, 2.0).dx2, abs=1e-6)

    def test_explicit_n_too_small(self):
        from qwplab.grid import GridResolutionError
        with pytest.raises(GridResolutionError):
            auto_grid(GaussianParams(0.01, p0=20.0), PotentialSpec(), 5.0, n=256)


class TestRK4:
    def test_free(self):
        s = integrate_moment_odes(UncertaintyState(0.5, 0.5, 0.0), 0.0, 1.0, 2.0)
        assert s.as_tuple() == pytest.approx((2.5, 0.5, 1.0), abs=1e-10)

    def test_coherent(self):
        s = integrate_moment_odes(UncertaintyState(0.5, 0.5, 0.0), 0.5, 1.0, 7.3)
        assert s.as_tuple() == pytest.approx((0.5, 0.5, 0.0), abs=1e-10)

    def test_inverted(self):
        s = integrate_moment_odes(UncertaintyState(0.5, 0.5, 0.0), -0.5, 1.0, 1.0)
        assert s.as_tuple() == pytest.approx((1.881097, 1.881097, 1.813430), abs=1e-6)
        assert s.as_tuple() == pytest.approx((math.cosh(2) / 2, math.cosh(2) / 2, math.sinh(2) / 2), abs=1e-8)

    def test_k2_quarter_period(self):
        r3 = math.sqrt(3)
        s = integrate_moment_odes(UncertaintyState((2 - r3) / 2, (2 + r3) / 2, 0.0), 0.5, 1.0, math.pi / 4)
        assert s.as_tuple() == pytest.approx((1.0, 1.0, r3 / 2), abs=1e-10)

    def test_backward(self):
        s0 = UncertaintyState(0.8, 0.9, 0.3)
        s = integrate_moment_odes(s0, 0.2, 1.3, -3.0)
        assert s.as_tuple() == pytest.approx(evolve(s0, PotentialSpec(0.2, m=1.3), -3.0).as_tuple(), abs=1e-10)

    def test_step_limit(self):
        with pytest.raises(StepSizeError):
            rk4_moments(0.5, 0.5, 0.0, 0.0, 1.0, 1.0, dt=0.1)

    def test_batch_equals_single(self):
        ts = np.array([0.5, 1.0, 2.0])
        dx2, dp2, dxp = rk4_moments(0.5, 0.7, 0.1, 0.3, 1.1, ts)
        for i, t in enumerate(ts):
            one = integrate_moment_odes(UncertaintyState(0.5, 0.7, 0.1), 0.3, 1.1, t)
            assert (dx2[i], dp2[i], dxp[i]) == pytest.approx(one.as_tuple(), rel=1e-12)

    def test_series(self):
        s0 = UncertaintyState(0.5, 0.7, 0.1)
        pot = PotentialSpec(-0.1, m=1.1)
        ts = np.array([0.0, 0.5, 2.0])
        got = moment_ode_series(s0, pot.A, pot.m, ts)
        for g, w in zip(got, evolve_series(s0, pot, ts)):
            assert g == pytest.approx(w, abs=1e-10)

    def test_means(self):
        x, p = rk4_means(1.0, 0.0, 0.5, 0.0, 1.0, np.array([1.0, 3.0]), dt=1e-5)
        assert x == pytest.approx(np.cos([1.0, 3.0]), abs=1e-12)
        assert p == pytest.approx(-np.sin([1.0, 3.0]), abs=1e-12)

    def test_means_with_force(self):
        pot = PotentialSpec(-0.3, 0.7, 0.0, 1.5)
        x, p = rk4_means(0.2, -0.4, pot.A, pot.B, pot.m, 2.5)
        q = trajectory_series(PhasePoint(0.2, -0.4), pot, 2.5)
        assert (float(x), float(p)) == pytest.approx((float(q[0]), float(q[1])), abs=1e-10)


class TestGeneralPotential:
    def test_quartic_first_derivative_law(self):
        psi = sample_wavefunction(GaussianParams(1.0, 0.0, 0.5), GRID)
        dev, hist = verify_general_first_derivative(psi, PotentialFn.power(1.0, 4), dt=1e-4, steps=2000)
        assert dev <= 1e-5
        # the packet is pushed back toward the origin: it narrows, then spreads
        assert np.any(hist.dxp > 0)

    def test_quadratic_matches_closed_form(self):
        psi = sample_wavefunction(GaussianParams(2.0, 0.1), GRID)
        pot = PotentialSpec.harmonic(1.0)
        dev, hist = verify_general_first_derivative(psi, PotentialFn.from_spec(pot), dt=1e-3, steps=1000)
        assert dev <= 1e-6
        ex = evolve_series(moments_from_gaussian(GaussianParams(2.0, 0.1))[0], pot, hist.t)[0]
        assert hist.dx2 == pytest.approx(ex, abs=1e-6)

    def test_spreading_sign_under_quartic(self):
        psi = sample_wavefunction(GaussianParams(1.0, 0.2), GRID)
        hist = moment_history(psi, PotentialFn.power(1.0, 4), dt=1e-4, steps=20)
        assert hist.dxp[0] > 0 and hist.dx2[1] > hist.dx2[0]

    def test_power_derivatives(self):
        V = PotentialFn.power(0.5, 4)
        x = np.array([-1.0, 0.5, 2.0])
        h = 1e-6
        assert V.force(x) == pytest.approx(-(V(x + h) - V(x - h)) / (2 * h), rel=1e-8)
        assert V.force_prime(x) == pytest.approx((V.force(x + h) - V.force(x - h)) / (2 * h), rel=1e-6)


class TestSnapshot:
    def test_layout(self, tmp_path):
        g = Grid(-4.0, 4.0, 256)
        psi = sample_wavefunction(GaussianParams(0.2, 0.3, 0.1, 1.0), g)
        path = tmp_path / "psi.bin"
        dump_snapshot(psi, path)
        raw = path.read_bytes()
        assert raw[:8] == SNAPSHOT_MAGIC == b"QWPLAB01"
        assert len(raw) == 8 + 3 * 256 * 8
        cols = np.frombuffer(raw[8:], dtype="<f8").reshape(3, 256)
        assert np.array_equal(cols[0], g.x)
        assert np.array_equal(cols[1] + 1j * cols[2], psi.samples)

    def test_round_trip(self, tmp_path):
        g = Grid(-4.0, 4.0, 512)
        psi = sample_wavefunction(GaussianParams(0.2), g)
        dump_snapshot(psi, tmp_path / "a.bin")
        back = load_snapshot(tmp_path / "a.bin")
        assert np.array_equal(back.samples, psi.samples)
        assert back.grid.n == 512 and back.grid.dx == pytest.approx(g.dx)

    def test_bad_magic(self, tmp_path):
        (tmp_path / "b.bin").write_bytes(b"NOTMAGIC" + bytes(24))
        with pytest.raises(ValueError):
            load_snapshot(tmp_path / "b.bin")
