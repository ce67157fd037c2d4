"""Tests for the collision operator and the kinetic equation solver."""

import numpy as np
import pytest

from src.config import WkeConfig
from src.core.arrow import GaussianSpectrum
from src.core.collision import CollisionOperator, collision, collision_monte_carlo
from src.core.spectrum import Spectrum, SpectrumGrid, rayleigh_jeans
from src.core.wke import (
    KineticRhs,
    conserved_quantities,
    solve,
    sobolev_monitor,
    taylor_iterates,
)
from src.models.errors import BlowupError, ConfigError, DecorationError

FINE = WkeConfig(
    radial_nodes=24,
    angular_nodes=14,
    plane_nodes=24,
    l1_radius=4.0,
    plane_radius=4.0,
)
COARSE = WkeConfig(
    radial_nodes=6,
    angular_nodes=8,
    plane_nodes=6,
    l1_radius=1.5,
    plane_radius=1.5,
    dtau=1 / 256,
)


def _small_spectrum():
    grid = SpectrumGrid(2, 1.5, 0.5)
    return Spectrum.from_function(grid, GaussianSpectrum())


class TestSpectrum:
    def test_grid_layout(self):
        """Points are h * n with |n|_inf <= round(half_width / h)."""
        grid = SpectrumGrid(2, 1.5, 0.5)
        assert grid.side == 7
        assert grid.points.shape == (49, 2)
        assert grid.extent == pytest.approx(1.5)

    def test_interpolation(self):
        """Multilinear between nodes and zero outside."""
        grid = SpectrumGrid(1, 1.0, 1.0)
        phi = Spectrum(grid, np.array([0.0, 2.0, 4.0]))
        assert phi(np.array([[0.5], [-0.5], [3.0]])) == pytest.approx([3.0, 1.0, 0.0])

    def test_out_of_grid_momentum(self):
        """Grid spectra refuse collision targets outside their box."""
        phi = _small_spectrum()
        with pytest.raises(DecorationError):
            CollisionOperator(2, COARSE).pieces(phi, phi, phi, np.array([2.0, 0.0]))


class TestCollision:
    def test_gain_at_origin(self):
        """Quadrature reproduces the closed form K0(0) = pi^2 / 4 for the unit Gaussian."""
        op = CollisionOperator(3, FINE)
        phi = GaussianSpectrum()
        pieces = op.pieces(phi, phi, phi, np.zeros(3))
        assert pieces.gain[0] == pytest.approx(phi.gain_at_origin(3), rel=1e-6)

    def test_rayleigh_jeans_is_stationary(self):
        """K vanishes pointwise on the resonant set for 1 / (a + b |k|^2)."""
        phi = rayleigh_jeans(1.0, 2.0)
        k = np.array([[0.3, -0.2, 0.1], [0.0, 0.5, 0.0]])
        pieces = CollisionOperator(3, FINE).pieces(phi, phi, phi, k)
        assert np.all(np.abs(pieces.total) <= 1e-10 * pieces.gain)

    def test_single_momentum_returns_scalar(self):
        """A single target gives a scalar."""
        phi = GaussianSpectrum()
        value = collision(phi, phi, phi, np.array([0.2, 0.0, 0.0]), FINE)
        assert np.ndim(value) == 0

    def test_chunking_does_not_change_values(self):
        """Batches of momenta give the same values as one call per momentum."""
        phi = GaussianSpectrum()
        ks = np.array([[0.0, 0.0, 0.0], [0.4, 0.1, -0.3], [1.0, 0.0, 0.5]])
        params = FINE.model_copy(update={"chunk_size": 2})
        op = CollisionOperator(3, params)
        batch = op(phi, phi, phi, ks)
        single = [op(phi, phi, phi, k)[0] for k in ks]
        assert np.allclose(batch, single, rtol=1e-13, atol=0)

    def test_monte_carlo_agrees(self):
        """Importance sampling agrees with the quadrature gain term."""
        phi = GaussianSpectrum()
        mean, se = collision_monte_carlo(
            phi, phi, phi, np.zeros(3), 200_000, np.random.default_rng(12)
        )
        exact = phi.gain_at_origin(3)
        assert abs(mean - exact) < 5 * se
        assert se < 0.02 * exact

    def test_outer_arguments_commute(self):
        """Swapping phi1 and phi3 leaves K unchanged."""
        phi1 = GaussianSpectrum(1.0, 1.0)
        phi2 = GaussianSpectrum(1.5, 0.8)
        phi3 = GaussianSpectrum(0.5, 0.9)
        k = np.array([[0.3, -0.2, 0.1], [0.0, 0.4, 0.0]])
        op = CollisionOperator(3, FINE)
        assert np.allclose(op(phi1, phi2, phi3, k), op(phi3, phi2, phi1, k), rtol=1e-4, atol=1e-10)

    def test_cubic_form_derivative(self):
        """The central difference of K(phi) along psi splits into the three slot derivatives."""
        phi = _small_spectrum()
        psi = Spectrum.from_function(phi.grid, GaussianSpectrum(0.5, 0.7))
        rhs = KineticRhs(phi.grid, COARSE)
        eps = 1e-3
        plus = rhs(phi + psi.scale(eps)).values
        minus = rhs(phi + psi.scale(-eps)).values
        slots = [rhs.trilinear(psi, phi, phi), rhs.trilinear(phi, psi, phi)]
        slots.append(rhs.trilinear(phi, phi, psi))
        expected = sum(s.values for s in slots) + eps**2 * rhs(psi).values
        assert np.allclose((plus - minus) / (2 * eps), expected, rtol=1e-7, atol=1e-12)

    def test_radial_nodes_below_floor_are_dropped(self):
        """The l1 floor removes radial nodes and records how many."""
        params = COARSE.model_copy(update={"l1_floor": 0.5})
        op = CollisionOperator(2, params)
        assert op.node_count < CollisionOperator(2, COARSE).node_count
        assert op.excluded > 0


class TestDiagnostics:
    def test_monitor_value(self):
        """sqrt(h^d sum <k>^(2s) phi^2) on a three-point line."""
        grid = SpectrumGrid(1, 1.0, 1.0)
        phi = Spectrum(grid, np.ones(3))
        assert sobolev_monitor(phi, 1.0) == pytest.approx(np.sqrt(5.0))

    def test_monitor_index_bound(self):
        """s must exceed d/2 - 1."""
        grid = SpectrumGrid(3, 1.0, 0.5)
        with pytest.raises(ConfigError):
            sobolev_monitor(Spectrum.zeros(grid), 0.4)

    def test_conserved_quantities_of_gaussian(self):
        """Mass and energy of exp(-|k|^2) in d = 2 are both pi; momentum vanishes."""
        grid = SpectrumGrid(2, 5.0, 0.25)
        phi = Spectrum.from_function(grid, GaussianSpectrum())
        c = conserved_quantities(phi)
        assert c.mass == pytest.approx(np.pi, rel=1e-8)
        assert c.energy == pytest.approx(np.pi, rel=1e-8)
        assert np.allclose(c.momentum, 0.0, atol=1e-12)


class _Growth:
    truncated = 0.0
    defect = 0.0

    def __call__(self, phi):
        return phi


class _Drain:
    truncated = 0.0
    defect = 0.0

    def __call__(self, phi):
        return Spectrum(phi.grid, -np.ones(phi.grid.shape()))


class TestSolve:
    def test_trajectory_records_every_step(self):
        """Each RK4 step appends time, spectrum, monitor and invariants."""
        phi = _small_spectrum()
        seen = []
        traj = solve(phi, 4 / 256, COARSE, progress=seen.append)
        assert len(traj.times) == 5
        assert traj.times[-1] == pytest.approx(4 / 256)
        assert seen == pytest.approx(traj.times[1:])
        assert len(traj.monitor) == len(traj.conserved) == 5

    def test_zero_spectrum_is_fixed(self):
        """phi = 0 stays zero."""
        grid = SpectrumGrid(2, 1.5, 0.5)
        traj = solve(Spectrum.zeros(grid), 0.005, COARSE)
        assert np.all(traj.final.values == 0)

    def test_blowup_halts_with_partial_trajectory(self):
        """Crossing the monitor ceiling stops the run and keeps what was computed."""
        params = WkeConfig(dtau=0.1, blowup_factor=2.0)
        with pytest.raises(BlowupError) as info:
            solve(_small_spectrum(), 2.0, params, rhs=_Growth())
        partial = info.value.partial
        assert 0.6 < partial.times[-1] < 0.9
        assert partial.monitor[-1] > 2.0 * partial.monitor[0]

    def test_negative_values_are_flagged(self):
        """Negative spectrum values are reported without stopping."""
        traj = solve(_small_spectrum(), 0.2, WkeConfig(dtau=0.1), rhs=_Drain())
        assert traj.flags
        assert traj.times[-1] == pytest.approx(0.2)

    def test_interpolation_between_steps(self):
        """at() interpolates linearly and refuses times outside the run."""
        traj = solve(_small_spectrum(), 0.2, WkeConfig(dtau=0.1), rhs=_Drain())
        mid = traj.at(0.05)
        assert np.allclose(mid.values, 0.5 * (traj.spectra[0].values + traj.spectra[1].values))
        with pytest.raises(ConfigError):
            traj.at(0.3)

    def test_radial_mode_shares_shell_values(self):
        """Radial evaluation assigns one value per |k| shell."""
        phi = _small_spectrum()
        params = COARSE.model_copy(update={"conservative": False})
        values = KineticRhs(phi.grid, params, radial=True)(phi).flat
        norms = np.round(np.sum((phi.grid.points / 0.5) ** 2, axis=-1))
        for shell in np.unique(norms):
            assert np.ptp(values[norms == shell]) == 0.0
        full = KineticRhs(phi.grid, params)(phi).flat
        origin = int(np.argmin(norms))
        assert values[origin] == pytest.approx(full[origin])


class TestConservation:
    def test_projected_values_keep_invariants(self):
        """Weighted sums of K against 1, k and |k|^2 vanish after projection."""
        phi = _small_spectrum()
        rhs = KineticRhs(phi.grid, COARSE)
        q = rhs(phi).flat
        pts = phi.grid.points
        w = phi.grid.trapezoid_weights
        scale = np.sum(w * np.abs(q))
        assert abs(np.sum(w * q)) < 1e-12 * scale
        assert np.allclose(w * q @ pts, 0.0, atol=1e-12 * scale)
        assert abs(np.sum(w * q * np.sum(pts**2, axis=-1))) < 1e-12 * scale
        assert rhs.defect > 0

    def test_projection_can_be_disabled(self):
        """Without projection the values are the raw quadrature."""
        phi = _small_spectrum()
        params = COARSE.model_copy(update={"conservative": False})
        raw = CollisionOperator(2, params)(phi, phi, phi, phi.grid.points)
        assert np.array_equal(KineticRhs(phi.grid, params)(phi).flat, raw)

    def test_projection_is_linear(self):
        """The projected trilinear form scales with each argument."""
        phi = _small_spectrum()
        rhs = KineticRhs(phi.grid, COARSE)
        once = rhs.trilinear(phi.scale(2.0), phi, phi).values
        assert np.allclose(once, 2.0 * rhs(phi).values, rtol=1e-12, atol=1e-14)

    def test_short_run_drift(self):
        """Mass and energy stay fixed to rounding on a coarse grid."""
        traj = solve(_small_spectrum(), 0.05, COARSE)
        assert traj.drift("mass") < 1e-10
        assert traj.drift("energy") < 1e-10

    @pytest.mark.slow
    def test_reference_resolution_drift(self):
        """Gaussian data at the default resolution keeps mass and energy to 1e-6 up to tau = 0.5."""
        params = WkeConfig()
        grid = SpectrumGrid(2, params.box_half_width, params.spacing)
        traj = solve(Spectrum.from_function(grid, GaussianSpectrum()), 0.5, params)
        assert traj.times[-1] == pytest.approx(0.5)
        assert traj.drift("mass") <= 1e-6
        assert traj.drift("energy") <= 1e-6


class TestTaylorIterates:
    def test_first_iterate(self):
        """U_1(p + 1) = delta * K(phi_p)."""
        phi = _small_spectrum()
        iterates = taylor_iterates(phi, 2, 0.3, COARSE)
        rhs = KineticRhs(phi.grid, COARSE)
        assert np.allclose(iterates.terms[1].values, 0.3 * rhs(phi).values)

    def test_second_iterate(self):
        """U_2 = delta / 2 * (K(U1, U0, U0) + K(U0, U1, U0) + K(U0, U0, U1))."""
        phi = _small_spectrum()
        iterates = taylor_iterates(phi, 2, 0.3, COARSE)
        rhs = KineticRhs(phi.grid, COARSE)
        u1 = iterates.terms[1]
        expected = (
            rhs.trilinear(u1, phi, phi) + rhs.trilinear(phi, u1, phi) + rhs.trilinear(phi, phi, u1)
        ).scale(0.15)
        assert np.allclose(iterates.terms[2].values, expected.values)
        assert len(iterates.partial_sums) == 3

    def test_series_matches_short_solve(self):
        """Partial sums of the iterates approach the solution at small kinetic time."""
        phi = _small_spectrum()
        tau = 0.01
        exact = solve(phi, tau, COARSE).final.values
        iterates = taylor_iterates(phi, 4, 1.0, COARSE)
        errors = []
        for order in (1, 4):
            approx = sum(iterates.at(n, tau).values for n in range(order + 1))
            errors.append(np.max(np.abs(approx - exact)))
        assert errors[1] < errors[0]
        assert errors[1] < 1e-4 * np.max(phi.values)

    def test_order_five_error_under_halving(self):
        """Halving the kinetic time cuts the order-five truncation error by about 2^6.

        Times are scaled by the initial rate max|K(phi)| / max phi so the series
        parameter stays near 0.1; the accepted band is 64 +- 25%.
        """
        phi = _small_spectrum()
        rate = np.max(np.abs(KineticRhs(phi.grid, COARSE)(phi).values)) / np.max(phi.values)
        iterates = taylor_iterates(phi, 5, 1.0, COARSE)
        errors = []
        for tau in (0.05 / rate, 0.025 / rate):
            exact = solve(phi, tau, COARSE.model_copy(update={"dtau": tau / 40})).final.values
            approx = sum(iterates.at(n, tau).values for n in range(6))
            errors.append(np.max(np.abs(approx - exact)))
        assert 48.0 < errors[0] / errors[1] < 80.0
