"""Tests for lattice, quadrature and linear-algebra helpers."""

import numpy as np
import pytest

from src.models.errors import ConfigError
from src.utils.lattice import LatticeGrid, Scaling
from src.utils.linalg import wedge_basis
from src.utils.quadrature import (
    gauss_legendre,
    plane_frames,
    plane_rule,
    sphere_rule,
)


class TestLatticeGrid:
    def test_modes(self):
        """|n|_inf <= floor(k_max L) gives (2N + 1)^d modes in lexicographic order."""
        grid = LatticeGrid(2, 3.0, 1.0)
        assert grid.cutoff == 3
        assert len(grid) == 49
        assert grid.indices[0].tolist() == [-3, -3]
        assert grid.indices[1].tolist() == [-3, -2]
        assert grid.index_of([0, 0]) == 24

    def test_momenta_and_containment(self):
        """Momenta are n / L; containment is checked on indices."""
        grid = LatticeGrid(1, 4.0, 0.5)
        assert grid.momenta[:, 0].tolist() == pytest.approx([-0.5, -0.25, 0.0, 0.25, 0.5])
        assert grid.contains([2]) and not grid.contains([3])

    def test_cube_round_trip(self):
        """Flat mode vectors reshape to the cube and back."""
        grid = LatticeGrid(3, 1.0, 1.0)
        values = np.arange(len(grid))
        assert grid.to_cube(values).shape == (3, 3, 3)
        assert np.array_equal(grid.from_cube(grid.to_cube(values)), values)


class TestScaling:
    def test_derived_constants(self):
        """alpha, phase, coupling and kinetic time for L = 4, gamma = 1/2."""
        s = Scaling(3, 4.0, 0.5, 0.2)
        assert s.alpha == pytest.approx(0.5)
        assert s.phase == pytest.approx(0.8)
        assert s.coupling == pytest.approx(0.2 / (2 * 4.0**2.5))
        assert s.t_kin == pytest.approx(2.0)


class TestQuadrature:
    def test_gauss_legendre_exact_for_polynomials(self):
        """n points integrate degree 2n - 1 exactly."""
        x, w = gauss_legendre(4, -1.0, 2.0)
        assert np.sum(w * x**7) == pytest.approx((2.0**8 - 1.0) / 8)

    @pytest.mark.parametrize("dimension,size", [(1, 2), (2, 12), (3, 26)])
    def test_sphere_area(self, dimension, size):
        """Weights sum to the area of the unit sphere and directions are unit."""
        dirs, w = sphere_rule(dimension, size)
        area = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi}[dimension]
        assert np.sum(w) == pytest.approx(area)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)

    def test_lebedev_second_moment(self):
        """A Lebedev rule integrates x^2 over the sphere to 4 pi / 3."""
        dirs, w = sphere_rule(3, 50)
        assert np.sum(w * dirs[:, 0] ** 2) == pytest.approx(4 * np.pi / 3)

    def test_unknown_lebedev_size(self):
        """Only tabulated Lebedev sizes are accepted."""
        with pytest.raises(ConfigError):
            sphere_rule(3, 20)

    def test_plane_frames_are_orthonormal(self):
        """Frames span the orthogonal complement of each direction."""
        dirs, _ = sphere_rule(3, 38)
        frames = plane_frames(dirs)
        assert frames.shape == (38, 2, 3)
        assert np.allclose(np.einsum("ajd,ad->aj", frames, dirs), 0.0, atol=1e-12)
        gram = np.einsum("ajd,akd->ajk", frames, frames)
        assert np.allclose(gram, np.eye(2)[None], atol=1e-12)

    def test_plane_rule_area(self):
        """The tensor rule integrates 1 to the area of the square."""
        coords, w = plane_rule(3, 5, 2.0)
        assert coords.shape == (25, 2)
        assert np.sum(w) == pytest.approx(16.0)


class TestWedgeBasis:
    def test_coordinate_vectors(self):
        """{e1, e2} in R^3 is its own basis."""
        s = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        result = wedge_basis(s)
        assert result.rank == 2
        assert np.allclose(result.coefficients, np.eye(2))

    def test_empty_set(self):
        """No vectors, no basis."""
        assert wedge_basis(np.zeros((0, 3))).rank == 0

    def test_random_sets_have_bounded_coefficients(self):
        """Coefficients stay within 2^(d - 1) and reconstruct every vector."""
        rng = np.random.default_rng(5)
        for _ in range(100):
            s = rng.integers(-5, 6, size=(int(rng.integers(1, 12)), 3)).astype(float)
            result = wedge_basis(s)
            if result.rank == 0:
                continue
            assert np.max(np.abs(result.coefficients)) <= 4 + 1e-9
            assert np.allclose(result.coefficients @ result.basis, s)

    def test_rank_deficient_set(self):
        """Collinear vectors give a rank-one basis with the longest vector."""
        s = np.array([[1.0, 2.0, 0.0], [2.0, 4.0, 0.0], [-1.0, -2.0, 0.0]])
        result = wedge_basis(s)
        assert result.indices == (1,)
        assert np.allclose(result.coefficients[:, 0], [0.5, 1.0, -0.5])
