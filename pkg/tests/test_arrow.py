"""Tests for the forward/backward iterate sums."""

import numpy as np
import pytest

from src.core.arrow import (
    ArrowRow,
    GaussianSpectrum,
    arrow_of_time_demo,
    arrow_sums_direct,
    arrow_sums_gaussian,
)
from src.models.errors import ConfigError


class TestGaussianSpectrum:
    def test_values(self):
        """amplitude * exp(-|k|^2 / width^2)."""
        phi = GaussianSpectrum(2.0, 0.5)
        assert phi(np.array([0.5, 0.0])) == pytest.approx(2.0 * np.exp(-1.0))

    def test_gain_in_three_dimensions(self):
        """K0(phi, phi, phi)(0) = pi^2 / 4 for the unit Gaussian in d = 3."""
        assert GaussianSpectrum().gain_at_origin(3) == pytest.approx(np.pi**2 / 4)

    def test_gain_scaling(self):
        """Cubic in the amplitude, width^(2d - 2) in the width."""
        base = GaussianSpectrum().gain_at_origin(3)
        assert GaussianSpectrum(2.0, 1.0).gain_at_origin(3) == pytest.approx(8 * base)
        assert GaussianSpectrum(1.0, 2.0).gain_at_origin(3) == pytest.approx(16 * base)

    def test_gain_needs_two_dimensions(self):
        """The origin gain is undefined in d = 1."""
        with pytest.raises(ConfigError):
            GaussianSpectrum().gain_at_origin(1)


class TestArrowSums:
    @pytest.mark.parametrize("dimension", [2, 3])
    def test_histogram_matches_direct_sum(self, dimension):
        """The factorised fast path agrees with the explicit double sum."""
        phi = GaussianSpectrum()
        big_l = 1 if dimension == 3 else 2
        fast = arrow_sums_gaussian(big_l, phi, dimension, 0.5, 1.0)
        slow = arrow_sums_direct(big_l, phi, np.zeros(dimension), dimension, 5.0, 0.5, 1.0)
        assert fast[0] == pytest.approx(slow[0], rel=1e-9)
        assert fast[1] == pytest.approx(slow[1], rel=1e-9)

    def test_backward_sum_is_negative_real(self):
        """The backward kernel |E|^2 is real and positive."""
        _, bwd = arrow_sums_gaussian(4, GaussianSpectrum())
        assert bwd.imag == 0.0
        assert bwd.real < 0

    def test_relative_error(self):
        """Relative distance of the backward sum to its limit."""
        row = ArrowRow(8.0, 0j, -4.5 + 0j, -5.0)
        assert row.relative_error == pytest.approx(0.1)


@pytest.mark.slow
class TestArrowDemo:
    def test_forward_decays_and_backward_converges(self):
        """|Y_fwd| decreases over L = 8, 16, 32 and Y_bwd reaches -2 delta K0 within 5%."""
        rows = arrow_of_time_demo((8, 16, 32))
        forward = [abs(r.forward) for r in rows]
        assert forward[0] > forward[1] > forward[2]
        assert rows[-1].limit == pytest.approx(-np.pi**2 / 2)
        assert rows[-1].relative_error < 0.05
