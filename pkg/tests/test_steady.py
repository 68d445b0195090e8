import math

import numpy as np
import pytest
from scipy.special import j0, j1, jn_zeros

from aggdiff.energy import dissipation, free_energy
from aggdiff.grids import radial_potential
from aggdiff.kernels import log2d
from aggdiff.steady import (
    SolverSettings,
    SteadySolveError,
    exponent_iteration,
    radial_l1_distance,
    rescale_steady,
    solve_radial_steady,
    verify_uniqueness_scaling,
)

J01 = float(jn_zeros(0, 1)[0])
BESSEL_SUPPORT = math.sqrt(2.0) * J01  # ~3.4009


@pytest.fixture(scope="module")
def steady_m2():
    return solve_radial_steady(2.0, 1.0, log2d(), n=2048, rmax=8.0)


class TestBesselOracle:
    def test_support_radius(self, steady_m2):
        assert steady_m2.support_radius == pytest.approx(BESSEL_SUPPORT, rel=5e-3)

    def test_profile_matches_bessel(self, steady_m2):
        # EL relation + Laplacian gives 2 delta rho + rho = 0 inside the
        # support, i.e. rho = A J0(r / sqrt(2)) with A fixed by the mass
        A = 1.0 / (4.0 * math.pi * J01 * j1(J01))
        r = steady_m2.density.r
        oracle = np.where(r < BESSEL_SUPPORT, A * j0(r / math.sqrt(2.0)), 0.0)
        err = np.abs(steady_m2.density.values - oracle).max() / oracle.max()
        assert err <= 1e-3

    def test_mass_constraint(self, steady_m2):
        assert steady_m2.mass == pytest.approx(1.0, rel=1e-9)

    def test_profile_nonincreasing(self, steady_m2):
        assert steady_m2.density.is_nonincreasing(tol=1e-12)

    def test_el_residual_on_support(self, steady_m2):
        assert steady_m2.residual <= 1e-8

    def test_inequality_outside_support(self, steady_m2):
        rho = steady_m2.density
        psi = radial_potential(rho, log2d())
        outside = rho.r > steady_m2.support_radius
        m = steady_m2.m
        lhs = (m / (m - 1.0)) * rho.values[outside] ** (m - 1.0) + psi[outside]
        assert np.all(lhs >= steady_m2.multiplier - 1e-8)

    def test_dissipation_nearly_zero(self, steady_m2):
        d = dissipation(steady_m2.density, log2d(), steady_m2.m)
        scale = abs(free_energy(steady_m2.density, log2d(), steady_m2.m).total)
        assert d <= 1e-8 * scale

    def test_support_independent_of_mass(self):
        # m = 2 makes the EL relation linear: support does not move with mass
        radii = [
            solve_radial_steady(2.0, mass, log2d(), n=1024, rmax=8.0).support_radius
            for mass in (0.5, 1.0, 2.0)
        ]
        for r in radii[1:]:
            assert r == pytest.approx(radii[0], rel=5e-3)

    def test_small_mass_degenerate_limit(self):
        heights = []
        mults = []
        for mass in (1e-2, 1e-4):
            p = solve_radial_steady(2.0, mass, log2d(), n=512, rmax=8.0)
            heights.append(p.height())
            mults.append(p.multiplier)
        assert heights[1] < heights[0]
        assert mults[1] < mults[0]


class TestSolverContracts:
    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            solve_radial_steady(1.0, 1.0, log2d())
        with pytest.raises(ValueError):
            solve_radial_steady(2.0, -1.0, log2d())

    def test_domain_too_small(self):
        with pytest.raises(SteadySolveError, match="rmax"):
            solve_radial_steady(1.5, 1.0, log2d(), n=512, rmax=8.0)

    def test_nonconvergence_reports_history(self):
        settings = SolverSettings(max_iter=2)
        with pytest.raises(SteadySolveError) as err:
            solve_radial_steady(2.0, 1.0, log2d(), n=512, rmax=8.0, settings=settings)
        assert len(err.value.residual_history) == 2


class TestRescale:
    def test_identity(self, steady_m2):
        same = rescale_steady(steady_m2, steady_m2.mass)
        assert radial_l1_distance(same.density, steady_m2.density) <= 1e-12

    def test_support_grows_with_mass_above_two(self):
        p = solve_radial_steady(3.0, 1.0, log2d(), n=1024, rmax=10.0)
        bigger = rescale_steady(p, 4.0)
        assert bigger.support_radius > p.support_radius
        assert bigger.height() > p.height()

    def test_support_shrinks_with_mass_below_two(self):
        p = solve_radial_steady(1.5, 1.0, log2d(), n=2048, rmax=40.0)
        bigger = rescale_steady(p, 4.0)
        assert bigger.support_radius < p.support_radius
        assert bigger.height() > p.height()
        assert bigger.mass == pytest.approx(4.0, rel=1e-3)

    def test_dimension_guard(self, steady_m2):
        fake = rescale_steady(steady_m2, 1.0)
        fake.density.dimension = 3
        with pytest.raises(ValueError, match="d = 2"):
            rescale_steady(fake, 2.0)


class TestExponentIteration:
    def test_m2_arithmetic_progression(self):
        tr = exponent_iteration(2.0, 5)
        expected = [-2.5, -0.5, 1.5]
        assert tr.case == "C"
        assert tr.iterates == pytest.approx(expected)
        assert tr.steps_to_positive == 2

    def test_m14_d3_two_steps(self):
        tr = exponent_iteration(1.4, 3)
        assert tr.p_start == pytest.approx(-15.0 / 7.0)
        assert tr.iterates[1] == pytest.approx(-0.357142857, rel=1e-8)
        assert tr.iterates[2] == pytest.approx(4.107142857, rel=1e-8)
        assert tr.steps_to_positive == 2
        assert not tr.logarithmic_hit

    def test_m15_d3_logarithmic_path(self):
        tr = exponent_iteration(1.5, 3)
        assert tr.p_start == pytest.approx(-2.0)
        assert tr.logarithmic_hit
        assert tr.iterates[1] > 0
        assert tr.steps_to_positive == 1

    def test_attracting_fixed_point_above_two(self):
        tr = exponent_iteration(2.5, 6)
        assert tr.fixed_point == pytest.approx(2.0 / 0.5)
        assert tr.steps_to_positive is not None

    def test_case_flags(self):
        assert exponent_iteration(2.0, 2).case == "A"
        assert exponent_iteration(3.0, 4).case == "B"

    def test_regime_guard(self):
        with pytest.raises(ValueError, match="regime"):
            exponent_iteration(1.2, 3)


class TestUniquenessScaling:
    def test_m2_two_masses(self):
        rep = verify_uniqueness_scaling(2.0, [1.0, 2.0], n=1024, rmax=8.0)
        assert rep.max_distance() <= 1e-3
        for err in rep.support_ratio_errors.values():
            assert err <= 1e-2

    def test_single_mass_same_inits(self):
        rep = verify_uniqueness_scaling(2.0, [1.0], n=512, rmax=8.0)
        assert rep.initialization_distances[1.0] <= 1e-3
        assert not rep.rescale_distances

    def test_m3_support_ratio(self):
        rep = verify_uniqueness_scaling(3.0, [1.0, 4.0], n=4096, rmax=10.0)
        ratio = rep.support_radii[4.0] / rep.support_radii[1.0]
        assert ratio == pytest.approx(4.0 ** 0.25, rel=1e-2)
        assert rep.max_distance() <= 1e-3
