import math

import numpy as np
import pytest

from aggdiff.grids import RadialDensity
from aggdiff.kernels import (
    Kernel,
    KernelEvaluationError,
    RegularizedLogKernel,
    audit_assumptions,
    get_kernel,
    kernel_from_table,
    log2d,
    newtonian,
    newtonian_potential_2d,
    phi_reference,
    potential_far_field_ratio,
)


def unit_disk(n=2000, rmax=2.0):
    dr = rmax / n
    r = (np.arange(n) + 0.5) * dr
    return RadialDensity(dr, np.where(r < 1.0, 1.0, 0.0))


class TestAudit:
    def test_log2d_classification(self):
        rep = audit_assumptions(log2d())
        assert rep.satisfied(["k1", "k2", "k3", "k4", "k5"])
        assert not rep.k6

    def test_newtonian3d_classification(self):
        rep = audit_assumptions(newtonian(3))
        assert rep.satisfied(["k1", "k2", "k3", "k4", "k6"])
        assert not rep.k5
        assert rep.alpha == pytest.approx(1.0, abs=1e-6)
        assert rep.ell == pytest.approx(1.0 / (4 * math.pi))

    def test_newtonian_alpha_matches_dimension(self):
        for d in (3, 4, 5):
            rep = audit_assumptions(newtonian(d))
            assert rep.k6 and rep.alpha == pytest.approx(d - 2.0, abs=1e-6)

    def test_unnormalized_kernel_fails_k1(self):
        bad = Kernel(
            "inverse", 2,
            lambda r: -1.0 / np.asarray(r, float),
            lambda r: 1.0 / np.asarray(r, float) ** 2,
        )
        rep = audit_assumptions(bad)
        assert not rep.k1
        assert rep.witnesses["k1"] == pytest.approx(1.0)

    def test_probe_grid_validation(self):
        with pytest.raises(ValueError):
            audit_assumptions(log2d(), probe_radii=[1.0, 2.0])
        with pytest.raises(ValueError):
            audit_assumptions(log2d(), probe_radii=[])

    def test_nonfinite_omega_reported_with_radius(self):
        k = Kernel(
            "broken", 2,
            lambda r: np.where(np.asarray(r) > 100.0, np.nan, np.log(r)),
            lambda r: 1.0 / np.asarray(r, float),
        )
        with pytest.raises(KernelEvaluationError, match="r ="):
            audit_assumptions(k)

    def test_k2_constant_near_origin(self):
        rep = audit_assumptions(log2d())
        # omega'(r) r = 1/(2 pi) for the log kernel
        assert rep.constants["K2_constant"] == pytest.approx(1.0 / (2 * math.pi), rel=1e-9)

    def test_phi_reference(self):
        assert phi_reference(0.5, 3) == pytest.approx(2.0)
        assert phi_reference(0.5, 2) == pytest.approx(math.log(2.0))
        assert phi_reference(0.5, 1) == pytest.approx(-0.5)


class TestFarFieldRatio:
    def test_uniform_disk_mean_value(self):
        disk = unit_disk()
        ratio = potential_far_field_ratio(disk, log2d(), 2.0)
        assert ratio == pytest.approx(math.pi, rel=1e-6)

    def test_zero_density(self):
        zero = RadialDensity(0.01, np.zeros(100))
        assert potential_far_field_ratio(zero, log2d(), 2.0) == 0.0

    def test_mass_rescaling_linearity(self):
        disk = unit_disk()
        scaled = RadialDensity(disk.dr, 3.0 * disk.values)
        r1 = potential_far_field_ratio(disk, log2d(), 2.5)
        r3 = potential_far_field_ratio(scaled, log2d(), 2.5)
        assert r3 == pytest.approx(3.0 * r1, rel=1e-12)

    def test_radius_inside_support_rejected(self):
        with pytest.raises(ValueError, match="support"):
            potential_far_field_ratio(unit_disk(), log2d(), 0.5)

    def test_ratio_tends_to_mass(self):
        # monotone approach to the mass for growing radius
        rng = np.random.default_rng(3)
        vals = rng.random(200)
        vals[120:] = 0.0
        rho = RadialDensity(0.01, vals)
        mass = rho.mass()
        radii = [4.0 * rho.support_radius() * s for s in (1.0, 2.0, 4.0)]
        ratios = [potential_far_field_ratio(rho, log2d(), r) for r in radii]
        for val in ratios:
            assert val == pytest.approx(mass, rel=1e-3)


class TestRegularizedLog:
    def test_j_eps_unit_mass(self):
        e = RegularizedLogKernel(0.1)
        n, L = 512, 16.0
        dx = 2 * L / n
        xs = -L + (np.arange(n) + 0.5) * dx
        X, Y = np.meshgrid(xs, xs)
        total = e.j_eps(np.stack([X, Y], axis=-1)).sum() * dx * dx
        tail = e.epsilon**2 / (L**2 + e.epsilon**2)
        assert total == pytest.approx(1.0, abs=5 * tail + 1e-3)
        assert np.all(e.j_eps(np.stack([X, Y], axis=-1)) >= 0)

    def test_pointwise_convergence_bound(self):
        # |N_eps - N| <= eps^2 / (4 pi |x|^2), from log(1 + t) <= t
        for eps in (0.2, 0.05):
            e = RegularizedLogKernel(eps)
            for r in np.logspace(-1, 1, 20):
                x = np.array([r, 0.0])
                n_exact = -math.log(r) / (2 * math.pi)
                assert abs(float(e.n_eps(x)) - n_exact) <= eps**2 / (4 * math.pi * r**2) * (1 + 1e-12)

    def test_epsilon_validation(self):
        with pytest.raises(ValueError):
            RegularizedLogKernel(0.0)


class TestCellAverage:
    def test_log_closed_form_matches_quadrature(self):
        k = log2d()
        h = 0.37
        closed = k.cell_average(h)
        generic = Kernel("plain", 2, k.omega, k.omega_prime)
        assert generic.cell_average(h) == pytest.approx(closed, rel=1e-8)

    def test_sign_flip_for_newtonian_potential(self):
        h = 0.1
        assert newtonian_potential_2d().cell_average(h) == pytest.approx(-log2d().cell_average(h))


class TestRegistry:
    def test_builtin_names(self):
        assert get_kernel("log2d").name == "log2d"
        assert get_kernel("newtonian3d").dimension == 3
        with pytest.raises(ValueError):
            get_kernel("bogus")

    def test_table_kernel_normalized(self, tmp_path):
        rr = np.geomspace(0.01, 200.0, 8000)
        ww = np.log(rr) / (2 * math.pi) + 0.7
        wp = 1.0 / (2 * math.pi * rr)
        path = tmp_path / "kern.csv"
        np.savetxt(path, np.column_stack([rr, ww, wp]), delimiter=",")
        k = kernel_from_table(str(path))
        assert float(k.omega(1.0)) == pytest.approx(0.0, abs=1e-7)
        assert float(k.omega(2.0)) == pytest.approx(math.log(2.0) / (2 * math.pi), abs=1e-6)
