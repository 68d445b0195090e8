"""Interaction potentials W(x) = omega(|x|) and their assumption audits.

Attractive kernels are stored normalized so that omega(1) = 0; the
normalization shift is kept on the object because it moves the
interaction energy by shift * M^2 / 2.  Assumption checks (attractivity,
Newtonian-bounded singularity, far-field growth class) are sample-based
on a probe grid, never symbolic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Kernel",
    "RegularizedLogKernel",
    "AssumptionReport",
    "KernelEvaluationError",
    "audit_assumptions",
    "potential_far_field_ratio",
    "log2d",
    "newtonian",
    "newtonian_potential_2d",
    "kernel_from_table",
    "get_kernel",
    "phi_reference",
]


class KernelEvaluationError(RuntimeError):
    pass


def sphere_surface(d: int) -> float:
    """Surface measure of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def ball_volume(d: int) -> float:
    return sphere_surface(d) / d


@dataclass(frozen=True)
class FarFieldClass:
    kind: str  # "divergent" (K5) | "saturating" (K6) | "unclassified"
    limit: float | None = None  # ell, for saturating kernels
    alpha: float | None = None  # homogeneity exponent of K = ell - W


@dataclass(frozen=True)
class Kernel:
    """Radial interaction potential with metadata for audits and grids.

    ``omega``/``omega_prime`` are vectorized evaluators of the stored
    (normalized) profile.  ``log_coefficient`` is set when
    omega(r) = c log r exactly, which unlocks the exact radial potential
    path; ``power_form`` = (c, p) marks omega(r) = c (1 - r^p).
    """

    name: str
    dimension: int
    omega: Callable[[np.ndarray], np.ndarray]
    omega_prime: Callable[[np.ndarray], np.ndarray]
    singularity_class: str = "bounded"  # "log" | "power" | "bounded"
    far_field: FarFieldClass = field(default_factory=lambda: FarFieldClass("unclassified"))
    shift: float = 0.0

    log_coefficient: float | None = None
    power_form: tuple[float, float] | None = None

    def __call__(self, r):
        return self.omega(np.asarray(r, dtype=float))

    def cell_average(self, h: float) -> float:
        """Average of omega over a square cell of side h centered at 0.

        Closed form for pure-log profiles; otherwise polar quadrature
        (the integrand omega(r) r is integrable for any kernel no more
        singular than Newtonian in 2D).
        """
        if self.dimension != 2:
            raise ValueError("cell_average is a 2D grid helper")
        if self.log_coefficient is not None:
            mean_log = math.log(h) - 0.5 * math.log(2.0) - 1.5 + math.pi / 4.0
            return self.log_coefficient * mean_log + self.shift_constant()
        return _polar_cell_average(self.omega, h)

    def shift_constant(self) -> float:
        """Constant part of the stored profile (0 for pure log/power forms)."""
        return 0.0

    def with_dimension(self, d: int) -> "Kernel":
        return Kernel(
            self.name,
            d,
            self.omega,
            self.omega_prime,
            self.singularity_class,
            self.far_field,
            self.shift,
            self.log_coefficient,
            self.power_form,
        )


def _polar_cell_average(omega, h: float, n_theta: int = 48, n_r: int = 96) -> float:
    # integrate over one octant triangle of the square and use symmetry
    theta, wt = np.polynomial.legendre.leggauss(n_theta)
    theta = (theta + 1.0) * (math.pi / 8.0)
    wt = wt * (math.pi / 8.0)
    u, wu = np.polynomial.legendre.leggauss(n_r)
    u = (u + 1.0) / 2.0
    wu = wu / 2.0
    rmax = (h / 2.0) / np.cos(theta)  # boundary of the square in this octant
    acc = 0.0
    for t, w_t, rm in zip(theta, wt, rmax):
        r = rm * u
        acc += w_t * rm * np.sum(wu * omega(np.maximum(r, 1e-300)) * r)
    return 8.0 * acc / (h * h)


# -- built-in kernels -----------------------------------------------------


def log2d() -> Kernel:
    """Attractive 2D kernel (1/2pi) log r; the Keller-Segel case W = -N."""
    c = 1.0 / (2.0 * math.pi)
    return Kernel(
        name="log2d",
        dimension=2,
        omega=lambda r: c * np.log(r),
        omega_prime=lambda r: c / np.asarray(r, dtype=float),
        singularity_class="log",
        far_field=FarFieldClass("divergent"),
        shift=0.0,
        log_coefficient=c,
    )


def newtonian(d: int = 3) -> Kernel:
    """Attractive Newtonian kernel in d >= 3, shifted so omega(1) = 0."""
    if d < 3:
        raise ValueError("use log2d for d = 2; d = 1 Newtonian not provided")
    c = 1.0 / ((d - 2) * sphere_surface(d))
    p = 2 - d
    return Kernel(
        name=f"newtonian{d}d",
        dimension=d,
        omega=lambda r: c * (1.0 - np.asarray(r, dtype=float) ** p),
        omega_prime=lambda r: c * (d - 2) * np.asarray(r, dtype=float) ** (1 - d),
        singularity_class="power",
        far_field=FarFieldClass("saturating", limit=c, alpha=float(d - 2)),
        shift=c,
        power_form=(c, float(p)),
    )


def newtonian_potential_2d() -> Kernel:
    """The 2D Newtonian potential N = -(1/2pi) log |x| itself (not attractive)."""
    c = -1.0 / (2.0 * math.pi)
    return Kernel(
        name="newtonian_potential_2d",
        dimension=2,
        omega=lambda r: c * np.log(r),
        omega_prime=lambda r: c / np.asarray(r, dtype=float),
        singularity_class="log",
        far_field=FarFieldClass("unclassified"),
        shift=0.0,
        log_coefficient=c,
    )


def regularized_attractive_2d(epsilon: float) -> Kernel:
    """Attractive counterpart of the regularized log potential, unshifted.

    omega_eps(r) = (1/4pi) log(r^2 + eps^2); omega_eps(1) is O(eps^2), so
    the profile is left unshifted to keep the eps -> 0 limit exact.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    c = 1.0 / (4.0 * math.pi)
    e2 = epsilon * epsilon
    return Kernel(
        name=f"regularized_log2d(eps={epsilon:g})",
        dimension=2,
        omega=lambda r: c * np.log(np.asarray(r, dtype=float) ** 2 + e2),
        omega_prime=lambda r: c * 2.0 * np.asarray(r, dtype=float) / (np.asarray(r, dtype=float) ** 2 + e2),
        singularity_class="bounded",
        far_field=FarFieldClass("divergent"),
        shift=0.0,
    )


@dataclass(frozen=True)
class RegularizedLogKernel:
    """Regularized logarithmic potential N_eps and its derived fields.

    N_eps(x) = -(1/4pi) log(|x|^2 + eps^2)
    grad N_eps(x) = -(1/2pi) x / (|x|^2 + eps^2)
    J_eps = -Laplacian(N_eps) = (1/pi) eps^2 / (|x|^2 + eps^2)^2, a unit-mass
    mollifier.
    """

    epsilon: float

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def n_eps(self, x: np.ndarray) -> np.ndarray:
        r2 = self._r2(x)
        return -np.log(r2 + self.epsilon**2) / (4.0 * math.pi)

    def grad_n_eps(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r2 = np.sum(x * x, axis=-1, keepdims=True)
        return -x / (2.0 * math.pi * (r2 + self.epsilon**2))

    def j_eps(self, x: np.ndarray) -> np.ndarray:
        r2 = self._r2(x)
        e2 = self.epsilon**2
        return e2 / (math.pi * (r2 + e2) ** 2)

    def attractive_kernel(self) -> Kernel:
        return regularized_attractive_2d(self.epsilon)

    @staticmethod
    def _r2(x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != 2:
            # interpret input as radii
            return x * x
        return np.sum(x * x, axis=-1)


# -- assumption audit ------------------------------------------------------


@dataclass
class AssumptionReport:
    kernel_name: str
    dimension: int
    probe_count: int
    k1: bool
    k2: bool
    k3: bool
    k4: bool
    k5: bool
    k6: bool
    witnesses: dict[str, float]
    constants: dict[str, float]
    ell: float | None = None
    alpha: float | None = None

    def phi(self, r: float) -> float:
        return phi_reference(r, self.dimension)

    def satisfied(self, names: Sequence[str]) -> bool:
        return all(getattr(self, n.lower()) for n in names)

    def summary_lines(self) -> list[str]:
        lines = []
        for name in ("k1", "k2", "k3", "k4", "k5", "k6"):
            ok = getattr(self, name)
            extra = ""
            if name in self.witnesses and not ok:
                extra = f"  (violated at r = {self.witnesses[name]:.4g})"
            if name == "k6" and ok and self.alpha is not None:
                extra = f"  (ell = {self.ell:.6g}, alpha = {self.alpha:.4g})"
            if name.upper() + "_constant" in self.constants:
                extra += f"  [C = {self.constants[name.upper() + '_constant']:.4g}]"
            lines.append(f"{name.upper()}: {'satisfied' if ok else 'violated'}{extra}")
        return lines


def phi_reference(r: float, d: int) -> float:
    """Near-origin comparison profile: r^(2-d) for d>=3, -log r for d=2, r-1 for d=1."""
    if d >= 3:
        return float(r) ** (2 - d)
    if d == 2:
        return -math.log(r)
    return r - 1.0


def default_probe_radii() -> np.ndarray:
    return np.logspace(-4, 4, 161)


def audit_assumptions(kernel: Kernel, probe_radii: Sequence[float] | None = None) -> AssumptionReport:
    """Sample-based check of the attractive-kernel assumptions.

    "Satisfied" means satisfied at every probe radius; the report records
    witness radii for violations and the audited constants (smallest
    admissible bounds seen on the probes).
    """
    r = np.asarray(probe_radii if probe_radii is not None else default_probe_radii(), dtype=float)
    if r.size == 0 or np.any(r <= 0):
        raise ValueError("probe radii must be nonempty and strictly positive")
    if r.min() > 1e-4 or r.max() < 1e4:
        raise ValueError("probe radii must span at least [1e-4, 1e4]")
    r = np.sort(r)

    w = np.asarray(kernel.omega(r), dtype=float)
    wp = np.asarray(kernel.omega_prime(r), dtype=float)
    bad = ~np.isfinite(w)
    if np.any(bad):
        raise KernelEvaluationError(f"omega not finite at r = {r[bad][0]:g}")
    bad = ~np.isfinite(wp)
    if np.any(bad):
        raise KernelEvaluationError(f"omega' not finite at r = {r[bad][0]:g}")

    witnesses: dict[str, float] = {}
    constants: dict[str, float] = {}
    d = kernel.dimension

    # K1: normalization omega(1) = 0 and strict attractivity omega' > 0
    w1 = float(kernel.omega(np.asarray(1.0)))
    k1 = abs(w1) <= 1e-12
    if not k1:
        witnesses["k1"] = 1.0
    nonpos = wp <= 0
    if np.any(nonpos):
        k1 = False
        witnesses.setdefault("k1", float(r[nonpos][0]))
    constants["K1_omega_at_1"] = w1

    # K2: omega'(r) <= C r^(1-d) on r <= 1
    near = r <= 1.0
    if np.any(near):
        c2 = float(np.max(wp[near] * r[near] ** (d - 1)))
        constants["K2_constant"] = c2
        k2 = math.isfinite(c2)
        if not k2:
            witnesses["k2"] = float(r[near][np.argmax(wp[near] * r[near] ** (d - 1))])
    else:
        k2, c2 = True, 0.0

    # K3: omega'(r) <= C on r > 1
    far = r > 1.0
    c3 = float(np.max(wp[far])) if np.any(far) else 0.0
    constants["K3_constant"] = c3
    k3 = math.isfinite(c3)

    # Far-field growth: dyadic increments shrink geometrically for a
    # saturating profile, stay level (log) or grow (powers) otherwise.
    rmax = float(r.max())
    g1 = float(kernel.omega(np.asarray(rmax)) - kernel.omega(np.asarray(rmax / 2.0)))
    g2 = float(kernel.omega(np.asarray(rmax / 2.0)) - kernel.omega(np.asarray(rmax / 4.0)))
    scale = max(1.0, abs(float(kernel.omega(np.asarray(rmax)))))
    if g1 <= 1e-12 * scale:
        bounded_tail = True
    elif g2 > 0 and g1 / g2 <= 0.99:
        bounded_tail = True
    else:
        bounded_tail = False
    if bounded_tail:
        k4 = True
        constants["K4_constant"] = 0.0
    else:
        a = np.logspace(-2, 3.5, 40)
        A, B = np.meshgrid(a, a)
        lhs = np.maximum(np.asarray(kernel.omega(A + B)), 0.0)
        rhs = 1.0 + np.maximum(np.asarray(kernel.omega(1.0 + A)), 0.0) + np.maximum(
            np.asarray(kernel.omega(1.0 + B)), 0.0
        )
        c4 = float(np.max(lhs / rhs))
        constants["K4_constant"] = c4
        k4 = math.isfinite(c4)

    # K5 / K6: far-field growth class
    k5 = not bounded_tail
    ell: float | None = None
    alpha: float | None = None
    k6 = False
    if bounded_tail:
        if kernel.far_field.kind == "saturating" and kernel.far_field.limit is not None:
            ell = kernel.far_field.limit
        else:
            # geometric tail extrapolation assuming a power-law approach
            ratio = g1 / g2 if g2 != 0 else 0.0
            tail = g1 * ratio / (1.0 - ratio) if 0 < ratio < 1 else 0.0
            ell = float(kernel.omega(np.asarray(rmax))) + tail
        tau = np.array([1.0, 2.0, 4.0, 8.0])
        kappa = ell - np.asarray(kernel.omega(tau), dtype=float)
        if np.all(kappa > 0):
            slope = np.polyfit(np.log(tau), np.log(kappa), 1)[0]
            alpha = -float(slope)
            # verify the scale inequality K(tau x) >= tau^(-alpha) K(x) on dyads
            base = np.array([1.0, 1.5, 2.0, 3.0])
            ok = True
            for t in (2.0, 4.0, 8.0):
                lhs = ell - np.asarray(kernel.omega(t * base), dtype=float)
                rhs = t ** (-alpha) * (ell - np.asarray(kernel.omega(base), dtype=float))
                if np.any(lhs < rhs * (1.0 - 1e-6) - 1e-14):
                    ok = False
            k6 = ok and 0 < alpha < d and ell > 0
        if k6:
            constants["K6_alpha"] = alpha

    return AssumptionReport(
        kernel_name=kernel.name,
        dimension=d,
        probe_count=int(r.size),
        k1=k1,
        k2=k2,
        k3=k3,
        k4=k4,
        k5=k5,
        k6=k6,
        witnesses=witnesses,
        constants=constants,
        ell=ell,
        alpha=alpha,
    )


def potential_far_field_ratio(density, kernel: Kernel, radius: float) -> float:
    """psi_f(x) / omega(|x|) at |x| = radius, outside the support of f.

    For the 2D log kernel this converges to (equals, for radial data) the
    total mass of the density, by the mean-value property of the
    logarithm.
    """
    from .grids import radial_potential  # local import to avoid a cycle

    if radius <= density.support_radius():
        raise ValueError(
            f"radius {radius:g} must lie outside the density support "
            f"(support radius {density.support_radius():g})"
        )
    w = float(kernel.omega(np.asarray(radius)))
    if w == 0.0:
        raise ValueError("omega(radius) = 0; the ratio is undefined there")
    psi = radial_potential(density, kernel, at=np.array([radius]))[0]
    return psi / w


# -- custom kernels and the registry --------------------------------------


def kernel_from_table(path: str, dimension: int = 2, normalize_shift: bool = True) -> Kernel:
    """Kernel from a text table of (r, omega, omega') rows with monotone r.

    Values between rows are linearly interpolated; the profile is shifted
    so omega(1) = 0 unless ``normalize_shift`` is disabled.
    """
    data = np.loadtxt(path, delimiter=",", comments="#")
    if data.ndim != 2 or data.shape[1] != 3:
        raise ValueError("kernel table must have rows of r, omega, omega_prime")
    rr, ww, wp = data[:, 0], data[:, 1], data[:, 2]
    if np.any(np.diff(rr) <= 0):
        raise ValueError("kernel table radii must be strictly increasing")
    shift = float(-np.interp(1.0, rr, ww)) if normalize_shift else 0.0

    def omega(r):
        return np.interp(np.asarray(r, dtype=float), rr, ww) + shift

    def omega_prime(r):
        return np.interp(np.asarray(r, dtype=float), rr, wp)

    return Kernel(
        name=f"custom:{path}",
        dimension=dimension,
        omega=omega,
        omega_prime=omega_prime,
        singularity_class="bounded",
        far_field=FarFieldClass("unclassified"),
        shift=shift,
    )


def get_kernel(name: str) -> Kernel:
    if name == "log2d":
        return log2d()
    if name.startswith("newtonian") and name.endswith("d"):
        return newtonian(int(name[len("newtonian"):-1]))
    if name.startswith("custom:"):
        return kernel_from_table(name[len("custom:"):])
    if name.startswith("regularized:"):
        return regularized_attractive_2d(float(name[len("regularized:"):]))
    raise ValueError(f"unknown kernel {name!r}")
