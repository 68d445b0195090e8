"""Radial steady states from the Euler-Lagrange relation, plus scaling laws.

A steady profile solves (m/(m-1)) rho^(m-1) = (D - W * rho)_+ with D the
multiplier of the mass constraint.  The solver runs a damped fixed-point
iteration in rho; at every outer step D is pinned by bisection on the
strictly monotone map D -> mass of the Euler-Lagrange update (the paper-side
definition of D involves an auxiliary functional, but the mass constraint
determines it uniquely).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import RadialDensity, radial_potential
from .kernels import Kernel, log2d

__all__ = [
    "SteadyProfile",
    "SolverSettings",
    "ExponentTrace",
    "SteadySolveError",
    "solve_radial_steady",
    "rescale_steady",
    "exponent_iteration",
    "verify_uniqueness_scaling",
    "radial_l1_distance",
]


class SteadySolveError(RuntimeError):
    def __init__(self, message: str, residual_history: list[float] | None = None):
        super().__init__(message)
        self.residual_history = residual_history or []


@dataclass
class SolverSettings:
    damping: float = 0.5
    tol_mass: float = 1e-10
    tol_el: float = 1e-8
    max_iter: int = 5000
    initial: str = "disk"  # disk | gaussian


@dataclass
class SteadyProfile:
    density: RadialDensity
    multiplier: float
    support_radius: float
    mass: float
    m: float
    residual: float
    kernel_name: str
    iterations: int = 0

    def height(self) -> float:
        return float(self.density.values.max())


def _initial_guess(kind: str, mass: float, n: int, dr: float) -> np.ndarray:
    r = (np.arange(n) + 0.5) * dr
    if kind == "disk":
        vals = np.where(r < 1.0, 1.0, 0.0)
    elif kind == "gaussian":
        vals = np.exp(-r * r)
    else:
        raise ValueError(f"unknown initial guess {kind!r}")
    shell = RadialDensity(dr, vals).shell_measures()
    return vals * (mass / float(np.sum(vals * shell)))


def _multiplier_for_mass(psi: np.ndarray, shell: np.ndarray, m: float, mass: float, tol: float) -> float:
    """Bisection on D -> mass[((m-1)/m (D - psi))_+ ^ (1/(m-1))], strictly increasing."""
    expo = 1.0 / (m - 1.0)
    coef = (m - 1.0) / m

    def mass_of(D: float) -> float:
        u = coef * (D - psi)
        np.maximum(u, 0.0, out=u)
        return float(np.sum(u**expo * shell))

    lo = float(psi.min())
    hi = lo + 1.0
    while mass_of(hi) < mass:
        hi = lo + 2.0 * (hi - lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mass_of(mid) < mass:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, abs(hi)) or abs(mass_of(hi) - mass) <= tol * mass:
            break
    return hi


def solve_radial_steady(
    m: float,
    mass: float,
    kernel: Kernel | None = None,
    n: int = 2048,
    rmax: float = 8.0,
    settings: SolverSettings | None = None,
) -> SteadyProfile:
    """Damped fixed-point solve of the Euler-Lagrange relation.

    Raises SteadySolveError when the support reaches rmax (domain too
    small) or when the Euler-Lagrange residual fails to reach tolerance
    within the iteration budget.
    """
    if m <= 1:
        raise ValueError("diffusion exponent must exceed 1")
    if mass <= 0:
        raise ValueError("mass must be positive")
    kernel = kernel if kernel is not None else log2d()
    settings = settings or SolverSettings()
    dr = rmax / n
    rho = RadialDensity(dr, _initial_guess(settings.initial, mass, n, dr), dimension=kernel.dimension)
    shell = rho.shell_measures()
    theta = settings.damping
    expo = 1.0 / (m - 1.0)
    coef = (m - 1.0) / m

    history: list[float] = []
    multiplier = 0.0
    for it in range(settings.max_iter):
        psi = radial_potential(rho, kernel)
        multiplier = _multiplier_for_mass(psi, shell, m, mass, settings.tol_mass)
        update = coef * (multiplier - psi)
        np.maximum(update, 0.0, out=update)
        update **= expo
        new_vals = (1.0 - theta) * rho.values + theta * update
        # keep the iterate on the mass shell (bisection tolerance would
        # otherwise accumulate over thousands of iterations)
        total = float(np.sum(new_vals * shell))
        new_vals *= mass / total
        rho = RadialDensity(dr, new_vals, dimension=kernel.dimension)

        support = rho.values > SUPPORT_CUT * rho.values.max()
        res = float(
            np.max(np.abs((m / (m - 1.0)) * rho.values[support] ** (m - 1.0) + psi[support] - multiplier))
        )
        history.append(res)
        if res <= settings.tol_el:
            # domain check is a posteriori: transient iterates may spread
            # wide while the potential well is still shallow
            if support[-2:].any():
                raise SteadySolveError(
                    f"steady support reached rmax = {rmax:g}; enlarge the domain", history
                )
            break
    else:
        raise SteadySolveError(
            f"no convergence in {settings.max_iter} iterations "
            f"(last residual {history[-1]:.3e})",
            history,
        )

    profile = SteadyProfile(
        density=rho,
        multiplier=multiplier,
        support_radius=_support_edge(rho),
        mass=rho.mass(),
        m=m,
        residual=history[-1],
        kernel_name=kernel.name,
        iterations=it + 1,
    )
    return profile


SUPPORT_CUT = 1e-14


def _support_edge(rho: RadialDensity) -> float:
    """Outer edge of the largest superlevel component containing the origin."""
    vmax = rho.values.max()
    if vmax <= 0:
        return 0.0
    alive = rho.values > SUPPORT_CUT * vmax
    edge = 0
    for i, flag in enumerate(alive):
        if not flag:
            break
        edge = i + 1
    return float(edge * rho.dr)


def rescale_steady(profile: SteadyProfile, new_mass: float) -> SteadyProfile:
    """Closed-form mass rescaling of a 2D steady profile.

    rho_M(x) = s^(1/(m-1)) rho(s^(-(m-2)/(2(m-1))) x) with s the mass
    ratio; valid for the logarithmic kernel in two dimensions.
    """
    if profile.density.dimension != 2:
        raise ValueError("the scaling law exponents are specific to d = 2")
    if new_mass <= 0:
        raise ValueError("mass must be positive")
    m = profile.m
    s = new_mass / profile.mass
    height_factor = s ** (1.0 / (m - 1.0))
    length_factor = s ** ((m - 2.0) / (2.0 * (m - 1.0)))

    old = profile.density
    n_new = max(int(math.ceil((profile.support_radius * length_factor * 1.1) / old.dr)) + 4, 8)
    r_new = (np.arange(n_new) + 0.5) * old.dr
    vals = height_factor * old.interp(r_new / length_factor)
    dens = RadialDensity(old.dr, np.maximum(vals, 0.0), dimension=2)
    return SteadyProfile(
        density=dens,
        multiplier=s * profile.multiplier + _log_kernel_scaling_offset(profile, s, length_factor),
        support_radius=profile.support_radius * length_factor,
        mass=dens.mass(),
        m=m,
        residual=profile.residual,
        kernel_name=profile.kernel_name,
        iterations=profile.iterations,
    )


def _log_kernel_scaling_offset(profile: SteadyProfile, s: float, length_factor: float) -> float:
    # For omega = (1/2pi) log r the potential of the rescaled profile picks
    # up an additive s * M_old * log(length_factor) / (2 pi).
    return s * profile.mass * math.log(length_factor) / (2.0 * math.pi)


@dataclass
class ExponentTrace:
    m: float
    d: int
    case: str  # "A" (d <= 2), "B" (m > d/2), "C" (iteration ran)
    p_start: float | None = None
    iterates: list[float] = field(default_factory=list)
    steps_to_positive: int | None = None
    fixed_point: float | None = None
    logarithmic_hit: bool = False


def exponent_iteration(m: float, d: int) -> ExponentTrace:
    """Trace of the tail-exponent bootstrap g(p) = (p + 2)/(m - 1).

    Starting from p = -d/m, each pass through the Euler-Lagrange relation
    upgrades a bound rho <= C (1 + r^p) to the exponent g(p); hitting
    p = -2 exactly lands in the logarithmic case and costs one extra step
    from p = -1.  Outside the regime d >= 3, 2 - 2/d < m <= d/2 the trace
    is trivial (case A or B).
    """
    if m <= 2.0 - 2.0 / d:
        raise ValueError(f"m = {m} is outside the diffusion-dominated regime m > 2 - 2/d")
    fixed_point = 2.0 / (m - 2.0) if m != 2.0 else None
    if d <= 2:
        return ExponentTrace(m, d, case="A", fixed_point=fixed_point)
    if m > d / 2.0:
        return ExponentTrace(m, d, case="B", fixed_point=fixed_point)

    p = -d / m
    trace = ExponentTrace(m, d, case="C", p_start=p, iterates=[p], fixed_point=fixed_point)
    for step in range(1, 10000):
        if abs(p + 2.0) < 1e-12:
            trace.logarithmic_hit = True
            p = -1.0  # |log r|^(1/(m-1)) <= r^(-1) near the origin
        p = (p + 2.0) / (m - 1.0)
        trace.iterates.append(p)
        if p > 0:
            trace.steps_to_positive = step
            return trace
    raise RuntimeError("exponent iteration failed to reach a positive power")


def radial_l1_distance(a: RadialDensity, b: RadialDensity) -> float:
    """L1 distance of two radial profiles, resampling onto the finer grid."""
    if a.dimension != b.dimension:
        raise ValueError("dimension mismatch")
    fine, other = (a, b) if a.dr <= b.dr else (b, a)
    n = max(fine.n, int(math.ceil(other.n * other.dr / fine.dr)) + 1)
    r = (np.arange(n) + 0.5) * fine.dr
    probe = RadialDensity(fine.dr, np.abs(
        np.interp(r, fine.r, fine.values, right=0.0) - np.interp(r, other.r, other.values, right=0.0)
    ), dimension=a.dimension)
    return probe.mass()


@dataclass
class UniquenessReport:
    masses: list[float]
    initialization_distances: dict[float, float]
    rescale_distances: dict[float, float]
    support_radii: dict[float, float]
    support_ratio_errors: dict[float, float]

    def max_distance(self) -> float:
        vals = list(self.initialization_distances.values()) + list(self.rescale_distances.values())
        return max(vals) if vals else 0.0


def verify_uniqueness_scaling(
    m: float,
    masses: list[float],
    kernel: Kernel | None = None,
    n: int = 2048,
    rmax: float = 8.0,
    settings: SolverSettings | None = None,
) -> UniquenessReport:
    """Uniqueness evidence: independent solves agree and obey the scaling law.

    Each mass is solved from both initial guesses (indicator and
    gaussian); profiles per mass must coincide in L1, and solves across
    masses must match the closed-form rescaling of the first mass.
    """
    if len(masses) < 1:
        raise ValueError("need at least one mass")
    kernel = kernel if kernel is not None else log2d()
    base_settings = settings or SolverSettings()

    init_dist: dict[float, float] = {}
    rescale_dist: dict[float, float] = {}
    radii: dict[float, float] = {}
    ratio_err: dict[float, float] = {}
    solved: dict[float, SteadyProfile] = {}
    for mass in masses:
        profs = []
        for guess in ("disk", "gaussian"):
            s = SolverSettings(
                damping=base_settings.damping,
                tol_mass=base_settings.tol_mass,
                tol_el=base_settings.tol_el,
                max_iter=base_settings.max_iter,
                initial=guess,
            )
            profs.append(solve_radial_steady(m, mass, kernel, n=n, rmax=rmax, settings=s))
        init_dist[mass] = radial_l1_distance(profs[0].density, profs[1].density)
        solved[mass] = profs[0]
        radii[mass] = profs[0].support_radius

    ref_mass = masses[0]
    for mass in masses[1:]:
        scaled = rescale_steady(solved[ref_mass], mass)
        rescale_dist[mass] = radial_l1_distance(scaled.density, solved[mass].density)
        expected_ratio = (mass / ref_mass) ** ((m - 2.0) / (2.0 * (m - 1.0)))
        actual_ratio = radii[mass] / radii[ref_mass]
        ratio_err[mass] = abs(actual_ratio / expected_ratio - 1.0)

    return UniquenessReport(list(masses), init_dist, rescale_dist, radii, ratio_err)
