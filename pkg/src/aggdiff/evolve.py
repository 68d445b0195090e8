"""Conservative explicit finite-volume solver for the aggregation-diffusion
equation, in 2D Cartesian and radial-shell variants, with online checks.

Fluxes are antisymmetric across faces, so mass conservation telescopes to
rounding; the advective flux is upwinded by the face velocity obtained by
differencing the cell-centered potential, which keeps the scheme positive
under the CFL bound and makes pairwise momentum exchange cancel up to the
upwind quadrature bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import Conv2D, Density2D, RadialDensity, moments, radial_potential, rasterize_radial
from .kernels import Kernel, get_kernel, regularized_attractive_2d
from .rearrange import ConcentrationVerdict, less_concentrated, schwarz_rearrangement
from .steady import SteadyProfile, solve_radial_steady

__all__ = [
    "SolverConfig",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "StepError",
    "Simulation2D",
    "SimulationRadial",
    "make_simulation",
    "run",
    "second_moment_residual",
    "concentration_comparison_check",
    "converge_to_steady",
    "ConvergenceReport",
]


class StepError(RuntimeError):
    """CFL breakdown, non-finite state, or an online invariant violation."""

    def __init__(self, message: str, record: "DiagnosticsRecord | None" = None):
        super().__init__(message)
        self.record = record


@dataclass
class SolverConfig:
    m: float = 2.0
    mass: float = 1.0
    kernel: str = "log2d"
    epsilon: float = 0.0
    grid_n: int = 256
    grid_extent: float = 8.0  # 2D box side; the domain is [-L/2, L/2]^2
    grid_rmax: float = 8.0  # radial variant domain
    radial: bool = False
    dt_safety: float = 0.2
    t_end: float = 10.0
    record_every: float = 0.25
    snapshot_every: float = 0.0  # 0 disables snapshot storage
    initial: str = "gaussian"  # gaussian | disk | two_bumps | file
    initial_params: dict = field(default_factory=dict)
    seed: int = 0
    diffusion_only: bool = False  # plumbing flag for self-similar checks
    energy_tol: float = 1e-8  # per-step allowed relative energy increase
    max_growth_factor: float = 4.0  # max rho growth per recording window
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.dt_safety <= 1.0:
            raise ValueError("dt safety factor must lie in (0, 1]")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    com_x: float
    com_y: float
    m2: float
    logm: float
    entropy: float
    interaction: float
    energy: float
    dissipation: float
    rho_max: float
    support_area: float
    int_rho_m: float = 0.0  # accumulated integral of sum rho^m dx dt


@dataclass
class DiagnosticsSeries:
    records: list[DiagnosticsRecord]
    snapshots: list[tuple[float, Density2D | RadialDensity]]
    kernel: str
    m: float
    config: SolverConfig
    logm_growth_rate: float = 0.0
    clamp_events: int = 0
    max_energy_increase_ratio: float = 0.0  # max per-step (dE)/|E|, signed

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def final_density(self):
        return self.snapshots[-1][1] if self.snapshots else None


def _gaussian(X, Y, p):
    sigma = p.get("sigma", 1.0)
    x0, y0 = p.get("x0", 0.0), p.get("y0", 0.0)
    return np.exp(-(((X - x0) ** 2 + (Y - y0) ** 2) / (2.0 * sigma**2)))


def _disk(X, Y, p):
    radius = p.get("radius", 1.0)
    x0, y0 = p.get("x0", 0.0), p.get("y0", 0.0)
    return np.where((X - x0) ** 2 + (Y - y0) ** 2 < radius**2, 1.0, 0.0)


def _two_bumps(X, Y, p):
    sep = p.get("separation", 3.0)
    sigma = p.get("sigma", 0.5)
    x0, y0 = p.get("x0", 0.0), p.get("y0", 0.0)
    left = np.exp(-(((X - x0 + sep / 2) ** 2 + (Y - y0) ** 2) / (2.0 * sigma**2)))
    right = np.exp(-(((X - x0 - sep / 2) ** 2 + (Y - y0) ** 2) / (2.0 * sigma**2)))
    return left + right


def initial_density_2d(config: SolverConfig) -> Density2D:
    n = config.grid_n
    dx = config.grid_extent / n
    x0 = -config.grid_extent / 2.0
    if config.initial == "file":
        from .io import read_density

        rho = read_density(config.initial_params["path"])
        if not isinstance(rho, Density2D):
            raise ValueError("2D run initialized from a non-2D density file")
        return rho
    xs = x0 + (np.arange(n) + 0.5) * dx
    X, Y = np.meshgrid(xs, xs)
    builders = {"gaussian": _gaussian, "disk": _disk, "two_bumps": _two_bumps}
    if config.initial not in builders:
        raise ValueError(f"unknown initial condition {config.initial!r}")
    vals = builders[config.initial](X, Y, config.initial_params)
    total = vals.sum() * dx * dx
    if total <= 0:
        raise ValueError("initial condition has zero mass")
    return Density2D(dx, (x0, x0), vals * (config.mass / total))


def initial_density_radial(config: SolverConfig) -> RadialDensity:
    n = config.grid_n
    dr = config.grid_rmax / n
    r = (np.arange(n) + 0.5) * dr
    if config.initial == "file":
        from .io import read_density

        rho = read_density(config.initial_params["path"])
        if not isinstance(rho, RadialDensity):
            raise ValueError("radial run initialized from a non-radial density file")
        return rho
    p = config.initial_params
    if config.initial == "gaussian":
        vals = np.exp(-(r**2) / (2.0 * p.get("sigma", 1.0) ** 2))
    elif config.initial == "disk":
        vals = np.where(r < p.get("radius", 1.0), 1.0, 0.0)
    else:
        raise ValueError(f"radial runs support gaussian/disk/file, not {config.initial!r}")
    rho = RadialDensity(dr, vals)
    return RadialDensity(dr, vals * (config.mass / rho.mass()))


def _resolve_kernel(config: SolverConfig) -> Kernel:
    if config.epsilon > 0:
        if config.kernel != "log2d":
            raise ValueError("the regularized path is defined for the 2D log kernel")
        return regularized_attractive_2d(config.epsilon)
    return get_kernel(config.kernel)


class _SimulationBase:
    config: SolverConfig
    kernel: Kernel
    t: float
    steps: int
    clamp_events: int

    def values(self) -> np.ndarray:
        raise NotImplementedError

    def density(self):
        raise NotImplementedError

    def _psi(self) -> np.ndarray:
        raise NotImplementedError

    def _advance(self, psi: np.ndarray, dt_cap: float) -> float:
        raise NotImplementedError

    def _entropy_sum(self) -> float:
        raise NotImplementedError

    def step(self, dt_cap: float = math.inf, psi: np.ndarray | None = None) -> float:
        """One explicit FV step under the CFL bound; returns the dt taken."""
        if psi is None:
            psi = self._psi()
        dt = self._advance(psi, dt_cap)
        self._clamp_negative()
        self.t += dt
        self.steps += 1
        return dt

    def _clamp_negative(self) -> None:
        vals = self.values()
        mn = float(vals.min())
        if mn >= 0.0:
            return
        vmax = float(vals.max())
        if mn < -1e-15 * max(vmax, 1.0):
            raise StepError(f"positivity lost (min = {mn:.3e}) at t = {self.t:.6g}")
        # mass-neutral redistribution: zero the rounding negatives and
        # rescale the positive cells
        cells = self._cell_measures()
        before = float(np.sum(vals * cells))
        np.maximum(vals, 0.0, out=vals)
        after = float(np.sum(vals * cells))
        if after > 0:
            vals *= before / after
        self.clamp_events += 1

    def _cell_measures(self) -> np.ndarray:
        raise NotImplementedError


class Simulation2D(_SimulationBase):
    def __init__(self, config: SolverConfig, rho0: Density2D | None = None):
        self.config = config
        self.kernel = _resolve_kernel(config)
        rho = rho0 if rho0 is not None else initial_density_2d(config)
        self.dx = rho.dx
        self.origin = rho.origin
        self.rho = rho.values.copy()
        self.conv = Conv2D(self.kernel, rho.nx, rho.ny, rho.dx, workers=config.workers)
        self.t = 0.0
        self.steps = 0
        self.clamp_events = 0
        self._cells = np.full(self.rho.shape, self.dx * self.dx)

    def values(self) -> np.ndarray:
        return self.rho

    def density(self) -> Density2D:
        return Density2D(self.dx, self.origin, self.rho.copy())

    def _dx2(self) -> float:
        return self.dx * self.dx

    def _cell_measures(self) -> np.ndarray:
        return self._cells

    def _psi(self) -> np.ndarray:
        if self.config.diffusion_only:
            return np.zeros_like(self.rho)
        return self.conv.apply(self.rho)

    def _advance(self, psi: np.ndarray, dt_cap: float) -> float:
        rho, dx = self.rho, self.dx
        m, eps = self.config.m, self.config.epsilon
        if m == 2.0:
            mobility_max = 2.0 * float(rho.max()) + eps
            g = rho * rho
        else:
            mobility_max = float((m * rho ** (m - 1.0)).max()) + eps
            g = rho**m
        if eps:
            g = g + eps * rho

        # face velocities from the cell-centered potential
        ux = psi[:, :-1] - psi[:, 1:]
        ux /= dx
        uy = psi[:-1, :] - psi[1:, :]
        uy /= dx

        denom = 4.0 * mobility_max + dx * (float(np.abs(ux).max(initial=0.0)) + float(np.abs(uy).max(initial=0.0)))
        dt = self.config.dt_safety * dx * dx / denom if denom > 0 else dt_cap
        dt = min(dt, dt_cap)
        if not dt > 0 or not math.isfinite(dt):
            raise StepError(f"CFL produced dt = {dt} at t = {self.t:.6g}")
        lam = dt / dx

        fx = -(g[:, 1:] - g[:, :-1]) / dx + ux * np.where(ux >= 0.0, rho[:, :-1], rho[:, 1:])
        rho[:, :-1] -= lam * fx
        rho[:, 1:] += lam * fx

        fy = -(g[1:, :] - g[:-1, :]) / dx + uy * np.where(uy >= 0.0, rho[:-1, :], rho[1:, :])
        rho[:-1, :] -= lam * fy
        rho[1:, :] += lam * fy
        return dt

    def _entropy_sum(self) -> float:
        return float(np.sum(self.rho ** self.config.m)) * self.dx * self.dx

    def diagnostics(self, psi: np.ndarray | None = None, int_rho_m: float = 0.0) -> DiagnosticsRecord:
        dens = Density2D(self.dx, self.origin, self.rho)
        ms = moments(dens)
        m = self.config.m
        if psi is None:
            psi = self._psi()
        cell = self.dx * self.dx
        entropy = float(np.sum(self.rho**m)) * cell / (m - 1.0)
        interaction = 0.5 * float(np.sum(self.rho * psi)) * cell
        from .energy import dissipation as _dissipation

        diss = _dissipation(dens, self.kernel, m, psi=psi)
        return DiagnosticsRecord(
            t=self.t,
            mass=ms.mass,
            com_x=ms.center[0],
            com_y=ms.center[1],
            m2=ms.m2,
            logm=ms.log_moment,
            entropy=entropy,
            interaction=interaction,
            energy=entropy + interaction,
            dissipation=diss,
            rho_max=float(self.rho.max()),
            support_area=dens.support_area(),
            int_rho_m=int_rho_m,
        )


class SimulationRadial(_SimulationBase):
    def __init__(self, config: SolverConfig, rho0: RadialDensity | None = None):
        if config.epsilon > 0:
            raise ValueError("the radial variant runs the degenerate equation (epsilon = 0)")
        self.config = config
        self.kernel = _resolve_kernel(config)
        rho = rho0 if rho0 is not None else initial_density_radial(config)
        self.dr = rho.dr
        self.rho = rho.values.copy()
        n = rho.n
        self.faces = np.arange(n + 1) * self.dr  # R_i, face radii
        self.shells = rho.shell_measures()
        self.t = 0.0
        self.steps = 0
        self.clamp_events = 0

    def values(self) -> np.ndarray:
        return self.rho

    def density(self) -> RadialDensity:
        return RadialDensity(self.dr, self.rho.copy())

    def _dx2(self) -> float:
        return self.dr * self.dr

    def _cell_measures(self) -> np.ndarray:
        return self.shells

    def _psi(self) -> np.ndarray:
        if self.config.diffusion_only:
            return np.zeros_like(self.rho)
        return radial_potential(RadialDensity(self.dr, self.rho), self.kernel)

    def _advance(self, psi: np.ndarray, dt_cap: float) -> float:
        rho, dr = self.rho, self.dr
        m = self.config.m
        g = rho**m
        dg = (g[1:] - g[:-1]) / dr
        dpsi = (psi[1:] - psi[:-1]) / dr
        denom = 4.0 * float((m * rho ** (m - 1.0)).max()) + dr * float(np.abs(dpsi).max(initial=0.0))
        dt = self.config.dt_safety * dr * dr / denom if denom > 0 else dt_cap
        dt = min(dt, dt_cap)
        if not dt > 0 or not math.isfinite(dt):
            raise StepError(f"CFL produced dt = {dt} at t = {self.t:.6g}")

        up = np.where(-dpsi >= 0.0, rho[:-1], rho[1:])  # outward velocity -dpsi
        flux = self.faces[1:-1] * (dg + up * dpsi)  # R_i G_i at interior faces
        # d(rho_i)/dt = 2 pi (R_{i+1} G_{i+1} - R_i G_i) / m_i; the center
        # face carries R_0 = 0 and the outer boundary face carries no flux
        two_pi_dt = 2.0 * math.pi * dt
        rho[:-1] += two_pi_dt * flux / self.shells[:-1]
        rho[1:] -= two_pi_dt * flux / self.shells[1:]
        return dt

    def _entropy_sum(self) -> float:
        return float(np.sum(self.rho ** self.config.m * self.shells))

    def diagnostics(self, psi: np.ndarray | None = None, int_rho_m: float = 0.0) -> DiagnosticsRecord:
        dens = RadialDensity(self.dr, self.rho)
        ms = moments(dens)
        m = self.config.m
        if psi is None:
            psi = self._psi()
        entropy = float(np.sum(self.rho**m * self.shells)) / (m - 1.0)
        interaction = 0.5 * float(np.sum(self.rho * psi * self.shells))
        from .energy import dissipation as _dissipation

        diss = _dissipation(dens, self.kernel, m, psi=psi)
        vmax = float(self.rho.max())
        support = float(np.sum(self.shells[self.rho > 1e-12 * max(vmax, 1e-300)]))
        return DiagnosticsRecord(
            t=self.t,
            mass=ms.mass,
            com_x=0.0,
            com_y=0.0,
            m2=ms.m2,
            logm=ms.log_moment,
            entropy=entropy,
            interaction=interaction,
            energy=entropy + interaction,
            dissipation=diss,
            rho_max=vmax,
            support_area=support,
            int_rho_m=int_rho_m,
        )


def make_simulation(config: SolverConfig, rho0=None) -> _SimulationBase:
    if config.radial:
        return SimulationRadial(config, rho0)
    return Simulation2D(config, rho0)


def run(
    config: SolverConfig,
    rho0=None,
    observer=None,
) -> DiagnosticsSeries:
    """Integrate to t_end with online invariant checks.

    Enforced per accepted step: mass conservation to 1e-10 relative,
    energy non-increase within config.energy_tol * |E|, bounded growth of
    max(rho) per recording window, and positivity.  Any violation aborts
    with the offending record attached to the raised StepError.
    """
    sim = make_simulation(config, rho0)
    records: list[DiagnosticsRecord] = []
    snapshots: list[tuple[float, object]] = []

    mass0 = float(np.sum(sim.values() * sim._cell_measures()))
    prev_energy = math.inf
    worst_energy_ratio = -math.inf
    int_rho_m = 0.0
    next_record = 0.0
    next_snapshot = 0.0 if config.snapshot_every > 0 else math.inf
    window_rho_max = float(sim.values().max())

    while True:
        psi = sim._psi()
        cell = sim._cell_measures()
        mass = float(np.sum(sim.values() * cell))
        if abs(mass - mass0) > 1e-10 * max(mass0, 1e-300):
            rec = sim.diagnostics(psi=psi, int_rho_m=int_rho_m)
            raise StepError(f"mass drift {mass - mass0:.3e} at t = {sim.t:.6g}", rec)
        m = config.m
        entropy = float(np.sum(sim.values() ** m * cell)) / (m - 1.0)
        interaction = 0.5 * float(np.sum(sim.values() * psi * cell))
        energy = entropy + interaction
        # tolerance scales with the energy parts: S and I can cancel in E,
        # and the difference of two O(1) sums cannot be monotone beyond
        # their own rounding floor
        e_scale = max(abs(prev_energy), abs(entropy) + abs(interaction), 1e-300)
        if energy > prev_energy + config.energy_tol * e_scale:
            rec = sim.diagnostics(psi=psi, int_rho_m=int_rho_m)
            raise StepError(
                f"energy increased by {energy - prev_energy:.3e} at t = {sim.t:.6g}", rec
            )
        if math.isfinite(prev_energy):
            ratio = (energy - prev_energy) / max(abs(prev_energy), 1e-300)
            if ratio > worst_energy_ratio:
                worst_energy_ratio = ratio
        prev_energy = energy

        if sim.t >= next_record or sim.t >= config.t_end:
            rec = sim.diagnostics(psi=psi, int_rho_m=int_rho_m)
            records.append(rec)
            rho_max = rec.rho_max
            if rho_max > config.max_growth_factor * max(window_rho_max, 1e-300):
                raise StepError(
                    f"max(rho) grew by more than x{config.max_growth_factor} in one window", rec
                )
            window_rho_max = rho_max
            next_record = sim.t + config.record_every
            if observer is not None:
                observer(sim, rec)
        if sim.t >= next_snapshot:
            snapshots.append((sim.t, sim.density()))
            next_snapshot = sim.t + config.snapshot_every

        if sim.t >= config.t_end:
            break
        entropy_now = (m - 1.0) * entropy  # sum rho^m, reusing the check above
        dt = sim.step(dt_cap=config.t_end - sim.t, psi=psi)
        # trapezoid accumulation of integral of sum rho^m over time
        entropy_next = sim._entropy_sum()
        int_rho_m += 0.5 * dt * (entropy_now + entropy_next)

    if config.snapshot_every > 0 and (not snapshots or snapshots[-1][0] < sim.t):
        snapshots.append((sim.t, sim.density()))

    series = DiagnosticsSeries(
        records=records,
        snapshots=snapshots,
        kernel=config.kernel if config.epsilon == 0 else f"regularized:{config.epsilon:g}",
        m=config.m,
        config=config,
        clamp_events=sim.clamp_events,
        max_energy_increase_ratio=(worst_energy_ratio if math.isfinite(worst_energy_ratio) else 0.0),
    )
    ts = series.column("t")
    ns = series.column("logm")
    pos = ts > 0
    if np.any(pos):
        series.logm_growth_rate = float(np.max((ns[pos] - ns[0]) / ts[pos]))
    return series


def second_moment_residual(series: DiagnosticsSeries, m: float, mass: float) -> np.ndarray:
    """Residual of the second-moment law specific to the 2D log kernel.

    residual(t) = M2(t) - M2(0) - 4 int_0^t sum(rho^m) dt' + t M^2 / (2 pi),
    with the time integral accumulated by trapezoid at step resolution.
    """
    if series.kernel != "log2d":
        raise ValueError("the second-moment identity is specific to the 2D log kernel")
    ts = series.column("t")
    m2 = series.column("m2")
    acc = series.column("int_rho_m")
    return m2 - m2[0] - 4.0 * acc + ts * mass**2 / (2.0 * math.pi)


def concentration_comparison_check(
    run_a: DiagnosticsSeries,
    run_b: DiagnosticsSeries,
    mode: str = "prop222",
    tol_cells: float = 1.0,
) -> list[tuple[float, ConcentrationVerdict]]:
    """Mass-concentration comparison along two runs at shared snapshots.

    prop111: both runs radial with rho_a(0) < rho_b(0); the order must be
    preserved.  prop222: run_b radial started from the rearranged initial
    data of the 2D run_a; rho_a^#(t) < rho_b(t) must hold.  Violations are
    measured against a one-cell mass tolerance.
    """
    if mode not in ("prop111", "prop222"):
        raise ValueError(f"unknown comparison mode {mode!r}")
    if not run_a.snapshots or not run_b.snapshots:
        raise ValueError("both runs need stored snapshots")
    results = []
    for (ta, rho_a), (tb, rho_b) in zip(run_a.snapshots, run_b.snapshots):
        # adaptive stepping overshoots the snapshot cadence by at most one dt
        if abs(ta - tb) > 1e-2 * max(1.0, abs(ta)):
            raise ValueError(f"snapshot times diverge: {ta} vs {tb}")
        if not isinstance(rho_b, RadialDensity):
            raise ValueError("run_b must be radial")
        if mode == "prop111":
            if not isinstance(rho_a, RadialDensity):
                raise ValueError("prop111 compares two radial runs")
            f = schwarz_rearrangement(rho_a, dr=rho_b.dr, n=rho_b.n)
        else:
            f = schwarz_rearrangement(rho_a, dr=rho_b.dr, n=rho_b.n)
        g = schwarz_rearrangement(rho_b, dr=rho_b.dr, n=rho_b.n)
        cell_mass = float(np.max(g.values * g.shell_measures()))
        verdict = less_concentrated(f, g, tol=1.0)  # raw gap; threshold below
        ok = verdict.worst_violation <= tol_cells * cell_mass
        results.append((ta, ConcentrationVerdict(ok, verdict.worst_radius, verdict.worst_violation)))
    return results


@dataclass
class ConvergenceReport:
    converged: bool
    times: np.ndarray
    distances: np.ndarray
    final_distance: float
    target: float
    steady: SteadyProfile
    center: tuple[float, float]
    m2_bound_ok: bool
    series: DiagnosticsSeries


def converge_to_steady(
    config: SolverConfig,
    target: float = 1e-2,
    steady_n: int = 4096,
    steady_rmax: float | None = None,
) -> ConvergenceReport:
    """Drive a 2D log-kernel run toward the translated steady profile.

    The reference is the radial steady state with the run's mass,
    translated to the initial center of mass; the L1 distance is tracked
    at every recording time.  The second moment must stay below
    M2(0) + M2[steady] throughout (uniform confinement bound).
    """
    if config.kernel != "log2d" or config.radial or config.epsilon > 0:
        raise ValueError("long-time convergence driver targets the 2D log kernel")
    steady = solve_radial_steady(
        config.m, config.mass, get_kernel("log2d"), n=steady_n, rmax=steady_rmax or config.grid_extent
    )
    rho0 = initial_density_2d(config)
    ms0 = moments(rho0)
    center = ms0.center
    reference = rasterize_radial(steady.density, nx=rho0.nx, dx=rho0.dx, center=center, ny=rho0.ny)
    ref_vals = reference.values
    cell = rho0.cell

    times: list[float] = []
    distances: list[float] = []
    m2_limit = ms0.m2 + steady.density.second_moment() + 1e-9 * max(1.0, ms0.m2)
    m2_ok = True

    def observer(sim, rec):
        nonlocal m2_ok
        dist = float(np.abs(sim.values() - ref_vals).sum() * cell)
        times.append(rec.t)
        distances.append(dist)
        if rec.m2 > m2_limit:
            m2_ok = False

    series = run(config, rho0=rho0, observer=observer)
    final = distances[-1] if distances else math.inf
    return ConvergenceReport(
        converged=bool(final <= target),
        times=np.array(times),
        distances=np.array(distances),
        final_distance=final,
        target=target,
        steady=steady,
        center=center,
        m2_bound_ok=m2_ok,
        series=series,
    )
