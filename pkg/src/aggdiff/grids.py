"""Density containers, moments, singular-kernel potentials, level-set slabs.

Two containers: a radial profile with exact shell-measure bookkeeping and
a uniform 2D Cartesian grid of cell averages.  The potential W * rho is
evaluated by zero-padded FFT convolution on 2D grids (with the singular
cell replaced by the analytic cell average of omega) and by exact
piecewise integrals for log/Newtonian kernels on radial grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .intervals import IntervalSet
from .kernels import Kernel, ball_volume, sphere_surface

__all__ = [
    "RadialDensity",
    "Density2D",
    "MomentSet",
    "QuantizedDensity",
    "moments",
    "potential",
    "radial_potential",
    "Conv2D",
    "quantize_levels",
    "reconstruct",
    "rasterize_radial",
]

SUPPORT_THRESHOLD = 1e-14


@dataclass
class RadialDensity:
    """Nonnegative radial profile: values at cell centers (i + 1/2) dr."""

    dr: float
    values: np.ndarray
    dimension: int = 2

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.dr <= 0:
            raise ValueError("dr must be positive")
        if self.values.ndim != 1:
            raise ValueError("radial values must be a 1D array")
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def r(self) -> np.ndarray:
        return (np.arange(self.n) + 0.5) * self.dr

    @property
    def edges(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dr

    def shell_measures(self) -> np.ndarray:
        a = self.edges[:-1]
        b = self.edges[1:]
        d = self.dimension
        if d == 1:
            return 2.0 * (b - a)
        return ball_volume(d) * (b**d - a**d)

    def mass(self) -> float:
        return float(np.sum(self.values * self.shell_measures()))

    def second_moment(self) -> float:
        # exact integral of r^2 over each shell for piecewise-constant values
        a, b = self.edges[:-1], self.edges[1:]
        d = self.dimension
        s = sphere_surface(d) if d > 1 else 2.0
        shell_r2 = s * (b ** (d + 2) - a ** (d + 2)) / (d + 2)
        return float(np.sum(self.values * shell_r2))

    def support_radius(self) -> float:
        vmax = self.values.max() if self.n else 0.0
        if vmax <= 0:
            return 0.0
        idx = np.flatnonzero(self.values > SUPPORT_THRESHOLD * vmax)
        return float(self.edges[idx[-1] + 1]) if idx.size else 0.0

    def is_nonincreasing(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.diff(self.values) <= tol))

    def interp(self, radii: np.ndarray) -> np.ndarray:
        """Linear interpolation of the profile, zero beyond the last cell."""
        return np.interp(radii, self.r, self.values, left=self.values[0] if self.n else 0.0, right=0.0)


@dataclass
class Density2D:
    """Cell-averaged density on a uniform square-cell grid.

    values[j, i] sits at (x0 + (i + 1/2) dx, y0 + (j + 1/2) dx); origin is
    the lower-left corner of the grid.
    """

    dx: float
    origin: tuple[float, float]
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.dx <= 0:
            raise ValueError("dx must be positive")
        if self.values.ndim != 2:
            raise ValueError("2D density needs a 2D value array")
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")

    @property
    def ny(self) -> int:
        return self.values.shape[0]

    @property
    def nx(self) -> int:
        return self.values.shape[1]

    @property
    def cell(self) -> float:
        return self.dx * self.dx

    @property
    def x(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.dx

    def mass(self) -> float:
        return float(self.values.sum() * self.cell)

    def support_area(self, rel_threshold: float = 1e-12) -> float:
        vmax = self.values.max()
        if vmax <= 0:
            return 0.0
        return float(np.count_nonzero(self.values > rel_threshold * vmax) * self.cell)

    def copy_with(self, values: np.ndarray) -> "Density2D":
        return Density2D(self.dx, self.origin, values)


@dataclass(frozen=True)
class MomentSet:
    mass: float
    center: tuple[float, ...]
    m2: float
    log_moment: float


def moments(density: RadialDensity | Density2D) -> MomentSet:
    """Mass, center of mass, second moment and log-moment of a density."""
    if isinstance(density, RadialDensity):
        m = density.mass()
        m2 = density.second_moment()
        r = density.r
        logm = float(np.sum(density.values * np.log1p(r * r) * density.shell_measures()))
        return MomentSet(m, (0.0,) * density.dimension, m2, logm)

    v = density.values
    cell = density.cell
    m = float(v.sum() * cell)
    X, Y = np.meshgrid(density.x, density.y)
    if m > 0:
        cx = float((v * X).sum() * cell / m)
        cy = float((v * Y).sum() * cell / m)
    else:
        cx = cy = 0.0
    r2 = X * X + Y * Y
    # exact cell integral of |x|^2 adds dx^2/6 per unit mass
    m2 = float((v * (r2 + density.dx**2 / 6.0)).sum() * cell)
    logm = float((v * np.log1p(r2)).sum() * cell)
    return MomentSet(m, (cx, cy), m2, logm)


# -- 2D potential by padded FFT convolution --------------------------------


class Conv2D:
    """Reusable zero-padded convolution psi = W * rho on a fixed grid.

    The offset table holds midpoint kernel samples except at the zero
    offset, which carries the analytic cell average of omega (midpoint is
    undefined there for singular kernels).  Padding to twice the grid per
    axis makes the circular transform a linear convolution.

    ``pair_average`` (pure-log kernels only) replaces every entry by the
    average of omega over a pair of cells at that offset, which makes
    (1/2) sum rho (G * rho) dx^2 the exact interaction energy of the
    piecewise-constant density; interaction differences then resolve
    below the midpoint-rule drift.
    """

    def __init__(
        self,
        kernel: Kernel,
        nx: int,
        ny: int,
        dx: float,
        workers: int = 1,
        pair_average: bool = False,
    ):
        if kernel.dimension != 2:
            raise ValueError(f"kernel dimension {kernel.dimension} does not match a 2D grid")
        self.nx, self.ny, self.dx = nx, ny, dx
        self.workers = workers
        px, py = 2 * nx, 2 * ny
        if pair_average:
            if kernel.log_coefficient is None:
                raise ValueError("pair-averaged tables require a pure-log kernel")
            G = kernel.log_coefficient * (_log_pair_table(nx, ny) + math.log(dx))
        else:
            di = np.arange(-(nx - 1), nx)
            dj = np.arange(-(ny - 1), ny)
            R = dx * np.hypot(di[None, :], dj[:, None])
            G = np.empty_like(R)
            nzr = R > 0
            G[nzr] = kernel.omega(R[nzr])
            G[ny - 1, nx - 1] = kernel.cell_average(dx)
        tab = np.zeros((py, px))
        tab[: 2 * ny - 1, : 2 * nx - 1] = G
        self._Ghat = sfft.rfft2(tab, workers=workers)
        self._buf = np.zeros((py, px))

    def apply(self, values: np.ndarray) -> np.ndarray:
        ny, nx = self.ny, self.nx
        self._buf[:ny, :nx] = values
        F = sfft.rfft2(self._buf, workers=self.workers)
        F *= self._Ghat
        out = sfft.irfft2(F, s=self._buf.shape, workers=self.workers)
        return out[ny - 1 : 2 * ny - 1, nx - 1 : 2 * nx - 1] * (self.dx * self.dx)


_LOG_PAIR_CACHE: dict[tuple[int, int], np.ndarray] = {}
_LOG_PAIR_NEAR: dict[tuple[int, int], float] = {}
_NEAR_RANGE = 3


def _log_pair_self() -> float:
    """E[ln|u - v|] for independent uniform points in the unit square.

    Exact reduction: the difference has the product-tent density; the
    radial integrals of r ln(r) polynomials are closed-form and only the
    angular integral is numeric.
    """
    theta, wt = np.polynomial.legendre.leggauss(80)
    theta = (theta + 1.0) * (math.pi / 8.0)
    wt = wt * (math.pi / 8.0)

    def radial(theta_val: float) -> float:
        c, s = math.cos(theta_val), math.sin(theta_val)
        R = 1.0 / c

        def ipow(p: float) -> float:
            # integral of r^p ln r on (0, R]
            return R ** (p + 1) * ((p + 1) * math.log(R) - 1.0) / (p + 1) ** 2

        # (1 - r c)(1 - r s) r ln r = (r - (c + s) r^2 + c s r^3) ln r
        return ipow(1.0) - (c + s) * ipow(2.0) + c * s * ipow(3.0)

    return 8.0 * float(np.sum(wt * np.array([radial(t) for t in theta])))


def _log_pair_near(a: int, b: int) -> float:
    """Tent-weighted average of ln|k + s| for a small integer offset k."""
    if (a, b) == (0, 0):
        return _log_pair_self()
    key = (a, b)
    if key not in _LOG_PAIR_NEAR:
        from scipy.integrate import dblquad

        val, _ = dblquad(
            lambda sy, sx: (1.0 - abs(sx))
            * (1.0 - abs(sy))
            * 0.5
            * math.log((a + sx) ** 2 + (b + sy) ** 2),
            -1.0,
            1.0,
            -1.0,
            1.0,
            epsabs=1e-12,
            epsrel=1e-12,
        )
        _LOG_PAIR_NEAR[key] = val
    return _LOG_PAIR_NEAR[key]


def _log_pair_table(nx: int, ny: int) -> np.ndarray:
    """Dimensionless cell-pair averages of ln r for every grid offset.

    G_exact(offset; dx) = log dx + table[offset]; cached per grid shape.
    """
    key = (nx, ny)
    if key in _LOG_PAIR_CACHE:
        return _LOG_PAIR_CACHE[key]
    di = np.arange(-(nx - 1), nx)
    dj = np.arange(-(ny - 1), ny)
    # tent-weighted Gauss nodes per axis, split at the kink
    u, w = np.polynomial.legendre.leggauss(6)
    right = (u + 1.0) / 2.0
    w_right = w / 2.0 * (1.0 - right)
    nodes = np.concatenate([-right[::-1], right])
    weights = np.concatenate([w_right[::-1], w_right])
    DI = di[None, :]
    DJ = dj[:, None]
    table = np.zeros((dj.size, di.size))
    for sx, wx in zip(nodes, weights):
        for sy, wy in zip(nodes, weights):
            table += (wx * wy) * 0.5 * np.log((DI + sx) ** 2 + (DJ + sy) ** 2)
    for a in range(-_NEAR_RANGE, _NEAR_RANGE + 1):
        for b in range(-_NEAR_RANGE, _NEAR_RANGE + 1):
            table[ny - 1 + b, nx - 1 + a] = _log_pair_near(abs(a), abs(b))
    _LOG_PAIR_CACHE[key] = table
    return table


def potential(density: RadialDensity | Density2D, kernel: Kernel, workers: int = 1) -> np.ndarray:
    """psi = W * rho evaluated at the density's own cell centers."""
    if isinstance(density, RadialDensity):
        return radial_potential(density, kernel)
    conv = Conv2D(kernel, density.nx, density.ny, density.dx, workers=workers)
    return conv.apply(density.values)


def radial_potential(density: RadialDensity, kernel: Kernel, at: np.ndarray | None = None) -> np.ndarray:
    """W * rho for a radial density, exact for log and Newtonian kernels.

    For a pure-log 2D kernel the ring average of omega(|x - y|) over the
    circle |y| = s is omega(max(r, s)), so the convolution reduces to
    prefix/suffix integrals of the piecewise-constant profile.  The
    analogous mean-value identity handles r^(2-d) kernels for d >= 3.
    Other kernels fall back to ring quadrature (cost O(n^2)).
    """
    if kernel.dimension != density.dimension:
        raise ValueError(
            f"kernel dimension {kernel.dimension} does not match density dimension {density.dimension}"
        )
    r_eval = density.r if at is None else np.asarray(at, dtype=float)
    v = density.values
    a, b = density.edges[:-1], density.edges[1:]

    if density.dimension == 2 and kernel.log_coefficient is not None:
        c = kernel.log_coefficient
        # W_in(r) = integral_0^r rho s ds ; T_out(r) = integral_r^inf rho s log s ds
        seg_lin = v * (b * b - a * a) / 2.0
        seg_slog = v * (_t_slog(b) - _t_slog(a))
        pre_lin = np.concatenate([[0.0], np.cumsum(seg_lin)])
        suf_slog = np.concatenate([np.cumsum(seg_slog[::-1])[::-1], [0.0]])
        idx = np.clip(np.searchsorted(density.edges, r_eval, side="right") - 1, 0, density.n - 1)
        inside = r_eval < density.edges[-1]
        rho_at = np.where(inside, v[idx], 0.0)
        a_at = a[idx]
        b_at = np.where(inside, np.minimum(r_eval, b[idx]), r_eval)
        w_in = pre_lin[np.where(inside, idx, density.n)] + rho_at * (b_at * b_at - a_at * a_at) / 2.0
        t_out = np.where(inside, suf_slog[idx + 1] + rho_at * (_t_slog(b[idx]) - _t_slog(b_at)), 0.0)
        return 2.0 * math.pi * c * (np.log(r_eval) * w_in + t_out)

    if density.dimension >= 3 and kernel.power_form is not None:
        cst, p = kernel.power_form  # omega = cst (1 - r^p), p = 2 - d
        d = density.dimension
        s_d = sphere_surface(d)
        seg_pow = v * (b**d - a**d) / d  # integral of rho s^(d-1)
        seg_lin = v * (b * b - a * a) / 2.0
        pre_pow = np.concatenate([[0.0], np.cumsum(seg_pow)])
        suf_lin = np.concatenate([np.cumsum(seg_lin[::-1])[::-1], [0.0]])
        idx = np.clip(np.searchsorted(density.edges, r_eval, side="right") - 1, 0, density.n - 1)
        inside = r_eval < density.edges[-1]
        rho_at = np.where(inside, v[idx], 0.0)
        b_at = np.where(inside, np.minimum(r_eval, b[idx]), r_eval)
        w_pow = pre_pow[np.where(inside, idx, density.n)] + rho_at * (b_at**d - a[idx] ** d) / d
        w_lin = np.where(inside, suf_lin[idx + 1] + rho_at * (b[idx] ** 2 - b_at**2) / 2.0, 0.0)
        mass = float(np.sum(v * density.shell_measures()))
        return cst * (mass - s_d * (r_eval**p * w_pow + w_lin))

    if density.dimension == 2:
        return _radial_ring_quadrature(density, kernel, r_eval)
    if density.dimension == 1:
        return _radial_line_sum(density, kernel, r_eval)
    raise NotImplementedError(
        f"radial potential for d = {density.dimension} requires a log or Newtonian kernel"
    )


def _t_slog(s: np.ndarray) -> np.ndarray:
    """Antiderivative of s log s: s^2 (2 log s - 1) / 4, continuous at 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    out[pos] = s[pos] ** 2 * (2.0 * np.log(s[pos]) - 1.0) / 4.0
    return out


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


def _radial_ring_quadrature(density: RadialDensity, kernel: Kernel, r_eval: np.ndarray) -> np.ndarray:
    # generic 2D kernel: psi(r) = sum_j rho_j m_j * ringavg(r, s_j); the
    # self-ring distance 2 r sin(theta/2) keeps the integrand evaluable,
    # and the integrable log singularity is resolved by the theta map
    # theta = pi u^2 that clusters nodes at 0.
    s_cells = density.r
    m_cells = density.shell_measures()
    u = (_GL_NODES + 1.0) / 2.0
    theta = math.pi * u * u
    wts = math.pi * u * (_GL_WEIGHTS / 2.0) * 2.0  # d(theta) = 2 pi u du
    out = np.empty_like(r_eval)
    for k, r in enumerate(r_eval):
        dist = np.sqrt(
            np.maximum(r * r + s_cells[:, None] ** 2 - 2.0 * r * s_cells[None, :].T * np.cos(theta)[None, :], 0.0)
        )
        vals = kernel.omega(np.maximum(dist, 1e-300))
        ring = (vals * wts[None, :]).sum(axis=1) / math.pi
        out[k] = float(np.sum(density.values * m_cells * ring))
    return out


def _radial_line_sum(density: RadialDensity, kernel: Kernel, r_eval: np.ndarray) -> np.ndarray:
    s = density.r
    w = density.values * (2.0 * density.dr)
    out = np.empty_like(r_eval)
    for k, r in enumerate(r_eval):
        dist_p = np.abs(r - s)
        dist_m = r + s
        vals = 0.5 * (kernel.omega(np.maximum(dist_p, 1e-300)) + kernel.omega(dist_m))
        out[k] = float(np.sum(w * vals))
    return out


# -- superlevel-set quantization -------------------------------------------


@dataclass
class QuantizedDensity:
    """Per-row interval sets for each level slab h_j = (j - 1/2) delta_h.

    ``rows[j_row]`` holds (level_index, IntervalSet) pairs for the levels
    with a nonempty superlevel set in that row; slabs are nested per row.
    The scan axis is 'x' (rows of constant y) or 'y' (columns, transposed).
    """

    delta_h: float
    levels: np.ndarray
    direction: str
    rows: list[list[tuple[int, IntervalSet]]]
    nx: int
    ny: int
    dx: float
    origin: tuple[float, float]

    def slab_measure(self, j_level: int) -> float:
        return sum(
            s.measure() for row in self.rows for (j, s) in row if j == j_level
        )


def quantize_levels(density: Density2D, levels: int, direction: str = "x") -> QuantizedDensity:
    """Extract superlevel-set interval runs {rho > h_j} per grid row."""
    if levels < 1:
        raise ValueError("need at least one level")
    if direction not in ("x", "y"):
        raise ValueError("direction must be 'x' or 'y'")
    vals = density.values if direction == "x" else density.values.T
    vmax = float(vals.max()) if vals.size else 0.0
    delta_h = vmax / levels if vmax > 0 else 1.0
    hs = (np.arange(levels) + 0.5) * delta_h
    axis_origin = density.origin[0] if direction == "x" else density.origin[1]
    dx = density.dx

    rows: list[list[tuple[int, IntervalSet]]] = []
    for row_vals in vals:
        row_max = row_vals.max() if row_vals.size else 0.0
        slabs: list[tuple[int, IntervalSet]] = []
        for j in range(levels):
            h = hs[j]
            if h >= row_max:
                break
            mask = row_vals > h
            idx = np.flatnonzero(np.diff(np.concatenate(([False], mask, [False]))))
            starts, stops = idx[0::2], idx[1::2]
            lefts = axis_origin + starts * dx
            rights = axis_origin + stops * dx
            slabs.append((j, IntervalSet(list(lefts), list(rights))))
        rows.append(slabs)
    return QuantizedDensity(
        delta_h=delta_h,
        levels=hs,
        direction=direction,
        rows=rows,
        nx=density.nx,
        ny=density.ny,
        dx=dx,
        origin=density.origin,
    )


def reconstruct(quantized: QuantizedDensity, refine: int = 1) -> Density2D:
    """Sum delta_h over slabs rasterized with exact cell-overlap fractions.

    ``refine`` rasterizes onto a grid with cells shrunk by that factor:
    slab endpoints are exact reals, and the quantized density is constant
    across each original row, so refinement is pure quadrature resolution
    (rows replicate, the scan axis gains sub-cell detail).
    """
    direction = quantized.direction
    n_scan = (quantized.nx if direction == "x" else quantized.ny) * refine
    n_rows = quantized.ny if direction == "x" else quantized.nx
    axis_origin = quantized.origin[0] if direction == "x" else quantized.origin[1]
    dx = quantized.dx / refine
    out = np.zeros((n_rows, n_scan))
    for j_row, slabs in enumerate(quantized.rows):
        row = out[j_row]
        for _, iset in slabs:
            for a, b in zip(iset.lefts, iset.rights):
                _add_interval(row, a, b, axis_origin, dx, quantized.delta_h)
    if refine > 1:
        out = np.repeat(out, refine, axis=0)
    if direction == "y":
        out = out.T.copy()
    return Density2D(dx, quantized.origin, np.maximum(out, 0.0))


def _add_interval(row: np.ndarray, a: float, b: float, x0: float, dx: float, weight: float) -> None:
    n = row.size
    i_lo = max(int(math.floor((a - x0) / dx)), 0)
    i_hi = min(int(math.ceil((b - x0) / dx)), n)
    if i_hi <= i_lo:
        return
    i = np.arange(i_lo, i_hi)
    left = x0 + i * dx
    frac = (np.minimum(left + dx, b) - np.maximum(left, a)) / dx
    row[i_lo:i_hi] += weight * np.maximum(frac, 0.0)


def rasterize_radial(
    profile: RadialDensity,
    nx: int,
    dx: float,
    center: tuple[float, float] = (0.0, 0.0),
    ny: int | None = None,
) -> Density2D:
    """Sample a radial profile onto a centered square grid.

    The grid spans [-nx dx / 2, nx dx / 2) per axis before the center
    offset; values are linear interpolations of the profile at cell-center
    radii, so monotone profiles stay monotone along rays.
    """
    ny = nx if ny is None else ny
    x0, y0 = -nx * dx / 2.0, -ny * dx / 2.0
    xs = x0 + (np.arange(nx) + 0.5) * dx - center[0]
    ys = y0 + (np.arange(ny) + 0.5) * dx - center[1]
    R = np.hypot(xs[None, :], ys[:, None])
    vals = profile.interp(R)
    return Density2D(dx, (x0, y0), np.maximum(vals, 0.0))
