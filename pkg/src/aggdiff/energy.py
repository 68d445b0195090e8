"""Free energy E = S + I, the variational field h, and the dissipation D."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import Density2D, RadialDensity, potential
from .kernels import Kernel

__all__ = ["EnergyBreakdown", "free_energy", "h_field", "dissipation"]

VACUUM_RELATIVE = 1e-12  # cells below this fraction of max(rho) are vacuum


@dataclass(frozen=True)
class EnergyBreakdown:
    """Entropy part, interaction part, their sum, and the kernel-shift bookkeeping.

    ``shift_energy`` = shift * M^2 / 2 is the constant the omega(1) = 0
    normalization added to the interaction energy; subtract it to compare
    energies across kernels normalized with different shifts.
    """

    entropy: float
    interaction: float
    total: float
    kernel_shift: float = 0.0
    shift_energy: float = 0.0

    def unshifted_total(self) -> float:
        return self.total - self.shift_energy


def _cells(density: Density2D | RadialDensity) -> np.ndarray:
    if isinstance(density, RadialDensity):
        return density.shell_measures()
    return np.full(density.values.shape, density.cell)


def free_energy(
    density: Density2D | RadialDensity,
    kernel: Kernel,
    m: float,
    psi: np.ndarray | None = None,
) -> EnergyBreakdown:
    """E[rho] = (1/(m-1)) sum rho^m + (1/2) sum rho (W * rho).

    ``psi`` may pass a precomputed potential (one convolution per
    evolution step serves both the flux and the diagnostics).
    """
    if m <= 1:
        raise ValueError(f"entropy exponent must exceed 1, got m = {m}")
    cells = _cells(density)
    v = density.values
    s = float(np.sum(v**m * cells)) / (m - 1.0)
    if psi is None:
        psi = potential(density, kernel)
    inter = 0.5 * float(np.sum(v * psi * cells))
    mass = float(np.sum(v * cells))
    shift_energy = 0.5 * kernel.shift * mass * mass
    return EnergyBreakdown(s, inter, s + inter, kernel.shift, shift_energy)


def h_field(
    density: Density2D | RadialDensity,
    kernel: Kernel,
    m: float,
    psi: np.ndarray | None = None,
) -> np.ndarray:
    """First variation of E: (m/(m-1)) rho^(m-1) + W * rho.

    Attractive kernels enter with +W * rho; for the Keller-Segel form
    W = -N this is the usual (m/(m-1)) rho^(m-1) - N * rho.
    """
    if m <= 1:
        raise ValueError(f"entropy exponent must exceed 1, got m = {m}")
    if psi is None:
        psi = potential(density, kernel)
    return (m / (m - 1.0)) * density.values ** (m - 1.0) + psi


def dissipation(
    density: Density2D | RadialDensity,
    kernel: Kernel,
    m: float,
    psi: np.ndarray | None = None,
) -> float:
    """D[rho] = sum rho |grad h|^2 over the support interior.

    The gradient is a central difference restricted to cells with
    rho > 1e-12 max(rho); h is meaningless in vacuum and the exclusion
    only removes 0 * inf noise since D is weighted by rho anyway.
    """
    h = h_field(density, kernel, m, psi=psi)
    v = density.values
    vmax = float(v.max()) if v.size else 0.0
    if vmax <= 0:
        return 0.0
    live = v > VACUUM_RELATIVE * vmax

    if isinstance(density, RadialDensity):
        if density.n < 3:
            return 0.0
        dh = np.zeros_like(v)
        dh[1:-1] = (h[2:] - h[:-2]) / (2.0 * density.dr)
        mask = live.copy()
        mask[0] = mask[-1] = False
        mask[1:-1] &= live[:-2] & live[2:]
        return float(np.sum(v[mask] * dh[mask] ** 2 * density.shell_measures()[mask]))

    dx = density.dx
    gx = np.zeros_like(v)
    gy = np.zeros_like(v)
    gx[:, 1:-1] = (h[:, 2:] - h[:, :-2]) / (2.0 * dx)
    gy[1:-1, :] = (h[2:, :] - h[:-2, :]) / (2.0 * dx)
    mask = np.zeros_like(live)
    mask[1:-1, 1:-1] = (
        live[1:-1, 1:-1]
        & live[1:-1, :-2]
        & live[1:-1, 2:]
        & live[:-2, 1:-1]
        & live[2:, 1:-1]
    )
    return float(np.sum(v[mask] * (gx[mask] ** 2 + gy[mask] ** 2)) * density.cell)
