"""Numerical laboratory for nonlinear aggregation-diffusion equations.

Continuous Steiner symmetrization, rearrangement inequalities, radial
steady states from the Euler-Lagrange relation, and a conservative
finite-volume evolution solver with energy/moment diagnostics.
"""

__version__ = "0.1.0"

from .energy import EnergyBreakdown, dissipation, free_energy, h_field
from .evolve import DiagnosticsRecord, DiagnosticsSeries, SolverConfig, run
from .grids import (
    Density2D,
    MomentSet,
    QuantizedDensity,
    RadialDensity,
    moments,
    potential,
    quantize_levels,
    radial_potential,
    rasterize_radial,
    reconstruct,
)
from .intervals import Interval, IntervalSet, interaction_energy, normalize
from .kernels import (
    AssumptionReport,
    Kernel,
    RegularizedLogKernel,
    audit_assumptions,
    get_kernel,
    log2d,
    newtonian,
    potential_far_field_ratio,
)
from .rearrange import (
    decreasing_rearrangement,
    hardy_littlewood_gap,
    less_concentrated,
    schwarz_rearrangement,
    second_moment_compare,
)
from .steady import (
    ExponentTrace,
    SteadyProfile,
    exponent_iteration,
    rescale_steady,
    solve_radial_steady,
    verify_uniqueness_scaling,
)
from .steiner import (
    SteinerConfig,
    SymmetryReport,
    detect_radial_decreasing,
    interaction_energy_slope,
    modified_steiner_advance,
    stationarity_contradiction_test,
    steiner_advance,
)
