"""Normalized ground states of (2,q)-Laplacian equations with a |x|^-b nonlinearity.

The package computes and cross-checks the constrained variational structure
of -lap(u) - lap_q(u) = lam u + |x|^(-b) |u|^(p-2) u at prescribed mass:
sharp interpolation constants, the global minimum m(c) with its threshold
mass, the mass-critical threshold, and the zero-Pohozaev level gamma(c).
"""

from .checks import VerificationReport, run_suite
from .flow import (
    FlowOptions,
    MassCurve,
    SolveReport,
    SolveStatus,
    detect_unbounded,
    find_c1_star,
    flow_minimize,
    mass_energy_curve,
)
from .gn import (
    GnOptions,
    GnResult,
    critical_mass_c2,
    minimize_weinstein,
    shooting_oracle,
)
from .manifold import (
    FiberRoot,
    GammaCurve,
    GammaOptions,
    asymptotic_sweep,
    fiber_root,
    gamma_curve,
    minimize_gamma,
    project_to_manifold,
)
from .params import ParameterSet, Regime, RegimeTag, classify, sigma, validate
from .radial import (
    FiberComponents,
    RadialField,
    RadialGrid,
    build_grid,
    components,
    decreasing_rearrangement,
    dilate,
    energy,
    fiber_energy,
    fiber_pohozaev,
    grading_for_first_node,
    load_profile,
    multiplier,
    pohozaev,
    rescale_to_mass,
    save_profile,
    shape_scale,
    weinstein,
)

__all__ = [
    "FiberComponents",
    "FiberRoot",
    "FlowOptions",
    "GammaCurve",
    "GammaOptions",
    "GnOptions",
    "GnResult",
    "MassCurve",
    "ParameterSet",
    "RadialField",
    "RadialGrid",
    "Regime",
    "RegimeTag",
    "SolveReport",
    "SolveStatus",
    "VerificationReport",
    "asymptotic_sweep",
    "build_grid",
    "classify",
    "components",
    "critical_mass_c2",
    "decreasing_rearrangement",
    "detect_unbounded",
    "dilate",
    "energy",
    "fiber_energy",
    "fiber_pohozaev",
    "fiber_root",
    "find_c1_star",
    "flow_minimize",
    "gamma_curve",
    "grading_for_first_node",
    "load_profile",
    "mass_energy_curve",
    "minimize_gamma",
    "minimize_weinstein",
    "multiplier",
    "pohozaev",
    "project_to_manifold",
    "rescale_to_mass",
    "run_suite",
    "save_profile",
    "shape_scale",
    "shooting_oracle",
    "sigma",
    "validate",
    "weinstein",
]

__version__ = "0.1.0"
