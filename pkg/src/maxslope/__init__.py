"""Numerical laboratory for minimizing movements along parameterized
energy families: scheme runs, variational interpolants, slope estimation,
dissipation diagnostics and coupled eps-tau regime sweeps."""

from .energy import (
    EnergySpec,
    WellPosednessCertificate,
    certify_well_posedness,
    convex_perturbed,
    custom_smooth,
    evaluate,
    gamma_limit,
    gradient,
    quadratic,
    wiggly,
)
from .metric import Point, SpaceDescriptor, distance, squared_distance
from .prox import ProxResult, ProxSettings, prox, prox_selection
from .regimes import CouplingLaw, SweepReport, compare_to_reference, run_sweep
from .scheme import (
    DiscreteTrajectory,
    SchemeParams,
    VariationalInterpolant,
    build_interpolant,
    discrete_velocity,
    g_function,
    piecewise_constant,
    run_scheme,
    variational_interpolate,
)
from .slope import (
    ConditionHReport,
    SlopeEstimate,
    check_condition_h,
    check_slope_cone,
    estimate_slope,
)
from .diagnostics import (
    AprioriReport,
    DissipationReport,
    MaximalSlopeReport,
    apriori_bounds,
    dissipation_identity,
    energy_monotonicity_along_limit,
    maximal_slope_check,
    metric_derivative,
)

__version__ = "0.1.0"
