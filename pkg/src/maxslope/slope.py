"""Descending-slope estimation and the hypothesis checkers built on it.

The descending slope limsup_{y->x} (f(x) - f(y))^+ / d(x, y) is estimated
by sampling spheres of shrinking radius with a deterministic direction
set.  The estimator bounds the slope from below; it appears on the
dominated side of every check that consumes it, so a lower bound is the
safe direction.  ``check_condition_h`` and ``check_slope_cone`` are
falsification tools: a pass on sampled data is evidence, a fail carries a
concrete witness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergySpec, eval_many, evaluate, exact_slope
from .errors import CapabilityAbsentError, SequenceNotConvergentError
from .metric import Point, SpaceDescriptor, distance

DEFAULT_RADII = tuple(0.1 * 2.0 ** (-k) for k in range(13))


@dataclass(frozen=True)
class SlopeEstimate:
    """Slope value with its radius schedule and convergence diagnostics.

    ``value`` is extrapolated as the max of the last three per-radius
    suprema; ``converged`` requires those three to agree pairwise within
    the tolerance used at estimation time.
    """

    value: float
    radii: tuple[float, ...]
    per_radius_sup: tuple[float, ...]
    converged: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "radii": list(self.radii),
            "per_radius_sup": list(self.per_radius_sup),
            "converged": self.converged,
        }


def _direction_set(space: SpaceDescriptor, per_radius: int) -> np.ndarray:
    """Deterministic unit directions (unit in the space's metric).

    1D: both signs.  2D: equally spaced angles plus the axes.  Higher
    dimensions: axes plus a fixed pseudorandom sphere sample; coverage is
    coarser there, which only weakens the lower bound.
    """
    n = space.dimension
    if n == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif n == 2:
        angles = 2.0 * math.pi * np.arange(per_radius) / max(per_radius, 1)
        ring = np.column_stack([np.cos(angles), np.sin(angles)])
        dirs = np.vstack([np.eye(2), -np.eye(2), ring])
    else:
        rng = np.random.default_rng(1234)  # fixed: reproducible direction set
        cloud = rng.standard_normal((per_radius, n))
        cloud /= np.linalg.norm(cloud, axis=1, keepdims=True)
        dirs = np.vstack([np.eye(n), -np.eye(n), cloud])
    norms = np.sqrt((space.metric_weights() * dirs * dirs).sum(axis=1))
    return dirs / norms[:, None]


def estimate_slope(spec: EnergySpec, eps: float, x: Point,
                   schedule=DEFAULT_RADII, directions_per_radius: int = 256,
                   slope_tol: float = 1e-3) -> SlopeEstimate:
    """Sampled descending slope at ``x``.

    ``schedule`` must decrease strictly toward zero; each radius
    contributes the supremum of (f(x) - f(y))^+ / r over the direction
    set scaled to metric radius r.
    """
    radii = tuple(float(r) for r in schedule)
    if len(radii) < 3 or any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radius schedule must be strictly decreasing, length >= 3")
    spec.domain.validate_point(x)
    dirs = _direction_set(spec.domain, directions_per_radius)
    fx = evaluate(spec, eps, x)
    x_arr = x.array
    sups = []
    for r in radii:
        vals = eval_many(spec, eps, x_arr + r * dirs)
        sups.append(max(0.0, float((fx - vals).max()) / r))
    tail = sups[-3:]
    value = max(tail)
    converged = max(tail) - min(tail) < slope_tol
    return SlopeEstimate(
        value=value,
        radii=radii,
        per_radius_sup=tuple(sups),
        converged=converged,
    )


def slope_value(spec: EnergySpec, eps: float, x: Point, **estimate_kwargs) -> float:
    """Best available slope: exact formula if the kind has one, else sampled."""
    try:
        return exact_slope(spec, eps, x)
    except CapabilityAbsentError:
        return estimate_slope(spec, eps, x, **estimate_kwargs).value


# ---------------------------------------------------------------------------
# Condition (H): joint energy continuity + slope lower semicontinuity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConditionHReport:
    """Empirical verdict on one sampled sequence (eps_n, v_n) -> v.

    ``passed`` iff the terminal energy gap is below ``h_tol`` and the
    tail-infimum of sampled slopes dominates the slope at the limit up to
    ``h_tol``.  A fail is a counter-witness; a pass is evidence only.
    """

    sequence: tuple[tuple[float, tuple[float, ...]], ...]
    limit_v: Point
    energy_gap: float
    slope_liminf_estimate: float
    slope_at_limit: float
    passed: bool
    slopes_along_sequence: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {
            "sequence": [[e, list(c)] for e, c in self.sequence],
            "limit_v": list(self.limit_v.coords),
            "energy_gap": self.energy_gap,
            "slope_liminf_estimate": self.slope_liminf_estimate,
            "slope_at_limit": self.slope_at_limit,
            "passed": self.passed,
            "slopes_along_sequence": list(self.slopes_along_sequence),
        }


def check_condition_h(family: EnergySpec, limit: EnergySpec,
                      sequence, limit_v: Point,
                      h_tol: float = 1e-3, seq_tol: float = 1e-2,
                      tail: int = 3, limit_eps: float = 1.0,
                      **estimate_kwargs) -> ConditionHReport:
    """Refute (or fail to refute) the continuity condition on one sequence.

    ``sequence`` is a list of (eps_n, Point) with eps_n decreasing; the
    points must approach ``limit_v``: distances non-increasing within
    ``seq_tol`` slack and terminal distance below ``seq_tol``.
    """
    seq = [(float(e), v) for e, v in sequence]
    if not seq:
        raise ValueError("sequence must be nonempty")
    space = family.domain
    dists = [distance(space, v, limit_v) for _, v in seq]
    if dists[-1] > seq_tol:
        raise SequenceNotConvergentError(
            f"terminal distance {dists[-1]:g} to the limit exceeds seq_tol={seq_tol:g}"
        )
    if any(b > a + seq_tol for a, b in zip(dists, dists[1:])):
        raise SequenceNotConvergentError(
            "sample distances to the limit are not (approximately) decreasing"
        )

    slopes = tuple(
        estimate_slope(family, e, v, **estimate_kwargs).value for e, v in seq
    )
    slope_liminf = min(slopes[-tail:])
    s_limit = estimate_slope(limit, limit_eps, limit_v, **estimate_kwargs).value
    e_last, v_last = seq[-1]
    energy_gap = abs(evaluate(family, e_last, v_last)
                     - evaluate(limit, limit_eps, limit_v))
    passed = energy_gap < h_tol and slope_liminf >= s_limit - h_tol
    return ConditionHReport(
        sequence=tuple((e, v.coords) for e, v in seq),
        limit_v=limit_v,
        energy_gap=energy_gap,
        slope_liminf_estimate=slope_liminf,
        slope_at_limit=s_limit,
        passed=passed,
        slopes_along_sequence=slopes,
    )


# ---------------------------------------------------------------------------
# Slope Cone Property
# ---------------------------------------------------------------------------

def check_slope_cone(spec: EnergySpec, eps: float, x: Point, probe_points,
                     slope_at_x: float | None = None) -> list[float]:
    """Residuals f(y) - f(x) + d(x, y) * slope(x) for each probe.

    The cone property holds on the probes iff all residuals are >= 0 (up
    to the caller's tolerance).  ``slope_at_x`` overrides the built-in
    slope; by default the exact formula is used when the kind has one.
    """
    fx = evaluate(spec, eps, x)
    s = slope_value(spec, eps, x) if slope_at_x is None else float(slope_at_x)
    if not (math.isfinite(fx) and math.isfinite(s)):
        raise ValueError("cone check requires finite energy and slope at x")
    space = spec.domain
    residuals = []
    for y in probe_points:
        fy = evaluate(spec, eps, y)
        residuals.append(fy - fx + distance(space, x, y) * s)
    return residuals
