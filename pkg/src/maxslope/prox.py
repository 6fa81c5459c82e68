"""Proximal (resolvent) map: minimize energy(v) + d^2(v, u) / (2 * delta).

Closed forms are used where they exist (quadratic and soft-threshold
perturbations against diagonal metrics); everything else goes through a
deterministic global search: recursive grid zoom in 1D, multistart
quasi-Newton descent in higher dimensions.  Selection among near-optimal
minimizers is deterministic so that whole trajectories are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .energy import (
    CONVEX_PERTURBED,
    QUADRATIC,
    EnergySpec,
    eval_many,
    gradient_many,
)
from .errors import BudgetExhaustedError, InvalidDeltaError
from .metric import Point, SpaceDescriptor, distance, squared_distance_many

EXACT_IF_AVAILABLE = "exact_if_available"
MULTISTART_NUMERIC = "multistart_numeric"


@dataclass(frozen=True)
class ProxSettings:
    """Knobs for the numeric search; exact closed forms ignore them."""

    mode: str = EXACT_IF_AVAILABLE
    starts: int = 3
    local_tol: float = 1e-9
    search_radius_factor: float = 2.0
    max_iters: int = 200_000

    def __post_init__(self):
        if self.mode not in (EXACT_IF_AVAILABLE, MULTISTART_NUMERIC):
            raise ValueError(f"unknown prox mode {self.mode!r}")
        if self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.local_tol <= 0:
            raise ValueError("local_tol must be positive")

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "starts": self.starts,
            "local_tol": self.local_tol,
            "search_radius_factor": self.search_radius_factor,
            "max_iters": self.max_iters,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProxSettings":
        return cls(
            mode=d.get("mode", EXACT_IF_AVAILABLE),
            starts=int(d.get("starts", 3)),
            local_tol=float(d.get("local_tol", 1e-9)),
            search_radius_factor=float(d.get("search_radius_factor", 2.0)),
            max_iters=int(d.get("max_iters", 200_000)),
        )


@dataclass(frozen=True)
class ProxResult:
    """Outcome of one resolvent solve.

    ``near_ties`` lists additional minimizers whose objective is within
    ``local_tol`` of the best one; a nonempty list flags that the scaled
    displacement bound downstream is only a conservative representative of
    the full minimizer set.
    """

    minimizer: Point
    value: float
    energy_at_min: float
    moved_distance: float
    certified_exact: bool
    near_ties: tuple[Point, ...] = ()


def _objective_many(spec: EnergySpec, eps: float, delta: float,
                    u: np.ndarray, X: np.ndarray) -> np.ndarray:
    return eval_many(spec, eps, X) + squared_distance_many(
        spec.domain, X, u) / (2.0 * delta)


def prox(spec: EnergySpec, eps: float, delta: float, u: Point,
         settings: ProxSettings, tau_star: float | None = None) -> ProxResult:
    """One resolvent step from ``u`` with step size ``delta``."""
    if delta <= 0:
        raise InvalidDeltaError(f"delta must be positive, got {delta}")
    if tau_star is not None and delta >= tau_star:
        raise InvalidDeltaError(
            f"delta={delta:g} must stay below the certified tau_star={tau_star:g}"
        )
    spec.domain.validate_point(u)

    if settings.mode == EXACT_IF_AVAILABLE:
        exact = _exact_prox(spec, eps, delta, u)
        if exact is not None:
            return exact
    return _numeric_prox(spec, eps, delta, u, settings)


# ---------------------------------------------------------------------------
# Exact paths
# ---------------------------------------------------------------------------

def _exact_prox(spec: EnergySpec, eps: float, delta: float,
                u: Point) -> ProxResult | None:
    space = spec.domain
    m = space.metric_weights()
    u_arr = u.array
    if spec.kind == QUADRATIC:
        w = np.asarray(spec.weights)
        b = np.asarray(spec.center)
        # stationarity per coordinate: w (v - b) + m (v - u) / delta = 0
        v = (m * u_arr + delta * w * b) / (m + delta * w)
    elif spec.kind == CONVEX_PERTURBED:
        w = np.asarray(spec.base.weights)
        b = np.asarray(spec.base.center)
        a = m / delta
        # per coordinate: w (v - b) + a (v - u) + eps sign(v) = 0, else v = 0
        num = w * b + a * u_arr
        den = w + a
        v_plus = (num - eps) / den
        v_minus = (num + eps) / den
        v = np.where(v_plus > 0, v_plus, np.where(v_minus < 0, v_minus, 0.0))
    else:
        return None
    minimizer = Point.from_array(v)
    value = float(_objective_many(spec, eps, delta, u_arr, v[None, :])[0])
    return ProxResult(
        minimizer=minimizer,
        value=value,
        energy_at_min=float(eval_many(spec, eps, v[None, :])[0]),
        moved_distance=distance(space, minimizer, u),
        certified_exact=True,
    )


# ---------------------------------------------------------------------------
# Numeric search
# ---------------------------------------------------------------------------

def _search_radius(spec: EnergySpec, eps: float, delta: float,
                   u: np.ndarray, settings: ProxSettings) -> float:
    g = gradient_many(spec, eps, u[None, :])[0]
    gnorm = float(np.sqrt((g * g).sum()))
    return settings.search_radius_factor * max(1.0, delta * gnorm)


def _numeric_prox(spec: EnergySpec, eps: float, delta: float, u: Point,
                  settings: ProxSettings) -> ProxResult:
    space = spec.domain
    u_arr = u.array
    if space.dimension == 1:
        candidates, evals = _global_search_1d(spec, eps, delta, u_arr, settings)
    else:
        candidates, evals = _multistart_nd(spec, eps, delta, u_arr, settings)
    if evals > settings.max_iters:
        raise BudgetExhaustedError(
            f"prox search used {evals} evaluations (budget {settings.max_iters})"
        )
    # Guard the descent property: v = u is always admissible.
    candidates.append((u_arr, float(_objective_many(spec, eps, delta, u_arr,
                                                    u_arr[None, :])[0])))
    best = prox_selection(candidates, u, space, settings.local_tol)
    best_arr = best.array
    value = float(_objective_many(spec, eps, delta, u_arr, best_arr[None, :])[0])
    ties = tuple(
        Point.from_array(c) for c, v in candidates
        if v <= value + settings.local_tol
        and distance(space, Point.from_array(c), best) > 10.0 * math.sqrt(settings.local_tol)
    )
    return ProxResult(
        minimizer=best,
        value=value,
        energy_at_min=float(eval_many(spec, eps, best_arr[None, :])[0]),
        moved_distance=distance(space, best, u),
        certified_exact=False,
        near_ties=ties,
    )


def _global_search_1d(spec, eps, delta, u_arr, settings):
    """Recursive grid zoom with a shortlist of the best brackets.

    Each round samples an even grid, keeps the ``starts`` lowest local
    minima and zooms into their brackets, so progressively finer
    oscillation wells are resolved without an a-priori scale.
    """
    u0 = float(u_arr[0])
    R = _search_radius(spec, eps, delta, u_arr, settings)
    npts = 257
    evals = 0

    def round_values(lo, hi):
        xs = np.linspace(lo, hi, npts)
        vals = _objective_many(spec, eps, delta, u_arr, xs[:, None])
        return xs, vals

    windows = [(u0 - R, u0 + R)]
    candidates: list[tuple[np.ndarray, float]] = []
    first_round = True
    while windows:
        next_windows: list[tuple[float, float, float]] = []
        for lo, hi in windows:
            xs, vals = round_values(lo, hi)
            evals += npts
            h = xs[1] - xs[0]
            interior = np.nonzero(
                (vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])
            )[0] + 1
            if interior.size == 0:
                interior = np.array([int(np.argmin(vals))])
            order = interior[np.argsort(vals[interior], kind="stable")]
            keep = order[: settings.starts] if first_round else order[:1]
            for k in keep:
                a = max(lo, xs[k] - h)
                b = min(hi, xs[k] + h)
                spread = float(vals.max() - vals.min())
                if (b - a) <= 1e-14 * max(1.0, abs(xs[k])) or (
                    not first_round and spread <= settings.local_tol
                ):
                    candidates.append((np.array([xs[k]]), float(vals[k])))
                else:
                    next_windows.append((a, b, float(vals[k])))
            if evals > settings.max_iters:
                raise BudgetExhaustedError(
                    f"1D prox search exceeded budget {settings.max_iters}"
                )
        first_round = False
        windows = [(a, b) for a, b, _ in next_windows]
    return candidates, evals


def _multistart_nd(spec, eps, delta, u_arr, settings):
    space = spec.domain
    n = space.dimension
    g = gradient_many(spec, eps, u_arr[None, :])[0]
    scale = max(1.0, float(np.sqrt((g * g).sum())))
    offsets = [np.zeros(n)]
    for k in range(1, settings.starts):
        r = delta * k * scale
        for j in range(n):
            e = np.zeros(n)
            e[j] = r
            offsets.append(e.copy())
            offsets.append(-e)
    seen_evals = 0
    candidates = []
    mw = space.metric_weights()

    def fun(x):
        return float(_objective_many(spec, eps, delta, u_arr, x[None, :])[0])

    def jac(x):
        return gradient_many(spec, eps, x[None, :])[0] + mw * (x - u_arr) / delta

    for off in offsets:
        res = optimize.minimize(
            fun, u_arr + off, jac=jac, method="L-BFGS-B",
            options={"maxiter": 500, "ftol": settings.local_tol * 1e-2,
                     "gtol": 1e-12},
        )
        seen_evals += int(res.nfev)
        candidates.append((np.asarray(res.x, dtype=float), float(res.fun)))
    return candidates, seen_evals


def prox_selection(candidates, u: Point, space: SpaceDescriptor,
                   local_tol: float) -> Point:
    """Deterministic representative of a near-optimal candidate set.

    Ordering: lowest objective, then smallest distance to ``u``, then
    lexicographic coordinates.  Candidates more than ``local_tol`` above
    the best objective are discarded first.
    """
    if not candidates:
        raise ValueError("candidate set must be nonempty")
    best_val = min(v for _, v in candidates)
    admissible = [(np.atleast_1d(np.asarray(c, dtype=float)), v)
                  for c, v in candidates if v <= best_val + local_tol]
    u_arr = u.array
    mw = space.metric_weights()

    def key(item):
        c, v = item
        d2 = float((mw * (c - u_arr) ** 2).sum())
        return (v, d2, tuple(c))

    chosen = min(admissible, key=key)[0]
    return Point.from_array(chosen)
