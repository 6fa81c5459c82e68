"""Parameterized energy families and their closed-form capabilities.

The built-in zoo:

* ``quadratic``          0.5 * sum_i w_i (x_i - b_i)^2
* ``wiggly``             base(x) + a * eps * sum_i cos(x_i / eps)
* ``convex_perturbed``   base(x) + eps * sum_i |x_i|
* ``custom_smooth``      a 1D expression in ``x`` and ``eps``

Every kind is finite everywhere; the extended-real branch of the slope
definition exists in the type system but is unreachable for built-ins.
Optional capabilities (gradient, exact descending slope, limit family as
eps -> 0) raise :class:`CapabilityAbsentError` when a kind lacks them.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import (
    CapabilityAbsentError,
    CertificateFailure,
    ConfigError,
    EvaluationError,
)
from .metric import Point, SpaceDescriptor, distance, squared_distance_many

QUADRATIC = "quadratic"
WIGGLY = "wiggly"
CONVEX_PERTURBED = "convex_perturbed"
CUSTOM_SMOOTH = "custom_smooth"

COS_XI_OVER_EPS = "cos_xi_over_eps"
EPS_ABS = "eps_abs"


@dataclass(frozen=True)
class EnergySpec:
    """One member of the energy zoo, tied to its ambient space.

    Only the fields relevant to ``kind`` are populated; use the factory
    functions below instead of constructing directly.
    """

    kind: str
    domain: SpaceDescriptor
    weights: tuple[float, ...] | None = None      # quadratic
    center: tuple[float, ...] | None = None       # quadratic
    base: "EnergySpec | None" = None              # wiggly / convex_perturbed
    amplitude_scale: float = 1.0                  # wiggly
    oscillation: str = COS_XI_OVER_EPS            # wiggly
    perturbation: str = EPS_ABS                   # convex_perturbed
    expression: str | None = None                 # custom_smooth

    def __post_init__(self):
        if self.kind == QUADRATIC:
            if self.weights is None or self.center is None:
                raise ValueError("quadratic energy requires weights and center")
            w = tuple(float(v) for v in self.weights)
            if len(w) != self.domain.dimension:
                raise ValueError("quadratic weights length must equal dimension")
            if any(v <= 0 for v in w):
                raise ValueError("quadratic weights must be strictly positive")
            c = tuple(float(v) for v in self.center)
            if len(c) != self.domain.dimension:
                raise ValueError("quadratic center length must equal dimension")
            object.__setattr__(self, "weights", w)
            object.__setattr__(self, "center", c)
        elif self.kind in (WIGGLY, CONVEX_PERTURBED):
            if self.base is None or self.base.kind != QUADRATIC:
                raise ValueError(f"{self.kind} energy requires a quadratic base")
            if self.kind == WIGGLY:
                if self.amplitude_scale <= 0:
                    raise ValueError("amplitude_scale must be positive")
                if self.oscillation != COS_XI_OVER_EPS:
                    raise ValueError(f"unknown oscillation {self.oscillation!r}")
            elif self.perturbation != EPS_ABS:
                raise ValueError(f"unknown perturbation {self.perturbation!r}")
        elif self.kind == CUSTOM_SMOOTH:
            if self.domain.dimension != 1:
                raise ValueError("custom_smooth energies are one-dimensional")
            if not self.expression:
                raise ValueError("custom_smooth energy requires an expression")
            _compile_expression(self.expression)  # fail fast on parse errors
        else:
            raise ValueError(f"unknown energy kind {self.kind!r}")

    # -- config serialization -------------------------------------------------

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == QUADRATIC:
            d["weights"] = list(self.weights)
            d["center"] = list(self.center)
        elif self.kind == WIGGLY:
            d["base"] = self.base.to_dict()
            d["amplitude_scale"] = self.amplitude_scale
            d["oscillation"] = self.oscillation
        elif self.kind == CONVEX_PERTURBED:
            d["base"] = self.base.to_dict()
            d["perturbation"] = self.perturbation
        else:
            d["expression"] = self.expression
        return d

    @classmethod
    def from_dict(cls, d: dict, domain: SpaceDescriptor) -> "EnergySpec":
        try:
            kind = d["kind"]
        except KeyError as exc:
            raise ConfigError("energy config missing field 'kind'") from exc
        if kind == QUADRATIC:
            for name in ("weights", "center"):
                if name not in d:
                    raise ConfigError(f"quadratic energy config missing field {name!r}")
            return quadratic(domain, d["weights"], d["center"])
        if kind == WIGGLY:
            if "base" not in d:
                raise ConfigError("wiggly energy config missing field 'base'")
            return wiggly(
                cls.from_dict(d["base"], domain),
                amplitude_scale=d.get("amplitude_scale", 1.0),
                oscillation=d.get("oscillation", COS_XI_OVER_EPS),
            )
        if kind == CONVEX_PERTURBED:
            if "base" not in d:
                raise ConfigError("convex_perturbed energy config missing field 'base'")
            return convex_perturbed(cls.from_dict(d["base"], domain))
        if kind == CUSTOM_SMOOTH:
            if "expression" not in d:
                raise ConfigError("custom_smooth energy config missing field 'expression'")
            return custom_smooth(domain, d["expression"])
        raise ConfigError(f"unknown energy kind {kind!r}")


def quadratic(domain: SpaceDescriptor, weights, center) -> EnergySpec:
    return EnergySpec(kind=QUADRATIC, domain=domain,
                      weights=tuple(weights), center=tuple(center))


def wiggly(base: EnergySpec, amplitude_scale: float = 1.0,
           oscillation: str = COS_XI_OVER_EPS) -> EnergySpec:
    return EnergySpec(kind=WIGGLY, domain=base.domain, base=base,
                      amplitude_scale=float(amplitude_scale), oscillation=oscillation)


def convex_perturbed(base: EnergySpec, perturbation: str = EPS_ABS) -> EnergySpec:
    return EnergySpec(kind=CONVEX_PERTURBED, domain=base.domain, base=base,
                      perturbation=perturbation)


def custom_smooth(domain: SpaceDescriptor, expression: str) -> EnergySpec:
    return EnergySpec(kind=CUSTOM_SMOOTH, domain=domain, expression=str(expression))


# ---------------------------------------------------------------------------
# Custom expression compilation (minimal grammar: + - * / ^, sin, cos, exp,
# abs, variables x and eps).
# ---------------------------------------------------------------------------

_ALLOWED_LOCALS = {
    "x": sp.Symbol("x", real=True),
    "eps": sp.Symbol("eps", positive=True),
    "sin": sp.sin,
    "cos": sp.cos,
    "exp": sp.exp,
    "abs": sp.Abs,
    "Abs": sp.Abs,
}


@functools.lru_cache(maxsize=128)
def _compile_expression(text: str):
    """Parse and lambdify a 1D expression; returns (value_fn, grad_fn)."""
    source = text.replace("^", "**")
    try:
        expr = sp.sympify(source, locals=dict(_ALLOWED_LOCALS), rational=False)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigError(f"cannot parse energy expression {text!r}: {exc}") from exc
    free = expr.free_symbols - {_ALLOWED_LOCALS["x"], _ALLOWED_LOCALS["eps"]}
    if free:
        raise ConfigError(
            f"expression {text!r} uses unknown symbols {sorted(map(str, free))}"
        )
    x, eps = _ALLOWED_LOCALS["x"], _ALLOWED_LOCALS["eps"]
    value = sp.lambdify((x, eps), expr, modules="numpy")
    grad = sp.lambdify((x, eps), sp.diff(expr, x), modules="numpy")
    return value, grad


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_many(spec: EnergySpec, eps: float, X: np.ndarray) -> np.ndarray:
    """Evaluate the energy at each row of ``X`` (m, n); returns shape (m,)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if spec.kind == QUADRATIC:
        diff = X - np.asarray(spec.center)
        return 0.5 * (np.asarray(spec.weights) * diff * diff).sum(axis=1)
    if spec.kind == WIGGLY:
        osc = spec.amplitude_scale * eps * np.cos(X / eps).sum(axis=1)
        return eval_many(spec.base, eps, X) + osc
    if spec.kind == CONVEX_PERTURBED:
        return eval_many(spec.base, eps, X) + eps * np.abs(X).sum(axis=1)
    value_fn, _ = _compile_expression(spec.expression)
    out = np.asarray(value_fn(X[:, 0], eps), dtype=float)
    out = np.broadcast_to(out, (X.shape[0],)).copy()
    if not np.all(np.isfinite(out)):
        bad = X[~np.isfinite(out)][0]
        raise EvaluationError(
            f"expression {spec.expression!r} not finite at x={bad!r}", bad
        )
    return out


def evaluate(spec: EnergySpec, eps: float, x: Point) -> float:
    """Energy value at a single point."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    spec.domain.validate_point(x)
    return float(eval_many(spec, eps, x.array[None, :])[0])


def has_gradient(spec: EnergySpec) -> bool:
    return True  # every zoo member carries an (a.e.) gradient formula


def gradient_many(spec: EnergySpec, eps: float, X: np.ndarray) -> np.ndarray:
    """(Sub)gradient rows for rows of ``X``; sign(0) taken as 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if spec.kind == QUADRATIC:
        return np.asarray(spec.weights) * (X - np.asarray(spec.center))
    if spec.kind == WIGGLY:
        return gradient_many(spec.base, eps, X) - spec.amplitude_scale * np.sin(X / eps)
    if spec.kind == CONVEX_PERTURBED:
        return gradient_many(spec.base, eps, X) + eps * np.sign(X)
    _, grad_fn = _compile_expression(spec.expression)
    g = np.asarray(grad_fn(X[:, 0], eps), dtype=float)
    g = np.broadcast_to(g, (X.shape[0],)).copy()
    if not np.all(np.isfinite(g)):
        bad = X[~np.isfinite(g)][0]
        raise EvaluationError(
            f"gradient of {spec.expression!r} not finite at x={bad!r}", bad
        )
    return g[:, None]


def gradient(spec: EnergySpec, eps: float, x: Point) -> Point:
    """Gradient at a point, where the kind is smooth there."""
    spec.domain.validate_point(x)
    return Point.from_array(gradient_many(spec, eps, x.array[None, :])[0])


def exact_slope(spec: EnergySpec, eps: float, x: Point) -> float:
    """Closed-form descending slope in the space's metric.

    For smooth kinds this is the dual norm of the gradient; for the
    eps*|x| perturbation the minimal-norm subgradient is used at kinks.
    Raises :class:`CapabilityAbsentError` where no formula applies.
    """
    spec.domain.validate_point(x)
    mw = spec.domain.metric_weights()
    if spec.kind in (QUADRATIC, WIGGLY, CUSTOM_SMOOTH):
        g = gradient_many(spec, eps, x.array[None, :])[0]
        return float(math.sqrt(float((g * g / mw).sum())))
    if spec.kind == CONVEX_PERTURBED:
        a = gradient_many(spec.base, eps, x.array[None, :])[0]
        x_arr = x.array
        g = np.where(
            x_arr != 0.0,
            a + eps * np.sign(x_arr),
            np.sign(a) * np.maximum(0.0, np.abs(a) - eps),
        )
        return float(math.sqrt(float((g * g / mw).sum())))
    raise CapabilityAbsentError(f"no exact slope for kind {spec.kind!r}")


def gamma_limit(spec: EnergySpec) -> EnergySpec:
    """Limit family as eps -> 0.

    The oscillatory and |x| perturbations vanish uniformly (their size is
    bounded by a constant times eps), so the limit is the base quadratic;
    a quadratic family is eps-independent and its own limit.
    """
    if spec.kind == QUADRATIC:
        return spec
    if spec.kind in (WIGGLY, CONVEX_PERTURBED):
        return spec.base
    raise CapabilityAbsentError(
        f"kind {spec.kind!r} declares no limit family"
    )


# ---------------------------------------------------------------------------
# Well-posedness certification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WellPosednessCertificate:
    """Empirical coercivity certificate.

    Records tau_star and c_star such that, on every sampled point v and
    every eps of the checked grid,

        energy(v) + d(v, u*) / (2 * tau_star) >= c_star.
    """

    tau_star: float
    c_star: float
    compactness_note: str
    checked_eps_grid: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "tau_star": self.tau_star,
            "c_star": self.c_star,
            "compactness_note": self.compactness_note,
            "checked_eps_grid": list(self.checked_eps_grid),
        }


_COMPACTNESS_NOTE = (
    "finite-dimensional space with coercive built-in energies: bounded "
    "sublevel sets are automatically precompact; recorded, not sampled"
)


def certify_well_posedness(spec: EnergySpec, eps_grid, sample_budget: int,
                           tau_star: float = 1.0,
                           max_radius: float = 1e3,
                           seed: int = 0) -> WellPosednessCertificate:
    """Sample the coercivity bound on radial shells around u*.

    Fails loudly (with a witness) when the penalized objective keeps
    decreasing out to the largest sampled radius, the sampled signature of
    an objective unbounded below.
    """
    eps_grid = tuple(float(e) for e in eps_grid)
    if not eps_grid:
        raise ValueError("eps_grid must be nonempty")
    if tau_star <= 0:
        raise ValueError("tau_star must be positive")
    space = spec.domain
    n = space.dimension
    rng = np.random.default_rng(seed)
    n_shells = max(8, int(math.sqrt(sample_budget)))
    per_shell = max(2 * n, sample_budget // n_shells)
    radii = np.geomspace(1e-3, max_radius, n_shells)
    u_star = space.base_point.array

    global_min = math.inf
    for eps in eps_grid:
        shell_mins = []
        shell_argmins = []
        for r in radii:
            dirs = np.vstack([np.eye(n), -np.eye(n),
                              rng.standard_normal((per_shell, n))])
            norms = np.sqrt((space.metric_weights() * dirs * dirs).sum(axis=1))
            dirs = dirs / norms[:, None]
            Y = u_star + r * dirs
            vals = eval_many(spec, eps, Y) + r / (2.0 * tau_star)
            k = int(np.argmin(vals))
            shell_mins.append(float(vals[k]))
            shell_argmins.append(Y[k])
        tail = shell_mins[-3:]
        if tail[-1] == min(shell_mins) and tail[0] > tail[1] > tail[2]:
            witness = (eps, Point.from_array(shell_argmins[-1]))
            raise CertificateFailure(
                "penalized energy still decreasing at radius "
                f"{radii[-1]:g} for eps={eps:g}: objective appears unbounded "
                f"below for tau_star={tau_star:g}",
                witness=witness,
            )
        center_val = float(eval_many(spec, eps, u_star[None, :])[0])
        global_min = min(global_min, center_val, *shell_mins)

    return WellPosednessCertificate(
        tau_star=float(tau_star),
        c_star=float(global_min),
        compactness_note=_COMPACTNESS_NOTE,
        checked_eps_grid=eps_grid,
    )


# ---------------------------------------------------------------------------
# Critical-point helper for oscillatory landscapes (1D)
# ---------------------------------------------------------------------------

def nearest_stable_critical_point(spec: EnergySpec, eps: float, x: Point,
                                  span: float | None = None) -> Point:
    """Nearest local minimizer of a 1D energy around ``x``.

    Scans the gradient for sign changes with positive second difference and
    polishes the closest one by bisection.  Used to build trap-point
    sequences for the oscillation families.
    """
    if spec.domain.dimension != 1:
        raise ValueError("critical-point scan implemented for 1D only")
    x0 = float(x.coords[0])
    if span is None:
        span = 8.0 * math.pi * eps if spec.kind == WIGGLY else max(1.0, abs(x0))
    grid = np.linspace(x0 - span, x0 + span, 20001)
    g = gradient_many(spec, eps, grid[:, None])[:, 0]
    sign_change = (g[:-1] < 0) & (g[1:] >= 0)  # minus-to-plus: local minimum
    idx = np.nonzero(sign_change)[0]
    if idx.size == 0:
        raise ValueError(f"no stable critical point within span {span:g} of {x0:g}")
    mids = 0.5 * (grid[idx] + grid[idx + 1])
    best = idx[int(np.argmin(np.abs(mids - x0)))]
    lo, hi = grid[best], grid[best + 1]
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gradient_many(spec, eps, np.array([[mid]]))[0, 0] < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(mid)):
            break
    return Point.of(0.5 * (lo + hi))
