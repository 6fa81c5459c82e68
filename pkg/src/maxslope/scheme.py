"""Minimizing-movement iteration and its interpolants.

``run_scheme`` produces the discrete trajectory u^0..u^N with step
u^{i+1} = prox(u^i) at step size tau.  On top of it live the
piecewise-constant interpolant (right-closed intervals), the De Giorgi
variational interpolant obtained by re-solving the prox at intermediate
step sizes, the discrete speed d(u^{i+1}, u^i)/tau, and the scaled
displacement function g(t) = d(interp(t), u^i)/(t - i*tau) that dominates
the descending slope along the interpolant.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .energy import EnergySpec, evaluate
from .errors import CoverageGapError, MaxslopeError
from .metric import Point, SpaceDescriptor, distance, squared_distance
from .prox import ProxResult, ProxSettings, prox


@dataclass(frozen=True)
class SchemeParams:
    """Parameters of one scheme run.

    ``initial_energy_bound_S`` and ``initial_distance_bound_Sprime`` are the
    declared bounds |energy(u0)| <= S and d^2(u0, u*) <= S'; they are
    validated at run time.  ``tau`` must stay below ``tau_star / 8``, the
    regime in which the a-priori estimates are available.
    """

    eps: float
    tau: float
    horizon_T: float
    initial_point: Point
    initial_energy_bound_S: float = 10.0
    initial_distance_bound_Sprime: float = 10.0
    prox_settings: ProxSettings = field(default_factory=ProxSettings)
    quadrature_nodes_per_step: int = 8
    tau_star: float = 1.0

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.horizon_T <= 0:
            raise ValueError("horizon_T must be positive")
        if self.quadrature_nodes_per_step < 1:
            raise ValueError("quadrature_nodes_per_step must be >= 1")
        if not self.tau < self.tau_star / 8.0:
            raise ValueError(
                f"tau={self.tau:g} must be below tau_star/8={self.tau_star / 8.0:g} "
                "for the a-priori estimates to apply"
            )

    def to_dict(self) -> dict:
        return {
            "eps": self.eps,
            "tau": self.tau,
            "horizon_T": self.horizon_T,
            "initial_point": list(self.initial_point.coords),
            "initial_energy_bound_S": self.initial_energy_bound_S,
            "initial_distance_bound_Sprime": self.initial_distance_bound_Sprime,
            "prox_settings": self.prox_settings.to_dict(),
            "quadrature_nodes_per_step": self.quadrature_nodes_per_step,
            "tau_star": self.tau_star,
        }


@dataclass(frozen=True)
class DiscreteTrajectory:
    """Points u^0..u^N of one run, with per-step energies and distances."""

    space: SpaceDescriptor
    points: tuple[Point, ...]
    tau: float
    eps: float
    step_distances: tuple[float, ...]   # d(u^{i+1}, u^i), length N
    step_energies: tuple[float, ...]    # energy(u^i), length N + 1

    @property
    def n_steps(self) -> int:
        return len(self.points) - 1

    @property
    def final_time(self) -> float:
        return self.n_steps * self.tau

    def times(self) -> np.ndarray:
        return self.tau * np.arange(self.n_steps + 1)

    def coords_matrix(self) -> np.ndarray:
        return np.array([p.coords for p in self.points], dtype=float)


class SchemeStepError(MaxslopeError):
    """Prox failure while running the scheme; carries the failing index."""

    def __init__(self, step_index: int, cause: Exception):
        super().__init__(f"prox failed at step {step_index}: {cause}")
        self.step_index = step_index
        self.cause = cause


def run_scheme(spec: EnergySpec, params: SchemeParams) -> DiscreteTrajectory:
    """Run N = ceil(T / tau) implicit steps from the initial point."""
    space = spec.domain
    u0 = params.initial_point
    space.validate_point(u0)
    d2 = squared_distance(space, u0, space.base_point)
    if d2 > params.initial_distance_bound_Sprime:
        raise ValueError(
            f"d^2(u0, u*)={d2:g} exceeds declared bound "
            f"S'={params.initial_distance_bound_Sprime:g}"
        )
    e0 = evaluate(spec, params.eps, u0)
    if abs(e0) > params.initial_energy_bound_S:
        raise ValueError(
            f"|energy(u0)|={abs(e0):g} exceeds declared bound "
            f"S={params.initial_energy_bound_S:g}"
        )

    n_steps = int(math.ceil(params.horizon_T / params.tau))
    points = [u0]
    energies = [e0]
    dists = []
    u = u0
    for i in range(n_steps):
        try:
            res = prox(spec, params.eps, params.tau, u, params.prox_settings,
                       tau_star=params.tau_star)
        except MaxslopeError as exc:
            raise SchemeStepError(i, exc) from exc
        points.append(res.minimizer)
        energies.append(res.energy_at_min)
        dists.append(res.moved_distance)
        u = res.minimizer
    return DiscreteTrajectory(
        space=space,
        points=tuple(points),
        tau=params.tau,
        eps=params.eps,
        step_distances=tuple(dists),
        step_energies=tuple(energies),
    )


def _step_index(traj: DiscreteTrajectory, t: float) -> int:
    """Index i with t in (i*tau, (i+1)*tau]; t = 0 maps to step 0."""
    if t < 0 or t > traj.final_time + 1e-12 * traj.tau:
        raise ValueError(f"t={t:g} outside [0, {traj.final_time:g}]")
    if t <= 0:
        return 0
    i = int(math.ceil(t / traj.tau)) - 1
    # guard roundoff at interval edges: t must exceed i*tau
    while i > 0 and t <= i * traj.tau:
        i -= 1
    return min(i, traj.n_steps - 1)


def piecewise_constant(traj: DiscreteTrajectory, t: float) -> Point:
    """Right-closed piecewise-constant interpolant: u^{i+1} on (i*tau, (i+1)*tau]."""
    if t <= 0:
        if t < 0:
            raise ValueError(f"t={t:g} is negative")
        return traj.points[0]
    return traj.points[_step_index(traj, t) + 1]


def discrete_velocity(traj: DiscreteTrajectory, t: float) -> float:
    """Piecewise-constant speed d(u^{i+1}, u^i)/tau.

    At interval endpoints the left interval's value is used (a measure-zero
    convention irrelevant to every integral built on top).
    """
    if t <= 0:
        return traj.step_distances[0] / traj.tau if traj.step_distances else 0.0
    return traj.step_distances[_step_index(traj, t)] / traj.tau


def variational_interpolate(spec: EnergySpec, traj: DiscreteTrajectory, t: float,
                            prox_settings: ProxSettings) -> Point:
    """De Giorgi interpolant: the prox of u^i at step size t - i*tau."""
    i = _step_index(traj, t)
    delta = t - i * traj.tau
    if delta <= 0:
        return traj.points[i]
    res = prox(spec, traj.eps, delta, traj.points[i], prox_settings)
    return res.minimizer


def g_function(spec: EnergySpec, traj: DiscreteTrajectory, t: float,
               prox_settings: ProxSettings) -> float:
    """Scaled displacement d(interp(t), u^i)/(t - i*tau); nonnegative.

    The supremum over the full minimizer set is approximated by the
    deterministic representative; near-ties are reflected by taking the
    largest displacement among them (conservative bound).
    """
    i = _step_index(traj, t)
    delta = t - i * traj.tau
    if delta <= 0:
        return 0.0
    res = prox(spec, traj.eps, delta, traj.points[i], prox_settings)
    moved = res.moved_distance
    for tie in res.near_ties:
        moved = max(moved, distance(traj.space, tie, traj.points[i]))
    return moved / delta


@dataclass(frozen=True)
class VariationalInterpolant:
    """Variational interpolant sampled on Gauss-Legendre nodes per step.

    ``node_times[i, k]`` lies strictly inside (i*tau, (i+1)*tau); the open
    nodes sidestep the possible blow-up of g as t -> i*tau.  ``weights``
    are already scaled to integrate over one step.
    """

    parent: DiscreteTrajectory
    node_times: np.ndarray       # (N, K)
    weights: np.ndarray          # (K,)
    values: np.ndarray           # (N, K, n)
    g_values: np.ndarray         # (N, K)
    has_near_ties: bool = False

    @property
    def nodes_per_step(self) -> int:
        return self.node_times.shape[1]

    def value_at(self, i: int, k: int) -> Point:
        return Point.from_array(self.values[i, k])


def build_interpolant(spec: EnergySpec, traj: DiscreteTrajectory,
                      prox_settings: ProxSettings,
                      nodes_per_step: int = 8) -> VariationalInterpolant:
    """Solve the prox on every quadrature node of every step."""
    nodes, gl_weights = np.polynomial.legendre.leggauss(nodes_per_step)
    deltas = 0.5 * traj.tau * (nodes + 1.0)          # in (0, tau)
    weights = 0.5 * traj.tau * gl_weights
    n = traj.space.dimension
    N = traj.n_steps
    values = np.empty((N, nodes_per_step, n))
    g_values = np.empty((N, nodes_per_step))
    node_times = np.empty((N, nodes_per_step))
    any_ties = False
    for i in range(N):
        u_i = traj.points[i]
        for k, delta in enumerate(deltas):
            res = prox(spec, traj.eps, delta, u_i, prox_settings)
            values[i, k] = res.minimizer.array
            moved = res.moved_distance
            for tie in res.near_ties:
                moved = max(moved, distance(traj.space, tie, u_i))
                any_ties = True
            g_values[i, k] = moved / delta
            node_times[i, k] = i * traj.tau + delta
    return VariationalInterpolant(
        parent=traj,
        node_times=node_times,
        weights=weights,
        values=values,
        g_values=g_values,
        has_near_ties=any_ties,
    )


def g_squared_integral(interp: VariationalInterpolant, i: int, j: int) -> float:
    """Quadrature of g^2 over steps i..j-1."""
    if not (0 <= i < j <= interp.parent.n_steps):
        raise CoverageGapError(f"step range ({i}, {j}) outside interpolant coverage")
    block = interp.g_values[i:j]
    return float((block * block @ interp.weights).sum())


# ---------------------------------------------------------------------------
# CSV export
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def trajectory_to_csv(traj: DiscreteTrajectory, path) -> None:
    """Columns: i, t, coords..., energy, step_distance (arriving step)."""
    n = traj.space.dimension
    header = ["i", "t"] + [f"x{j}" for j in range(n)] + ["energy", "step_distance"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i, p in enumerate(traj.points):
            step_d = traj.step_distances[i - 1] if i > 0 else 0.0
            writer.writerow(
                [str(i), _fmt(i * traj.tau)]
                + [_fmt(c) for c in p.coords]
                + [_fmt(traj.step_energies[i]), _fmt(step_d)]
            )


def interpolant_to_csv(interp: VariationalInterpolant, path) -> None:
    """Columns: t, coords..., g_value."""
    n = interp.parent.space.dimension
    header = ["t"] + [f"x{j}" for j in range(n)] + ["g_value"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        N, K = interp.node_times.shape
        for i in range(N):
            for k in range(K):
                writer.writerow(
                    [_fmt(interp.node_times[i, k])]
                    + [_fmt(c) for c in interp.values[i, k]]
                    + [_fmt(interp.g_values[i, k])]
                )
