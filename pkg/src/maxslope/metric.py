"""Finite-dimensional metric spaces: points, space descriptors, distances.

Everything downstream (energies, proximal maps, schemes) operates on a
``SpaceDescriptor`` with explicit coordinates.  Supported metrics are the
Euclidean one and diagonally weighted variants d(x,y)^2 = sum_i w_i (x_i-y_i)^2,
the latter so that the proximal map genuinely differs from the plain
Euclidean one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatchError


@dataclass(frozen=True)
class Point:
    """Immutable point with explicit coordinates.

    All coordinates must be finite; dimension is fixed by the tuple length.
    """

    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"non-finite coordinate in {coords!r}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    @classmethod
    def of(cls, *coords: float) -> "Point":
        return cls(tuple(coords))

    @classmethod
    def from_array(cls, arr) -> "Point":
        return cls(tuple(float(v) for v in np.atleast_1d(arr)))


EUCLIDEAN = "euclidean"
DIAGONAL_WEIGHTED = "diagonal_weighted"


@dataclass(frozen=True)
class SpaceDescriptor:
    """Ambient space: dimension, metric kind and the reference point u*."""

    dimension: int
    metric_kind: str = EUCLIDEAN
    weights: tuple[float, ...] | None = None
    base_point: Point | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.metric_kind not in (EUCLIDEAN, DIAGONAL_WEIGHTED):
            raise ValueError(f"unknown metric kind {self.metric_kind!r}")
        if self.metric_kind == DIAGONAL_WEIGHTED:
            if self.weights is None:
                raise ValueError("diagonal_weighted metric requires weights")
            w = tuple(float(v) for v in self.weights)
            if len(w) != self.dimension:
                raise ValueError("weights length must equal dimension")
            if any(v <= 0 for v in w):
                raise ValueError("metric weights must all be positive")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise ValueError("weights only allowed with diagonal_weighted")
        if self.base_point is None:
            object.__setattr__(
                self, "base_point", Point(tuple(0.0 for _ in range(self.dimension)))
            )
        elif self.base_point.dim != self.dimension:
            raise DimensionMismatchError(
                f"base point has dim {self.base_point.dim}, space has {self.dimension}"
            )

    def metric_weights(self) -> np.ndarray:
        """Diagonal weight vector of the metric (ones for Euclidean)."""
        if self.metric_kind == DIAGONAL_WEIGHTED:
            return np.asarray(self.weights, dtype=float)
        return np.ones(self.dimension)

    def validate_point(self, p: Point) -> None:
        if p.dim != self.dimension:
            raise DimensionMismatchError(
                f"point has dim {p.dim}, space has {self.dimension}"
            )

    # -- config serialization -------------------------------------------------

    def to_dict(self) -> dict:
        d = {"dimension": self.dimension, "metric_kind": self.metric_kind,
             "base_point": list(self.base_point.coords)}
        if self.weights is not None:
            d["weights"] = list(self.weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SpaceDescriptor":
        try:
            dim = int(d["dimension"])
        except KeyError as exc:
            raise ConfigError("space config missing field 'dimension'") from exc
        kind = d.get("metric_kind", EUCLIDEAN)
        weights = tuple(d["weights"]) if "weights" in d else None
        base = Point(tuple(d["base_point"])) if "base_point" in d else None
        return cls(dimension=dim, metric_kind=kind, weights=weights, base_point=base)


def squared_distance(space: SpaceDescriptor, x: Point, y: Point) -> float:
    """Squared metric distance, computed without a square root."""
    space.validate_point(x)
    space.validate_point(y)
    diff = x.array - y.array
    return float(np.dot(space.metric_weights() * diff, diff))


def distance(space: SpaceDescriptor, x: Point, y: Point) -> float:
    return math.sqrt(squared_distance(space, x, y))


def squared_distance_many(space: SpaceDescriptor, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Vectorized squared distance from rows of ``X`` (m, n) to ``y`` (n,)."""
    diff = np.atleast_2d(X) - np.asarray(y, dtype=float)
    return (space.metric_weights() * diff * diff).sum(axis=1)


def distance_many(space: SpaceDescriptor, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sqrt(squared_distance_many(space, X, y))
