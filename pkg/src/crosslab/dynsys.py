"""Dynamical systems (Z^d, alpha, X): spaces, the translation action, Haar quadrature.

The group is always G = Z^d.  X is a compact abelian group and the action is
translation, alpha_t(x) = x + j(t), so Haar measure on X is invariant.  Three
kinds of X are supported:

* ``Point``         the one-point space (group C*-algebra case),
* ``Torus``         T^D with j(t) = t @ rotation (rotation has shape (d, D)),
* ``FiniteCyclic``  Z^d / (p_1 Z x ... x p_d Z) with j(t) = t mod p.

Points of X are float arrays of shape (..., D).  On the finite cyclic space
they hold integer values.  Every space also knows its dual group (Fourier
modes), which is how coefficient functions are stored in ``algebra``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import SystemMismatch

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

__all__ = [
    "GOLDEN", "GroupSpec", "Point", "Torus", "FiniteCyclic", "DynamicalSystem",
    "QuadratureGrid", "Box", "act", "haar_grid", "dual_grid", "zone_grid",
    "birkhoff_boxes", "birkhoff_average",
]


@dataclass(frozen=True)
class GroupSpec:
    rank: int
    quotient_period: tuple[int, ...] | None = None

    def __post_init__(self):
        if int(self.rank) < 1:
            raise ValueError(f"group rank must be >= 1, got {self.rank}")
        object.__setattr__(self, "rank", int(self.rank))
        if self.quotient_period is not None:
            per = tuple(int(p) for p in self.quotient_period)
            if len(per) != self.rank:
                raise SystemMismatch(f"quotient_period {per} does not match rank {self.rank}")
            if any(p < 1 for p in per):
                raise ValueError(f"periods must be >= 1, got {per}")
            object.__setattr__(self, "quotient_period", per)


@dataclass(frozen=True)
class Point:
    """The one-point space.  Its dual group is trivial: a single mode ()."""

    dim = 0
    finite = True
    size = 1
    mode_periods = ()

    def wrap(self, x):
        return np.zeros(np.shape(x)[:-1] + (0,))

    def pairing(self, k, x):
        return np.zeros(np.broadcast_shapes(np.shape(k)[:-1], np.shape(x)[:-1]))

    def translation(self, t):
        t = np.asarray(t)
        return np.zeros(t.shape[:-1] + (0,))

    def character_phase(self, k, t):
        return np.zeros(np.broadcast_shapes(np.shape(k)[:-1], np.shape(t)[:-1]))

    def describe(self):
        return {"variant": "point"}


@dataclass(frozen=True)
class Torus:
    """T^D rotated by ``rotation``; row i is j(e_i) in [0, 1)^D."""

    rotation: tuple[tuple[float, ...], ...]
    finite = False
    size = math.inf
    mode_periods = None

    def __post_init__(self):
        rot = np.atleast_2d(np.asarray(self.rotation, dtype=float))
        if rot.ndim != 2 or rot.shape[1] < 1:
            raise ValueError("rotation must be a (rank, dim) array with dim >= 1")
        if np.any(rot < 0.0) or np.any(rot >= 1.0):
            raise ValueError(f"rotation entries must lie in [0, 1), got {rot.tolist()}")
        object.__setattr__(self, "rotation", tuple(tuple(float(v) for v in row) for row in rot))

    @classmethod
    def from_theta(cls, theta, rank=1):
        """Rank-1 rotation by ``theta`` (scalar or length-D vector), or a
        diagonal rotation of T^rank when a length-``rank`` vector is given
        together with ``rank > 1``."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float)) % 1.0
        if rank == 1:
            return cls(theta[None, :])
        if theta.shape != (rank,):
            raise SystemMismatch(f"need {rank} rotation numbers, got {theta.shape}")
        return cls(np.diag(theta))

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.rotation, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.rotation[0])

    @property
    def rank(self) -> int:
        return len(self.rotation)

    def wrap(self, x):
        return np.mod(x, 1.0)

    def pairing(self, k, x):
        return np.sum(np.asarray(k) * np.asarray(x), axis=-1)

    def translation(self, t):
        return np.mod(np.asarray(t, dtype=float) @ self.matrix, 1.0)

    def character_phase(self, k, t):
        # <k, j(t)> = (k t^T) . rotation, reduced mod 1 per generator to keep
        # the integer part out of the floating product
        k = np.asarray(k, dtype=float)
        t = np.asarray(t, dtype=float)
        coef = t[..., :, None] * k[..., None, :]
        return np.mod(np.sum(np.mod(coef * self.matrix, 1.0), axis=(-2, -1)), 1.0)

    def describe(self):
        return {"variant": "torus", "rotation": [list(r) for r in self.rotation]}


@dataclass(frozen=True)
class FiniteCyclic:
    """Z^d / H for the period lattice H = p_1 Z x ... x p_d Z."""

    periods: tuple[int, ...]
    finite = True

    def __post_init__(self):
        per = tuple(int(p) for p in np.atleast_1d(self.periods))
        if not per or any(p < 1 for p in per):
            raise ValueError(f"periods must be >= 1, got {per}")
        object.__setattr__(self, "periods", per)

    @property
    def dim(self) -> int:
        return len(self.periods)

    @property
    def size(self) -> int:
        return math.prod(self.periods)

    @property
    def mode_periods(self):
        return self.periods

    def wrap(self, x):
        return np.mod(x, np.asarray(self.periods))

    def pairing(self, k, x):
        return np.sum(np.asarray(k) * np.asarray(x) / np.asarray(self.periods, dtype=float), axis=-1)

    def translation(self, t):
        return np.mod(np.asarray(t), np.asarray(self.periods)).astype(float)

    def character_phase(self, k, t):
        p = np.asarray(self.periods)
        prod = np.mod(np.asarray(k, dtype=np.int64) * np.asarray(t, dtype=np.int64), p)
        return np.mod(np.sum(prod / p, axis=-1), 1.0)

    def describe(self):
        return {"variant": "finite_cyclic", "periods": list(self.periods)}


SpaceSpec = Point | Torus | FiniteCyclic


@dataclass(frozen=True)
class DynamicalSystem:
    group: GroupSpec
    space: SpaceSpec

    def __post_init__(self):
        d = self.group.rank
        if isinstance(self.space, Torus) and self.space.rank != d:
            raise SystemMismatch(f"torus rotation has {self.space.rank} rows, group rank is {d}")
        if isinstance(self.space, FiniteCyclic):
            if self.space.dim != d:
                raise SystemMismatch(f"periods {self.space.periods} do not match rank {d}")
            qp = self.group.quotient_period
            if qp is None:
                object.__setattr__(self, "group", GroupSpec(d, self.space.periods))
            elif qp != self.space.periods:
                raise SystemMismatch(f"group period {qp} != space periods {self.space.periods}")

    @classmethod
    def rotation(cls, theta=GOLDEN, rank=1):
        return cls(GroupSpec(rank), Torus.from_theta(theta, rank))

    @classmethod
    def periodic(cls, periods):
        periods = tuple(int(p) for p in np.atleast_1d(periods))
        return cls(GroupSpec(len(periods), periods), FiniteCyclic(periods))

    @classmethod
    def point(cls, rank=1):
        return cls(GroupSpec(rank), Point())

    @property
    def rank(self) -> int:
        return self.group.rank

    @property
    def dim(self) -> int:
        return self.space.dim

    def _check_t(self, t):
        t = np.asarray(t)
        if t.ndim == 0:
            t = t[None]
        if t.shape[-1] != self.rank:
            raise SystemMismatch(f"group element {t.tolist()} has wrong length for rank {self.rank}")
        return t

    def _check_x(self, x):
        x = np.asarray(x, dtype=float)
        if self.dim == 0:
            # any scalar names the single point
            if x.ndim == 0:
                return np.zeros(0)
            if x.shape[-1] != 0:
                raise SystemMismatch("the point space has no coordinates")
            return x
        if x.ndim == 0:
            x = x[None]
        if x.shape[-1] != self.dim:
            raise SystemMismatch(f"point {x.tolist()} has wrong length for dim {self.dim}")
        return x

    def translation(self, t):
        return self.space.translation(self._check_t(t))

    def act(self, t, x):
        """alpha_t(x) = x + j(t), vectorised over leading axes of t and x."""
        t = self._check_t(t)
        x = self._check_x(x)
        return self.space.wrap(x + self.space.translation(t))

    def character_phase(self, k, t):
        """<k, j(t)> in turns, i.e. the character k evaluated at j(t) is exp(2 pi i <k, j(t)>)."""
        return self.space.character_phase(k, t)

    def describe(self):
        return {"rank": self.rank, "quotient_period": self.group.quotient_period, **self.space.describe()}


def act(sys: DynamicalSystem, t, x):
    return sys.act(t, x)


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0):
            raise ValueError("quadrature weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"quadrature weights sum to {w.sum()!r}, not 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "nodes", np.asarray(self.nodes, dtype=float))

    def __len__(self):
        return len(self.weights)

    def integrate(self, values) -> complex | float:
        """Weighted sum in node order (deterministic reduction)."""
        return np.dot(self.weights, np.asarray(values))


def _uniform_grid(dim, resolution, span=None):
    if dim == 0:
        return QuadratureGrid(np.zeros((1, 0)), np.ones(1))
    span = np.ones(dim) if span is None else np.asarray(span, dtype=float)
    axes = [np.arange(resolution) * (s / resolution) for s in span]
    nodes = np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, dim)
    return QuadratureGrid(nodes, np.full(len(nodes), 1.0 / len(nodes)))


def haar_grid(space: SpaceSpec, resolution: int) -> QuadratureGrid:
    """Equal-weight nodes realising normalised Haar measure on X.

    Exact for trigonometric polynomials of degree < resolution on the torus;
    the finite cyclic space uses all of its points and ignores ``resolution``.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if isinstance(space, Point):
        return _uniform_grid(0, 1)
    if isinstance(space, FiniteCyclic):
        nodes = np.array(list(itertools.product(*[range(p) for p in space.periods])), dtype=float)
        return QuadratureGrid(nodes, np.full(len(nodes), 1.0 / len(nodes)))
    return _uniform_grid(space.dim, resolution)


def dual_grid(rank: int, resolution: int) -> QuadratureGrid:
    """Uniform grid on the dual group of Z^rank, the torus T^rank."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    return _uniform_grid(rank, resolution)


def zone_grid(sys: DynamicalSystem, resolution: int) -> QuadratureGrid:
    """Uniform grid on a fundamental domain of G^/H^perp (the Brillouin zone).

    For a periodic system with periods p the zone is prod [0, 1/p_i); without a
    period lattice it is the whole dual torus.  Weights are normalised to 1.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    per = sys.group.quotient_period
    if per is None:
        return dual_grid(sys.rank, resolution)
    return _uniform_grid(sys.rank, resolution, span=[1.0 / p for p in per])


@dataclass(frozen=True)
class Box:
    """The centred cube {-radius, ..., radius}^rank in Z^rank."""

    radius: int
    rank: int = 1
    _sites: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("box radius must be >= 0")
        r = range(-self.radius, self.radius + 1)
        sites = np.array(list(itertools.product(r, repeat=self.rank)), dtype=np.int64)
        object.__setattr__(self, "_sites", sites.reshape(-1, self.rank))

    @property
    def side(self) -> int:
        return 2 * self.radius + 1

    @property
    def cardinality(self) -> int:
        return self.side ** self.rank

    @property
    def sites(self) -> np.ndarray:
        return self._sites

    def contains(self, t) -> np.ndarray:
        return np.all(np.abs(np.asarray(t)) <= self.radius, axis=-1)

    def index(self, t) -> np.ndarray:
        """Row-major flat index of sites t (must lie in the box)."""
        t = np.asarray(t, dtype=np.int64) + self.radius
        idx = np.zeros(t.shape[:-1], dtype=np.int64)
        for i in range(self.rank):
            idx = idx * self.side + t[..., i]
        return idx


def birkhoff_boxes(n_max: int, rank: int = 1) -> list[Box]:
    """The averaging sequence H_n = {-n..n}^rank for n = 1..n_max."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return [Box(n, rank) for n in range(1, n_max + 1)]


def birkhoff_average(sys: DynamicalSystem, f: Callable[[np.ndarray], np.ndarray], x, box: Box) -> float | complex:
    """(1/|H|) sum_{s in H} f(alpha_s(x)) over a box H."""
    pts = sys.act(box.sites, np.broadcast_to(np.asarray(x, dtype=float), (box.cardinality, sys.dim)))
    return np.mean(f(pts))

