"""Fiber representations of the kernel algebra.

``fiber_x``     pi_x(a) on l^2 of a box in Z^d, entries a(t - s, alpha_t(x)).
``fiber_dual``  pi^that(a) on a Fourier-mode window of L^2(X); for finite X
                this is the full (Bloch) fiber.
``covariance_check`` compares T_t pi_{alpha_t(x)}(a) T_t^* with pi_x(a).

Characters of the dual torus are (that | s) = exp(2 pi i that . s), so the
dual fiber carries exp(-2 pi i that . s) for the hop s.  ``duality`` relies on
this convention.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import Kernel
from .dynsys import Box, FiniteCyclic, Point
from .errors import SystemMismatch, TruncationError

HERMITIAN_ATOL = 1e-10

__all__ = [
    "FiberOperator", "BoxRestriction", "DualAssembler", "fiber_x", "fiber_dual", "covariance_check", "restrict",
]


@dataclass(frozen=True, eq=False)
class FiberOperator:
    """A truncated fiber.  ``sites`` labels the basis vectors (rows of the matrix):
    lattice sites for ``basis == "box"``, Fourier modes for ``basis == "modes"``."""

    matrix: np.ndarray
    basis: str
    radius: int | None
    sites: np.ndarray
    label: dict = field(default_factory=dict)
    dropped_mass: float = 0.0

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != len(self.sites):
            raise SystemMismatch(f"fiber matrix shape {m.shape} does not match {len(self.sites)} basis vectors")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def hermitian_defect(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m - m.conj().T), initial=0.0))

    def is_hermitian(self, atol=HERMITIAN_ATOL) -> bool:
        return self.hermitian_defect() <= atol

    def index_of(self, site) -> int:
        hits = np.flatnonzero(np.all(self.sites == np.asarray(site), axis=-1))
        if len(hits) == 0:
            raise KeyError(f"{site} is not a basis label of this fiber")
        return int(hits[0])

    def describe(self):
        lab = {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v) for k, v in self.label.items()}
        return {"basis": self.basis, "radius": self.radius, "dim": self.dim, **lab,
                "dropped_mass": self.dropped_mass}


@dataclass(frozen=True, eq=False)
class BoxRestriction:
    parent: FiberOperator
    sub_radius: int
    matrix: np.ndarray

    def as_fiber(self) -> FiberOperator:
        box = Box(self.sub_radius, self.parent.sites.shape[1])
        return FiberOperator(self.matrix, "box", self.sub_radius, box.sites, dict(self.parent.label))


def fiber_x(a: Kernel, x, n: int, boundary: str = "dirichlet") -> FiberOperator:
    """pi_x(a) on box(n): M[t, s] = a(t - s, alpha_t(x)).

    ``boundary="periodic"`` wraps t - s around the box instead of truncating;
    that is a convenience for faster IDS convergence and not the restriction
    chi_H B_x chi_H itself.
    """
    sys = a.system
    if n < a.radius:
        raise TruncationError(f"box radius {n} is smaller than the kernel support radius {a.radius}")
    if boundary not in ("dirichlet", "periodic"):
        raise ValueError(f"unknown boundary condition {boundary!r}")
    box = Box(n, sys.rank)
    sites = box.sites
    x = sys._check_x(x)
    pts = sys.act(sites, np.broadcast_to(x, (len(sites), sys.dim)))
    mat = np.zeros((box.cardinality, box.cardinality), dtype=complex)
    rows = np.arange(box.cardinality)
    support, values = a.evaluate_support(pts)
    for r, vals in zip(support, values):
        cols = sites - np.asarray(r)
        if boundary == "dirichlet":
            ok = box.contains(cols)
            mat[rows[ok], box.index(cols[ok])] += vals[ok]
        else:
            cols = np.mod(cols + n, box.side) - n
            np.add.at(mat, (rows, box.index(cols)), vals)
    return FiberOperator(mat, "box", n, sites, {"x": np.atleast_1d(x).copy(), "boundary": boundary})


def restrict(f: FiberOperator, m: int) -> BoxRestriction:
    """Principal submatrix of a box fiber on the smaller box(m)."""
    if f.basis != "box":
        raise SystemMismatch("only box fibers can be restricted to sub-boxes")
    if m > f.radius or m < 0:
        raise TruncationError(f"cannot restrict box({f.radius}) to box({m})")
    rank = f.sites.shape[1]
    idx = Box(f.radius, rank).index(Box(m, rank).sites)
    return BoxRestriction(f, m, f.matrix[np.ix_(idx, idx)])


def covariance_check(a: Kernel, x, t, n: int) -> float:
    """max |T_t pi_{alpha_t(x)}(a) T_t^* - pi_x(a)| over the interior box(n - |t|)."""
    sys = a.system
    t = np.atleast_1d(np.asarray(t, dtype=np.int64))
    if t.shape != (sys.rank,):
        raise SystemMismatch(f"group element {t.tolist()} has wrong length")
    tn = int(np.max(np.abs(t)))
    if n < a.radius + tn:
        raise TruncationError(f"box radius {n} < support radius {a.radius} + |t| = {tn}")
    moved = fiber_x(a, sys.act(t, x)[None, :] if sys.dim else np.zeros(0), n).matrix
    here = fiber_x(a, x, n).matrix
    box = Box(n, sys.rank)
    inner_sites = Box(n - tn, sys.rank).sites
    i_here = box.index(inner_sites)
    i_moved = box.index(inner_sites - t)
    lhs = moved[np.ix_(i_moved, i_moved)]
    rhs = here[np.ix_(i_here, i_here)]
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


def _mode_basis(a: Kernel, M):
    space = a.system.space
    if isinstance(space, Point):
        return np.zeros((1, 0), dtype=np.int64), None, None
    if isinstance(space, FiniteCyclic):
        sites = np.array(list(itertools.product(*[range(p) for p in space.periods])), dtype=np.int64)
        return sites.reshape(-1, space.dim), None, np.asarray(space.periods)
    if M is None:
        raise TruncationError("a mode cutoff M is required on the torus")
    if M < a.mode_degree:
        raise TruncationError(f"mode cutoff {M} is below the kernel's mode degree {a.mode_degree}")
    return Box(M, space.dim).sites, Box(M, space.dim), None


class DualAssembler:
    """Sparse pattern of pi^that(a) with the that-independent phases folded in.

    Sweeps over many dual points reuse one assembler; each fiber then costs a
    single scatter-add.
    """

    def __init__(self, a: Kernel, M: int | None = None):
        sys = a.system
        self.rank = sys.rank
        self.M = M
        self.sites, box, periods = _mode_basis(a, M)
        self.box = box
        N = len(self.sites)
        rows, cols, base, hops = [], [], [], []
        dropped = 0.0
        ar = np.arange(N)
        for (s, k), c in a.terms().items():
            s = np.asarray(s)
            vals = c * np.exp(-2j * np.pi * sys.character_phase(self.sites, s)) * np.ones(N)
            if sys.dim == 0:
                target_rows, ok = np.zeros(1, dtype=np.int64), np.ones(1, dtype=bool)
            elif periods is not None:
                target = np.mod(self.sites + np.asarray(k), periods)
                target_rows, ok = np.ravel_multi_index(tuple(target.T), tuple(periods)), np.ones(N, dtype=bool)
            else:
                target = self.sites + np.asarray(k)
                ok = box.contains(target)
                target_rows = box.index(target[ok])
                dropped += float(np.sum(np.abs(vals[~ok])))
            rows.append(target_rows)
            cols.append(ar[ok])
            base.append(vals[ok])
            hops.append(np.broadcast_to(s, (int(ok.sum()), len(s))))
        self.N = N
        self.dropped_mass = dropped
        if rows:
            self.flat = np.concatenate(rows) * N + np.concatenate(cols)
            self.base = np.concatenate(base)
            self.hops = np.concatenate(hops).astype(float)
        else:
            self.flat = np.zeros(0, dtype=np.int64)
            self.base = np.zeros(0, dtype=complex)
            self.hops = np.zeros((0, self.rank))

    def __call__(self, t_hat) -> FiberOperator:
        t_hat = np.atleast_1d(np.asarray(t_hat, dtype=float))
        if t_hat.shape != (self.rank,):
            raise SystemMismatch(f"dual point {t_hat.tolist()} has wrong length for rank {self.rank}")
        vals = self.base * np.exp(-2j * np.pi * (self.hops @ t_hat))
        flat = np.bincount(self.flat, weights=vals.real, minlength=self.N * self.N) \
            + 1j * np.bincount(self.flat, weights=vals.imag, minlength=self.N * self.N)
        return FiberOperator(flat.reshape(self.N, self.N), "modes", self.M if self.box is not None else None,
                             self.sites, {"t_hat": t_hat.copy()}, self.dropped_mass)


def fiber_dual(a: Kernel, t_hat, M: int | None = None) -> FiberOperator:
    """pi^that(a) on L^2(X) in the Fourier basis.

    xi -> sum_s a(s, .) (xi o alpha_{-s}) exp(-2 pi i that . s): mode m of xi
    picks up exp(-2 pi i <m, j(s)>) and is moved to m + k by the coefficient
    mode k.  On the torus only modes {-M..M}^D are kept; the absolute value of
    everything pushed outside is summed into ``dropped_mass``.  On finite X the
    basis is all of Z_p and nothing is dropped.  For sweeps over many dual
    points build a ``DualAssembler`` once.
    """
    t_hat = np.atleast_1d(np.asarray(t_hat, dtype=float))
    if t_hat.shape != (a.system.rank,):
        raise SystemMismatch(f"dual point {t_hat.tolist()} has wrong length for rank {a.system.rank}")
    return DualAssembler(a, M)(t_hat)
