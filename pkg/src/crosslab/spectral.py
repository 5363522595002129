"""Eigenvalues of fibers, integrated density of states, Bloch bands.

Every decomposition goes through ``eigensolve``, which Hermitizes the matrix,
calls LAPACK (banded storage when the fiber is narrow) and checks

    sum(lambda)   = tr H        within 1e-8 * dim
    sum(lambda^2) = ||H||_F^2   within 1e-8 * dim.

Wrap a block in ``sanity_audit()`` to collect those residuals for every solve.
"""
from __future__ import annotations

import contextlib
import contextvars
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._parallel import pmap
from .algebra import Kernel, l1_norm
from .dynsys import Box, QuadratureGrid, haar_grid, zone_grid
from .errors import NotHermitianError, NumericalError, UnsupportedSpace
from .fibers import HERMITIAN_ATOL, DualAssembler, FiberOperator, fiber_x

SANITY_RTOL = 1e-8
DEFAULT_ENERGY_POINTS = 512

__all__ = [
    "SpectralData", "IDSCurve", "BandStructure", "SupportReport", "ShubinComparison",
    "eigensolve", "sanity_audit", "energy_grid", "counting_curve", "ids_shubin", "ids_dual",
    "bands", "spectral_measure_support_check", "shubin_projection_comparison",
]

_AUDIT: contextvars.ContextVar[list | None] = contextvars.ContextVar("crosslab_eig_audit", default=None)


@contextlib.contextmanager
def sanity_audit():
    """Collect one record per eigensolve made inside the block."""
    records: list = []
    token = _AUDIT.set(records)
    try:
        yield records
    finally:
        _AUDIT.reset(token)


@dataclass
class SpectralData:
    eigenvalues: np.ndarray
    weights: np.ndarray
    provenance: dict = field(default_factory=dict)
    trace_residual: float = 0.0
    frobenius_residual: float = 0.0
    max_residual: float | None = None
    eigenvectors: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def count_below(self, energies) -> np.ndarray:
        """Number of eigenvalues <= E for each E."""
        return np.searchsorted(self.eigenvalues, np.asarray(energies, dtype=float), side="right")

    def count_in(self, lo, hi) -> int:
        """Eigenvalues in (lo, hi]."""
        ev = self.eigenvalues
        return int(np.searchsorted(ev, hi, side="right") - np.searchsorted(ev, lo, side="right"))


def _bandwidth(m: np.ndarray) -> int:
    rows, cols = np.nonzero(m)
    return int(np.max(np.abs(rows - cols), initial=0))


def _lower_banded(h: np.ndarray, bw: int) -> np.ndarray:
    n = h.shape[0]
    ab = np.zeros((bw + 1, n), dtype=h.dtype)
    for k in range(bw + 1):
        ab[k, : n - k] = np.diagonal(h, -k)
    return ab


def eigensolve(f: FiberOperator | np.ndarray, spot_checks: int = 0, label: dict | None = None,
               vectors: bool = False) -> SpectralData:
    """Sorted spectrum of (F + F^*)/2.

    Raises NotHermitianError if F is further than 1e-10 from Hermitian and
    NumericalError if LAPACK fails or the trace/Frobenius identities do not
    hold.  ``spot_checks`` > 0 recomputes that many eigenpairs with vectors and
    records the worst residual ||Hv - lambda v|| / ||H||.  ``vectors=True``
    uses the dense solver and keeps the eigenvectors (columns).
    """
    if isinstance(f, FiberOperator):
        mat, prov = f.matrix, {"basis": f.basis, "radius": f.radius, "dim": f.dim}
        prov.update({k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v) for k, v in f.label.items()})
    else:
        mat = np.asarray(f)
        prov = {"basis": "matrix", "dim": mat.shape[0]}
    if label:
        prov.update(label)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"eigensolve needs a square matrix, got shape {mat.shape}")
    defect = float(np.max(np.abs(mat - mat.conj().T), initial=0.0))
    if defect > HERMITIAN_ATOL:
        raise NotHermitianError(f"matrix is {defect:.3g} away from Hermitian")
    h = (mat + mat.conj().T) / 2
    if np.iscomplexobj(h) and not np.any(h.imag):
        h = h.real
    n = h.shape[0]
    bw = _bandwidth(h)
    vecs = None
    try:
        if n == 0:
            ev = np.zeros(0)
        elif vectors:
            ev, vecs = sla.eigh(h)
            prov["solver"] = "dense+vectors"
        elif n > 64 and 4 * bw < n:
            ev = sla.eigvals_banded(_lower_banded(h, bw), lower=True)
            prov["solver"] = f"banded(bw={bw})"
        else:
            ev = sla.eigvalsh(h)
            prov["solver"] = "dense"
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    order = np.argsort(ev.real, kind="stable")
    ev = ev.real[order]
    if vecs is not None:
        vecs = vecs[:, order]
    tr_res = abs(float(np.sum(ev)) - float(np.trace(h).real))
    fro_res = abs(float(np.sum(ev ** 2)) - float(np.sum(np.abs(h) ** 2)))
    tol = SANITY_RTOL * max(n, 1)
    ok = tr_res <= tol and fro_res <= tol
    records = _AUDIT.get()
    if records is not None:
        records.append({"dim": n, "trace_residual": tr_res, "frobenius_residual": fro_res,
                        "tolerance": tol, "ok": ok, "solver": prov.get("solver")})
    if not ok:
        raise NumericalError(f"sanity identities failed: trace residual {tr_res:.3g}, "
                             f"Frobenius residual {fro_res:.3g} (tolerance {tol:.3g})")
    max_res = None
    if spot_checks and n:
        norm = max(float(np.linalg.norm(h, 2)), 1e-300)
        idx = np.unique(np.linspace(0, n - 1, min(spot_checks, n)).astype(int))
        max_res = 0.0
        for i in idx:
            if vecs is not None:
                w, v = ev[i], vecs[:, i]
            else:
                wv = sla.eigh(h, subset_by_index=[int(i), int(i)])
                w, v = wv[0][0], wv[1][:, 0]
            max_res = max(max_res, float(np.linalg.norm(h @ v - w * v)) / norm)
    return SpectralData(ev, np.full(n, 1.0 / max(n, 1)), prov, tr_res, fro_res, max_res, vecs)


@dataclass
class IDSCurve:
    energies: np.ndarray
    values: np.ndarray
    method: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.method not in ("shubin_counting", "dual_fiber", "band_integration"):
            raise ValueError(f"unknown IDS method {self.method!r}")

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= -1e-12))

    def at(self, energy) -> np.ndarray:
        """Right-continuous step lookup on the stored grid."""
        i = np.searchsorted(self.energies, energy, side="right") - 1
        return np.where(i >= 0, self.values[np.clip(i, 0, None)], 0.0)

    def sup_distance(self, other: "IDSCurve") -> float:
        if len(self.energies) != len(other.energies) or not np.allclose(self.energies, other.energies):
            raise ValueError("IDS curves live on different energy grids")
        return float(np.max(np.abs(self.values - other.values)))

    def rows(self):
        return list(zip(self.energies.tolist(), self.values.tolist()))


def energy_grid(a: Kernel, num: int = DEFAULT_ENERGY_POINTS) -> np.ndarray:
    """num uniform energies on [-||a||_1, ||a||_1], which covers every fiber spectrum."""
    r = l1_norm(a)
    return np.linspace(-r, r, num)


def counting_curve(eigenvalues, energies, normaliser) -> np.ndarray:
    ev = np.sort(np.asarray(eigenvalues, dtype=float))
    return np.searchsorted(ev, np.asarray(energies, dtype=float), side="right") / normaliser


def _require_selfadjoint(a: Kernel):
    if not a.is_selfadjoint():
        raise NotHermitianError("the IDS is defined for selfadjoint kernels only")


def ids_shubin(a: Kernel, x, n: int, energies=None, boundary: str = "dirichlet") -> IDSCurve:
    """IDS(E) = #{eigenvalues of pi_x(a) on box(n) <= E} / (2n+1)^d."""
    _require_selfadjoint(a)
    energies = energy_grid(a) if energies is None else np.asarray(energies, dtype=float)
    spec = eigensolve(fiber_x(a, x, n, boundary=boundary))
    vals = counting_curve(spec.eigenvalues, energies, Box(n, a.rank).cardinality)
    return IDSCurve(energies, vals, "shubin_counting",
                    {"x": np.atleast_1d(x).tolist(), "n": n, "boundary": boundary})


def _zone(a: Kernel, t_grid, resolution):
    if t_grid is not None:
        return t_grid
    return zone_grid(a.system, resolution)


def ids_dual(a: Kernel, t_grid: QuadratureGrid | None = None, energies=None, resolution: int = 512,
             workers: int = 1) -> IDSCurve:
    """Zone average of (#Bloch-fiber eigenvalues <= E) / |X| for finite X.

    ``t_grid`` defaults to a uniform grid on the Brillouin zone.  On the torus
    the fibers are infinite dimensional; use ``ids_shubin`` there.
    """
    _require_selfadjoint(a)
    space = a.system.space
    if not space.finite:
        raise UnsupportedSpace("ids_dual needs finite-dimensional fibers (point or finite cyclic X)")
    energies = energy_grid(a) if energies is None else np.asarray(energies, dtype=float)
    grid = _zone(a, t_grid, resolution)
    assemble = DualAssembler(a)

    def counts(th):
        return eigensolve(assemble(th)).count_below(energies)

    c = np.array(pmap(counts, grid.nodes, workers), dtype=float)
    vals = grid.weights @ c / space.size
    method = "dual_fiber" if space.size == 1 else "band_integration"
    return IDSCurve(energies, np.clip(vals, 0.0, 1.0), method, {"zone_nodes": len(grid)})


@dataclass
class BandStructure:
    zone_nodes: np.ndarray
    bands: np.ndarray  # (nodes, |X|), each row sorted
    grid_shape: tuple = ()

    @property
    def count(self) -> int:
        return self.bands.shape[1]

    def intervals(self) -> np.ndarray:
        """[min, max] of each band over the zone."""
        return np.stack([self.bands.min(axis=0), self.bands.max(axis=0)], axis=1)

    def modulus(self) -> float:
        """Largest jump of a band function between neighbouring zone nodes."""
        if len(self.bands) < 2:
            return 0.0
        arr = self.bands.reshape(tuple(self.grid_shape) + (self.count,))
        jumps = [np.max(np.abs(np.diff(arr, axis=ax)), initial=0.0) for ax in range(len(self.grid_shape))]
        return float(max(jumps, default=0.0))

    def union(self, threshold: float | None = None) -> list[tuple[float, float]]:
        """Band intervals merged wherever the gap is at most ``threshold``.

        The default threshold is twice the modulus estimate, so gaps smaller
        than the grid can resolve are not reported.
        """
        thr = 2 * self.modulus() if threshold is None else threshold
        merged: list[list[float]] = []
        for lo, hi in sorted(map(tuple, self.intervals())):
            if merged and lo - merged[-1][1] <= thr:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return [(float(lo), float(hi)) for lo, hi in merged]

    def gaps(self, threshold: float | None = None) -> list[tuple[float, float]]:
        u = self.union(threshold)
        return [(u[i][1], u[i + 1][0]) for i in range(len(u) - 1)]

    def rows(self):
        return [list(map(float, nd)) + list(map(float, b)) for nd, b in zip(self.zone_nodes, self.bands)]


def bands(a: Kernel, zone_resolution: int = 256, workers: int = 1) -> BandStructure:
    """Sorted Bloch-fiber eigenvalues at every node of a uniform zone grid."""
    if not a.system.space.finite:
        raise UnsupportedSpace("band structure needs a finite space X")
    _require_selfadjoint(a)
    grid = zone_grid(a.system, zone_resolution)
    assemble = DualAssembler(a)
    ev = pmap(lambda th: eigensolve(assemble(th)).eigenvalues, grid.nodes, workers)
    shape = (zone_resolution,) * a.rank
    return BandStructure(grid.nodes, np.array(ev), shape)


def _dist_to_union(e, union):
    e = np.asarray(e, dtype=float)
    d = np.full(e.shape, np.inf)
    for lo, hi in union:
        d = np.minimum(d, np.maximum(0.0, np.maximum(lo - e, e - hi)))
    return d


def _dist_to_points(e, pts):
    """Distance from each e to the nearest of the sorted points pts."""
    j = np.searchsorted(pts, e)
    left = pts[np.clip(j - 1, 0, len(pts) - 1)]
    right = pts[np.clip(j, 0, len(pts) - 1)]
    return np.minimum(np.abs(e - left), np.abs(e - right))


@dataclass
class SupportReport:
    band_union: list
    gaps: list
    modulus: float
    n: int
    per_x: list  # dicts: x, hausdorff, hausdorff_bulk, edge_states, outside

    @property
    def max_edge_states(self) -> int:
        return max((p["edge_states"] for p in self.per_x), default=0)

    @property
    def hausdorff(self) -> float:
        return max((p["hausdorff"] for p in self.per_x), default=0.0)

    @property
    def hausdorff_bulk(self) -> float:
        return max((p["hausdorff_bulk"] for p in self.per_x), default=0.0)

    def to_dict(self) -> dict:
        return {"band_union": self.band_union, "gaps": self.gaps, "modulus": self.modulus, "n": self.n,
                "per_x": self.per_x, "max_edge_states": self.max_edge_states,
                "hausdorff": self.hausdorff, "hausdorff_bulk": self.hausdorff_bulk}


def spectral_measure_support_check(a: Kernel, n: int, zone_resolution: int = 256, xs=None,
                                   workers: int = 1) -> SupportReport:
    """Compare box spectra of pi_x(a) with the union of Bloch bands.

    Box eigenvalues further than the modulus estimate from the band union are
    counted as edge states and left out of ``hausdorff_bulk``; they are a
    boundary effect of the truncation, so they are reported, not rejected.
    """
    bs = bands(a, zone_resolution, workers)
    tol = max(bs.modulus(), 1e-12)
    union = bs.union()
    space = a.system.space
    if xs is None:
        xs = _sample_points(space)
    band_values = np.unique(bs.bands.ravel())
    per_x = []
    for x in xs:
        ev = eigensolve(fiber_x(a, x, n)).eigenvalues
        d_out = _dist_to_union(ev, union)
        edge = d_out > tol
        d_in = _dist_to_points(band_values, ev)
        per_x.append({
            "x": np.atleast_1d(x).tolist(),
            "hausdorff": float(max(np.max(d_out, initial=0.0), np.max(d_in, initial=0.0))),
            "hausdorff_bulk": float(max(np.max(d_out[~edge], initial=0.0), np.max(d_in, initial=0.0))),
            "edge_states": int(np.sum(edge)),
            "edge_energies": ev[edge].tolist(),
        })
    return SupportReport(union, bs.gaps(), bs.modulus(), n, per_x)


def _sample_points(space, limit: int = 4):
    """A few points of X: all of them for small finite X."""
    if space.dim == 0:
        return [np.zeros(0)]
    return list(haar_grid(space, limit).nodes[:limit])


@dataclass
class ShubinComparison:
    count_restricted: float
    count_projected: float
    n: int
    pad: int

    @property
    def difference(self) -> float:
        return self.count_projected - self.count_restricted

    def to_dict(self) -> dict:
        return {"count_restricted": self.count_restricted, "count_projected": self.count_projected,
                "difference": self.difference, "n": self.n, "pad": self.pad}


def shubin_projection_comparison(a: Kernel, x, interval, n: int, pad: int | None = None) -> ShubinComparison:
    """tr chi_I(B_x|box(n)) against tr of the box(n) block of chi_I(B_x|box(n+pad)).

    ``interval`` = (lo, hi) is read as (lo, hi]; lo may be -inf.  Both counts
    are divided by (2n+1)^d.  Observational: no convergence rate is asserted.
    """
    _require_selfadjoint(a)
    lo, hi = interval
    pad = 4 * max(a.radius, 1) if pad is None else pad
    if pad < 4 * a.radius:
        raise ValueError(f"pad {pad} is below 4 x support radius {a.radius}")
    card = Box(n, a.rank).cardinality
    restricted = eigensolve(fiber_x(a, x, n)).count_in(lo, hi) / card

    big = eigensolve(fiber_x(a, x, n + pad), vectors=True)
    w, v = big.eigenvalues, big.eigenvectors
    sel = (w > lo) & (w <= hi)
    rows = Box(n + pad, a.rank).index(Box(n, a.rank).sites)
    projected = float(np.sum(np.abs(v[np.ix_(rows, np.flatnonzero(sel))]) ** 2)) / card
    return ShubinComparison(float(restricted), projected, n, pad)

