"""Trace functionals on positive elements aa* and their agreement.

Four independent routes to tau(aa*):

* ``tau_kernel``      <a|a>, exact mode arithmetic;
* ``lambda_fiber``    int_X tr(M_g pi_x(a) pi_x(a)^* M_g) dm / sum g^2;
* ``mu_dual``         int_{G^} <(aa*)^that 1 | 1> dthat on dual fibers;
* ``trace_delta_e``   int_X <pi_x(aa*) delta_0 | delta_0> dm.

plus the large-box limit ``shubin_sequence`` and, for periodic systems, the
Brillouin-zone integral ``periodic_desintegration``.

Normalisations: Haar on X and on the dual torus have mass 1, the group
carries counting measure, and the zone integral divides the fiber trace by |X|.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ._parallel import pmap
from .algebra import Kernel, inner
from .dynsys import Box, QuadratureGrid, dual_grid, haar_grid, zone_grid
from .errors import TruncationError, UnsupportedSpace
from .fibers import DualAssembler, fiber_x

DEFAULT_X_RESOLUTION = 64
DEFAULT_THAT_RESOLUTION = 128
DEFAULT_MODE_CUTOFF = 12
DEFAULT_SHUBIN_RADII = (10, 20, 40, 80, 160, 320, 640)

# |functional - tau_kernel| bounds at the default resolutions
TRACE_TOLERANCES = {"lambda_fiber": 1e-6, "mu_dual": 1e-5, "delta_e": 1e-8, "periodic": 1e-8}

__all__ = [
    "TraceReport", "tau_kernel", "lambda_fiber", "mu_dual", "trace_delta_e", "shubin_sequence",
    "periodic_desintegration", "uniform_weight", "delta_weight", "trace_report", "TRACE_TOLERANCES",
]


def tau_kernel(a: Kernel) -> float:
    """tau(aa*) = <a|a>."""
    return inner(a, a).real


def uniform_weight(m: int, rank: int = 1) -> np.ndarray:
    """g = const on box(m), normalised so sum g^2 = 1 (array over box sites)."""
    side = 2 * m + 1
    return np.full((side,) * rank, 1.0 / np.sqrt(side ** rank))


def delta_weight(rank: int = 1) -> np.ndarray:
    return np.ones((1,) * rank)


def _weight_radius(g) -> int:
    side = g.shape[0]
    if side % 2 == 0 or any(s != side for s in g.shape):
        raise ValueError("weights must be given on a centred cube of odd side")
    return (side - 1) // 2


def _row_norms_sq(mat, rows):
    return np.sum(np.abs(mat[rows]) ** 2, axis=1)


def lambda_fiber(a: Kernel, g, grid: QuadratureGrid, n: int, workers: int = 1) -> float:
    """int_X tr(M_g A_x M_g) dm / sum g^2 for A_x = pi_x(a) pi_x(a)^*.

    ``g`` is a nonnegative array on box(m) (shape (2m+1,)*d); it must sit at
    least the kernel's support radius inside box(n) so that every weighted row
    of pi_x(a) is complete.
    """
    g = np.asarray(g, dtype=float)
    if g.ndim != a.rank:
        raise ValueError(f"weight has {g.ndim} axes, group rank is {a.rank}")
    if np.any(g < 0):
        raise ValueError("weight g must be nonnegative")
    m = _weight_radius(g)
    if m > n - a.radius:
        raise TruncationError(f"weight support box({m}) is closer than {a.radius} to the boundary of box({n})")
    rows = Box(n, a.rank).index(Box(m, a.rank).sites)
    g2 = g.reshape(-1) ** 2

    def at(x):
        return float(g2 @ _row_norms_sq(fiber_x(a, x, n).matrix, rows))

    vals = pmap(at, grid.nodes, workers)
    return float(grid.integrate(vals)) / float(g2.sum())


def mu_dual(a: Kernel, t_grid: QuadratureGrid, M: int | None = DEFAULT_MODE_CUTOFF,
            workers: int = 1, return_meta: bool = False):
    """int <(aa*)^that 1 | 1> dthat, using (aa*)^that = F F^* with F = pi^that(a).

    The constant function 1 is the zero mode, so the integrand is the squared
    norm of the zero-mode row of F.  That row is complete whenever M is at
    least the kernel's mode degree; ``fiber_dual`` enforces this.
    """
    assemble = DualAssembler(a, M)

    def at(th):
        f = assemble(th)
        zero = f.index_of(np.zeros(f.sites.shape[1], dtype=np.int64))
        return float(np.sum(np.abs(f.matrix[zero]) ** 2)), f.dropped_mass

    out = pmap(at, t_grid.nodes, workers)
    value = float(t_grid.integrate([v for v, _ in out]))
    if return_meta:
        return value, {"t_hat_nodes": len(t_grid), "mode_cutoff": M,
                       "max_dropped_mass": max(dm for _, dm in out)}
    return value


def trace_delta_e(a: Kernel, grid: QuadratureGrid, workers: int = 1) -> float:
    """int_X <pi_x(a) pi_x(a)^* delta_0 | delta_0> dm."""
    n = a.radius
    origin = Box(n, a.rank).index(np.zeros((1, a.rank), dtype=np.int64))

    def at(x):
        return float(_row_norms_sq(fiber_x(a, x, n).matrix, origin)[0])

    return float(grid.integrate(pmap(at, grid.nodes, workers)))


def shubin_sequence(a: Kernel, x, radii=DEFAULT_SHUBIN_RADII) -> list[tuple[int, float]]:
    """(n, tr(chi_{H_n} A_x A_x^* chi_{H_n}) / |H_n|) for H_n = box(n).

    ``radii`` may be integers or ``dynsys.Box`` objects.  pi_x(a) is built on
    box(n + r) so the rows inside box(n) are not truncated.
    """
    out = []
    for n in radii:
        n = getattr(n, "radius", n)
        box = Box(n, a.rank)
        rows = Box(n + a.radius, a.rank).index(box.sites)
        mat = fiber_x(a, x, n + a.radius).matrix
        out.append((int(n), float(np.sum(_row_norms_sq(mat, rows))) / box.cardinality))
    return out


def periodic_desintegration(a: Kernel, zone: QuadratureGrid | None = None, resolution: int = 64,
                            workers: int = 1) -> float:
    """int over the Brillouin zone of tr((aa*)^s) / |X| for finite X."""
    space = a.system.space
    if not space.finite:
        raise UnsupportedSpace("zone integration needs a finite space X")
    zone = zone if zone is not None else zone_grid(a.system, resolution)

    assemble = DualAssembler(a)

    def at(s):
        f = assemble(s).matrix
        return float(np.sum(np.abs(f) ** 2))

    return float(zone.integrate(pmap(at, zone.nodes, workers))) / space.size


@dataclass
class TraceReport:
    tau_kernel: float
    lambda_fiber: float
    mu_dual: float
    delta_e: float
    lambda_meta: dict = field(default_factory=dict)
    mu_meta: dict = field(default_factory=dict)
    delta_meta: dict = field(default_factory=dict)
    shubin_sequence: list = field(default_factory=list)
    periodic: float | None = None
    tolerances: dict = field(default_factory=lambda: dict(TRACE_TOLERANCES))

    @property
    def values(self) -> dict:
        vals = {"tau_kernel": self.tau_kernel, "lambda_fiber": self.lambda_fiber,
                "mu_dual": self.mu_dual, "delta_e": self.delta_e}
        if self.periodic is not None:
            vals["periodic"] = self.periodic
        return vals

    @property
    def agreement(self) -> float:
        """Largest pairwise deviation between the trace values."""
        v = np.array(list(self.values.values()))
        return float(np.max(np.abs(v[:, None] - v[None, :])))

    def deviations(self) -> dict:
        return {k: abs(v - self.tau_kernel) for k, v in self.values.items() if k != "tau_kernel"}

    def checks(self, scale: float = 1.0) -> dict:
        dev = self.deviations()
        out = {f"{k}_agrees": dev[k] <= self.tolerances[k] * scale for k in dev}
        out["positive"] = all(v >= -1e-10 for v in self.values.values())
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["agreement"] = self.agreement
        d["deviations"] = self.deviations()
        d["shubin_sequence"] = [list(p) for p in self.shubin_sequence]
        return d


def trace_report(a: Kernel, *, x_resolution=DEFAULT_X_RESOLUTION, t_resolution=DEFAULT_THAT_RESOLUTION,
                 mode_cutoff=DEFAULT_MODE_CUTOFF, weight_radius=8, box_radius=None, x0=None,
                 shubin_radii=(10, 20, 40, 80), zone_resolution=64, workers=1) -> TraceReport:
    """Evaluate every trace functional on aa* at the given resolutions."""
    sys = a.system
    xgrid = haar_grid(sys.space, x_resolution)
    tgrid = dual_grid(sys.rank, t_resolution)
    n = box_radius if box_radius is not None else max(16, weight_radius + a.radius)
    g = uniform_weight(weight_radius, sys.rank)
    M = None if sys.space.finite else max(mode_cutoff, a.mode_degree)
    mu, mu_meta = mu_dual(a, tgrid, M, workers, return_meta=True)
    x0 = np.zeros(sys.dim) if x0 is None else x0
    rep = TraceReport(
        tau_kernel=tau_kernel(a),
        lambda_fiber=lambda_fiber(a, g, xgrid, n, workers),
        mu_dual=mu,
        delta_e=trace_delta_e(a, xgrid, workers),
        lambda_meta={"x_nodes": len(xgrid), "box_radius": n, "weight": f"uniform on box({weight_radius})"},
        mu_meta=mu_meta,
        delta_meta={"x_nodes": len(xgrid)},
        shubin_sequence=shubin_sequence(a, x0, shubin_radii) if shubin_radii else [],
    )
    if sys.space.finite:
        rep.periodic = periodic_desintegration(a, resolution=zone_resolution, workers=workers)
    return rep
