"""Group-on-group duality for rotation systems and the Aubry probe.

For Z^d acting on T^D by j(t) = t R, the backward system is Z^D (the modes of
X) acting on T^d (the dual of Z^d) by k -> R k.  A kernel with coefficients
c[t, k] is sent to

    a^(k, that) = sum_t c[t, k] exp(2 pi i <k, j(t)>) exp(-2 pi i t . that),

so the backward group index is the mode k and the backward mode is -t.  With
this pair of sign conventions the unit is fixed, <a|b> = <a^|b^>, the map is
multiplicative, and fiber_dual(a, that, M) is literally fiber_x(a^, that, M).
Applying the transform twice gives a(-t, -x).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import pmap
from .algebra import Kernel, convolve, inner, involve
from .dynsys import GOLDEN, DynamicalSystem, GroupSpec, Torus
from .errors import SystemMismatch, UnsupportedSpace
from .fibers import DualAssembler, fiber_x
from .presets import almost_mathieu
from .spectral import counting_curve, eigensolve, energy_grid, ids_shubin
from .traces import tau_kernel

__all__ = [
    "DualSystemPair", "backward_system", "hat_transform", "reflect", "trace_duality_check",
    "plancherel_l2_check", "roundtrip_check", "star_compatibility_check", "ProbeReport",
    "spectral_duality_probe", "ritz_match_fraction",
]


def _torus(system: DynamicalSystem) -> Torus:
    if not isinstance(system.space, Torus):
        raise UnsupportedSpace("the hat transform is defined for rotation systems on a torus")
    return system.space


def backward_system(system: DynamicalSystem) -> DynamicalSystem:
    """Z^D acting on T^d by the transposed rotation."""
    rot = _torus(system).matrix
    return DynamicalSystem(GroupSpec(rot.shape[1]), Torus(rot.T))


@dataclass(frozen=True)
class DualSystemPair:
    forward: DynamicalSystem
    backward: DynamicalSystem

    def __post_init__(self):
        if not np.array_equal(_torus(self.forward).matrix, _torus(self.backward).matrix.T):
            raise SystemMismatch("backward rotation must be the transpose of the forward rotation")

    @classmethod
    def of(cls, system: DynamicalSystem) -> "DualSystemPair":
        return cls(system, backward_system(system))

    @classmethod
    def rotation(cls, theta=GOLDEN) -> "DualSystemPair":
        return cls.of(DynamicalSystem.rotation(theta))

    def describe(self):
        return {"forward": self.forward.describe(), "backward": self.backward.describe()}


def hat_transform(a: Kernel) -> Kernel:
    """a^ on the backward system (exact coefficient bookkeeping)."""
    sys = a.system
    _torus(sys)
    d, D = sys.rank, sys.dim
    t_axes = [np.arange(n) + lo for lo, n in zip(a.t_lo, a.t_shape)]
    k_axes = [np.arange(n) + lo for lo, n in zip(a.k_lo, a.k_shape)]
    ts = np.stack(np.meshgrid(*t_axes, indexing="ij"), axis=-1).reshape(-1, d)
    ks = np.stack(np.meshgrid(*k_axes, indexing="ij"), axis=-1).reshape(-1, D)
    # W: mode k of a(t, .) picks up exp(2 pi i <k, j(t)>)
    phase = sys.character_phase(ks[None, :, :], ts[:, None, :])
    data = a.data.reshape(len(ts), len(ks)) * np.exp(2j * np.pi * phase)
    data = data.reshape(a.t_shape + a.k_shape)
    # group axes <- k axes, mode axes <- reversed t axes
    data = np.transpose(data, list(range(d, d + D)) + list(range(d)))
    data = np.flip(data, axis=tuple(range(D, D + d)))
    k_lo = tuple(-(lo + n - 1) for lo, n in zip(a.t_lo, a.t_shape))
    return Kernel(backward_system(sys), tuple(a.k_lo), k_lo, data)


def reflect(a: Kernel) -> Kernel:
    """a(-t, -x): coefficients c[-t, -k]."""
    if a._wraps:
        raise UnsupportedSpace("reflection is only needed on the torus")
    axes = tuple(range(a.data.ndim))
    t_lo = tuple(-(lo + n - 1) for lo, n in zip(a.t_lo, a.t_shape))
    k_lo = tuple(-(lo + n - 1) for lo, n in zip(a.k_lo, a.k_shape))
    return Kernel(a.system, t_lo, k_lo, np.flip(a.data, axis=axes))


def trace_duality_check(a: Kernel) -> tuple[float, float, float]:
    """(tau forward, tau backward, |difference|) for aa*."""
    tf = tau_kernel(a)
    tb = tau_kernel(hat_transform(a))
    return tf, tb, abs(tf - tb)


def plancherel_l2_check(a: Kernel, b: Kernel) -> dict:
    """|<a|b> - <a^|b^>| and max |hat(a * b) - a^ * b^|."""
    ha, hb = hat_transform(a), hat_transform(b)
    ip = inner(a, b)
    ip_hat = inner(ha, hb)
    mult = hat_transform(convolve(a, b)).max_deviation(convolve(ha, hb))
    return {"inner": complex(ip), "inner_hat": complex(ip_hat), "inner_dev": float(abs(ip - ip_hat)),
            "multiplicativity_dev": float(mult)}


def roundtrip_check(a: Kernel) -> float:
    """max |hat(hat(a)) - reflect(a)| coefficientwise."""
    return float(hat_transform(hat_transform(a)).max_deviation(reflect(a)))


def star_compatibility_check(a: Kernel) -> float:
    return float(hat_transform(involve(a)).max_deviation(involve(hat_transform(a))))


def ritz_match_fraction(ev1, ev2, tol=1e-3, interior=0.8) -> float:
    """Fraction of the interior eigenvalues of ev1 lying within tol of ev2.

    ``interior`` keeps the middle part of the sorted list; extreme Ritz values
    are the ones most affected by where the truncation cuts.
    """
    ev1, ev2 = np.sort(ev1), np.sort(ev2)
    drop = int(round(len(ev1) * (1 - interior) / 2))
    core = ev1[drop: len(ev1) - drop] if drop else ev1
    if len(core) == 0:
        return 1.0
    j = np.searchsorted(ev2, core)
    left = ev2[np.clip(j - 1, 0, len(ev2) - 1)]
    right = ev2[np.clip(j, 0, len(ev2) - 1)]
    dist = np.minimum(np.abs(core - left), np.abs(core - right))
    return float(np.mean(dist <= tol))


@dataclass
class ProbeReport:
    lam: float
    theta: float
    n: int
    M: int
    energies: np.ndarray
    forward_ids: np.ndarray
    dual_counting: np.ndarray
    rescaled_ids: np.ndarray
    rescaling_consistency: float
    dual_forward_distance: float
    ritz_match: float
    ritz_M: int
    pure_point_regime: bool
    meta: dict = field(default_factory=dict)

    def checks(self, scale: float = 1.0) -> dict:
        return {"rescaling_consistency": self.rescaling_consistency <= 0.03 * scale,
                "ritz_match": self.ritz_match >= 0.9}

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "theta": self.theta, "n": self.n, "M": self.M,
                "rescaling_consistency": self.rescaling_consistency,
                "dual_forward_distance": self.dual_forward_distance,
                "ritz_match": self.ritz_match, "ritz_M": self.ritz_M,
                "pure_point_regime": self.pure_point_regime, **self.meta}

    def rows(self):
        return list(zip(self.energies.tolist(), self.forward_ids.tolist(),
                        self.rescaled_ids.tolist(), self.dual_counting.tolist()))


def spectral_duality_probe(lam: float, theta: float = GOLDEN, x_samples=(0.0, 0.25, 0.5, 0.75),
                           t_samples=(0.1, 0.35, 0.6, 0.85), n: int = 500, M: int = 500,
                           energies=None, ritz_M: int = 200, ritz_tol: float = 1e-3,
                           workers: int = 1) -> ProbeReport:
    """Compare the almost Mathieu family at lam with its Aubry dual 4/lam.

    Asserted downstream: IDS_lam(E) against IDS_{4/lam}(2E/lam) (both by
    box counting at radius n, averaged over ``x_samples``), and the Ritz
    values of fiber_dual(a, that, ritz_M) against (lam/2) x those of
    fiber_x(AM_{4/lam}, that, ritz_M).  The dual-fiber counting curve is
    reported only.
    """
    if not lam > 0:
        raise ValueError(f"coupling must be positive, got {lam}")
    a = almost_mathieu(lam, theta)
    dual = almost_mathieu(4.0 / lam, theta)
    E = energy_grid(a) if energies is None else np.asarray(energies, dtype=float)

    def ids_avg(kern, energies_):
        curves = pmap(lambda x: ids_shubin(kern, x, n, energies_).values, list(x_samples), workers)
        return np.mean(curves, axis=0)

    forward = ids_avg(a, E)
    rescaled = forward if lam == 2.0 else ids_avg(dual, 2 * E / lam)

    assemble = DualAssembler(a, M)
    counts = pmap(lambda th: counting_curve(eigensolve(assemble(th)).eigenvalues, E, 2 * M + 1),
                  list(t_samples), workers)
    dual_counting = np.mean(counts, axis=0)

    ritz_assemble = DualAssembler(a, ritz_M)
    fractions = []
    for th in t_samples:
        ev_dual = eigensolve(ritz_assemble(th)).eigenvalues
        ev_fwd = (lam / 2) * eigensolve(fiber_x(dual, th, ritz_M)).eigenvalues
        fractions.append(ritz_match_fraction(ev_dual, ev_fwd, ritz_tol))

    return ProbeReport(
        lam=float(lam), theta=float(theta), n=n, M=M, energies=E,
        forward_ids=forward, dual_counting=dual_counting, rescaled_ids=rescaled,
        rescaling_consistency=float(np.max(np.abs(forward - rescaled))),
        dual_forward_distance=float(np.max(np.abs(forward - dual_counting))),
        ritz_match=float(np.min(fractions)), ritz_M=ritz_M, pure_point_regime=lam > 2,
        meta={"x_samples": list(map(float, x_samples)), "t_samples": list(map(float, t_samples))},
    )
