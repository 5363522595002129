"""The kernel algebra C_c(G x X): convolution, involution, inner product, norms.

A kernel a(t, x) has finite support in t in Z^d, and every coefficient
x -> a(t, x) is a finite Fourier series on X:

    a(t, x) = sum_k c[t, k] exp(2 pi i <k, x>).

On the torus k runs over a finite window of Z^D.  On the finite cyclic space
k runs over all of Z_p (the coefficient is the DFT of its point values).  On
the one-point space there is a single mode.  Composition with the action
multiplies mode k by the character value exp(2 pi i <k, j(s)>), products of
coefficients convolve modes, and the Haar integral picks out mode 0, so all
algebra operations below are exact mode arithmetic.

Storage is a dense array ``data`` with d group axes followed by D mode axes,
together with the integer corners ``t_lo`` and ``k_lo`` of the stored window.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .dynsys import DynamicalSystem, FiniteCyclic, Torus, haar_grid
from .errors import SystemMismatch

KERNEL_ATOL = 1e-12

__all__ = [
    "Kernel", "convolve", "involve", "inner", "l1_norm", "l1_norm_report",
    "random_kernel", "KERNEL_ATOL",
]


def _as_tuple(v, n):
    if n == 0:
        return ()
    if np.ndim(v) == 0:
        v = (v,)
    out = tuple(int(i) for i in v)
    if len(out) != n:
        raise SystemMismatch(f"index {out} should have length {n}")
    return out


def _mode_grid(k_lo, shape):
    """Array of shape shape + (D,) holding the mode vector at each index."""
    if not shape:
        return np.zeros((0,), dtype=np.int64)
    axes = [np.arange(n) + lo for lo, n in zip(k_lo, shape)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


@dataclass(frozen=True, eq=False)
class Kernel:
    system: DynamicalSystem
    t_lo: tuple[int, ...]
    k_lo: tuple[int, ...]
    data: np.ndarray

    def __post_init__(self):
        d, D = self.system.rank, self.system.dim
        data = np.array(self.data, dtype=complex)
        if data.ndim != d + D:
            raise SystemMismatch(f"kernel array has {data.ndim} axes, expected {d + D}")
        per = self.system.space.mode_periods
        if per is not None and tuple(data.shape[d:]) != tuple(per):
            raise SystemMismatch("finite cyclic kernels must store every mode of Z_p")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "t_lo", _as_tuple(self.t_lo, d))
        object.__setattr__(self, "k_lo", _as_tuple(self.k_lo, D))

    # -- construction -------------------------------------------------------

    @classmethod
    def from_terms(cls, system: DynamicalSystem, terms: Mapping) -> "Kernel":
        """Build from {(t, k): amplitude}; t and k are ints (rank/dim 1) or tuples.

        On the finite cyclic space k is a mode of Z_p, taken mod p.
        """
        d, D = system.rank, system.dim
        per = system.space.mode_periods
        items = []
        for (t, k), amp in terms.items():
            t = _as_tuple(t, d)
            k = _as_tuple(k, D) if D else ()
            if per:
                k = tuple(ki % p for ki, p in zip(k, per))
            items.append((t, k, complex(amp)))
        if not items:
            return cls.zero(system)
        ts = np.array([it[0] for it in items], dtype=np.int64).reshape(-1, d)
        t_lo = ts.min(axis=0)
        t_shape = tuple(ts.max(axis=0) - t_lo + 1)
        if per is not None:
            k_lo, k_shape = np.zeros(D, dtype=np.int64), tuple(per)
        else:
            ks = np.array([it[1] for it in items], dtype=np.int64).reshape(-1, D)
            k_lo = ks.min(axis=0) if D else np.zeros(0, dtype=np.int64)
            k_shape = tuple(ks.max(axis=0) - k_lo + 1) if D else ()
        data = np.zeros(t_shape + k_shape, dtype=complex)
        for t, k, amp in items:
            idx = tuple(np.subtract(t, t_lo)) + tuple(np.subtract(k, k_lo))
            data[idx] += amp
        return cls(system, tuple(t_lo), tuple(k_lo), data)

    @classmethod
    def from_coefficients(cls, system: DynamicalSystem, coeffs: Mapping) -> "Kernel":
        """Build from {t: {k: amplitude}} (torus / point) or, on the finite
        cyclic space, {t: array of point values x -> a(t, x)}."""
        if isinstance(system.space, FiniteCyclic):
            terms = {}
            per = system.space.periods
            for t, vals in coeffs.items():
                if isinstance(vals, Mapping):
                    for k, amp in vals.items():
                        terms[(t, k)] = terms.get((t, k), 0) + amp
                    continue
                vals = np.asarray(vals, dtype=complex).reshape(per)
                modes = np.fft.fftn(vals) / vals.size
                for k in itertools.product(*[range(p) for p in per]):
                    terms[(t, k)] = modes[k]
            return cls.from_terms(system, terms)
        terms = {}
        for t, modes in coeffs.items():
            if not isinstance(modes, Mapping):
                modes = {() if system.dim == 0 else 0: modes}
            for k, amp in modes.items():
                terms[(t, k)] = terms.get((t, k), 0) + amp
        return cls.from_terms(system, terms)

    @classmethod
    def zero(cls, system: DynamicalSystem) -> "Kernel":
        d, D = system.rank, system.dim
        per = system.space.mode_periods
        k_shape = tuple(per) if per is not None else (1,) * D
        return cls(system, (0,) * d, (0,) * D, np.zeros((1,) * d + k_shape, dtype=complex))

    @classmethod
    def unit(cls, system: DynamicalSystem) -> "Kernel":
        """delta_0 (x) 1, the identity for convolution."""
        d, D = system.rank, system.dim
        return cls.from_terms(system, {((0,) * d, (0,) * D): 1.0})

    # -- shape ----------------------------------------------------------------

    @property
    def rank(self) -> int:
        return self.system.rank

    @property
    def dim(self) -> int:
        return self.system.dim

    @property
    def t_shape(self) -> tuple[int, ...]:
        return self.data.shape[: self.rank]

    @property
    def k_shape(self) -> tuple[int, ...]:
        return self.data.shape[self.rank:]

    @property
    def _wraps(self) -> bool:
        return self.system.space.mode_periods is not None and self.dim > 0

    def _t_mask(self):
        return np.any(self.data != 0, axis=tuple(range(self.rank, self.data.ndim)))

    def support(self) -> list[tuple[int, ...]]:
        """Group elements t with a(t, .) not identically zero, sorted."""
        idx = np.argwhere(self._t_mask())
        return sorted(tuple(int(v) for v in row + np.array(self.t_lo)) for row in idx)

    @property
    def radius(self) -> int:
        """max |t|_inf over the support (0 for the zero kernel)."""
        sup = self.support()
        return max((max(abs(v) for v in t) for t in sup), default=0)

    def modes(self) -> list[tuple[int, ...]]:
        """Modes carried by at least one coefficient (centred representatives on Z_p)."""
        mask = np.any(self.data != 0, axis=tuple(range(self.rank)))
        if self.dim == 0:
            return [()] if mask else []
        ks = np.argwhere(mask)
        out = []
        per = self.system.space.mode_periods
        for row in ks:
            k = row + np.array(self.k_lo, dtype=np.int64)
            if per:
                k = np.array([(v + p // 2) % p - p // 2 for v, p in zip(k, per)])
            out.append(tuple(int(v) for v in k))
        return sorted(out)

    @property
    def mode_degree(self) -> int:
        """max |k|_inf over the stored modes."""
        return max((max((abs(v) for v in k), default=0) for k in self.modes()), default=0)

    def coefficient(self, t) -> np.ndarray:
        """The mode array of a(t, .) (zeros outside the stored window)."""
        t = np.asarray(_as_tuple(t, self.rank)) - np.array(self.t_lo)
        if np.any(t < 0) or np.any(t >= np.array(self.t_shape)):
            return np.zeros(self.k_shape, dtype=complex)
        return self.data[tuple(t)]

    def terms(self) -> dict[tuple[tuple[int, ...], tuple[int, ...]], complex]:
        """Nonzero entries as {(t, k): amplitude}."""
        out = {}
        for idx in np.argwhere(self.data != 0):
            t = tuple(int(v) for v in idx[: self.rank] + np.array(self.t_lo))
            k = tuple(int(v) for v in idx[self.rank:] + np.array(self.k_lo, dtype=np.int64))
            out[(t, k)] = complex(self.data[tuple(idx)])
        return out

    def evaluate(self, t, x) -> np.ndarray:
        """a(t, x) at one group element t and points x of shape (..., D)."""
        c = self.coefficient(t)
        x = np.asarray(x, dtype=float)
        if self.dim == 0:
            return np.full(x.shape[:-1] if x.ndim else (), complex(c), dtype=complex)
        x = x if x.ndim else x[None]
        ks = _mode_grid(self.k_lo, self.k_shape).reshape(-1, self.dim)
        cs = c.reshape(-1)
        keep = cs != 0
        ks, cs = ks[keep], cs[keep]
        phase = self.system.space.pairing(ks[:, None, :], x.reshape(-1, self.dim)[None, :, :])
        vals = cs @ np.exp(2j * np.pi * phase) if len(cs) else np.zeros(len(x.reshape(-1, self.dim)), complex)
        return vals.reshape(x.shape[:-1])

    def evaluate_support(self, x):
        """(support, values) with values[i] = a(support[i], x) for points x of shape (P, D)."""
        sup = self.support()
        x = np.asarray(x, dtype=float)
        x = x.reshape(x.shape[0] if x.ndim == 2 else 1, self.dim) if self.dim == 0 else x.reshape(-1, self.dim)
        if not sup:
            return sup, np.zeros((0, len(x)), dtype=complex)
        rows = np.stack([self.coefficient(t).reshape(-1) for t in sup])
        if self.dim == 0:
            return sup, np.repeat(rows, len(x), axis=1)
        ks = _mode_grid(self.k_lo, self.k_shape).reshape(-1, self.dim)
        keep = np.any(rows != 0, axis=0)
        phase = self.system.space.pairing(ks[keep][:, None, :], x[None, :, :])
        return sup, rows[:, keep] @ np.exp(2j * np.pi * phase)

    def __call__(self, t, x):
        return self.evaluate(t, x)

    # -- linear structure ---------------------------------------------------

    def _embedded(self, t_lo, t_shape, k_lo, k_shape):
        out = np.zeros(tuple(t_shape) + tuple(k_shape), dtype=complex)
        off = tuple(np.subtract(self.t_lo, t_lo)) + tuple(np.subtract(self.k_lo, k_lo))
        sl = tuple(slice(o, o + n) for o, n in zip(off, self.data.shape))
        out[sl] = self.data
        return out

    def _common(self, other):
        if other.system != self.system:
            raise SystemMismatch("kernels live on different dynamical systems")
        lo_t = np.minimum(self.t_lo, other.t_lo)
        hi_t = np.maximum(np.add(self.t_lo, self.t_shape), np.add(other.t_lo, other.t_shape))
        if self._wraps or self.dim == 0:
            lo_k, shp_k = np.array(self.k_lo, dtype=np.int64), self.k_shape
        else:
            lo_k = np.minimum(self.k_lo, other.k_lo)
            shp_k = np.maximum(np.add(self.k_lo, self.k_shape), np.add(other.k_lo, other.k_shape)) - lo_k
        args = (tuple(lo_t), tuple(hi_t - lo_t), tuple(lo_k), tuple(shp_k))
        return args, self._embedded(*args), other._embedded(*args)

    def __add__(self, other):
        (t_lo, _, k_lo, _), a, b = self._common(other)
        return Kernel(self.system, t_lo, k_lo, a + b)

    def __sub__(self, other):
        (t_lo, _, k_lo, _), a, b = self._common(other)
        return Kernel(self.system, t_lo, k_lo, a - b)

    def __neg__(self):
        return Kernel(self.system, self.t_lo, self.k_lo, -self.data)

    def __mul__(self, c):
        if isinstance(c, Kernel):
            return convolve(self, c)
        return Kernel(self.system, self.t_lo, self.k_lo, complex(c) * self.data)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return convolve(self, other)

    def max_deviation(self, other) -> float:
        """Largest coefficient difference |a - b| over all (t, k)."""
        _, a, b = self._common(other)
        return float(np.max(np.abs(a - b), initial=0.0))

    def allclose(self, other, atol=KERNEL_ATOL) -> bool:
        return self.max_deviation(other) <= atol

    def is_selfadjoint(self, atol=KERNEL_ATOL) -> bool:
        return self.allclose(involve(self), atol)

    @property
    def star(self) -> "Kernel":
        return involve(self)

    def trimmed(self) -> "Kernel":
        """Smallest stored window holding every nonzero coefficient."""
        nz = np.argwhere(self.data != 0)
        if len(nz) == 0:
            return Kernel.zero(self.system)
        lo, hi = nz.min(axis=0), nz.max(axis=0) + 1
        d = self.rank
        if self._wraps:
            lo[d:], hi[d:] = 0, self.k_shape
        sl = tuple(slice(a, b) for a, b in zip(lo, hi))
        return Kernel(self.system, tuple(np.add(self.t_lo, lo[:d])),
                      tuple(np.add(self.k_lo, lo[d:])), self.data[sl])

    def __repr__(self):
        return f"Kernel(support={self.support()}, modes={self.modes()}, space={self.system.space.describe()['variant']})"


def _phase_factor(system, k_lo, k_shape, s, sign=-1.0):
    """exp(sign * 2 pi i <k, j(s)>) on the mode window."""
    if system.dim == 0:
        return np.ones((), dtype=complex)
    ks = _mode_grid(k_lo, k_shape)
    return np.exp(sign * 2j * np.pi * system.character_phase(ks, np.asarray(s)))


def convolve(a: Kernel, b: Kernel) -> Kernel:
    """(a * b)(t, x) = sum_s a(s, x) b(t - s, alpha_{-s}(x)), exactly on modes."""
    if a.system != b.system:
        raise SystemMismatch("cannot convolve kernels over different systems")
    sys = a.system
    d = sys.rank
    t_lo = tuple(np.add(a.t_lo, b.t_lo))
    t_shape = tuple(np.add(a.t_shape, b.t_shape) - 1)
    wraps = a._wraps
    if wraps or sys.dim == 0:
        k_lo, k_shape = a.k_lo, a.k_shape
    else:
        k_lo = tuple(np.add(a.k_lo, b.k_lo))
        k_shape = tuple(np.add(a.k_shape, b.k_shape) - 1)
    out = np.zeros(t_shape + k_shape, dtype=complex)
    kaxes = tuple(range(d, d + sys.dim))
    for s_idx in np.ndindex(*a.t_shape):
        a_s = a.data[s_idx]
        if not np.any(a_s):
            continue
        s = np.add(a.t_lo, s_idx)
        # b(u, alpha_{-s}(x)): mode k of b picks up exp(-2 pi i <k, j(s)>)
        bp = b.data * _phase_factor(sys, b.k_lo, b.k_shape, s)
        tsl = tuple(slice(i, i + n) for i, n in zip(s_idx, b.t_shape))
        for k1 in np.argwhere(np.atleast_1d(a_s) != 0) if sys.dim else [()]:
            k1 = tuple(int(v) for v in k1)
            c = a_s[k1] if sys.dim else a_s[()]
            if wraps:
                out[tsl] += c * np.roll(bp, shift=k1, axis=kaxes)
            else:
                ksl = tuple(slice(i, i + n) for i, n in zip(k1, b.k_shape))
                out[tsl + ksl] += c * bp
    return Kernel(sys, t_lo, k_lo, out)


def _flip_modes(arr, axes, wraps):
    """Index map k -> -k on the given axes (mod p when the modes wrap)."""
    arr = np.flip(arr, axis=axes)
    if wraps:
        arr = np.roll(arr, shift=(1,) * len(axes), axis=axes)
    return arr


def involve(a: Kernel) -> Kernel:
    """a*(t, x) = conj(a(-t, alpha_{-t}(x))).

    Mode m of a*(t, .) is conj(c[-t, -m]) exp(-2 pi i <m, j(t)>).
    """
    sys = a.system
    d, D = sys.rank, sys.dim
    data = np.conj(np.flip(a.data, axis=tuple(range(d))))
    t_lo = tuple(-(np.add(a.t_lo, a.t_shape) - 1))
    if D:
        data = _flip_modes(data, tuple(range(d, d + D)), a._wraps)
        k_lo = a.k_lo if a._wraps else tuple(-(np.add(a.k_lo, a.k_shape) - 1))
    else:
        k_lo = ()
    if D:
        data = data.copy()
        for t_idx in np.ndindex(*a.t_shape):
            t = np.add(t_lo, t_idx)
            data[t_idx] *= _phase_factor(sys, k_lo, a.k_shape, t)
    return Kernel(sys, t_lo, k_lo, data)


def inner(a: Kernel, b: Kernel) -> complex:
    """<a | b> = sum_t int_X conj(a(t, x)) b(t, x) dm, by mode orthonormality."""
    _, x, y = a._common(b)
    return complex(np.vdot(x.reshape(-1), y.reshape(-1)))


def _sup_resolution(a: Kernel, minimum=64) -> int:
    return max(minimum, 8 * max(a.mode_degree, 1))


def l1_norm_report(a: Kernel, resolution: int | None = None) -> dict:
    """sum_t sup_x |a(t, x)| with the sup taken over a uniform grid on X.

    The grid has at least 8x the largest mode (64 minimum) points per axis;
    on finite and one-point spaces the sup is exact.
    """
    res = resolution or _sup_resolution(a)
    grid = haar_grid(a.system.space, res)
    total = 0.0
    for t in a.support():
        total += float(np.max(np.abs(a.evaluate(t, grid.nodes))))
    exact = not isinstance(a.system.space, Torus)
    return {"value": total, "resolution": None if exact else res, "exact": exact}


def l1_norm(a: Kernel, resolution: int | None = None) -> float:
    return l1_norm_report(a, resolution)["value"]


def random_kernel(system: DynamicalSystem, rng: np.random.Generator, radius=3, degree=3,
                  density=1.0) -> Kernel:
    """Complex Gaussian coefficients on t in {-radius..radius}^d and |k| <= degree.

    ``degree=0`` gives constant coefficients.  On the finite cyclic space all
    modes of Z_p are filled regardless of ``degree``.
    """
    d, D = system.rank, system.dim
    t_shape = (2 * radius + 1,) * d
    per = system.space.mode_periods
    if per is not None and D:
        k_lo, k_shape = (0,) * D, tuple(per)
    elif D:
        k_lo, k_shape = (-degree,) * D, (2 * degree + 1,) * D
    else:
        k_lo, k_shape = (), ()
    shape = t_shape + k_shape
    data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if density < 1.0:
        data *= rng.random(shape) < density
    if per is not None and D and degree == 0:
        mask = np.zeros(k_shape, dtype=bool)
        mask[(0,) * D] = True
        data *= mask
    return Kernel(system, (-radius,) * d, k_lo, data)

