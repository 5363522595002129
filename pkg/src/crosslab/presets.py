"""Named kernels: unit, laplacian, almost_mathieu(lambda), periodic(v_0..v_{p-1})."""
from __future__ import annotations

import numpy as np

from .algebra import Kernel
from .dynsys import GOLDEN, DynamicalSystem, FiniteCyclic, Torus
from .errors import UnsupportedSpace

CATALOG = {
    "unit": {
        "parameters": [],
        "definition": "a(0, x) = 1, a(t, x) = 0 for t != 0  (delta_0 (x) 1, the unit of the algebra)",
        "default_system": "torus, theta = (sqrt(5) - 1) / 2",
    },
    "laplacian": {
        "parameters": [],
        "definition": "a(+-e_i, x) = 1 for every generator e_i of Z^d, a(t, x) = 0 otherwise",
        "default_system": "torus, theta = (sqrt(5) - 1) / 2",
    },
    "almost_mathieu": {
        "parameters": ["lambda", "theta"],
        "definition": "a(+-1, x) = 1, a(0, x) = lambda * cos(2 pi x)  on Z acting on T by x -> x + theta",
        "note": "coupling convention: (H xi)(n) = xi(n+1) + xi(n-1) + lambda cos(2 pi (x + n theta)) xi(n); "
                "lambda = 2 is the self-dual (Harper) point",
        "default_system": "torus, theta = (sqrt(5) - 1) / 2",
    },
    "periodic": {
        "parameters": ["potential"],
        "definition": "a(+-1, x) = 1, a(0, x) = v[x]  on Z acting on Z_p, p = len(v)",
        "default_system": "finite cyclic with period len(v)",
    },
}


def list_presets() -> dict:
    return {name: dict(entry) for name, entry in CATALOG.items()}


def unit(system: DynamicalSystem | None = None) -> Kernel:
    return Kernel.unit(system or DynamicalSystem.rotation(GOLDEN))


def laplacian(system: DynamicalSystem | None = None) -> Kernel:
    system = system or DynamicalSystem.rotation(GOLDEN)
    d, D = system.rank, system.dim
    terms = {}
    for i in range(d):
        e = np.zeros(d, dtype=int)
        e[i] = 1
        terms[(tuple(e), (0,) * D)] = 1.0
        terms[(tuple(-e), (0,) * D)] = 1.0
    return Kernel.from_terms(system, terms)


def almost_mathieu(lam: float, theta: float = GOLDEN, system: DynamicalSystem | None = None) -> Kernel:
    """Hopping 1 plus potential lam * sum_i cos(2 pi x_i) on a rotation system."""
    system = system or DynamicalSystem.rotation(theta)
    if not isinstance(system.space, Torus):
        raise UnsupportedSpace("almost_mathieu needs a torus")
    kern = laplacian(system)
    d, D = system.rank, system.dim
    terms = {}
    for i in range(D):
        e = np.zeros(D, dtype=int)
        e[i] = 1
        terms[((0,) * d, tuple(e))] = lam / 2
        terms[((0,) * d, tuple(-e))] = lam / 2
    return kern + Kernel.from_terms(system, terms)


def periodic(potential, system: DynamicalSystem | None = None) -> Kernel:
    """Laplacian plus the periodic potential ``potential`` (shape = periods)."""
    v = np.asarray(potential, dtype=float)
    if v.ndim == 0:
        v = v[None]
    system = system or DynamicalSystem.periodic(v.shape)
    if not isinstance(system.space, FiniteCyclic):
        raise UnsupportedSpace("periodic potentials need a finite cyclic space")
    if tuple(v.shape) != system.space.periods:
        v = v.reshape(system.space.periods)
    pot = Kernel.from_coefficients(system, {(0,) * system.rank: v})
    return laplacian(system) + pot


def build(name: str, system: DynamicalSystem | None = None, **params) -> Kernel:
    """Look a preset up by name; unknown names raise KeyError."""
    if name == "unit":
        return unit(system)
    if name == "laplacian":
        return laplacian(system)
    if name == "almost_mathieu":
        lam = params.get("lambda", params.get("lam"))
        if lam is None:
            raise KeyError("almost_mathieu needs a 'lambda' parameter")
        return almost_mathieu(float(lam), float(params.get("theta", GOLDEN)), system)
    if name == "periodic":
        pot = params.get("potential")
        if pot is None:
            raise KeyError("periodic needs a 'potential' parameter")
        return periodic(pot, system)
    raise KeyError(f"unknown preset {name!r}")
