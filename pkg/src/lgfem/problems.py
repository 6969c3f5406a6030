"""Manufactured and forced test problems on the unit square.

All callables are vectorized over numpy arrays with signature
f(x, y, t) -> stacked components ((2, ...) for vectors).  The forcing of
the manufactured problem is derived symbolically from the exact solution
and validated elsewhere against a finite-difference oracle of the
momentum residual.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
import sympy as sym


@dataclass(frozen=True)
class ProblemDef:
    name: str
    T: float
    f: Callable  # forcing, (x, y, t, nu?) bound to nu already
    u0: Callable  # initial velocity, (x, y)
    exact_u: Optional[Callable] = None
    exact_p: Optional[Callable] = None
    w: Optional[Callable] = None  # convection velocity (Oseen only)
    cp: float = 0.0
    nu: float = 1.0


@lru_cache(maxsize=None)
def _manufactured_expressions():
    """Symbolic exact solution and forcing with free (nu, Cp)."""
    x1, x2, t, a, b = sym.symbols("x1 x2 t a b", real=True)
    nu, cp = sym.symbols("nu Cp", positive=True)
    pi = sym.pi
    phi = -sym.sin(pi * a) ** 2 * sym.sin(pi * b) * (
        sym.sin(pi * (a + t)) + 3 * sym.sin(pi * (a + 2 * b + t))
    )
    u1 = phi.subs({a: x1, b: x2}, simultaneous=True)
    u2 = -phi.subs({a: x2, b: x1}, simultaneous=True)
    p = cp * sym.sin(pi * (x1 + 2 * x2) + 1 + t)

    def momentum(u):
        conv = u1 * sym.diff(u, x1) + u2 * sym.diff(u, x2)
        lap = sym.diff(u, x1, 2) + sym.diff(u, x2, 2)
        return sym.diff(u, t) + conv - nu * lap

    f1 = momentum(u1) + sym.diff(p, x1)
    f2 = momentum(u2) + sym.diff(p, x2)

    args = (x1, x2, t, nu, cp)
    return {
        "u": sym.lambdify(args[:3], [u1, u2], "numpy", cse=True),
        "p": sym.lambdify((x1, x2, t, cp), p, "numpy"),
        "f": sym.lambdify(args, [f1, f2], "numpy", cse=True),
    }


def example41(cp, kind="oseen", nu=1e-2):
    """Manufactured transient flow problem with pressure amplitude cp.

    kind "oseen" supplies the exact velocity as the convection field w;
    kind "navier_stokes" leaves w unset.  The forcing depends on the
    viscosity and is bound to the given nu.
    """
    if kind not in ("oseen", "navier_stokes"):
        raise ValueError(f"unknown problem kind {kind!r}")
    fns = _manufactured_expressions()
    cp = float(cp)
    nu = float(nu)

    def exact_u(x, y, t):
        return np.asarray(fns["u"](x, y, t), dtype=np.float64)

    def exact_p(x, y, t):
        return np.asarray(fns["p"](x, y, t, cp), dtype=np.float64)

    def forcing(x, y, t):
        return np.asarray(fns["f"](x, y, t, nu, cp), dtype=np.float64)

    def u0(x, y):
        return exact_u(x, y, 0.0)

    return ProblemDef(
        name=f"manufactured_cp{cp:g}",
        T=1.0,
        f=forcing,
        u0=u0,
        exact_u=exact_u,
        exact_p=exact_p,
        w=exact_u if kind == "oseen" else None,
        cp=cp,
        nu=nu,
    )


def example42():
    """Forced Navier-Stokes problem with stationary solution u = 0,
    p = -(5/pi) cos(2 pi x2)."""

    def forcing(x, y, t):
        z = np.zeros_like(np.asarray(x, dtype=np.float64))
        return np.stack([z, 10.0 * np.sin(2.0 * np.pi * np.asarray(y))])

    def u0(x, y):
        z = np.zeros_like(np.asarray(x, dtype=np.float64))
        return np.stack([z, z])

    def exact_u(x, y, t):
        return u0(x, y)

    def exact_p(x, y, t):
        return -(5.0 / np.pi) * np.cos(2.0 * np.pi * np.asarray(y, dtype=np.float64))

    return ProblemDef(
        name="forced_rest_state",
        T=40.0,
        f=forcing,
        u0=u0,
        exact_u=exact_u,
        exact_p=exact_p,
        w=None,
        cp=0.0,
        nu=1e-4,
    )
