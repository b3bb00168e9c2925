"""Named analytic source/boundary presets.

A preset describes one field family and supplies it in two roles:
``load`` (the right-hand side f of -Δu = f) and ``trace`` (the Dirichlet
data g).  ``exact`` is the known solution whose boundary trace is ``trace``; it
solves the problem only with the load listed in the table (see
:func:`exact_solution`).

=====================  ===========================  ===================  ========
preset                 trace g                      load f               exact
=====================  ===========================  ===================  ========
``zero``               0                            0                    u = 0
``const:c``            c                            c                    u = c (f = 0)
``sinsin``             sin(πx) sin(πy)              2π² sin(πx)sin(πy)   u = g
``linear:a,b,c``       a + b x + c y                0                    u = g
``random-poly:s``      p_s(x, y)                    p_s(x, y)            none
=====================  ===========================  ===================  ========

``p_s`` is the total-degree-3 polynomial whose ten coefficients are
``numpy.random.default_rng(s).uniform(-1, 1, 10)`` assigned to the
monomials ``x^i y^j`` in graded order (0,0),(1,0),(0,1),(2,0),(1,1),
(0,2),(3,0),(2,1),(1,2),(0,3).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigurationError

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]

POLY_DEGREE = 3
POLY_EXPONENTS = [(i, d - i) for d in range(POLY_DEGREE + 1) for i in range(d, -1, -1)]


def _const(c: float) -> Field:
    return lambda x, y: np.full(np.broadcast(x, y).shape, c, dtype=float)


def _poly(coeffs) -> Field:
    def p(x, y):
        x, y = np.asarray(x, float), np.asarray(y, float)
        out = np.zeros(np.broadcast(x, y).shape)
        for c, (i, j) in zip(coeffs, POLY_EXPONENTS):
            out = out + c * x**i * y**j
        return out
    return p


def random_poly_coeffs(seed: int) -> np.ndarray:
    return np.random.default_rng(seed).uniform(-1.0, 1.0, len(POLY_EXPONENTS))


def _sinsin(x, y):
    return np.sin(np.pi * np.asarray(x)) * np.sin(np.pi * np.asarray(y))


@dataclass(frozen=True)
class Preset:
    text: str
    kind: str
    load: Field
    trace: Field
    exact: Field | None = None

    @property
    def harmonic_load(self) -> bool:
        """True when the load role is identically zero."""
        return self.kind in ("zero", "linear")


def _floats(arg: str, n: int, text: str) -> list[float]:
    try:
        vals = [float(v) for v in arg.split(",")]
    except ValueError:
        raise ConfigurationError(f"bad preset arguments in {text!r}") from None
    if len(vals) != n:
        raise ConfigurationError(f"preset {text!r} takes {n} value(s)")
    return vals


def parse_preset(text: str, seed: int = 0) -> Preset:
    """Parse ``name[:args]``; ``random-poly`` without args uses ``seed``."""
    name, _, arg = text.strip().partition(":")
    if name == "zero" and not arg:
        z = _const(0.0)
        return Preset(text, "zero", z, z, z)
    if name == "const":
        (c,) = _floats(arg, 1, text)
        return Preset(text, "const", _const(c), _const(c), _const(c))
    if name == "sinsin" and not arg:
        return Preset(text, "sinsin", lambda x, y: 2 * np.pi**2 * _sinsin(x, y), _sinsin, _sinsin)
    if name == "linear":
        a, b, c = _floats(arg, 3, text)
        g = lambda x, y: a + b * np.asarray(x, float) + c * np.asarray(y, float)  # noqa: E731
        return Preset(text, "linear", _const(0.0), g, g)
    if name == "random-poly":
        try:
            s = int(arg) if arg else int(seed)
        except ValueError:
            raise ConfigurationError(f"bad seed in {text!r}") from None
        p = _poly(random_poly_coeffs(s))
        return Preset(text, "random-poly", p, p)
    raise ConfigurationError(f"unknown preset {text!r}")


def exact_solution(f: Preset, g: Preset) -> Field | None:
    """Exact solution of -Δu = f.load, u = g.trace, when one is known."""
    if g.exact is None:
        return None
    if g.kind == "sinsin" and f.kind == "sinsin":
        return g.exact
    if g.kind in ("zero", "const", "linear") and f.harmonic_load:
        return g.exact
    return None
