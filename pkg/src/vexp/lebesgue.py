"""Variable-exponent Lebesgue modular and Luxemburg norm."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._solver import logsumexp, solve_threshold
from .domain import GridFunction, integrate
from .errors import NonFinite
from .exponents import ExponentField

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class NormResult:
    """A computed norm with its solver diagnostics.

    ``value`` is the feasible end of the final bracket, so the modular at
    ``value`` never exceeds 1.
    """

    value: float
    modular_at_value: float
    bracket: tuple[float, float]
    iterations: int
    tolerance: float


def _log_abs(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(values))


def log_modular_lp(p: ExponentField, values: np.ndarray) -> float:
    """``log`` of the modular; computed in log space so it never overflows."""
    la = _log_abs(values)
    fin = ~p.omega_inf_mask
    body = logsumexp(math.log(p.grid.dx) + p.values[fin] * la[fin]) if fin.any() else -np.inf
    if p.omega_inf_mask.any():
        return float(np.logaddexp(body, np.max(la[p.omega_inf_mask])))
    return float(body)


def modular_lp(p: ExponentField, f: GridFunction) -> float:
    """``sum_{p<inf} dx |f|^p + max_{p=inf} |f|``; may be ``inf``."""
    p.grid.check_same(f.grid)
    with np.errstate(over="ignore"):
        return float(np.exp(log_modular_lp(p, f.values)))


def initial_scale(values: np.ndarray, dx: float, exponent_min: float) -> float:
    """Bracket seed ``max|f| * |supp f|^(1/p_minus)``."""
    a = np.abs(values)
    measure = dx * np.count_nonzero(a)
    expo = 0.0 if math.isinf(exponent_min) else 1.0 / exponent_min
    return float(a.max() * measure ** expo)


def luxemburg_norm(p: ExponentField, f: GridFunction, tol: float = DEFAULT_TOL) -> NormResult:
    """``inf{lam > 0 : modular(f / lam) <= 1}`` by bracketed root search."""
    p.grid.check_same(f.grid)
    vals = f.values
    if not np.all(np.isfinite(vals)):
        raise NonFinite("function has non-finite entries")
    if not np.any(vals):
        return NormResult(0.0, 0.0, (0.0, 0.0), 0, tol)

    def G(t, rows):
        return np.array([log_modular_lp(p, vals / math.exp(t[0]))])

    seed = initial_scale(vals, p.grid.dx, p.p_minus)
    br = solve_threshold(G, np.array([math.log(seed)]), tol)
    value = math.exp(br.hi[0])
    return NormResult(value, modular_lp(p, f / value),
                      (math.exp(br.lo[0]), value), br.evaluations, tol)


def pairing_l1(f: GridFunction, g: GridFunction) -> float:
    """``integral f g dx``."""
    f.grid.check_same(g.grid)
    return integrate(f * g)
