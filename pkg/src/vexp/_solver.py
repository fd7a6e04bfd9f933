"""Vectorized threshold search for non-increasing modular curves.

Every norm in the package has the form ``inf{lam > 0 : rho(lam) <= 1}``
for a non-increasing ``rho``.  We work with ``t = log lam`` and
``G(t) = log rho(e^t)`` and look for the smallest ``t`` with ``G(t) <= 0``.

The search brackets the threshold by doubling/halving ``lam`` and then
shrinks the bracket with Illinois-modified regula falsi, falling back to
bisection whenever the bracket fails to halve within three steps or an
endpoint value is infinite.  It stops on relative width of the
``lam``-bracket, never on closeness of ``rho`` to 1, because ``rho`` may
jump.  The feasible end ``hi`` is what callers report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import BracketFailure

LN2 = np.log(2.0)
MAX_EXPANSIONS = 200
MAX_REFINE = 400

# G(t, rows) -> log-modular values at log-scales t for the given row indices
LogModular = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Bracket:
    lo: np.ndarray      # log-scales where the modular exceeds 1
    hi: np.ndarray      # log-scales where the modular is <= 1
    evaluations: int

    @property
    def rel_width(self) -> np.ndarray:
        return -np.expm1(self.lo - self.hi)


def solve_threshold(G: LogModular, t0: np.ndarray, rtol: float) -> Bracket:
    """Smallest feasible log-scale for each row, to relative width ``rtol``."""
    t0 = np.asarray(t0, dtype=float)
    k = t0.size
    rows = np.arange(k)
    g0 = G(t0, rows)
    evals = 1

    lo = np.full(k, -np.inf)
    hi = np.full(k, np.inf)
    glo = np.full(k, np.inf)
    ghi = np.full(k, -np.inf)
    feas = g0 <= 0
    hi[feas], ghi[feas] = t0[feas], g0[feas]
    lo[~feas], glo[~feas] = t0[~feas], g0[~feas]

    # expand: halve lam from feasible guesses, double from infeasible ones
    for _ in range(MAX_EXPANSIONS + 1):
        need_lo = np.isneginf(lo)
        need_hi = np.isposinf(hi)
        active = np.flatnonzero(need_lo | need_hi)
        if active.size == 0:
            break
        if _ == MAX_EXPANSIONS:
            raise BracketFailure(f"no bracket after {MAX_EXPANSIONS} doublings")
        step = np.where(need_lo[active], -LN2, LN2)
        base = np.where(need_lo[active], hi[active], lo[active])
        t = base + step
        g = G(t, active)
        evals += 1
        ok = g <= 0
        # feasible points always tighten hi, infeasible ones tighten lo
        hi[active[ok]], ghi[active[ok]] = t[ok], g[ok]
        lo[active[~ok]], glo[active[~ok]] = t[~ok], g[~ok]

    # Illinois refinement
    stale = np.zeros(k, dtype=int)     # side retained in consecutive steps
    since = np.zeros(k, dtype=int)     # steps since last halving of width
    ref_w = hi - lo
    for _ in range(MAX_REFINE + 1):
        width_ok = -np.expm1(lo - hi) <= rtol
        active = np.flatnonzero(~width_ok)
        if active.size == 0:
            break
        if _ == MAX_REFINE:
            raise BracketFailure(
                f"bracket did not shrink to rtol={rtol} in {MAX_REFINE} steps")
        a, b = lo[active], hi[active]
        ga, gb = glo[active], ghi[active]
        w = b - a
        fin = np.isfinite(ga) & np.isfinite(gb) & (ga > gb)
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.where(fin, b - gb * w / (gb - ga), 0.5 * (a + b))
        force = since[active] >= 3
        c = np.where(force, 0.5 * (a + b), c)
        # keep trial points inside the bracket; a step of ~rtol/2 next to an endpoint closes the bracket in one go
        eps = np.minimum(0.25 * w, 0.4 * rtol)
        c = np.clip(c, a + eps, b - eps)
        g = G(c, active)
        evals += 1
        ok = g <= 0
        ia, ib = active[~ok], active[ok]
        # Illinois: halve the retained endpoint value on repeated one-sided moves
        rep_b = stale[ib] == 1
        glo[ib[rep_b]] = glo[ib[rep_b]] * 0.5
        rep_a = stale[ia] == -1
        ghi[ia[rep_a]] = ghi[ia[rep_a]] * 0.5
        hi[ib], ghi[ib] = c[ok], g[ok]
        lo[ia], glo[ia] = c[~ok], g[~ok]
        stale[ib] = 1
        stale[ia] = -1
        new_w = hi[active] - lo[active]
        halved = new_w <= 0.5 * ref_w[active]
        ref_w[active[halved]] = new_w[halved]
        since[active] = np.where(halved | force, 0, since[active] + 1)
    return Bracket(lo, hi, evals)


def logsumexp(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """``log(sum(exp(a)))`` along ``axis``; ``-inf`` for empty or all-``-inf`` slices."""
    a = np.asarray(a, dtype=float)
    if a.shape[axis] == 0:
        return np.full(np.delete(a.shape, axis % a.ndim), -np.inf)
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        s = np.log(np.sum(np.exp(a - safe), axis=axis))
    return s + np.squeeze(safe, axis=axis)
