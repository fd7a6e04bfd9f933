"""The mixed Lebesgue-sequence space: modulars, norm, truncations.

The modular is computed two independent ways.  :func:`mixed_modular_p1`
solves, for every term, ``inf{lam : rho_p(lam^{-1/q} |f_nu|) <= 1}`` by
root search in ``lam``; :func:`mixed_modular_p1a` sums Luxemburg norms of
``|f_nu|^q`` in ``L^{p/q}``.  They must agree whenever ``q`` is finite
and ``p`` is finite (with infinite ``p`` the supremum parts are raised to
different powers, see :func:`mixed_modular_p1a`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._solver import logsumexp, solve_threshold
from .domain import FuncSequence, GridFunction
from .errors import BracketFailure, InputError, NonFinite, QPlusInfinite
from .exponents import ExponentField
from .lebesgue import DEFAULT_TOL, NormResult, _log_abs, initial_scale, luxemburg_norm

INNER_TOL = DEFAULT_TOL
OUTER_TOL = 1e-8


def scaling_powers(q: ExponentField) -> np.ndarray:
    """Powers ``1/q(x)`` in the scaling ``lam^{-1/q(x)}``.

    The convention ``lam^{1/inf} = 1`` makes the power 0 where ``q`` is
    infinite.
    """
    return q.reciprocal()


@dataclass(frozen=True)
class MixedModularBreakdown:
    per_term: tuple[float, ...]
    total: float
    iterations: int = 0


class _Terms:
    """Log-space data for a stack of per-term infimum problems.

    Row ``r`` describes one term.  Over finite-``p`` columns it holds
    ``a0 = log dx + p log|f|`` and the decay rates ``p/q`` in ``lam``; over
    infinite-``p`` columns it holds ``log|f|`` and rates ``1/q``.  ``expo``
    maps rows to rows of the exponent tables so a batch of candidates can
    share them.  ``shift`` divides every term by ``e^shift`` (an outer
    scale) without rebuilding the arrays.
    """

    def __init__(self, a0, p, rate, expo, b0=None, rate_inf=None):
        self.a0 = a0
        self.p = p
        self.rate = rate
        self.expo = expo
        self.b0 = b0
        self.rate_inf = rate_inf
        self.shift = np.zeros(a0.shape[0])

    @classmethod
    def from_sequence(cls, p: ExponentField, q: ExponentField, values: np.ndarray):
        la = _log_abs(values)
        fin = ~p.omega_inf_mask
        inv_q = scaling_powers(q)
        pf = p.values[fin]
        a0 = math.log(p.grid.dx) + pf * la[:, fin]
        a0[np.isnan(a0)] = -np.inf
        b0 = rate_inf = None
        if p.omega_inf_mask.any():
            b0 = la[:, p.omega_inf_mask]
            rate_inf = inv_q[p.omega_inf_mask]
        expo = np.zeros(values.shape[0], dtype=int)
        return cls(a0, pf[None, :], (pf * inv_q[fin])[None, :], expo, b0, rate_inf)

    def G(self, s: np.ndarray, rows: np.ndarray) -> np.ndarray:
        e = self.expo[rows]
        sh = self.shift[rows][:, None]
        x = self.a0[rows] - self.rate[e] * s[:, None] - self.p[e] * sh
        out = logsumexp(x)
        if self.b0 is not None:
            y = self.b0[rows] - self.rate_inf * s[:, None] - sh
            out = np.logaddexp(out, np.max(y, axis=1))
        return out

    def _limits(self):
        """Per row: whether the modular decays in ``lam``, and its limit."""
        alive = np.isfinite(self.a0)
        pos = self.rate[self.expo] > 0
        decays = np.any(alive & pos, axis=1)
        flat = np.where(alive & ~pos, self.a0 - self.p[self.expo] * self.shift[:, None], -np.inf)
        limit = logsumexp(flat)
        if self.b0 is not None:
            alive_i = np.isfinite(self.b0)
            pos_i = (self.rate_inf > 0)[None, :]
            decays |= np.any(alive_i & pos_i, axis=1)
            flat_i = np.where(alive_i & ~pos_i, self.b0 - self.shift[:, None], -np.inf)
            limit = np.logaddexp(limit, np.max(flat_i, axis=1) if flat_i.shape[1] else -np.inf)
        return decays, limit

    def _seed(self, rows: np.ndarray) -> np.ndarray:
        """One secant-in-log-log guess from the modular at ``lam = 1``.

        Slots that do not decay (rate 0) contribute a constant, so the
        decaying part has to fall to ``1 - constant`` rather than to 1.
        """
        e = self.expo[rows]
        x = self.a0[rows] - self.p[e] * self.shift[rows][:, None]
        r = self.rate[e]
        dec = r > 0
        g_dec = logsumexp(np.where(dec, x, -np.inf))
        g_flat = logsumexp(np.where(dec, -np.inf, x))
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            room = np.log1p(-np.exp(np.minimum(g_flat, 0.0)))
            w = np.exp(np.where(dec, x, -np.inf) - g_dec[:, None])
            rate = np.sum(np.where(dec, w * r, 0.0), axis=1)
            rate = np.where(rate > 0, rate, 1.0)
            t0 = np.where(np.isfinite(g_dec) & np.isfinite(room), (g_dec - room) / rate, 0.0)
        return np.clip(t0, -600.0, 600.0)

    def solve(self, rtol: float):
        """Log of the per-term infima (``-inf`` for 0, ``inf`` if none)."""
        n = self.a0.shape[0]
        out = np.empty(n)
        decays, limit = self._limits()
        const = ~decays
        out[const] = np.where(limit[const] <= 0, -np.inf, np.inf)
        # a decaying modular that never gets below 1
        hopeless = decays & (limit >= 0)
        out[hopeless] = np.inf
        todo = np.flatnonzero(decays & ~hopeless)
        evals = 0
        if todo.size:
            sub = _Terms(self.a0[todo], self.p, self.rate, self.expo[todo],
                         None if self.b0 is None else self.b0[todo], self.rate_inf)
            sub.shift = self.shift[todo]
            br = solve_threshold(sub.G, sub._seed(np.arange(todo.size)), rtol)
            out[todo] = br.hi
            evals = br.evaluations
        return out, evals


def _check(p: ExponentField, q: ExponentField, f: FuncSequence):
    p.grid.check_same(q.grid)
    p.grid.check_same(f.grid)


def mixed_modular_p1(p: ExponentField, q: ExponentField, f: FuncSequence,
                     tol: float = INNER_TOL) -> MixedModularBreakdown:
    """Sum over terms of ``inf{lam > 0 : rho_p(lam^{-1/q} |f_nu|) <= 1}``."""
    _check(p, q, f)
    if f.n_terms == 0:
        return MixedModularBreakdown((), 0.0, 0)
    logs, evals = _Terms.from_sequence(p, q, f.values).solve(tol)
    with np.errstate(over="ignore"):
        per_term = tuple(float(v) for v in np.exp(logs))
    total = math.inf if any(math.isinf(v) for v in per_term) else math.fsum(per_term)
    return MixedModularBreakdown(per_term, total, evals)


def quotient_exponent(p: ExponentField, q: ExponentField) -> ExponentField:
    """Pointwise ``p/q`` (``inf`` where ``p`` is) as a class-P0 field."""
    if not q.is_finite:
        raise QPlusInfinite("p/q needs q_plus < inf")
    r = np.where(p.omega_inf_mask, np.inf, p.values / q.values)
    return ExponentField(r, p.grid, "P0", floor=float(r.min()))


def mixed_modular_p1a(p: ExponentField, q: ExponentField, f: FuncSequence,
                      tol: float = INNER_TOL) -> float:
    """Sum over terms of the ``L^{p/q}`` Luxemburg norm of ``|f_nu|^q``.

    Equals :func:`mixed_modular_p1` when ``p`` is finite.  Where ``p`` is
    infinite this formula raises the supremum part to the power ``q``
    while the per-term infimum form does not, so the two can differ.
    """
    _check(p, q, f)
    r = quotient_exponent(p, q)
    total = []
    with np.errstate(over="ignore"):
        powered = np.abs(f.values) ** q.values
    if not np.all(np.isfinite(powered)):
        raise NonFinite("|f|^q overflows")
    for row in powered:
        total.append(luxemburg_norm(r, GridFunction(row, f.grid), tol).value)
    return math.fsum(total)


def mixed_norm(p: ExponentField, q: ExponentField, f: FuncSequence,
               tol: float = OUTER_TOL, inner_tol: float = INNER_TOL) -> NormResult:
    """``inf{lam > 0 : mixed modular of f/lam <= 1}``."""
    _check(p, q, f)
    vals = f.values
    if not np.all(np.isfinite(vals)):
        raise NonFinite("sequence has non-finite entries")
    if not np.any(vals):
        return NormResult(0.0, 0.0, (0.0, 0.0), 0, tol)

    def G(t, rows):
        total = mixed_modular_p1(p, q, f / math.exp(t[0]), inner_tol).total
        with np.errstate(divide="ignore"):
            return np.array([math.log(total) if total > 0 else -np.inf])

    seed = initial_scale(vals.ravel(), p.grid.dx, min(p.p_minus, q.p_minus))
    br = solve_threshold(G, np.array([math.log(seed)]), tol)
    value = math.exp(br.hi[0])
    return NormResult(value, mixed_modular_p1(p, q, f / value, inner_tol).total,
                      (math.exp(br.lo[0]), value), br.evaluations, tol)


def project(N: int, f: FuncSequence) -> FuncSequence:
    """Keep the first ``N`` terms; the rest become the implicit zeros."""
    if N < 0:
        raise InputError("N must be non-negative")
    return FuncSequence(f.values[:N], f.grid)


def lqminus_norm(p: ExponentField, q_minus: float, f: FuncSequence,
                 tol: float = INNER_TOL) -> float:
    """``(sum_nu ||f_nu||_{L^p}^{q_minus})^{1/q_minus}``."""
    if not (1 <= q_minus < math.inf):
        raise InputError("q_minus must be finite and >= 1")
    p.grid.check_same(f.grid)
    norms = [luxemburg_norm(p, t, tol).value for t in f.terms]
    return math.fsum(v ** q_minus for v in norms) ** (1.0 / q_minus)


# -- batch norms on restricted supports (used by the duality module) -------

@dataclass
class Pattern:
    """Support layout of a sequence restricted to its nonzero entries.

    ``cols[nu]`` lists the grid indices kept in term ``nu``; arrays of
    shape ``(n_terms, width)`` hold them left-aligned, padded with
    inactive slots.
    """

    cols: list
    mask: np.ndarray      # (T, m) True on real slots
    p: np.ndarray         # (T, m)
    rate: np.ndarray      # (T, m) p/q
    dx: float

    @classmethod
    def from_support(cls, p: ExponentField, q: ExponentField, support: np.ndarray):
        if not (p.is_finite and q.is_finite):
            raise InputError("restricted-support norms need finite exponents")
        cols = [np.flatnonzero(row) for row in support]
        # empty terms stay as fully masked rows so term indices line up
        m = max([c.size for c in cols] + [1])
        T = len(cols)
        mask = np.zeros((T, m), dtype=bool)
        P = np.ones((T, m))
        R = np.ones((T, m))
        for i, c in enumerate(cols):
            mask[i, :c.size] = True
            P[i, :c.size] = p.values[c]
            R[i, :c.size] = p.values[c] / q.values[c]
        return cls(cols, mask, P, R, p.grid.dx)

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    def pack(self, seq_values: np.ndarray) -> np.ndarray:
        out = np.zeros(self.mask.shape, dtype=seq_values.dtype)
        for i, c in enumerate(self.cols):
            out[i, :c.size] = seq_values[i, c] if i < seq_values.shape[0] else 0
        return out

    def unpack(self, packed: np.ndarray, n_terms: int, n_points: int) -> np.ndarray:
        out = np.zeros((n_terms, n_points), dtype=packed.dtype)
        for i, c in enumerate(self.cols):
            out[i, c] = packed[i, :c.size]
        return out


MAX_NEWTON = 100


def _inner_newton(x0: np.ndarray, rate: np.ndarray, s: np.ndarray, tol: float):
    """Per-row root of ``logsumexp(x0 - rate * s) = 0`` in ``s``.

    Each row is convex and strictly decreasing (all rates positive), so
    after the first step Newton approaches the root monotonically from the
    left.  Rows with no live slot get ``-inf``.  Returns the roots, the
    normalized slot weights ``w`` at the roots and the slopes
    ``A = sum w * rate``.
    """
    live = np.isfinite(x0).any(axis=1)
    s = np.where(live, s, 0.0)
    x0 = np.where(live[:, None], x0, 0.0)
    w = np.empty_like(x0)
    A = np.empty(s.shape)
    act = np.arange(s.size)
    for _ in range(MAX_NEWTON):
        x = x0[act] - rate[act] * s[act, None]
        g = logsumexp(x)
        wa = np.exp(x - g[:, None])
        Aa = np.sum(wa * rate[act], axis=1)
        step = g / Aa
        s[act] += step
        w[act], A[act] = wa, Aa
        # the weights are one step stale on finishing rows, which only
        # touches the derivative at second order
        act = act[np.abs(step) > tol * np.maximum(1.0, np.abs(s[act]))]
        if act.size == 0:
            break
    else:
        raise BracketFailure(f"inner Newton did not reach {tol} in {MAX_NEWTON} steps")
    return np.where(live, s, -np.inf), w, A


def batch_log_norm(pattern: Pattern, logh: np.ndarray, tol: float, inner_tol: float):
    """Log mixed norms of many packed candidates at once.

    ``logh`` has shape ``(M, T, m)`` (``-inf`` on padding).  Returns the
    log norms ``(M,)`` and the per-term log infima at those norms
    ``(M, T)``.

    Both nested threshold equations are solved by Newton's method: the
    inner one in ``log lam`` per term, the outer one in ``t = log mu`` with
    the derivative ``d log lam_nu / dt = -B_nu / A_nu`` from implicit
    differentiation, safeguarded by bisection inside the sign bracket.
    """
    M, T, m = logh.shape
    a0 = math.log(pattern.dx) + pattern.p[None] * logh
    a0 = np.where(pattern.mask[None], a0, -np.inf)
    P = pattern.p
    R = np.where(pattern.mask, pattern.rate, 1.0)

    peak = np.max(logh.reshape(M, -1), axis=1)
    count = pattern.size
    pmin = float(min(pattern.p[pattern.mask].min(), (pattern.p / pattern.rate)[pattern.mask].min()))
    t = peak + math.log(pattern.dx * count) / pmin
    lo = np.full(M, -np.inf)
    hi = np.full(M, np.inf)
    s = np.zeros((M, T))
    t_out = np.empty(M)
    act = np.arange(M)
    for _ in range(MAX_NEWTON):
        k = act.size
        x0 = (a0[act] - P[None] * t[act, None, None]).reshape(k * T, m)
        Rk = np.broadcast_to(R, (k, T, m)).reshape(k * T, m)
        sa, w, A = _inner_newton(x0, Rk, s[act].reshape(-1), inner_tol)
        B = np.sum(w * np.broadcast_to(P, (k, T, m)).reshape(k * T, m), axis=1)
        ls = sa.reshape(k, T)
        s[act] = ls
        F = logsumexp(ls)
        live = np.isfinite(ls)
        with np.errstate(invalid="ignore"):
            share = np.where(live, np.exp(ls - F[:, None]), 0.0)
        dsdt = np.where(live, (-B / A).reshape(k, T), 0.0)
        dF = np.sum(share * dsdt, axis=1)
        ta = t[act]
        lo[act] = np.where(F > 0, ta, lo[act])
        hi[act] = np.where(F <= 0, ta, hi[act])
        step = -F / dF
        # relative test: at large |t| an absolute one sits below rounding
        done = np.abs(step) <= tol * np.maximum(1.0, np.abs(ta))
        t_out[act[done]] = ta[done]
        nxt = ta + step
        bad = ~done & ((nxt <= lo[act]) | (nxt >= hi[act]))
        nxt = np.where(bad, 0.5 * (lo[act] + hi[act]), nxt)
        # warm start the inner solves along the tangent
        s[act] = np.where(live, ls + dsdt * (nxt - ta)[:, None], 0.0)
        t[act] = nxt
        s[act[done]] = ls[done]
        act = act[~done]
        if act.size == 0:
            break
    else:
        raise BracketFailure(f"outer Newton did not reach {tol} in {MAX_NEWTON} steps")
    return t_out, s


def log_norm_gradient(pattern: Pattern, logh: np.ndarray, log_mu: float,
                      log_lam: np.ndarray) -> np.ndarray:
    """Gradient of ``log ||h||`` with respect to ``log h`` (packed layout).

    Implicit differentiation of the two nested threshold equations: with
    ``w`` the normalized per-term modular weights at the solution,
    ``A = sum w p/q`` and ``B = sum w p``, the derivative at entry ``i`` of
    term ``nu`` is ``lam_nu p_i w_i / (A_nu S)`` where
    ``S = sum_nu lam_nu B_nu / A_nu``.
    """
    live = np.isfinite(log_lam)
    on = pattern.mask & live[:, None]
    with np.errstate(invalid="ignore"):
        x = math.log(pattern.dx) + pattern.p * (logh - log_mu) - pattern.rate * log_lam[:, None]
    x = np.where(on, x, -np.inf)
    x[~live] = 0.0       # dead terms get dummy weights and zero coefficients
    w = np.exp(x - logsumexp(x)[:, None])
    A = np.sum(w * pattern.rate, axis=1)
    B = np.sum(w * pattern.p, axis=1)
    lam = np.exp(log_lam)
    coef = np.zeros_like(lam)
    coef[live] = lam[live] / A[live]
    S = np.sum(coef * B)
    return coef[:, None] * pattern.p * w / S
