"""Köthe dual norm of the mixed space, dual tails, and the norming check.

The dual norm of ``g`` is ``sup |<f, g>|`` over the unit ball of the mixed
norm.  Aligning phases (``f_nu -> f_nu * conj(sgn g_nu)``) shows it is
enough to maximize ``<h, |g|>`` over nonnegative ``h``; the objective is
then monotone, the supremum sits on the unit sphere, and we search over
directions ``h`` with value ``<h, |g|> / ||h||``.

ASCENT maximizes ``log <h,|g|> - log ||h||`` in ``theta = log h`` with
L-BFGS, using the exact gradient of the mixed norm.  BRUTE enumerates a
product grid of directions on the positive part of the unit sphere and
refuses more than six degrees of freedom.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._solver import logsumexp
from .domain import FuncSequence, GridFunction
from .errors import InfiniteExponent, NotNormable, TooLargeForBrute
from .exponents import Condition, ExponentField, check_normability, conjugate
from .lebesgue import luxemburg_norm
from .mixed import OUTER_TOL, Pattern, batch_log_norm, log_norm_gradient, mixed_norm

BRUTE_DOF_CAP = 6
BRUTE_MIN_LEVELS = 20
BRUTE_BUDGET = 2 ** 17
BRUTE_CHUNK = 1 << 15
N_STARTS = 5
STALL_WINDOW = 25
MAX_ASCENT_ITER = 1000
# tolerances of the norm evaluations inside the optimizers; tighter than the
# reporting tolerance so the objective is smooth at the scale L-BFGS sees
SEARCH_TOL = 1e-12
SEARCH_INNER_TOL = 1e-13
# cap on the conjugate powers p'-1, q'-1 used to shape the starts
MAX_DUAL_POWER = 50.0
MIN_SHARE = 1e-16


class Method(str, enum.Enum):
    BRUTE = "brute"
    ASCENT = "ascent"


@dataclass
class DualNormResult:
    value: float
    maximizer: FuncSequence
    method: Method
    certificate_gap: float | None = None
    iterations: int = 0
    starts: int = 0

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method.value, "starts": self.starts,
                "certificate_gap": self.certificate_gap, "iterations": self.iterations}


def pairing(f: FuncSequence, g: FuncSequence) -> float:
    """``sum_nu integral f_nu g_nu dx``; the shorter sequence is zero-padded."""
    f.grid.check_same(g.grid)
    n = min(f.n_terms, g.n_terms)
    return float(f.grid.dx * np.sum(f.values[:n] * g.values[:n]).real)


def _phase(values: np.ndarray) -> np.ndarray:
    """Unit-modulus factor that makes ``values * phase`` nonnegative."""
    a = np.abs(values)
    out = np.ones_like(values)
    nz = a > 0
    out[nz] = np.conj(values[nz]) / a[nz]
    return out


def _require(p: ExponentField, q: ExponentField, g: FuncSequence):
    p.grid.check_same(q.grid)
    p.grid.check_same(g.grid)
    if not (p.is_finite and q.is_finite):
        raise InfiniteExponent("dual norms need p_plus, q_plus < inf")
    if check_normability(p, q).tag is Condition.NONE:
        raise NotNormable("none of the normability conditions holds; the unit ball may not be convex")


def _instance_seed(*arrays) -> int:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a).tobytes())
    return int.from_bytes(h.digest()[:8], "little")


class _Problem:
    """Direction search for ``<h, |g|> / ||h||`` on the support of ``g``."""

    def __init__(self, p, q, g: FuncSequence):
        self.p, self.q, self.g = p, q, g
        self.pattern = Pattern.from_support(p, q, g.values != 0)
        self.log_absg = np.log(self.pattern.pack(np.abs(g.values))[self.pattern.mask])
        self.log_dx = math.log(self.pattern.dx)
        self.dof = self.pattern.size

    def logh(self, theta: np.ndarray) -> np.ndarray:
        out = np.full(self.pattern.mask.shape, -np.inf)
        out[self.pattern.mask] = theta
        return out

    def objective(self, theta: np.ndarray):
        """``-J`` and its gradient, ``J = log <h,|g|> - log ||h||``."""
        logh = self.logh(theta)
        log_mu, log_lam = batch_log_norm(self.pattern, logh[None], SEARCH_TOL, SEARCH_INNER_TOL)
        x = theta + self.log_absg
        lse = logsumexp(x)
        J = self.log_dx + lse - log_mu[0]
        dnorm = log_norm_gradient(self.pattern, logh, log_mu[0], log_lam[0])
        grad = np.exp(x - lse) - dnorm[self.pattern.mask]
        return -float(J), -grad

    def maximizer(self, theta: np.ndarray) -> FuncSequence:
        logh = self.logh(theta)
        log_mu, _ = batch_log_norm(self.pattern, logh[None], SEARCH_TOL, SEARCH_INNER_TOL)
        h = np.exp(logh - log_mu[0])
        full = self.pattern.unpack(h, self.g.n_terms, self.g.grid.n_points)
        return FuncSequence(full * _phase(self.g.values), self.g.grid)

    def starts(self, n_starts: int) -> list[np.ndarray]:
        """Deterministic start set for the ascent.

        The first start is the constant-exponent maximizer
        ``(|g_nu| / a_nu)^(p'-1) * a_nu^(q'-1)`` with ``a_nu`` the
        ``L^{p'}`` norm of ``g_nu``, evaluated with the pointwise exponents;
        it is exact when ``p`` and ``q`` are constant.  Then the plain
        Hölder shape ``|g|^(p'-1)``, ``|g|`` itself, and random
        perturbations of the first start seeded by the instance.
        """
        pat = self.pattern
        pv = pat.p[pat.mask]
        qv = (pat.p / pat.rate)[pat.mask]
        ep = 1.0 / np.maximum(pv - 1.0, 1.0 / MAX_DUAL_POWER)
        eq = 1.0 / np.maximum(qv - 1.0, 1.0 / MAX_DUAL_POWER)
        pc = conjugate(self.p)
        log_a = np.zeros(pat.mask.shape)
        absg = np.abs(self.g.values)
        for nu, cols in enumerate(pat.cols):
            if cols.size:
                a = luxemburg_norm(pc, GridFunction(absg[nu], self.g.grid), SEARCH_INNER_TOL).value
                log_a[nu] = math.log(a)
        log_a = log_a[pat.mask]
        dual = ep * (self.log_absg - log_a) + eq * log_a
        out = [dual, ep * self.log_absg, self.log_absg.copy()]
        rng = np.random.default_rng(_instance_seed(self.p.values, self.q.values, self.g.values))
        while len(out) < n_starts:
            out.append(dual + rng.standard_normal(dual.size))
        return out[:n_starts]


def _ascend(problem: _Problem, theta0: np.ndarray, tol: float):
    """L-BFGS from ``theta0`` in diagonally rescaled coordinates.

    Entries carrying a tiny share of ``<h, |g|>`` leave the objective
    nearly flat in their direction; stretching each coordinate by
    ``share^(-1/2)`` (measured at the start) evens out the curvature.
    """
    x = theta0 + problem.log_absg
    share = np.exp(x - logsumexp(x))
    scale = 1.0 / np.sqrt(np.maximum(share, MIN_SHARE))
    history = []

    def fun(u):
        f, g = problem.objective(theta0 + scale * u)
        return f, g * scale

    # J is a log, so a difference in J is a relative improvement of the value
    def callback(intermediate_result):
        history.append(-intermediate_result.fun)
        if len(history) > STALL_WINDOW and history[-1] - history[-STALL_WINDOW - 1] <= tol:
            raise StopIteration

    res = minimize(fun, np.zeros_like(theta0), jac=True, method="L-BFGS-B", callback=callback,
                   options={"maxiter": MAX_ASCENT_ITER, "ftol": 1e-15, "gtol": 1e-12,
                            "maxcor": 20})
    return theta0 + scale * res.x, -res.fun, res.nit


def _ascent(problem: _Problem, tol: float, n_starts: int):
    best = None
    iters = 0
    for theta0 in problem.starts(n_starts):
        theta, J, nit = _ascend(problem, theta0, tol)
        iters += nit
        if best is None or J > best[1]:
            best = (theta, J)
    return best[0], best[1], iters


def _sphere_directions(d: int, levels: int, start: int, stop: int) -> np.ndarray:
    """Rows ``start:stop`` of the product grid of hyperspherical directions."""
    idx = np.arange(start, stop)
    ang = np.empty((idx.size, d - 1))
    for j in range(d - 1):
        ang[:, j] = (idx % levels) * (0.5 * np.pi / (levels - 1))
        idx //= levels
    out = np.ones((ang.shape[0], d))
    s = np.ones(ang.shape[0])
    for j in range(d - 1):
        out[:, j] = s * np.cos(ang[:, j])
        s = s * np.sin(ang[:, j])
    out[:, d - 1] = s
    return np.abs(out)


def brute_levels(dof: int) -> int:
    if dof <= 1:
        return 1
    return max(BRUTE_MIN_LEVELS, min(4096, int(BRUTE_BUDGET ** (1.0 / (dof - 1)))))


def _brute(problem: _Problem):
    d = problem.dof
    if d > BRUTE_DOF_CAP:
        raise TooLargeForBrute(f"{d} degrees of freedom exceed the brute-force cap of {BRUTE_DOF_CAP}")
    levels = brute_levels(d)
    total = levels ** (d - 1)
    best_J, best_theta = -np.inf, None
    for start in range(0, total, BRUTE_CHUNK):
        H = _sphere_directions(d, levels, start, min(start + BRUTE_CHUNK, total))
        with np.errstate(divide="ignore"):
            theta = np.log(H)
        M = theta.shape[0]
        logh = np.full((M,) + problem.pattern.mask.shape, -np.inf)
        logh[:, problem.pattern.mask] = theta
        log_mu, _ = batch_log_norm(problem.pattern, logh, SEARCH_TOL, SEARCH_INNER_TOL)
        J = problem.log_dx + logsumexp(theta + problem.log_absg) - log_mu
        k = int(np.argmax(J))
        if J[k] > best_J:
            best_J, best_theta = float(J[k]), theta[k]
    return best_theta, best_J, total


def closed_form_dual(p: ExponentField, q: ExponentField, g: FuncSequence) -> float | None:
    """Exact dual norm for constant exponents, ``||g||`` in ``l^{q'}(L^{p'})``."""
    if not (p.is_constant and q.is_constant):
        return None
    pc = conjugate(p).p_minus
    qc = conjugate(q).p_minus
    a = np.abs(g.values)
    dx = g.grid.dx
    if math.isinf(pc):
        inner = a.max(axis=1) if a.size else np.zeros(0)
    else:
        inner = (dx * np.sum(a ** pc, axis=1)) ** (1.0 / pc)
    if math.isinf(qc):
        return float(inner.max()) if inner.size else 0.0
    return float(np.sum(inner ** qc) ** (1.0 / qc))


def kothe_dual_norm(p: ExponentField, q: ExponentField, g: FuncSequence,
                    method: Method | str = Method.ASCENT, tol: float = OUTER_TOL,
                    n_starts: int = N_STARTS, certify: bool = True) -> DualNormResult:
    """Dual norm ``sup{|<f, g>| : ||f|| <= 1}``.

    ``certificate_gap`` is the relative difference to an independent value
    when one is available: the closed form for constant exponents, else
    (if ``certify``) the brute-force search when the instance is small
    enough.
    """
    method = Method(method)
    _require(p, q, g)
    if not np.any(g.values):
        return DualNormResult(0.0, FuncSequence(np.zeros_like(g.values), g.grid), method, 0.0)
    problem = _Problem(p, q, g)
    if method is Method.BRUTE:
        theta, J, iters = _brute(problem)
        starts = 1
    else:
        theta, J, iters = _ascent(problem, tol, n_starts)
        starts = n_starts
    value = math.exp(J)
    oracle = closed_form_dual(p, q, g)
    if oracle is None and certify and method is Method.ASCENT and problem.dof <= BRUTE_DOF_CAP:
        oracle = math.exp(_brute(problem)[1])
    gap = None if oracle is None else (value - oracle) / oracle
    return DualNormResult(value, problem.maximizer(theta), method, gap, iters, starts)


def dual_tail_norm(p: ExponentField, q: ExponentField, g: FuncSequence, N: int,
                   method: Method | str = Method.ASCENT, tol: float = OUTER_TOL) -> float:
    """Dual norm of ``g - P_N g``, the tail after the first ``N`` terms."""
    tail = g.values.copy()
    tail[:N] = 0
    return kothe_dual_norm(p, q, FuncSequence(tail, g.grid), method, tol, certify=False).value


def supporting_functional(p: ExponentField, q: ExponentField, f: FuncSequence) -> FuncSequence:
    """Gradient of the mixed norm at ``f``, as a pairing representer.

    It pairs with ``f`` to ``||f||`` and has dual norm 1, so it is the
    candidate at which the norming supremum is attained.
    """
    pattern = Pattern.from_support(p, q, f.values != 0)
    logh = np.full(pattern.mask.shape, -np.inf)
    absf = pattern.pack(np.abs(f.values))
    logh[pattern.mask] = np.log(absf[pattern.mask])
    log_mu, log_lam = batch_log_norm(pattern, logh[None], SEARCH_TOL, SEARCH_INNER_TOL)
    dlog = log_norm_gradient(pattern, logh, log_mu[0], log_lam[0])
    rep = np.zeros_like(absf)
    rep[pattern.mask] = math.exp(log_mu[0]) * dlog[pattern.mask] / (absf[pattern.mask] * pattern.dx)
    full = pattern.unpack(rep, f.n_terms, f.grid.n_points)
    return FuncSequence(full * _phase(f.values), f.grid)


@dataclass
class NormingReport:
    sup_pairing: float
    norm: float
    ratio: float | None
    zero_case: bool = False
    candidates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"sup_pairing": self.sup_pairing, "norm": self.norm, "ratio": self.ratio,
                "zero_case": self.zero_case, "candidates": self.candidates}


def norming_check(p: ExponentField, q: ExponentField, f: FuncSequence,
                  method: Method | str = Method.ASCENT, tol: float = OUTER_TOL) -> NormingReport:
    """``sup{|<f, g>| : ||g||' <= 1}`` compared with ``||f||``.

    Searches over dual directions ``g`` starting from the supporting
    functional and from the pointwise Hölder dual ``|f|^{p-1}``; each
    candidate is normalized by its own dual norm, computed with
    ``method``.  A ratio of 1 means the dual unit ball norms ``f``.
    """
    _require(p, q, f)
    if not np.any(f.values):
        return NormingReport(0.0, 0.0, None, True)
    norm = mixed_norm(p, q, f, tol).value
    phase = _phase(f.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        holder = np.where(f.values != 0, np.abs(f.values) ** (p.values - 1.0), 0.0)
    cands = [("supporting", supporting_functional(p, q, f)),
             ("holder", FuncSequence(holder * phase, f.grid))]
    best, rows = 0.0, []
    for name, g in cands:
        d = kothe_dual_norm(p, q, g, method, tol, certify=False)
        s = abs(pairing(f, g)) / d.value
        rows.append({"candidate": name, "dual_norm": d.value, "value": s})
        best = max(best, s)
    return NormingReport(best, norm, best / norm, False, rows)
