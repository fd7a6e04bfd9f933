"""Randomized property suites behind ``vexp verify``.

Each property draws ``samples`` random instances (fewer for the costly
duality searches, see :data:`COSTLY_DIVISOR`) and scores each one with a
margin that is non-negative exactly when the property holds.  The report
row keeps the smallest margin seen.

Randomness: one seed, split into independent streams per suite and per
property (keyed by CRC-32 of their names), so suites never perturb each
other's draws.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import besov, duality, lebesgue, mixed
from .domain import FuncSequence, Grid, GridFunction, random_function, random_sequence
from .errors import InputError
from .exponents import (Condition, ExponentField, check_log_holder, check_normability,
                        conjugate, make_exponent_field, random_log_holder)
from .io import SUITES

COSTLY_DIVISOR = 10
BIG_GRID = Grid(2.0, 1024)
DUAL_GRID = Grid(2.0, 8)
MAX_TERMS = 16
HEADER = ["suite", "property", "samples", "failures", "worst_margin"]


@dataclass(frozen=True)
class PropertyResult:
    suite: str
    property: str
    samples: int
    failures: int
    worst_margin: float

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def row(self) -> list:
        return [self.suite, self.property, self.samples, self.failures, self.worst_margin]


def stream(seed: int, *names: str) -> np.random.Generator:
    """Independent generator for ``(seed, names...)``."""
    key = [seed] + [zlib.crc32(n.encode()) for n in names]
    return np.random.default_rng(np.random.SeedSequence(key))


def _seed(rng) -> int:
    return int(rng.integers(0, 2**31 - 1))


def _score(suite: str, name: str, margins: list[float]) -> PropertyResult:
    m = np.asarray(margins, dtype=float)
    bad = ~(m >= 0)         # NaN counts as a failure
    return PropertyResult(suite, name, m.size, int(bad.sum()),
                          float(np.nanmin(m)) if np.any(~np.isnan(m)) else math.nan)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


# -- random instances -------------------------------------------------------

def _field(rng, grid: Grid, lo=1.05, hi=5.0) -> ExponentField:
    a = rng.uniform(lo, 0.5 * (lo + hi))
    b = rng.uniform(a + 0.2, hi)
    return random_log_holder(grid, a, b, int(rng.integers(1, 5)), _seed(rng))


def _constant(grid: Grid, rng, lo=1.0, hi=6.0) -> ExponentField:
    return ExponentField.constant(grid, float(rng.uniform(lo, hi)))


def _normable_pair(rng, grid: Grid):
    """Random ``(p, q)`` satisfying one of the normability conditions."""
    p = _field(rng, grid, 1.1, 4.0)
    kind = int(rng.integers(3))
    if kind == 0:       # q <= p
        q = ExponentField(np.maximum(1.0, p.values - rng.uniform(0, 0.8)), grid)
    elif kind == 1:     # q constant
        q = _constant(grid, rng, 1.0, 4.0)
    else:               # 1/p + 1/q <= 1, i.e. q >= p'
        q = ExponentField(conjugate(p).values + rng.uniform(0, 1.0), grid)
    return p, q


def _function(rng, grid: Grid) -> GridFunction:
    kind = ("smooth", "bump", "spike")[int(rng.integers(3))]
    return random_function(grid, kind, float(10 ** rng.uniform(-2, 2)), _seed(rng),
                           int(rng.integers(1, 16)))


def _sequence(rng, grid: Grid, n_terms: int | None = None, bandwidth: int = 16) -> FuncSequence:
    n = int(rng.integers(1, MAX_TERMS + 1)) if n_terms is None else n_terms
    kind = ("smooth", "bump")[int(rng.integers(2))]
    return random_sequence(grid, n, kind, float(10 ** rng.uniform(-1, 1)), _seed(rng),
                           bandwidth=min(bandwidth, grid.n_points // 2 - 1))


def _with_infinite_part(rng, p: ExponentField) -> ExponentField:
    v = p.values.copy()
    x = p.grid.x
    a = rng.uniform(-p.grid.half_length, 0.5 * p.grid.half_length)
    v[(x >= a) & (x < a + rng.uniform(0.1, 1.0))] = np.inf
    return ExponentField(v, p.grid)


# -- exponents --------------------------------------------------------------

def _exp_conjugate(rng, n):
    out = []
    for _ in range(n):
        p = _field(rng, BIG_GRID, 1.01, 8.0)
        pc = conjugate(p)
        back = conjugate(pc)
        err = max(np.max(np.abs(back.values - p.values) / p.values),
                  np.max(np.abs(p.reciprocal() + pc.reciprocal() - 1)))
        out.append(1e-12 - err)
    return out


def _exp_declared_constant(rng, n):
    out = []
    for _ in range(n):
        p = _field(rng, BIG_GRID)
        rep = check_log_holder(p, p.log_holder_constant, p.limit_at_infinity)
        out.append(-max(rep.local_margin, rep.decay_margin))
    return out


def _exp_jump_detected(rng, n):
    out = []
    grid = BIG_GRID
    for _ in range(n):
        lo = rng.uniform(1.0, 3.0)
        jump = rng.uniform(0.1, 2.0)
        x0 = rng.uniform(-1.0, 1.0)
        p = make_exponent_field(grid, {"kind": "affine", "a": lo, "interval": [x0, grid.half_length],
                                       "outside": lo + jump})
        # a jump across one cell needs c >= jump * log(e + 1/dx)
        c = 0.5 * jump * math.log(math.e + 1.0 / grid.dx)
        rep = check_log_holder(p, c, None)
        out.append(rep.local_margin)
    return out


# -- lebesgue ---------------------------------------------------------------

def _leb_constant(rng, n):
    out = []
    for _ in range(n):
        p = _constant(BIG_GRID, rng)
        f = _function(rng, BIG_GRID)
        p0 = p.p_minus
        exact = (BIG_GRID.dx * np.sum(np.abs(f.values) ** p0)) ** (1 / p0)
        out.append(1e-6 - _rel(lebesgue.luxemburg_norm(p, f).value, exact))
    return out


def _leb_unit_ball(rng, n):
    out = []
    for i in range(n):
        p = _field(rng, BIG_GRID)
        if i % 2:
            p = _with_infinite_part(rng, p)
        f = _function(rng, BIG_GRID)
        v = lebesgue.luxemburg_norm(p, f).value
        inside = 1.0 - lebesgue.modular_lp(p, f / v)
        outside = lebesgue.modular_lp(p, f / (0.999 * v)) - 1.0
        out.append(min(inside, outside))
    return out


def _leb_homogeneity(rng, n):
    out = []
    for _ in range(n):
        p = _field(rng, BIG_GRID)
        f = _function(rng, BIG_GRID)
        c = float(10 ** rng.uniform(-3, 3))
        a = lebesgue.luxemburg_norm(p, f * c).value
        b = c * lebesgue.luxemburg_norm(p, f).value
        out.append(1e-8 - _rel(a, b))
    return out


def _leb_triangle(rng, n):
    out = []
    for _ in range(n):
        p = _field(rng, BIG_GRID)
        f, g = _function(rng, BIG_GRID), _function(rng, BIG_GRID)
        lhs = lebesgue.luxemburg_norm(p, f + g).value
        rhs = lebesgue.luxemburg_norm(p, f).value + lebesgue.luxemburg_norm(p, g).value
        out.append(rhs * (1 + 1e-9) - lhs)
    return out


# -- mixed ------------------------------------------------------------------

def _mix_constant(rng, n):
    out = []
    for _ in range(n):
        p, q = _constant(BIG_GRID, rng), _constant(BIG_GRID, rng)
        f = _sequence(rng, BIG_GRID)
        p0, q0 = p.p_minus, q.p_minus
        inner = (BIG_GRID.dx * np.sum(np.abs(f.values) ** p0, axis=1)) ** (1 / p0)
        exact = np.sum(inner ** q0) ** (1 / q0)
        out.append(1e-6 - _rel(mixed.mixed_norm(p, q, f).value, exact))
    return out


def _mix_p1_p1a(rng, n):
    out = []
    for _ in range(n):
        p, q = _field(rng, BIG_GRID), _field(rng, BIG_GRID, 1.0, 4.0)
        f = _sequence(rng, BIG_GRID) * float(10 ** rng.uniform(-1, 1))
        a = mixed.mixed_modular_p1(p, q, f).total
        b = mixed.mixed_modular_p1a(p, q, f)
        out.append(1e-6 - _rel(a, b))
    return out


def _mix_unit_ball(rng, n):
    out = []
    for _ in range(n):
        p, q = _field(rng, BIG_GRID), _field(rng, BIG_GRID, 1.0, 4.0)
        f = _sequence(rng, BIG_GRID)
        v = mixed.mixed_norm(p, q, f).value
        inside = 1.0 - mixed.mixed_modular_p1(p, q, f / v).total
        outside = mixed.mixed_modular_p1(p, q, f / (0.999 * v)).total - 1.0
        out.append(min(inside, outside))
    return out


def _mix_embedding(rng, n):
    out = []
    for _ in range(n):
        p, q = _field(rng, BIG_GRID), _field(rng, BIG_GRID, 1.0, 4.0)
        f = _sequence(rng, BIG_GRID)
        tol = mixed.OUTER_TOL
        out.append(mixed.lqminus_norm(p, q.p_minus, f) + 10 * tol - mixed.mixed_norm(p, q, f, tol).value)
    return out


def _mix_tail(rng, n):
    """Tails of a geometrically decaying sequence shrink and fall below 1e-3."""
    out = []
    K = 8
    for _ in range(n):
        p, q = _field(rng, BIG_GRID), _field(rng, BIG_GRID, 1.0, 4.0)
        f = random_sequence(BIG_GRID, 2 * K, "smooth", 1.0, _seed(rng), decay=0.3)
        tails = []
        for N in range(K + 1):
            rest = f.values.copy()
            rest[:N] = 0
            tails.append(mixed.mixed_norm(p, q, FuncSequence(rest, BIG_GRID)).value)
        t = np.array(tails)
        mono = np.min(t[:-1] * (1 + 1e-7) - t[1:])
        out.append(min(mono, 1e-3 - t[-1]))
    return out


def _mix_q_infinite(rng, n):
    """Per-term infimum where ``q = inf`` on part of the line.

    With ``p = q = 2`` on ``E`` and ``q = inf`` off ``E`` the term problem
    reads ``A / lam + B <= 1`` (``A``, ``B`` the integrals of ``|f|^2`` on
    and off ``E``), so the infimum is ``A / (1 - B)``.
    """
    out = []
    grid = BIG_GRID
    p = ExponentField.constant(grid, 2.0)
    for _ in range(n):
        a = rng.uniform(-1.5, 0.5)
        on = (grid.x >= a) & (grid.x < a + rng.uniform(0.3, 1.5))
        q = ExponentField(np.where(on, 2.0, np.inf), grid)
        f = _sequence(rng, grid, int(rng.integers(1, 5)))
        vals = f.values.copy()
        for row in vals:
            B = grid.dx * np.sum(row[~on] ** 2)
            if B > 0:
                row *= math.sqrt(rng.uniform(0.05, 0.9) / B)
        A = grid.dx * np.sum(vals[:, on] ** 2, axis=1)
        B = grid.dx * np.sum(vals[:, ~on] ** 2, axis=1)
        exact = math.fsum(A / (1 - B))
        got = mixed.mixed_modular_p1(p, q, FuncSequence(vals, grid)).total
        out.append(1e-8 - _rel(got, exact))
    return out


def _mix_triangle(rng, n):
    out = []
    for _ in range(n):
        p, q = _normable_pair(rng, BIG_GRID)
        f, g = _sequence(rng, BIG_GRID, 4), _sequence(rng, BIG_GRID, 4)
        lhs = mixed.mixed_norm(p, q, f + g).value
        rhs = mixed.mixed_norm(p, q, f).value + mixed.mixed_norm(p, q, g).value
        out.append(rhs * (1 + 1e-7) - lhs)
    return out


# -- duality ----------------------------------------------------------------

def _dual_instance(rng, n_terms=2):
    p, q = _normable_pair(rng, DUAL_GRID)
    return p, q, _sequence(rng, DUAL_GRID, n_terms, bandwidth=3)


def _dual_holder(rng, n):
    out = []
    for _ in range(n):
        p, q, g = _dual_instance(rng)
        f = _sequence(rng, DUAL_GRID, 2, bandwidth=3)
        d = duality.kothe_dual_norm(p, q, g, certify=False).value
        nf = mixed.mixed_norm(p, q, f).value
        out.append(nf * d * (1 + 1e-6) - abs(duality.pairing(f, g)))
    return out


def _dual_closed_form(rng, n):
    out = []
    for _ in range(n):
        p, q = _constant(DUAL_GRID, rng, 1.2, 5.0), _constant(DUAL_GRID, rng, 1.2, 5.0)
        g = _sequence(rng, DUAL_GRID, 2, bandwidth=3)
        r = duality.kothe_dual_norm(p, q, g)
        out.append(1e-6 - abs(r.certificate_gap))
    return out


def _dual_hilbert(rng, n):
    out = []
    two = ExponentField.constant(DUAL_GRID, 2.0)
    for _ in range(n):
        g = _sequence(rng, DUAL_GRID, int(rng.integers(1, 4)), bandwidth=3)
        exact = math.sqrt(DUAL_GRID.dx * np.sum(g.values ** 2))
        out.append(1e-3 - _rel(duality.kothe_dual_norm(two, two, g, certify=False).value, exact))
    return out


def _dual_ascent_brute(rng, n):
    out = []
    for _ in range(n):
        p, q = _normable_pair(rng, DUAL_GRID)
        dof = int(rng.integers(2, 6))
        v = np.zeros((2, DUAL_GRID.n_points))
        v.flat[rng.choice(v.size, dof, replace=False)] = rng.uniform(0.1, 1.0, dof)
        g = FuncSequence(v, DUAL_GRID)
        a = duality.kothe_dual_norm(p, q, g, "ascent", certify=False).value
        b = duality.kothe_dual_norm(p, q, g, "brute").value
        out.append(a / b - (1 - 0.02))
    return out


def _dual_tails(rng, n):
    """Dual tails shrink (2% optimizer slack), projections do not grow, tails reach 1e-2."""
    out = []
    K = 4
    for _ in range(n):
        p, q = _normable_pair(rng, DUAL_GRID)
        g = random_sequence(DUAL_GRID, K, "smooth", 1.0, _seed(rng), decay=0.1, bandwidth=3)
        full = duality.kothe_dual_norm(p, q, g, certify=False).value
        tails = [duality.dual_tail_norm(p, q, g, N) for N in range(K + 1)]
        heads = [duality.kothe_dual_norm(p, q, mixed.project(N, g), certify=False).value
                 for N in range(1, K)]
        t = np.array(tails)
        mono = np.min(t[:-1] * 1.02 - t[1:])
        proj = min(full * 1.02 - h for h in heads)
        reach = 1e-2 - np.min(t[:-1])
        out.append(min(mono, proj / max(full, 1e-300), reach))
    return out


def _dual_norming(rng, n):
    out = []
    for _ in range(n):
        p, q, f = _dual_instance(rng)
        r = duality.norming_check(p, q, f).ratio
        out.append(min(r - 0.95, 1 + 1e-6 - r))
    return out


# -- besov ------------------------------------------------------------------

def _filters(grid: Grid, shape="smooth"):
    return besov.build_filter_pair(grid, shape)


def _sub_nyquist(rng, grid: Grid) -> GridFunction:
    return random_function(grid, "smooth", float(10 ** rng.uniform(-1, 1)), _seed(rng),
                           int(rng.integers(1, grid.n_points // 2)))


def _smoothness(rng, grid: Grid) -> ExponentField:
    f = _field(rng, grid, 1.1, 3.0)
    shift = rng.uniform(-3.0, 0.0)
    return ExponentField(f.values + shift, grid, "real")


def _bes_partition(rng, n):
    out = []
    for _ in range(n):
        grid = Grid(2.0, int(2 ** rng.integers(5, 13)))
        F = _filters(grid, besov.SHAPES[int(rng.integers(2))])
        below = np.abs(grid.wavenumbers) < grid.n_points // 2
        out.append(1e-10 - np.max(np.abs(F.partition_of_unity()[below] - 1)))
    return out


def _bes_supports(rng, n):
    out = []
    for _ in range(n):
        grid = Grid(2.0, int(2 ** rng.integers(5, 13)))
        F = _filters(grid, besov.SHAPES[int(rng.integers(2))])
        S = F.stack()
        k = np.abs(grid.wavenumbers)
        worst = 0.0
        for nu in range(F.nu_max + 1):
            lo, hi = (0, 2) if nu == 0 else (2 ** (nu - 1), 2 ** (nu + 1))
            worst = max(worst, np.max(np.where((k < lo) | (k > hi), S[nu], 0.0)))
            for mu in range(nu + 2, F.nu_max + 1):
                worst = max(worst, np.max(S[nu] * S[mu]))
        out.append(0.0 - worst + 0.0)
    return out


def _bes_retraction(rng, n):
    out = []
    F = _filters(BIG_GRID)
    for _ in range(n):
        f = _sub_nyquist(rng, BIG_GRID)
        s = _smoothness(rng, BIG_GRID)
        back = besov.synthesize(besov.analyze(f, s, F), F)
        out.append(1e-10 - np.linalg.norm(back.values - f.values) / np.linalg.norm(f.values))
    return out


def _bes_plancherel(rng, n):
    out = []
    F = _filters(BIG_GRID)
    zero = ExponentField.constant(BIG_GRID, 0.0, cls="real")
    two = ExponentField.constant(BIG_GRID, 2.0)
    for _ in range(n):
        f = _sub_nyquist(rng, BIG_GRID)
        exact = math.sqrt(BIG_GRID.dx * np.sum(np.abs(f.values) ** 2))
        got = besov.besov_norm(f, zero, two, two, F, tol=1e-10).value
        out.append(1e-8 - _rel(got, exact))
    return out


def _bes_isometry(rng, n):
    out = []
    F = _filters(BIG_GRID)
    for _ in range(n):
        f = _sub_nyquist(rng, BIG_GRID)
        s = _smoothness(rng, BIG_GRID)
        p, q = _normable_pair(rng, BIG_GRID)
        a = besov.besov_norm(f, s, p, q, F).value
        b = mixed.mixed_norm(p, q, besov.analyze(f, s, F).bands).value
        out.append(0.0 if a == b else -abs(a - b))
    return out


def _bes_synthesis_bounded(rng, n):
    """Margin is ``1 / ratio``, so the worst margin is one over the largest ratio."""
    out = []
    F = _filters(BIG_GRID)
    for _ in range(n):
        s = _smoothness(rng, BIG_GRID)
        p, q = _normable_pair(rng, BIG_GRID)
        bands = besov.BesovDecomposition(_sequence(rng, BIG_GRID, F.nu_max + 1), s)
        f = besov.synthesize(bands, F)
        ratio = besov.besov_norm(f, s, p, q, F).value / mixed.mixed_norm(p, q, bands.bands).value
        out.append(1.0 / ratio if math.isfinite(ratio) and ratio > 0 else -1.0)
    return out


def _bes_equivalence(rng, n):
    out = []
    F1, F2 = _filters(BIG_GRID, "smooth"), _filters(BIG_GRID, "log")
    for _ in range(n):
        f = _sub_nyquist(rng, BIG_GRID)
        s = _smoothness(rng, BIG_GRID)
        p, q = _normable_pair(rng, BIG_GRID)
        r = besov.besov_norm(f, s, p, q, F1).value / besov.besov_norm(f, s, p, q, F2).value
        out.append(1.0 - abs(math.log10(r)))
    return out


Property = Callable[[np.random.Generator, int], list]

# (name, function, costly)
PROPERTIES: dict[str, list[tuple[str, Property, bool]]] = {
    "exponents": [
        ("conjugate_involution", _exp_conjugate, False),
        ("declared_log_holder_constant", _exp_declared_constant, False),
        ("jump_detected", _exp_jump_detected, False),
    ],
    "lebesgue": [
        ("constant_exponent_oracle", _leb_constant, False),
        ("unit_ball", _leb_unit_ball, False),
        ("homogeneity", _leb_homogeneity, False),
        ("triangle_inequality", _leb_triangle, False),
    ],
    "mixed": [
        ("constant_exponent_oracle", _mix_constant, False),
        ("p1_equals_p1a", _mix_p1_p1a, False),
        ("unit_ball", _mix_unit_ball, False),
        ("lqminus_embedding", _mix_embedding, False),
        ("tail_decay", _mix_tail, False),
        ("q_infinite_convention", _mix_q_infinite, False),
        ("triangle_inequality", _mix_triangle, False),
    ],
    "duality": [
        ("holder_bound", _dual_holder, False),
        ("constant_closed_form", _dual_closed_form, False),
        ("hilbert_self_duality", _dual_hilbert, False),
        ("ascent_vs_brute", _dual_ascent_brute, True),
        ("tail_monotone", _dual_tails, True),
        ("norming_ratio", _dual_norming, True),
    ],
    "besov": [
        ("partition_of_unity", _bes_partition, False),
        ("filter_supports", _bes_supports, False),
        ("retraction", _bes_retraction, False),
        ("plancherel", _bes_plancherel, False),
        ("isometry", _bes_isometry, False),
        ("synthesis_bounded", _bes_synthesis_bounded, False),
        ("filter_equivalence", _bes_equivalence, False),
    ],
}


def resolve_suites(names) -> list[str]:
    names = list(names)
    if not names:
        raise InputError("no suites selected")
    out = []
    for n in names:
        if n == "all":
            out.extend(SUITES)
        elif n in SUITES:
            out.append(n)
        else:
            raise InputError(f"unknown suite {n!r}; expected one of {SUITES + ('all',)}")
    return sorted(set(out))


def run_suite(suite: str, seed: int, samples: int) -> list[PropertyResult]:
    results = []
    for name, fn, costly in PROPERTIES[suite]:
        n = max(1, -(-samples // COSTLY_DIVISOR)) if costly else samples
        results.append(_score(suite, name, fn(stream(seed, suite, name), n)))
    return results


def run(suites, seed: int, samples: int) -> list[PropertyResult]:
    """Run the selected suites; rows come back sorted by suite and property."""
    if not isinstance(samples, int) or samples < 1:
        raise InputError("samples must be a positive integer")
    if not isinstance(seed, int) or seed < 0:
        raise InputError("seed must be a non-negative integer")
    rows = []
    for suite in resolve_suites(suites):
        rows.extend(run_suite(suite, seed, samples))
    return sorted(rows, key=lambda r: (r.suite, r.property))
