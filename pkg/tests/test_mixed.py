import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vexp import (ExponentField, FuncSequence, Grid, GridFunction, check_normability, luxemburg_norm,
                  lqminus_norm, mixed_modular_p1, mixed_modular_p1a, mixed_norm, modular_lp, project,
                  random_log_holder)
from vexp.errors import GridMismatch, InputError, QPlusInfinite
from vexp.exponents import Condition, conjugate
from vexp.mixed import Pattern, batch_log_norm, log_norm_gradient, quotient_exponent

from _helpers import GRID, SMALL, constant_mixed_norm, random_fn, random_seq, rel, variable_exponent

INNER, OUTER = 1e-10, 1e-8
ONE = GRID.indicator(0, 1)
P2 = ExponentField.constant(GRID, 2.0)


def seq(*rows, grid=GRID):
    return FuncSequence(np.array(rows, dtype=float), grid)


def test_p1_single_indicator():
    b = mixed_modular_p1(P2, P2, seq(ONE))
    assert b.per_term == pytest.approx((1.0,), rel=1e-10)
    assert b.total == pytest.approx(1.0, rel=1e-10)


def test_p1_zero_terms():
    b = mixed_modular_p1(P2, P2, seq(np.zeros(1024), np.zeros(1024)))
    assert b.per_term == (0.0, 0.0) and b.total == 0.0
    assert mixed_modular_p1(P2, P2, FuncSequence.from_terms([], GRID)).total == 0.0
    assert mixed_modular_p1a(P2, P2, seq(np.zeros(1024))) == 0.0


def test_p1_two_terms():
    f = seq(2 * ONE, ONE)
    b = mixed_modular_p1(P2, P2, f)
    assert b.per_term == pytest.approx((4.0, 1.0), rel=1e-10)
    assert b.total == pytest.approx(5.0, rel=1e-10)
    assert math.fsum(b.per_term) == b.total
    assert mixed_modular_p1a(P2, P2, f) == pytest.approx(5.0, rel=1e-10)


def test_p1a_rejects_infinite_q():
    with pytest.raises(QPlusInfinite):
        mixed_modular_p1a(P2, ExponentField.constant(GRID, math.inf), seq(ONE))


def test_quotient_exponent():
    v = np.full(1024, 3.0)
    v[:4] = np.inf
    r = quotient_exponent(ExponentField(v, GRID), ExponentField.constant(GRID, 2.0))
    assert r.cls == "P0" and r.omega_inf_mask[:4].all() and r.p_minus == 1.5


def test_q_infinite_convention_closed_form():
    # p = 2 everywhere, q = 2 on E and inf off E: the per-term condition is
    # A / lam + B <= 1 with A, B the L2 masses on and off E
    E = (GRID.x >= -1) & (GRID.x < 0.5)
    qv = np.where(E, 2.0, np.inf)
    q = ExponentField(qv, GRID)
    rng = np.random.default_rng(4)
    for _ in range(5):
        f = random_fn(GRID, rng, scale=0.3).values
        A = GRID.dx * np.sum(f[E] ** 2)
        B = GRID.dx * np.sum(f[~E] ** 2)
        assert B < 1
        got = mixed_modular_p1(P2, q, seq(f)).total
        assert got == pytest.approx(A / (1 - B), rel=1e-9)


def test_q_infinite_with_no_room():
    # off E alone already exceeds the unit ball, so no lam works
    E = GRID.x < 0
    q = ExponentField(np.where(E, 2.0, np.inf), GRID)
    f = seq(np.where(E, 0.1, 2.0))
    assert mixed_modular_p1(P2, q, f).total == math.inf


def test_p_infinite_everywhere():
    p = ExponentField.constant(GRID, math.inf)
    q = ExponentField.constant(GRID, 2.0)
    f = random_fn(GRID, np.random.default_rng(1)).values
    # sup |lam^(-1/2) f| <= 1  <=>  lam >= max f^2
    want = np.max(np.abs(f)) ** 2
    assert mixed_modular_p1(p, q, seq(f)).total == pytest.approx(want, rel=1e-9)
    assert mixed_modular_p1a(p, q, seq(f)) == pytest.approx(want, rel=1e-9)


def test_mixed_norm_l2_l2():
    r = mixed_norm(P2, P2, seq(ONE, ONE))
    assert r.value == pytest.approx(math.sqrt(2), rel=1e-8)
    assert mixed_norm(P2, P2, seq(np.zeros(1024))).value == 0.0


def test_single_term_reduces_to_luxemburg():
    rng = np.random.default_rng(8)
    for _ in range(4):
        p = variable_exponent(GRID, rng)
        q = variable_exponent(GRID, rng)
        f = random_fn(GRID, rng)
        assert rel(mixed_norm(p, q, seq(f.values)).value, luxemburg_norm(p, f).value) <= 1e-7


def test_mixed_norm_against_lambda_scan():
    rng = np.random.default_rng(5)
    p = random_log_holder(GRID, 1.4, 3.2, 4, 5)
    q = ExponentField.constant(GRID, 2.0)
    f = random_seq(GRID, rng, 4)
    v = mixed_norm(p, q, f).value
    # independent path: the quotient-form modular on a geometric ladder
    ladder = np.geomspace(v / 1.01, v * 1.01, 500)
    ok = [lam for lam in ladder if mixed_modular_p1a(p, q, f / lam) <= 1]
    assert ok and ladder[0] not in ok
    assert rel(min(ok), v) <= 1e-4


def test_norm_result_bracket():
    rng = np.random.default_rng(9)
    p, q = variable_exponent(GRID, rng), variable_exponent(GRID, rng)
    r = mixed_norm(p, q, random_seq(GRID, rng, 3), OUTER)
    lo, hi = r.bracket
    assert lo <= r.value == hi and (hi - lo) / hi <= OUTER and r.modular_at_value <= 1


def test_project():
    rng = np.random.default_rng(0)
    f = random_seq(GRID, rng, 5)
    assert np.array_equal(project(9, f).values, f.values)
    assert project(0, f).n_terms == 0
    for n in range(7):
        for m in range(7):
            assert np.array_equal(project(n, project(m, f)).values, project(min(n, m), f).values)
    with pytest.raises(InputError):
        project(-1, f)


def test_lqminus_examples():
    assert lqminus_norm(P2, 2.0, seq(ONE, ONE)) == pytest.approx(math.sqrt(2), rel=1e-9)
    f = random_fn(GRID, np.random.default_rng(2))
    p = variable_exponent(GRID, np.random.default_rng(2))
    assert lqminus_norm(p, 1.7, seq(f.values)) == luxemburg_norm(p, f).value
    with pytest.raises(InputError):
        lqminus_norm(P2, 0.5, seq(ONE))


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        mixed_norm(P2, P2, seq(np.ones(64), grid=Grid(2.0, 64)))


def test_batch_norm_matches_mixed_norm():
    rng = np.random.default_rng(12)
    p, q = variable_exponent(SMALL, rng), variable_exponent(SMALL, rng)
    f = random_seq(SMALL, rng, 4)
    vals = np.abs(f.values)
    vals[1, 40:90] = 0         # a restricted support
    vals[3] = 0                # an empty term
    pat = Pattern.from_support(p, q, vals != 0)
    packed = pat.pack(vals)
    with np.errstate(divide="ignore"):
        logh = np.where(pat.mask, np.log(np.where(pat.mask, packed, 1.0)), -np.inf)
    log_mu, log_lam = batch_log_norm(pat, np.stack([logh, logh + 1.5]), 1e-13, 1e-14)
    want = mixed_norm(p, q, FuncSequence(vals, SMALL), 1e-12, 1e-13).value
    assert rel(math.exp(log_mu[0]), want) <= 1e-9
    assert rel(math.exp(log_mu[1]), want * math.exp(1.5)) <= 1e-9
    assert np.isneginf(log_lam[0, 3])
    assert np.array_equal(pat.unpack(packed, 4, SMALL.n_points), vals)


def test_log_norm_gradient_finite_differences():
    rng = np.random.default_rng(3)
    g = Grid(2.0, 16)
    p = ExponentField(1.5 + rng.random(16), g)
    q = ExponentField(1.2 + rng.random(16), g)
    vals = rng.random((3, 16)) + 0.1
    vals[2, :5] = 0
    pat = Pattern.from_support(p, q, vals != 0)
    logh = np.where(pat.mask, np.log(np.where(pat.mask, pat.pack(vals), 1.0)), -np.inf)
    mu, lam = batch_log_norm(pat, logh[None], 1e-14, 1e-15)
    grad = log_norm_gradient(pat, logh, mu[0], lam[0])
    h = 1e-6
    for (i, j) in [(0, 0), (1, 7), (2, 10), (2, 0)]:
        if not pat.mask[i, j]:
            continue
        up, dn = logh.copy(), logh.copy()
        up[i, j] += h
        dn[i, j] -= h
        fd = (batch_log_norm(pat, up[None], 1e-14, 1e-15)[0][0]
              - batch_log_norm(pat, dn[None], 1e-14, 1e-15)[0][0]) / (2 * h)
        assert grad[i, j] == pytest.approx(fd, rel=1e-5, abs=1e-9)
    # Euler: log-norm is 1-homogeneous in h
    assert grad[pat.mask].sum() == pytest.approx(1.0, rel=1e-9)


# -- properties --------------------------------------------------------------

seeds = st.integers(0, 2**31 - 1)
PGRID = Grid(2.0, 256)


@st.composite
def triples(draw, finite_q=True, normable=False):
    rng = np.random.default_rng(draw(seeds))
    p = variable_exponent(PGRID, rng)
    if normable:
        kind = draw(st.integers(0, 2))
        if kind == 0:
            q = ExponentField(np.maximum(1.0, p.values - rng.uniform(0, 1)), PGRID)
        elif kind == 1:
            q = ExponentField.constant(PGRID, rng.uniform(1, 5))
        else:
            q = ExponentField(conjugate(p).values + rng.uniform(0, 2), PGRID)
    else:
        q = variable_exponent(PGRID, rng, 1.0, 6.0)
    n = draw(st.integers(1, 8))
    return p, q, random_seq(PGRID, rng, n), random_seq(PGRID, rng, n)


@given(triples())
def test_p1_equals_p1a(t):
    p, q, f, _ = t
    a = mixed_modular_p1(p, q, f, INNER).total
    b = mixed_modular_p1a(p, q, f, INNER)
    assert rel(a, b) <= 1e-6


@given(triples())
def test_mixed_unit_ball(t):
    p, q, f, _ = t
    v = mixed_norm(p, q, f, OUTER).value
    assert mixed_modular_p1(p, q, f / v).total <= 1
    assert mixed_modular_p1(p, q, f / (0.999 * v)).total > 1


@given(triples(), st.floats(1e-4, 1e4))
def test_mixed_homogeneity(t, c):
    p, q, f, _ = t
    assert rel(mixed_norm(p, q, c * f, OUTER).value, c * mixed_norm(p, q, f, OUTER).value) <= 10 * OUTER


@given(triples(), st.floats(0, 1))
def test_mixed_lattice(t, s):
    p, q, f, _ = t
    g = FuncSequence(s * f.values * np.sin(PGRID.x) ** 2, PGRID)
    assert mixed_norm(p, q, g, OUTER).value <= mixed_norm(p, q, f, OUTER).value * (1 + 10 * OUTER)


@given(triples(normable=True))
def test_mixed_triangle(t):
    p, q, f, g = t
    assert check_normability(p, q).tag is not Condition.NONE
    n = lambda h: mixed_norm(p, q, h, OUTER).value
    assert n(f + g) <= (n(f) + n(g)) * (1 + 10 * OUTER)


@given(triples(), st.integers(0, 9))
def test_projection_contractive(t, N):
    p, q, f, _ = t
    assert mixed_norm(p, q, project(N, f), OUTER).value <= mixed_norm(p, q, f, OUTER).value * (1 + 10 * OUTER)


@given(triples())
def test_lqminus_embedding(t):
    p, q, f, _ = t
    assert mixed_norm(p, q, f, OUTER).value <= lqminus_norm(p, q.p_minus, f, INNER) * (1 + 10 * OUTER)


@given(seeds, st.floats(1.0, 8.0), st.floats(1.0, 8.0))
def test_constant_exponent_oracle(seed, p0, q0):
    f = random_seq(PGRID, np.random.default_rng(seed))
    got = mixed_norm(ExponentField.constant(PGRID, p0), ExponentField.constant(PGRID, q0), f, OUTER).value
    assert rel(got, constant_mixed_norm(f.values, p0, q0, PGRID.dx)) <= 1e-6


@given(seeds)
def test_tail_density(seed):
    rng = np.random.default_rng(seed)
    p, q = variable_exponent(PGRID, rng), variable_exponent(PGRID, rng)
    K = 12
    f = random_seq(PGRID, rng, 2 * K, decay=0.3)
    tails = [mixed_norm(p, q, f - project(N, f), OUTER).value for N in range(K + 1)]
    assert all(b <= a * (1 + 10 * OUTER) for a, b in zip(tails, tails[1:]))
    assert tails[-1] < 1e-3
