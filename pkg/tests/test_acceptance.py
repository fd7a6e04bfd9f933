"""Acceptance criteria, one test each.

Every test records a PASS/FAIL verdict (printed at the end of the run) and
then asserts it.  Inputs come from the generators in ``_helpers``, which
are independent of the ones inside ``vexp verify``.
"""

import math
import subprocess
import sys

import numpy as np
import pytest

import vexp.besov
import vexp.mixed
from vexp import (ExponentField, FuncSequence, Grid, GridFunction, Method, analyze, besov_norm,
                  build_filter_pair, dual_tail_norm, kothe_dual_norm, lqminus_norm, luxemburg_norm,
                  mixed_modular_p1, mixed_modular_p1a, mixed_norm, modular_lp, norming_check, pairing,
                  project, random_log_holder, synthesize, verify)
from vexp.besov import SHAPES
from vexp.exponents import conjugate

from _helpers import (GRID, constant_mixed_norm, constant_norm, random_fn, random_seq, rel,
                      variable_exponent)

INNER, OUTER = 1e-10, 1e-8
G8 = Grid(2.0, 8)


def _with_infinite_part(rng, p: ExponentField) -> ExponentField:
    v = p.values.copy()
    a = rng.uniform(-2, 1)
    v[(p.grid.x >= a) & (p.grid.x < a + rng.uniform(0.05, 0.8))] = np.inf
    return ExponentField(v, p.grid)


def _small_pair(rng, kind: int):
    """Variable exponents on the 8-point grid satisfying normability condition ``kind``."""
    p = ExponentField(1.2 + 2.5 * rng.random(8), G8)
    if kind == 0:
        q = ExponentField(np.maximum(1.0, p.values - rng.uniform(0, 1, 8)), G8)
    elif kind == 1:
        q = ExponentField.constant(G8, rng.uniform(1.0, 4.0))
    else:
        q = ExponentField(conjugate(p).values + rng.uniform(0, 1.5, 8), G8)
    return p, q


def _small_seq(rng, n_terms, scale=None):
    scale = 10 ** rng.uniform(-1, 1) if scale is None else scale
    return FuncSequence(rng.normal(size=(n_terms, 8)) * scale, G8)


def test_1_constant_exponent_oracles(acceptance):
    rng = np.random.default_rng(101)
    worst_lp = worst_mixed = 0.0
    for _ in range(100):
        p0 = rng.uniform(1.0, 12.0)
        f = random_fn(GRID, rng)
        got = luxemburg_norm(ExponentField.constant(GRID, p0), f, INNER).value
        worst_lp = max(worst_lp, rel(got, constant_norm(f.values, p0, GRID.dx)))
    for _ in range(100):
        p0, q0 = rng.uniform(1.0, 10.0), rng.uniform(1.0, 10.0)
        f = random_seq(GRID, rng, int(rng.integers(1, 17)))
        got = mixed_norm(ExponentField.constant(GRID, p0), ExponentField.constant(GRID, q0), f,
                         OUTER, INNER).value
        worst_mixed = max(worst_mixed, rel(got, constant_mixed_norm(f.values, p0, q0, GRID.dx)))
    ok = worst_lp <= 1e-6 and worst_mixed <= 1e-6
    acceptance.record("1 constant-exponent oracles", ok,
                      f"worst rel error lp {worst_lp:.2e}, mixed {worst_mixed:.2e} (limit 1e-6)")
    assert ok


def test_2_two_modular_forms_agree(acceptance):
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(100):
        p = variable_exponent(GRID, rng, 1.05, 6.0)
        q = variable_exponent(GRID, rng, 1.0, 6.0)
        f = random_seq(GRID, rng, int(rng.integers(1, 17)))
        a = mixed_modular_p1(p, q, f, INNER).total
        b = mixed_modular_p1a(p, q, f, INNER)
        worst = max(worst, rel(a, b))
    ok = worst <= 1e-6
    acceptance.record("2 per-term and quotient modulars agree", ok, f"worst rel diff {worst:.2e} over 100")
    assert ok


def test_3_unit_ball(acceptance):
    rng = np.random.default_rng(303)
    passed = 0
    for i in range(100):
        p = variable_exponent(GRID, rng, 1.0, 8.0)
        if i % 2:
            p = _with_infinite_part(rng, p)
        f = random_fn(GRID, rng)
        v = luxemburg_norm(p, f, INNER).value
        passed += modular_lp(p, f / v) <= 1 and modular_lp(p, f / (0.999 * v)) > 1
    mixed_passed = 0
    for _ in range(100):
        p, q = variable_exponent(GRID, rng), variable_exponent(GRID, rng)
        f = random_seq(GRID, rng, int(rng.integers(1, 17)))
        v = mixed_norm(p, q, f, OUTER, INNER).value
        mixed_passed += (mixed_modular_p1(p, q, f / v, INNER).total <= 1
                         and mixed_modular_p1(p, q, f / (0.999 * v), INNER).total > 1)
    ok = passed == 100 and mixed_passed == 100
    acceptance.record("3 unit-ball property", ok, f"Luxemburg {passed}/100, mixed {mixed_passed}/100")
    assert ok


def test_4_embedding_and_density(acceptance):
    rng = np.random.default_rng(404)
    embed_ok = 0
    for _ in range(100):
        p, q = variable_exponent(GRID, rng), variable_exponent(GRID, rng, 1.0, 6.0)
        f = random_seq(GRID, rng, int(rng.integers(1, 17)))
        embed_ok += mixed_norm(p, q, f, OUTER, INNER).value <= lqminus_norm(p, q.p_minus, f, INNER) + 10 * OUTER
    # decaying tails; the sequence runs past N_terms so the last tail is not trivially 0
    density_ok, worst_tail = 0, 0.0
    K = 8
    for _ in range(10):
        p, q = variable_exponent(GRID, rng), variable_exponent(GRID, rng)
        f = random_seq(GRID, rng, 2 * K, decay=0.3)
        tails = [mixed_norm(p, q, f - project(N, f), OUTER, INNER).value for N in range(K + 1)]
        mono = all(b <= a + 10 * OUTER * a for a, b in zip(tails, tails[1:]))
        worst_tail = max(worst_tail, tails[-1])
        density_ok += mono and tails[-1] < 1e-3
    ok = embed_ok == 100 and density_ok == 10
    acceptance.record("4 embedding constant 1 and density", ok,
                      f"embedding {embed_ok}/100, tails {density_ok}/10 (largest final tail {worst_tail:.1e})")
    assert ok


def test_5_kothe_duality(acceptance):
    rng = np.random.default_rng(505)
    # Hölder bound: 20 dual elements, 5 test sequences each
    holder_ok = 0
    for i in range(20):
        p, q = _small_pair(rng, i % 3)
        g = _small_seq(rng, 3)
        dual = kothe_dual_norm(p, q, g, certify=False).value
        for _ in range(5):
            f = _small_seq(rng, int(rng.integers(1, 4)))
            holder_ok += abs(pairing(f, g)) <= mixed_norm(p, q, f).value * dual * (1 + 1e-6)
    # ascent against brute force on small supports, up to 6 degrees of freedom
    worst_gap, n_brute = 0.0, 0
    for dof in (2, 2, 3, 3, 4, 4, 5, 5, 6, 6):
        p, q = _small_pair(rng, n_brute % 3)
        rows = np.zeros((2, 8))
        rows.flat[rng.choice(16, dof, replace=False)] = rng.normal(size=dof)
        g = FuncSequence(rows, G8)
        a = kothe_dual_norm(p, q, g, Method.ASCENT, certify=False).value
        b = kothe_dual_norm(p, q, g, Method.BRUTE).value
        worst_gap = max(worst_gap, rel(a, b))
        n_brute += 1
    # dual tails of a geometrically decaying sequence
    tails_ok, K = 0, 4
    for i in range(3):
        p, q = _small_pair(rng, i)
        g = FuncSequence(rng.normal(size=(2 * K, 8)) * 0.1 ** np.arange(2 * K)[:, None], G8)
        tails = [dual_tail_norm(p, q, g, N) for N in range(K + 1)]
        tails_ok += all(b <= a * 1.02 for a, b in zip(tails, tails[1:])) and tails[-1] < 1e-2
    ok = holder_ok == 100 and worst_gap <= 0.02 and tails_ok == 3
    acceptance.record("5 Köthe duality", ok,
                      f"Hölder {holder_ok}/100, ascent vs brute worst gap {worst_gap:.2%} "
                      f"over {n_brute} instances, tails {tails_ok}/3")
    assert ok


def test_6_norming(acceptance):
    rng = np.random.default_rng(606)
    in_band, lo, hi = 0, math.inf, -math.inf
    for i in range(50):
        p, q = _small_pair(rng, i % 3)
        f = _small_seq(rng, int(rng.integers(1, 4)))
        r = norming_check(p, q, f).ratio
        lo, hi = min(lo, r), max(hi, r)
        in_band += 0.95 <= r <= 1 + 1e-6
    g64 = Grid(2.0, 64)
    two = ExponentField.constant(g64, 2.0)
    hilbert = norming_check(two, two, FuncSequence(rng.normal(size=(3, 64)), g64)).ratio
    ok = in_band == 50 and abs(hilbert - 1) <= 1e-3
    acceptance.record("6 norming ratio", ok,
                      f"{in_band}/50 in [0.95, 1+1e-6] (range {lo:.9f}..{hi:.9f}), Hilbert {hilbert:.9f}")
    assert ok


def _sub_nyquist(rng, grid: Grid) -> GridFunction:
    spectrum = rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)
    spectrum /= 1 + np.abs(grid.wavenumbers) ** rng.uniform(0.3, 2)
    spectrum[grid.n_points // 2] = 0
    return GridFunction(np.fft.ifft(spectrum).real, grid)


def test_7_besov_machinery(acceptance):
    rng = np.random.default_rng(707)
    below = np.abs(GRID.wavenumbers) < GRID.n_points // 2
    pou = max(np.max(np.abs(build_filter_pair(GRID, s).partition_of_unity()[below] - 1)) for s in SHAPES)
    F = build_filter_pair(GRID)
    worst_ret = 0.0
    for _ in range(50):
        f = _sub_nyquist(rng, GRID)
        s = ExponentField(random_log_holder(GRID, 1.5, 4.0, 3, int(rng.integers(2**31))).values
                          - rng.uniform(1.5, 4.0), GRID, "real")
        back = synthesize(analyze(f, s, F), F)
        worst_ret = max(worst_ret, np.linalg.norm(back.values - f.values) / np.linalg.norm(f.values))
    zero = ExponentField.constant(GRID, 0.0, cls="real")
    two = ExponentField.constant(GRID, 2.0)
    worst_pl = 0.0
    for _ in range(10):
        f = _sub_nyquist(rng, GRID)
        got = besov_norm(f, zero, two, two, F, tol=1e-10).value
        worst_pl = max(worst_pl, rel(got, math.sqrt(GRID.dx * np.sum(f.values ** 2))))
    ok = pou <= 1e-10 and worst_ret <= 1e-10 and worst_pl <= 1e-8
    acceptance.record("7 Besov machinery", ok,
                      f"partition of unity {pou:.1e}, retraction {worst_ret:.1e} over 50, "
                      f"Plancherel {worst_pl:.1e}")
    assert ok


def _verify_cli(path):
    return subprocess.run([sys.executable, "-m", "vexp", "verify", "--suite", "all", "--seed", "42",
                           "--out", str(path)], capture_output=True, text=True)


def test_8_determinism(acceptance, tmp_path):
    a, b = _verify_cli(tmp_path / "a.csv"), _verify_cli(tmp_path / "b.csv")
    same = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    ok = same and a.returncode == 0 and b.returncode == 0
    acceptance.record("8 determinism", ok,
                      f"byte-identical reports: {same}, exit codes {a.returncode}/{b.returncode}")
    assert ok, a.stderr + b.stderr


def _mutant_normalize(log_raw):
    # raw bumps without normalization
    return np.exp(log_raw)


def _mutant_scaling_powers(q):
    # lam^(1/inf) treated as lam^1 instead of 1
    return np.where(q.omega_inf_mask, 1.0, q.reciprocal())


def test_9_mutation_smoke(acceptance, monkeypatch):
    with monkeypatch.context() as m:
        m.setattr(vexp.besov, "_normalize", _mutant_normalize)
        besov_fail = [r.property for r in verify.run(["besov"], 42, 20) if not r.passed]
    with monkeypatch.context() as m:
        m.setattr(vexp.mixed, "scaling_powers", _mutant_scaling_powers)
        mixed_fail = [r.property for r in verify.run(["mixed"], 42, 20) if not r.passed]
    clean = [r.property for r in verify.run(["besov", "mixed"], 42, 20) if not r.passed]
    ok = bool(besov_fail) and bool(mixed_fail) and not clean
    acceptance.record("9 mutation smoke test", ok,
                      f"no normalization fails {besov_fail}; convention mutant fails {mixed_fail}; "
                      f"unmutated failures {clean}")
    assert ok
