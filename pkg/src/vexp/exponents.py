"""Variable exponents: fields, conjugates, normability and log-Hölder checks.

Infinite exponent values are stored as IEEE ``inf`` and every arithmetic
path branches on the ``omega_inf_mask`` explicitly rather than relying on
large finite stand-ins.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .domain import Grid, _frozen
from .errors import BadBounds, GridMismatch, InputError, NotInClassP, SpecOutOfRange

INFINITY = math.inf

# Exponent classes: "P" (values >= 1), "P0" (values >= floor > 0), "real"
# (any bounded real, used for smoothness fields).
CLASSES = ("P", "P0", "real")

EXACT_PAIR_LIMIT = 4096
DEFAULT_PAIR_SAMPLES = 2_000_000


def _parse_value(v) -> float:
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "+inf"):
            return INFINITY
        raise SpecOutOfRange(f"cannot parse exponent value {v!r}")
    return float(v)


class ExponentField:
    """Exponent function sampled on a grid.

    Attributes
    ----------
    values : ndarray
        Per-point exponent, ``inf`` where the exponent is infinite.
    p_minus, p_plus : float
        Minimum and maximum over the grid (the discrete ess inf / ess sup).
    omega_inf_mask : ndarray of bool
        True exactly where ``values`` is infinite.
    log_holder_constant, limit_at_infinity : float or None
        Set by generators that certify their own log-Hölder constant.
    """

    def __init__(self, values, grid: Grid, cls: str = "P", floor: float | None = None,
                 log_holder_constant: float | None = None,
                 limit_at_infinity: float | None = None):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n_points,):
            raise GridMismatch(f"exponent table has shape {values.shape}, "
                               f"grid has {grid.n_points} points")
        if cls not in CLASSES:
            raise InputError(f"unknown exponent class {cls!r}")
        if np.any(np.isnan(values)):
            raise SpecOutOfRange("exponent values contain NaN")
        inf_mask = np.isinf(values)
        if cls == "real":
            if inf_mask.any():
                raise SpecOutOfRange("a real-valued field must be bounded")
        else:
            if np.any(values == -np.inf):
                raise SpecOutOfRange("exponent values must be positive")
            lo = 1.0 if cls == "P" else floor
            if lo is None:
                if np.any(values <= 0):
                    raise SpecOutOfRange("class P0 exponents must be positive")
            elif lo <= 0:
                raise SpecOutOfRange("class P0 floor must be positive")
            elif np.any(values < lo):
                raise SpecOutOfRange(
                    f"exponent min {values.min():.6g} below class floor {lo:g}")
        self.values = _frozen(values)
        self.grid = grid
        self.cls = cls
        self.floor = 1.0 if cls == "P" else floor
        self.omega_inf_mask = _frozen(inf_mask)
        self.p_minus = float(values.min())
        self.p_plus = float(values.max())
        self.log_holder_constant = log_holder_constant
        self.limit_at_infinity = limit_at_infinity

    @classmethod
    def constant(klass, grid: Grid, value, **kw) -> "ExponentField":
        return klass(np.full(grid.n_points, _parse_value(value)), grid, **kw)

    @property
    def is_finite(self) -> bool:
        return not self.omega_inf_mask.any()

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    @property
    def in_class_p(self) -> bool:
        return bool(np.all(self.values >= 1.0))

    def reciprocal(self) -> np.ndarray:
        """Pointwise ``1/p`` with ``1/inf := 0``."""
        out = np.zeros_like(self.values)
        fin = ~self.omega_inf_mask
        out[fin] = 1.0 / self.values[fin]
        return out

    def __repr__(self):
        return (f"ExponentField(cls={self.cls}, min={self.p_minus:.6g}, "
                f"max={self.p_plus:.6g}, n_inf={int(self.omega_inf_mask.sum())})")


def make_exponent_field(grid: Grid, spec) -> ExponentField:
    """Build a field from an exponent spec.

    ``spec`` is a number, the string ``"inf"``, or a mapping with a
    ``kind`` key:

    * ``{"kind": "constant", "value": 2}``
    * ``{"kind": "affine", "a": 2, "b": 1, "interval": [0, 1],
      "outside": 2, "clip": [lo, hi]}``; ``a + b*x`` on the closed
      interval (whole grid if omitted), ``outside`` elsewhere (default
      ``a``), optionally clipped.
    * ``{"kind": "table", "values": [...]}``; entries may be ``"inf"``.
    * ``{"kind": "random", "lo": 1.5, "hi": 3, "bandwidth": 4, "seed": 7}``;
      see :func:`random_log_holder`.

    Optional keys ``class`` (``P``, ``P0`` or ``real``; default ``P``) and
    ``floor`` (for ``P0``) set the admissible range.
    """
    if not isinstance(spec, Mapping):
        spec = {"kind": "constant", "value": spec}
    kind = spec.get("kind")
    cls = spec.get("class", "P")
    floor = spec.get("floor")
    if kind == "constant":
        values = np.full(grid.n_points, _parse_value(spec["value"]))
    elif kind == "affine":
        x = grid.x
        a, b = float(spec["a"]), float(spec.get("b", 0.0))
        lin = a + b * x
        if "interval" in spec:
            x0, x1 = (float(v) for v in spec["interval"])
            outside = _parse_value(spec.get("outside", a))
            values = np.where((x >= x0) & (x <= x1), lin, outside)
        else:
            values = lin
        if "clip" in spec:
            lo, hi = (_parse_value(v) for v in spec["clip"])
            values = np.clip(values, lo, hi)
    elif kind == "table":
        raw = spec["values"]
        if len(raw) != grid.n_points:
            raise GridMismatch(
                f"table has {len(raw)} entries, grid has {grid.n_points} points")
        values = np.array([_parse_value(v) for v in raw], dtype=float)
    elif kind == "random":
        field = random_log_holder(grid, float(spec["lo"]), float(spec["hi"]),
                                  int(spec.get("bandwidth", 4)), int(spec.get("seed", 0)))
        if cls != "P":
            return ExponentField(field.values, grid, cls, floor,
                                 field.log_holder_constant, field.limit_at_infinity)
        return field
    else:
        raise InputError(f"unknown exponent spec kind {kind!r}")
    return ExponentField(values, grid, cls, floor)


def conjugate(p: ExponentField) -> ExponentField:
    """Pointwise conjugate exponent ``p'`` with ``1/p + 1/p' = 1``."""
    if not p.in_class_p:
        raise NotInClassP("conjugate exponent needs p >= 1 everywhere")
    v = p.values
    out = np.empty_like(v)
    one = v == 1.0
    inf = p.omega_inf_mask
    mid = ~(one | inf)
    out[one] = INFINITY
    out[inf] = 1.0
    out[mid] = v[mid] / (v[mid] - 1.0)
    return ExponentField(out, p.grid, "P")


class Condition(str, enum.Enum):
    COND1 = "COND1"
    COND2 = "COND2"
    COND3 = "COND3"
    NONE = "NONE"


@dataclass(frozen=True)
class NormabilityCondition:
    tag: Condition
    witness: str

    @property
    def normable(self) -> bool:
        return self.tag is not Condition.NONE


# slack for 1/p + 1/q <= 1 at conjugate pairs, where rounding can give 1 + ulp
_COND3_SLACK = 1e-12


def check_normability(p: ExponentField, q: ExponentField) -> NormabilityCondition:
    """First of the three sufficient conditions for a true norm that holds."""
    p.grid.check_same(q.grid)
    if not (p.in_class_p and q.in_class_p):
        raise NotInClassP("normability conditions are stated for class P exponents")
    pv, qv = p.values, q.values
    if np.all(qv <= pv):
        return NormabilityCondition(Condition.COND1, "1 <= q(x) <= p(x) at every grid point")
    if q.is_constant:
        return NormabilityCondition(
            Condition.COND2, f"q == {q.p_minus:g} constant and p_minus = {p.p_minus:g} >= 1")
    s = p.reciprocal() + q.reciprocal()
    if np.all(s <= 1.0 + _COND3_SLACK):
        return NormabilityCondition(
            Condition.COND3, f"max 1/p + 1/q = {s.max():.12g} <= 1")
    i = int(np.argmax(qv - pv))
    j = int(np.argmax(s))
    return NormabilityCondition(
        Condition.NONE,
        f"q > p at x={p.grid.x[i]:g}, q not constant, 1/p + 1/q = {s[j]:.6g} at x={p.grid.x[j]:g}")


@dataclass(frozen=True)
class CheckReport:
    """Outcome of a log-Hölder check; margins are ``lhs - rhs`` (<= 0 passes)."""

    passed: bool
    local_margin: float
    local_pair: tuple[float, float] | None
    decay_margin: float
    decay_point: float | None
    pairs_checked: int
    exact: bool


def _as_fields(fields) -> list[ExponentField]:
    if isinstance(fields, ExponentField):
        return [fields]
    return list(fields)


def check_log_holder(fields, c: float, limits=None, *,
                     pair_samples: int = DEFAULT_PAIR_SAMPLES, seed: int = 0) -> CheckReport:
    """Check the local and decay log-Hölder conditions on the grid.

    ``fields`` is one field or several (their deviations are summed, as in
    the joint condition on ``p``, ``q`` and ``s``).  ``limits`` holds the
    value at infinity for each field, or ``None`` for a field exempt from
    the decay condition; a bare ``None`` skips the decay check entirely.

    All pairs are checked for grids up to 4096 points; above that,
    ``pair_samples`` random pairs plus every adjacent pair are checked.
    """
    fs = _as_fields(fields)
    if not c > 0:
        raise InputError("log-Hölder constant must be positive")
    grid = fs[0].grid
    for f in fs:
        grid.check_same(f.grid)
        if not f.is_finite:
            raise InputError("log-Hölder check needs finite-valued fields")
    x = grid.x
    V = np.stack([f.values for f in fs])
    n = grid.n_points

    worst, worst_pair, checked = -np.inf, None, 0
    if n <= EXACT_PAIR_LIMIT:
        block = 256
        for start in range(0, n, block):
            i = np.arange(start, min(start + block, n))
            dist = np.abs(x[i, None] - x[None, :])
            diff = np.abs(V[:, i, None] - V[:, None, :]).sum(axis=0)
            with np.errstate(divide="ignore"):
                rhs = c / np.log(np.e + 1.0 / dist)
            rhs[dist == 0] = np.inf
            m = diff - rhs
            k = np.unravel_index(np.argmax(m), m.shape)
            if m[k] > worst:
                worst, worst_pair = float(m[k]), (float(x[i[k[0]]]), float(x[k[1]]))
        checked = n * (n - 1)
        exact = True
    else:
        rng = np.random.default_rng(seed)
        i = np.concatenate([np.arange(n - 1), rng.integers(0, n, pair_samples)])
        j = np.concatenate([np.arange(1, n), rng.integers(0, n, pair_samples)])
        keep = i != j
        i, j = i[keep], j[keep]
        dist = np.abs(x[i] - x[j])
        diff = np.abs(V[:, i] - V[:, j]).sum(axis=0)
        m = diff - c / np.log(np.e + 1.0 / dist)
        k = int(np.argmax(m))
        worst, worst_pair = float(m[k]), (float(x[i[k]]), float(x[j[k]]))
        checked = int(i.size)
        exact = False

    decay, decay_pt = -np.inf, None
    if limits is not None:
        lims = [limits] if np.isscalar(limits) else list(limits)
        if len(lims) != len(fs):
            raise InputError("need one limit (or None) per field")
        dev = np.zeros(n)
        for f, lim in zip(fs, lims):
            if lim is not None:
                dev += np.abs(f.values - lim)
        m = dev - c / np.log(np.e + np.abs(x))
        k = int(np.argmax(m))
        decay, decay_pt = float(m[k]), float(x[k])

    passed = worst <= 0 and decay <= 0
    return CheckReport(passed, worst, worst_pair, decay, decay_pt, checked, exact)


def _smooth_window(x: np.ndarray, inner: float, outer: float) -> np.ndarray:
    """C-infinity window: 1 for |x| <= inner, 0 for |x| >= outer."""
    t = (np.abs(x) - inner) / (outer - inner)
    t = np.clip(t, 0.0, 1.0)

    def psi(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1.0 / s[pos])
        return out

    a, b = psi(1.0 - t), psi(t)
    return a / (a + b)


def declared_log_holder_constant(field: ExponentField, limit: float | None) -> float:
    """A constant for which the field provably passes :func:`check_log_holder`.

    On a grid, chaining adjacent differences gives ``|p(x) - p(y)| <=
    min(Lip |x - y|, osc)`` where ``Lip`` is the largest adjacent slope.
    ``r -> Lip r log(e + 1/r)`` increases, so the worst local ratio sits at
    ``r = osc / Lip`` clipped to the grid's distance range.
    """
    grid = field.grid
    v = field.values
    dx = grid.dx
    lip = float(np.max(np.abs(np.diff(v)))) / dx
    osc = field.p_plus - field.p_minus
    c_local = 0.0
    if lip > 0:
        r = min(max(osc / lip, dx), 2 * grid.half_length - dx)
        c_local = min(lip * r, osc) * math.log(math.e + 1.0 / r)
    c_decay = 0.0
    if limit is not None:
        c_decay = float(np.max(np.abs(v - limit) * np.log(np.e + np.abs(grid.x))))
    c = max(c_local, c_decay)
    return c * (1 + 1e-9) + 1e-12


def random_log_holder(grid: Grid, lo: float, hi: float, bandwidth: int = 4,
                      seed: int = 0) -> ExponentField:
    """Random smooth exponent with values in ``[lo, hi]``.

    A random trigonometric polynomial with at most ``bandwidth`` modes is
    rescaled into ``[lo, hi]`` and blended to the constant ``(lo+hi)/2``
    outside ``[-L/2, L/2]``.  The returned field carries the constant it
    passes :func:`check_log_holder` with, and its limit at infinity.
    """
    if not (1 < lo < hi < INFINITY):
        raise BadBounds(f"need 1 < lo < hi < inf, got lo={lo}, hi={hi}")
    if bandwidth < 1:
        raise BadBounds("bandwidth must be >= 1")
    rng = np.random.default_rng(seed)
    L = grid.half_length
    x = grid.x
    k = np.arange(1, bandwidth + 1)
    a = rng.standard_normal(bandwidth)
    b = rng.standard_normal(bandwidth)
    arg = np.pi * np.outer(x, k) / L
    u = np.cos(arg) @ a + np.sin(arg) @ b
    span = u.max() - u.min()
    u = 2.0 * (u - u.min()) / span - 1.0 if span > 0 else np.zeros_like(u)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    values = mid + half * u * _smooth_window(x, L / 4, L / 2)
    values = np.clip(values, lo, hi)
    field = ExponentField(values, grid, "P")
    c = declared_log_holder_constant(field, mid)
    return ExponentField(values, grid, "P", log_holder_constant=c, limit_at_infinity=mid)
