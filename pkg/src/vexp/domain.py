"""Periodic 1-D grids, grid functions, finite function sequences.

Everything lives on the uniform grid ``x_i = -L + i * dx`` of ``[-L, L)``
with ``dx = 2L / n``.  Integrals are rectangle sums, which on a periodic
grid coincide with the trapezoidal rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import GridMismatch, InputError

DEFAULT_HALF_LENGTH = 2.0
DEFAULT_N_POINTS = 1024


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class Grid:
    """Uniform periodic discretization of ``[-half_length, half_length)``."""

    half_length: float = DEFAULT_HALF_LENGTH
    n_points: int = DEFAULT_N_POINTS

    def __post_init__(self):
        n = self.n_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n & (n - 1):
            raise InputError(f"n_points must be a power of two >= 8, got {n!r}")
        if not (np.isfinite(self.half_length) and self.half_length > 0):
            raise InputError(f"half_length must be positive, got {self.half_length!r}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n_points

    @property
    def x(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n_points)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Integer DFT wavenumbers in numpy FFT order."""
        return np.fft.fftfreq(self.n_points, d=1.0 / self.n_points)

    def indicator(self, a: float, b: float) -> np.ndarray:
        """0/1 samples of the indicator of ``[a, b)``."""
        x = self.x
        return ((x >= a) & (x < b)).astype(float)

    def check_same(self, other: "Grid"):
        if other != self:
            raise GridMismatch(f"grid mismatch: {self} vs {other}")


class GridFunction:
    """Real or complex samples on a :class:`Grid`."""

    __slots__ = ("values", "grid")

    def __init__(self, values, grid: Grid):
        values = np.asarray(values)
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        if values.shape != (grid.n_points,):
            raise GridMismatch(
                f"expected {grid.n_points} samples, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InputError("grid function values must be finite")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "grid", grid)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    @classmethod
    def zeros(cls, grid: Grid) -> "GridFunction":
        return cls(np.zeros(grid.n_points), grid)

    @property
    def is_complex(self) -> bool:
        return self.values.dtype.kind == "c"

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            self.grid.check_same(other.grid)
            return other.values
        return other

    def __add__(self, other):
        return GridFunction(self.values + self._coerce(other), self.grid)

    __radd__ = __add__

    def __sub__(self, other):
        return GridFunction(self.values - self._coerce(other), self.grid)

    def __mul__(self, other):
        return GridFunction(self.values * self._coerce(other), self.grid)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return GridFunction(self.values / scalar, self.grid)

    def __neg__(self):
        return GridFunction(-self.values, self.grid)

    def __abs__(self):
        return GridFunction(np.abs(self.values), self.grid)

    def __repr__(self):
        return f"GridFunction(n={self.grid.n_points}, max|f|={np.max(np.abs(self.values)):.6g})"


class FuncSequence:
    """Finite sequence ``(f_1, ..., f_N)`` of grid functions on one grid.

    Terms beyond ``n_terms`` are implicitly zero.  Values are stored as a
    dense ``(n_terms, n_points)`` array.
    """

    __slots__ = ("values", "grid")

    def __init__(self, values, grid: Grid):
        values = np.asarray(values)
        if values.dtype.kind not in "fc":
            values = values.astype(float)
        if values.ndim == 1 and values.size == 0:
            values = values.reshape(0, grid.n_points)
        if values.ndim != 2 or values.shape[1] != grid.n_points:
            raise GridMismatch(
                f"expected shape (N, {grid.n_points}), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InputError("sequence values must be finite")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "grid", grid)

    def __setattr__(self, name, value):
        raise AttributeError("FuncSequence is immutable")

    @classmethod
    def from_terms(cls, terms: Iterable[GridFunction], grid: Grid | None = None):
        terms = list(terms)
        if not terms:
            if grid is None:
                raise InputError("empty sequence needs an explicit grid")
            return cls(np.zeros((0, grid.n_points)), grid)
        grid = grid or terms[0].grid
        for t in terms:
            grid.check_same(t.grid)
        return cls(np.stack([t.values for t in terms]), grid)

    @property
    def n_terms(self) -> int:
        return self.values.shape[0]

    @property
    def terms(self) -> list[GridFunction]:
        return [GridFunction(row, self.grid) for row in self.values]

    def __len__(self):
        return self.n_terms

    def __getitem__(self, i) -> GridFunction:
        return GridFunction(self.values[i], self.grid)

    def padded(self, n_terms: int) -> "FuncSequence":
        """Copy extended with zero terms up to ``n_terms``."""
        if n_terms <= self.n_terms:
            return self
        extra = np.zeros((n_terms - self.n_terms, self.grid.n_points), self.values.dtype)
        return FuncSequence(np.vstack([self.values, extra]), self.grid)

    def _coerce(self, other):
        if isinstance(other, FuncSequence):
            self.grid.check_same(other.grid)
            n = max(self.n_terms, other.n_terms)
            return self.padded(n).values, other.padded(n).values
        return self.values, other

    def __add__(self, other):
        a, b = self._coerce(other)
        return FuncSequence(a + b, self.grid)

    def __sub__(self, other):
        a, b = self._coerce(other)
        return FuncSequence(a - b, self.grid)

    def __mul__(self, scalar):
        return FuncSequence(self.values * scalar, self.grid)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return FuncSequence(self.values / scalar, self.grid)

    def __neg__(self):
        return FuncSequence(-self.values, self.grid)

    def __abs__(self):
        return FuncSequence(np.abs(self.values), self.grid)

    def __repr__(self):
        return f"FuncSequence(n_terms={self.n_terms}, n={self.grid.n_points})"


def integrate(f: GridFunction) -> float:
    """Rectangle-rule integral ``dx * sum(f)`` of a real grid function."""
    if f.is_complex:
        raise InputError("integrate expects a real-valued grid function")
    return float(f.grid.dx * np.sum(f.values))


def _smooth(grid: Grid, rng: np.random.Generator, bandwidth: int) -> np.ndarray:
    k = np.arange(1, bandwidth + 1)
    coef = (rng.standard_normal(bandwidth) + 1j * rng.standard_normal(bandwidth)) / k
    phase = np.pi * np.outer(grid.x, k) / grid.half_length
    vals = np.real(np.exp(1j * phase) @ coef) + 0.5 * rng.standard_normal()
    return vals


def _bump(grid: Grid, rng: np.random.Generator) -> np.ndarray:
    L = grid.half_length
    center = rng.uniform(-L / 2, L / 2)
    # at least two cells, so coarse grids still sample the bump
    radius = max(rng.uniform(0.1 * L, 0.4 * L), 2 * grid.dx)
    r = (grid.x - center) / radius
    out = np.zeros(grid.n_points)
    inside = np.abs(r) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r[inside] ** 2))
    return out


def random_function(grid: Grid, kind: str = "smooth", amplitude: float = 1.0,
                    seed: int = 0, bandwidth: int = 8) -> GridFunction:
    """Deterministic random test function.

    ``smooth`` is a random Fourier series with at most ``bandwidth`` modes,
    ``bump`` a smooth compactly supported bump at a random centre away from
    the periodic wrap, ``spike`` a single-cell indicator.  All kinds are
    scaled so that ``max |f| == amplitude``.
    """
    if not amplitude > 0:
        raise InputError("amplitude must be positive")
    rng = np.random.default_rng(seed)
    if kind == "smooth":
        if not 1 <= bandwidth < grid.n_points // 2:
            raise InputError("bandwidth must lie in [1, n_points/2)")
        vals = _smooth(grid, rng, bandwidth)
    elif kind == "bump":
        vals = _bump(grid, rng)
    elif kind == "spike":
        vals = np.zeros(grid.n_points)
        vals[rng.integers(grid.n_points)] = 1.0
    else:
        raise InputError(f"unknown random function kind {kind!r}")
    peak = np.max(np.abs(vals))
    return GridFunction(amplitude * vals / peak, grid)


def random_sequence(grid: Grid, n_terms: int, kind: str = "smooth",
                    amplitude: float = 1.0, seed: int = 0,
                    decay: float | None = None,
                    bandwidth: int = 8) -> FuncSequence:
    """Sequence of independent random functions.

    With ``decay`` set, term ``nu`` (0-based) is scaled by ``decay ** nu``
    so the sequence has a geometrically summable tail.
    """
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63 - 1, size=n_terms)
    rows = []
    for nu, s in enumerate(seeds):
        amp = amplitude * (decay ** nu if decay is not None else 1.0)
        rows.append(random_function(grid, kind, amp, int(s), bandwidth).values)
    if not rows:
        return FuncSequence(np.zeros((0, grid.n_points)), grid)
    return FuncSequence(np.stack(rows), grid)


def as_sequence(terms: Sequence[GridFunction] | FuncSequence) -> FuncSequence:
    if isinstance(terms, FuncSequence):
        return terms
    return FuncSequence.from_terms(terms)
