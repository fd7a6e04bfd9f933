"""Littlewood-Paley filter banks and variable-exponent Besov norms.

Filters live on the integer DFT wavenumber axis ``k`` with base unit
``k0 = 1``: the low-pass filter is supported in ``|k| <= 2`` and band
``nu`` in ``2^(nu-1) <= |k| <= 2^(nu+1)``.  Raw bumps are normalized so
that their squares sum to one at every wavenumber below the Nyquist bin;
the Nyquist bin itself is left out (all filters vanish there).

Since every filter is real and even, analysis followed by synthesis is the
identity on functions without Nyquist energy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._solver import logsumexp
from .domain import FuncSequence, Grid, GridFunction
from .errors import GridTooSmall, InputError
from .exponents import ExponentField
from .lebesgue import NormResult
from .mixed import OUTER_TOL, INNER_TOL, mixed_norm

LN2 = math.log(2.0)
SHAPES = ("smooth", "log")
MIN_BANDS = 3


def _log_bump(u: np.ndarray) -> np.ndarray:
    """``log exp(-1/(1-u^2))`` on ``|u| < 1``, ``-inf`` elsewhere."""
    out = np.full(u.shape, -np.inf)
    inside = np.abs(u) < 1
    out[inside] = -1.0 / (1.0 - u[inside] ** 2)
    return out


def _raw_low(k: np.ndarray, shape: str) -> np.ndarray:
    # support |k| <= 2
    if shape == "smooth":
        return _log_bump(k / 2.0)
    return _log_bump((k / 2.0) ** 2)


def _raw_band(k: np.ndarray, nu: int, shape: str) -> np.ndarray:
    # support 2^(nu-1) <= |k| <= 2^(nu+1)
    a = np.abs(k)
    if shape == "smooth":
        # symmetric in k on [2^(nu-1), 2^(nu+1)]
        lo, hi = 2.0 ** (nu - 1), 2.0 ** (nu + 1)
        return _log_bump((2 * a - lo - hi) / (hi - lo))
    with np.errstate(divide="ignore"):
        return _log_bump(np.log2(a) - nu)


def _normalize(log_raw: np.ndarray) -> np.ndarray:
    """Rows ``exp(r) / sqrt(sum exp(2 r))`` computed in log space."""
    total = 0.5 * logsumexp(2.0 * log_raw, axis=0)
    with np.errstate(invalid="ignore"):
        out = np.exp(log_raw - total)
    return np.where(np.isfinite(total), out, 0.0)


@dataclass(frozen=True)
class FilterPair:
    """Fourier-side filters in numpy FFT order.

    ``phi_hat[nu - 1]`` is band ``nu`` for ``nu = 1..nu_max``.
    """

    Phi_hat: GridFunction
    phi_hat: tuple
    nu_max: int
    shape: str = "smooth"

    @property
    def grid(self) -> Grid:
        return self.Phi_hat.grid

    def band(self, nu: int) -> np.ndarray:
        """Filter of band ``nu``; ``nu = 0`` is the low-pass filter."""
        return self.Phi_hat.values if nu == 0 else self.phi_hat[nu - 1].values

    def stack(self) -> np.ndarray:
        """All filters as rows ``0..nu_max``."""
        return np.stack([self.band(nu) for nu in range(self.nu_max + 1)])

    def partition_of_unity(self) -> np.ndarray:
        """``Phi_hat^2 + sum phi_hat^2`` at every wavenumber."""
        return np.sum(self.stack() ** 2, axis=0)

    def to_rows(self):
        """Header and rows (ascending wavenumber) for CSV export."""
        k = self.grid.wavenumbers
        order = np.argsort(k, kind="stable")
        F = self.stack()
        header = ["frequency", "Phi_hat"] + [f"phi_hat_{nu}" for nu in range(1, self.nu_max + 1)]
        rows = [[int(k[i])] + [float(v) for v in F[:, i]] for i in order]
        return header, rows


def band_count(grid: Grid) -> int:
    """``log2(Nyquist / k0) - 1``."""
    return int(math.log2(grid.n_points // 2)) - 1


def build_filter_pair(grid: Grid, shape: str = "smooth") -> FilterPair:
    """Normalized Littlewood-Paley pair on ``grid``.

    ``shape`` picks the raw bump: ``smooth`` is the standard
    ``exp(-1/(1-u^2))`` bump, linear in ``k`` on each annulus; ``log``
    places it on the logarithmic axis ``log2|k| - nu``.  Both give
    admissible pairs with the same supports.
    """
    if shape not in SHAPES:
        raise InputError(f"unknown filter shape {shape!r}; expected one of {SHAPES}")
    nu_max = band_count(grid)
    if nu_max < MIN_BANDS:
        raise GridTooSmall(f"{grid.n_points} points give only {nu_max} bands, need {MIN_BANDS}")
    k = grid.wavenumbers
    raw = np.stack([_raw_low(k, shape)] + [_raw_band(k, nu, shape) for nu in range(1, nu_max + 1)])
    raw[:, np.abs(k) >= grid.n_points // 2] = -np.inf
    F = _normalize(raw)
    return FilterPair(GridFunction(F[0], grid),
                      tuple(GridFunction(row, grid) for row in F[1:]), nu_max, shape)


@dataclass(frozen=True)
class BesovDecomposition:
    """Weighted bands ``2^(nu s) (phi_nu * f)`` for ``nu = 0..nu_max``."""

    bands: FuncSequence
    s_field: ExponentField


def _weight(values: np.ndarray, log_w: np.ndarray) -> np.ndarray:
    # multiply by exp(log_w) without forming a huge or tiny weight on its own
    a = np.abs(values)
    with np.errstate(divide="ignore"):
        mag = np.exp(np.log(a) + log_w)
    phase = np.where(a > 0, values / np.where(a > 0, a, 1.0), 0.0)
    return mag * phase


def _filter(values: np.ndarray, filt: np.ndarray, real: bool) -> np.ndarray:
    out = np.fft.ifft(np.fft.fft(values) * filt)
    return out.real if real else out


def _check_s(s: ExponentField, grid: Grid):
    grid.check_same(s.grid)
    if not s.is_finite:
        raise InputError("smoothness field must be finite")


def analyze(f: GridFunction, s: ExponentField, filters: FilterPair) -> BesovDecomposition:
    """Band ``nu``: filter ``f`` in Fourier space, then weight by ``2^(nu s(x))``."""
    grid = filters.grid
    grid.check_same(f.grid)
    _check_s(s, grid)
    real = not f.is_complex
    rows = []
    for nu in range(filters.nu_max + 1):
        band = _filter(f.values, filters.band(nu), real)
        rows.append(_weight(band, nu * LN2 * s.values))
    return BesovDecomposition(FuncSequence(np.stack(rows), grid), s)


def synthesize(bands: BesovDecomposition, filters: FilterPair) -> GridFunction:
    """``sum_nu phi_nu * (2^(-nu s) f_nu)``, summed in ascending ``nu``."""
    grid = filters.grid
    seq = bands.bands
    grid.check_same(seq.grid)
    _check_s(bands.s_field, grid)
    if seq.n_terms > filters.nu_max + 1:
        raise InputError(f"{seq.n_terms} bands but the filter pair has {filters.nu_max + 1}")
    real = seq.values.dtype.kind != "c"
    out = np.zeros(grid.n_points, dtype=float if real else complex)
    for nu in range(seq.n_terms):
        unweighted = _weight(seq.values[nu], -nu * LN2 * bands.s_field.values)
        out = out + _filter(unweighted, filters.band(nu), real)
    return GridFunction(out, grid)


def besov_norm(f: GridFunction, s: ExponentField, p: ExponentField, q: ExponentField,
               filters: FilterPair, tol: float = OUTER_TOL,
               inner_tol: float = INNER_TOL) -> NormResult:
    """Mixed norm of :func:`analyze`, low-pass band first."""
    return mixed_norm(p, q, analyze(f, s, filters).bands, tol, inner_tol)
