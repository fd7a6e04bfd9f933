"""CSV data files and JSON run configurations.

Grid functions are written as ``x,value`` (``x,re,im`` when complex),
function sequences as ``x,f1,f2,...`` (``x,f1_re,f1_im,...`` when
complex).  The ``x`` column must match the configured grid.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import FuncSequence, Grid, GridFunction
from .errors import GridMismatch, InputError
from .exponents import ExponentField, make_exponent_field

X_TOL = 1e-9
DEFAULT_INNER_TOL = 1e-10
DEFAULT_OUTER_TOL = 1e-8
SUITES = ("exponents", "lebesgue", "mixed", "duality", "besov")


def _fmt(v: float) -> str:
    return repr(float(v))


def _read_table(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such data file: {path}")
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise InputError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise InputError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise InputError(f"{path}: every row needs {len(header)} columns")
    return header, data


def _check_x(header, data, grid: Grid, path):
    if not header or header[0] != "x":
        raise InputError(f"{path}: first column must be 'x'")
    if data.shape[0] != grid.n_points:
        raise GridMismatch(f"{path}: {data.shape[0]} rows, grid has {grid.n_points} points")
    if np.max(np.abs(data[:, 0] - grid.x)) > X_TOL * max(1.0, grid.half_length):
        raise GridMismatch(f"{path}: x column does not match the grid")


def _columns(header: list[str], data: np.ndarray, path) -> tuple[list[str], np.ndarray]:
    """Group ``name_re``/``name_im`` pairs into complex columns."""
    names, cols = [], []
    i = 1
    while i < len(header):
        h = header[i]
        if h.endswith("_re") or h == "re":
            base = h[:-3] if h.endswith("_re") else ""
            want = f"{base}_im" if base else "im"
            if i + 1 >= len(header) or header[i + 1] != want:
                raise InputError(f"{path}: column {h!r} must be followed by {want!r}")
            names.append(base or "value")
            cols.append(data[:, i] + 1j * data[:, i + 1])
            i += 2
        else:
            names.append(h)
            cols.append(data[:, i])
            i += 1
    if not cols:
        raise InputError(f"{path}: no value columns")
    return names, np.array(cols)


def read_grid_function(path, grid: Grid) -> GridFunction:
    header, data = _read_table(path)
    _check_x(header, data, grid, path)
    _, cols = _columns(header, data, path)
    if cols.shape[0] != 1:
        raise InputError(f"{path}: expected a single value column")
    return GridFunction(cols[0], grid)


def read_sequence(path, grid: Grid) -> FuncSequence:
    """A multi-column CSV, or a directory of single-function CSVs (sorted by name)."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise InputError(f"{path}: no CSV files")
        return FuncSequence.from_terms([read_grid_function(f, grid) for f in files], grid)
    header, data = _read_table(path)
    _check_x(header, data, grid, path)
    _, cols = _columns(header, data, path)
    return FuncSequence(cols, grid)


def _value_columns(name: str, values: np.ndarray):
    if np.iscomplexobj(values):
        return [f"{name}_re" if name else "re", f"{name}_im" if name else "im"], [values.real, values.imag]
    return [name or "value"], [values]


def write_table(path, header: list[str], rows) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([v if isinstance(v, (str, int)) else _fmt(v) for v in r])


def write_grid_function(path, f: GridFunction) -> None:
    names, cols = _value_columns("", f.values)
    write_table(path, ["x"] + names, zip(f.grid.x, *cols))


def write_sequence(path, f: FuncSequence) -> None:
    header, cols = ["x"], [f.grid.x]
    for i, row in enumerate(f.values, start=1):
        names, vals = _value_columns(f"f{i}", row)
        header += names
        cols += vals
    write_table(path, header, zip(*cols))


@dataclass
class RunConfig:
    grid: Grid = field(default_factory=Grid)
    exponents: dict = field(default_factory=dict)
    inner_tol: float = DEFAULT_INNER_TOL
    outer_tol: float = DEFAULT_OUTER_TOL
    seed: int = 0
    suite: list = field(default_factory=lambda: ["all"])
    input: Path | None = None

    def exponent(self, name: str, default=None) -> ExponentField:
        spec = self.exponents.get(name, default)
        if spec is None:
            raise InputError(f"config has no exponent {name!r}")
        if name == "s" and isinstance(spec, (int, float, str)):
            spec = {"kind": "constant", "value": spec, "class": "real"}
        elif name == "s" and "class" not in spec:
            spec = dict(spec, **{"class": "real"})
        return make_exponent_field(self.grid, spec)


def _positive(v, what) -> float:
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise InputError(f"{what} must be a number") from None
    if not (v > 0 and math.isfinite(v)):
        raise InputError(f"{what} must be positive and finite")
    return v


def parse_config(raw: dict, base: Path | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise InputError("config must be a JSON object")
    unknown = set(raw) - {"grid", "exponents", "tolerances", "seed", "suite", "input"}
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    g = raw.get("grid", {})
    try:
        grid = Grid(float(g.get("L", 2.0)), int(g.get("n_points", 1024)))
    except (TypeError, ValueError, AttributeError):
        raise InputError("grid must be {'L': real, 'n_points': integer}") from None
    exps = raw.get("exponents", {})
    if not isinstance(exps, dict) or set(exps) - {"p", "q", "s"}:
        raise InputError("exponents must be an object with keys among p, q, s")
    tols = raw.get("tolerances", {})
    inner = _positive(tols.get("inner", DEFAULT_INNER_TOL), "tolerances.inner")
    outer = _positive(tols.get("outer", DEFAULT_OUTER_TOL), "tolerances.outer")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise InputError("seed must be a non-negative integer")
    suite = raw.get("suite", ["all"])
    if isinstance(suite, str):
        suite = [suite]
    bad = [s for s in suite if s not in SUITES + ("all",)]
    if bad:
        raise InputError(f"unknown suites: {bad}")
    inp = raw.get("input")
    if inp is not None:
        inp = Path(inp) if base is None or Path(inp).is_absolute() else base / inp
        if not inp.exists():
            raise InputError(f"referenced data file does not exist: {inp}")
    cfg = RunConfig(grid, exps, inner, outer, seed, list(suite), inp)
    for name in exps:
        cfg.exponent(name)          # validate early
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such config file: {path}")
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    return parse_config(raw, path.parent)
