"""Dyadic piecewise-constant functions on [0, 1] with norm and in-measure metrics.

The ambient space is L1([0, 1], Lebesgue).  A function is stored by its
values on the 2**level dyadic cells, which keeps every construction used
here (peaks, sign blocks, halving shifts) exact: there is no quadrature
error anywhere, only float arithmetic.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

#: Global absolute tolerance for float comparisons throughout the package.
DEFAULT_TOL = 1e-9

#: Largest supported grid level (2**24 cells is far beyond desk scale).
MAX_LEVEL = 24


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant function on the dyadic partition of [0, 1].

    ``values[i]`` is the value on the cell ``[i * 2**-level, (i+1) * 2**-level)``.
    Instances are immutable.  Arithmetic returns new objects, and operands at
    mixed levels are refined to the finer grid automatically.
    """

    level: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if not isinstance(self.level, (int, np.integer)) or isinstance(self.level, bool):
            raise ValueError(f"level must be an integer, got {self.level!r}")
        if not (0 <= self.level <= MAX_LEVEL):
            raise ValueError(f"level must be in [0, {MAX_LEVEL}], got {self.level}")
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size != 2 ** self.level:
            raise ValueError(
                f"expected {2 ** self.level} values for level {self.level}, "
                f"got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "level", int(self.level))
        object.__setattr__(self, "values", vals)

    @property
    def cell_width(self) -> float:
        return 2.0 ** -self.level

    @classmethod
    def constant(cls, value: float, level: int) -> GridFunction:
        return cls(level, np.full(2 ** level, float(value)))

    @classmethod
    def zero(cls, level: int) -> GridFunction:
        return cls.constant(0.0, level)

    def integral(self) -> float:
        """Lebesgue integral over [0, 1]."""
        return float(self.values.sum() * self.cell_width)

    def allclose(self, other: GridFunction, tol: float = DEFAULT_TOL) -> bool:
        a, b = _aligned(self, other)
        return bool(np.max(np.abs(a.values - b.values), initial=0.0) <= tol)

    def __add__(self, other: GridFunction) -> GridFunction:
        a, b = _aligned(self, other)
        return GridFunction(a.level, a.values + b.values)

    def __sub__(self, other: GridFunction) -> GridFunction:
        a, b = _aligned(self, other)
        return GridFunction(a.level, a.values - b.values)

    def __neg__(self) -> GridFunction:
        return GridFunction(self.level, -self.values)

    def __mul__(self, scalar: float) -> GridFunction:
        return GridFunction(self.level, self.values * float(scalar))

    __rmul__ = __mul__

    def to_json(self) -> str:
        return json.dumps({"level": self.level, "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> GridFunction:
        data = json.loads(text)
        if set(data) != {"level", "values"}:
            raise ValueError(f"expected keys level/values, got {sorted(data)}")
        return cls(int(data["level"]), np.asarray(data["values"], dtype=float))

    def __repr__(self) -> str:
        return f"GridFunction(level={self.level}, norm={l1_norm(self):.6g})"


def _aligned(f: GridFunction, g: GridFunction) -> tuple[GridFunction, GridFunction]:
    """Refine both operands to the common (finer) grid."""
    if not isinstance(f, GridFunction) or not isinstance(g, GridFunction):
        raise TypeError("expected GridFunction operands")
    lvl = max(f.level, g.level)
    return refine(f, lvl), refine(g, lvl)


def refine(f: GridFunction, new_level: int) -> GridFunction:
    """Re-express ``f`` on a finer dyadic grid.  Values are duplicated, so the
    function is unchanged as an element of L1."""
    if new_level < f.level:
        raise ValueError(f"cannot coarsen: level {f.level} -> {new_level}")
    if new_level == f.level:
        return f
    return GridFunction(new_level, np.repeat(f.values, 2 ** (new_level - f.level)))


def l1_norm(f: GridFunction) -> float:
    """Integral of |f| over [0, 1]."""
    return float(np.abs(f.values).sum() * f.cell_width)


def ky_fan_distance(f: GridFunction, g: GridFunction) -> float:
    """Integral of min(|f - g|, 1): the metric of convergence in measure.

    Two functions are close here exactly when they are close on most of
    [0, 1], regardless of how large the difference is on the rest.
    """
    a, b = _aligned(f, g)
    return float(np.minimum(np.abs(a.values - b.values), 1.0).sum() * a.cell_width)


def peak_sequence(n: int, level: int) -> GridFunction:
    """Density n * indicator([0, 1/n]) for a power of two n.

    Each peak has unit integral, unit norm, and support of measure 1/n, so
    the sequence goes to zero in measure while staying on the unit sphere.
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"n must be a positive power of two, got {n}")
    cells = 2 ** level
    if n > cells:
        raise ValueError(f"peak n={n} does not resolve at level {level}")
    vals = np.zeros(cells)
    vals[: cells // n] = float(n)
    return GridFunction(level, vals)


def rademacher(n: int, level: int) -> GridFunction:
    """Sign function alternating +1/-1 on consecutive blocks of width 2**-n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n > level:
        raise ValueError(f"rademacher n={n} does not resolve at level {level}")
    block = 2 ** (level - n)
    pattern = np.repeat(np.array([1.0, -1.0]), block)
    return GridFunction(level, np.tile(pattern, 2 ** (n - 1)))


@dataclass(frozen=True)
class RealSequenceWindow:
    """Finite real sequence with a trailing-window surrogate for limsup/liminf.

    On a finite run the limit superior of a sequence is approximated by the
    maximum over the trailing ``window_fraction`` of the terms; the limit
    inferior uses the minimum.  The window must be declared, not implied.
    """

    terms: tuple[float, ...]
    window_fraction: float = 0.5

    def __post_init__(self) -> None:
        terms = tuple(float(t) for t in self.terms)
        if not terms:
            raise ValueError("empty sequence")
        if not all(math.isfinite(t) for t in terms):
            raise ValueError("terms must be finite")
        if not (0.0 < self.window_fraction <= 1.0):
            raise ValueError(f"window_fraction must be in (0, 1], got {self.window_fraction}")
        object.__setattr__(self, "terms", terms)

    def window(self) -> tuple[float, ...]:
        k = max(1, math.ceil(self.window_fraction * len(self.terms)))
        return self.terms[len(self.terms) - k:]

    def limsup_tail(self) -> float:
        return max(self.window())

    def liminf_tail(self) -> float:
        return min(self.window())


def limsup_tail(terms, window_fraction: float = 0.5) -> float:
    """Max over the trailing window: the finite-run stand-in for limsup."""
    if isinstance(terms, RealSequenceWindow):
        return terms.limsup_tail()
    return RealSequenceWindow(tuple(terms), window_fraction).limsup_tail()


def liminf_tail(terms, window_fraction: float = 0.5) -> float:
    """Min over the trailing window: the finite-run stand-in for liminf."""
    if isinstance(terms, RealSequenceWindow):
        return terms.liminf_tail()
    return RealSequenceWindow(tuple(terms), window_fraction).liminf_tail()


def export_sequence_csv(path, points, limit: GridFunction | None = None) -> None:
    """Write a point sequence as CSV rows index,l1_norm,ky_fan_to_limit."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "l1_norm", "ky_fan_to_limit"])
        for i, p in enumerate(points):
            dist = "" if limit is None else f"{ky_fan_distance(p, limit):.12g}"
            writer.writerow([i, f"{l1_norm(p):.12g}", dist])
