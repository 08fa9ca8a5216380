"""Grid-sampled functions on [0, 1] and the integrals the collage machinery needs.

A :class:`SampledPath` stores ``n + 1`` values at ``t_j = j/n``. As an element
of L^2 it is the step function equal to ``values[j]`` on ``[t_j, t_{j+1})``,
so the left-Riemann sum used throughout is that function's exact integral.
The last value (at t = 1) is carried for export and diagnostics only.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

import numpy as np

from .maps import AffineMap, overlap_length


class GridError(ValueError):
    """Raised when two paths live on different grids or a map is off-grid."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


@dataclass(frozen=True, eq=False)
class SampledPath:
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError("values must be one-dimensional")
        n = v.size - 1
        if n < 2 or not _is_power_of_two(n):
            raise GridError(f"grid cell count must be a power of two >= 2, got {n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    @property
    def cells(self) -> np.ndarray:
        """The n cell values that define the L^2 element."""
        return self.values[:-1]

    @classmethod
    def zeros(cls, n: int) -> "SampledPath":
        return cls(np.zeros(n + 1))

    @classmethod
    def constant(cls, c: float, n: int) -> "SampledPath":
        return cls(np.full(n + 1, float(c)))

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], n: int) -> "SampledPath":
        """Sample ``f`` at the grid points."""
        return cls(np.broadcast_to(f(np.arange(n + 1) / n), (n + 1,)))

    def refine(self, factor: int) -> "SampledPath":
        """The same step function on a grid ``factor`` times finer."""
        if factor < 1 or not _is_power_of_two(factor):
            raise GridError(f"refinement factor must be a power of two, got {factor}")
        if factor == 1:
            return self
        return SampledPath(np.append(np.repeat(self.cells, factor), self.values[-1]))

    def antiderivative(self, y: np.ndarray) -> np.ndarray:
        """Exact F(y) = integral of the step function over [0, y], for y in [0, 1]."""
        n = self.n
        cum = np.concatenate(([0.0], np.cumsum(self.cells))) / n
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        i = np.minimum(np.floor(y * n).astype(np.int64), n - 1)
        return cum[i] + (y - i / n) * self.cells[i]

    def __add__(self, other: "SampledPath") -> "SampledPath":
        _check_same_grid(self, other)
        return SampledPath(self.values + other.values)

    def __sub__(self, other: "SampledPath") -> "SampledPath":
        _check_same_grid(self, other)
        return SampledPath(self.values - other.values)

    def __mul__(self, k: float) -> "SampledPath":
        return SampledPath(self.values * float(k))

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"SampledPath(n={self.n})"


def _check_same_grid(p: SampledPath, q: SampledPath) -> None:
    if p.n != q.n:
        raise GridError(f"grid mismatch: n={p.n} vs n={q.n}")


def inner_product(p: SampledPath, q: SampledPath) -> float:
    _check_same_grid(p, q)
    return float(p.cells @ q.cells) / p.n


def l1_norm(p: SampledPath) -> float:
    return float(np.abs(p.cells).sum()) / p.n


def l2_norm(p: SampledPath) -> float:
    return float(np.sqrt(p.cells @ p.cells / p.n))


def l2_distance(p: SampledPath, q: SampledPath) -> float:
    _check_same_grid(p, q)
    d = p.cells - q.cells
    return float(np.sqrt(d @ d / p.n))


class MaskedPath(NamedTuple):
    """A pulled-back path: values on the map image, ``mask`` False elsewhere."""

    path: SampledPath
    mask: np.ndarray


def image_cells(w: AffineMap, m: int) -> tuple[int, int]:
    """Grid-``m`` cell range [j0, j1) covered by the image of ``w``.

    Raises GridError unless both image endpoints are grid points.
    """
    lo, hi = w.image
    j0, j1 = lo * m, hi * m
    if j0.denominator != 1 or j1.denominator != 1:
        raise GridError(f"image [{lo}, {hi}] is not aligned with a grid of {m} cells")
    return int(j0), int(j1)


def pullback(p: SampledPath, w: AffineMap, refine: int = 1) -> MaskedPath:
    """Sample psi(t) = p(w^{-1}(t)) on the image of ``w``, zero with mask False elsewhere.

    Images are half-open [lo, hi); a map whose image ends at 1 also owns t = 1.
    Every in-image grid point must pull back onto a grid point of ``p``.
    """
    n = p.n
    m = n * refine
    j0, j1 = image_cells(w, m)
    mask = np.zeros(m + 1, dtype=bool)
    mask[j0:j1] = True
    if j1 == m:
        mask[m] = True
    idx = np.flatnonzero(mask)
    # k = n * w^{-1}(J/m) = (J - a*m) * n / (s*m)
    scale = Fraction(n) / (w.s * m)
    num, den = scale.numerator, scale.denominator
    offset = w.a * m
    if offset.denominator != 1:
        raise GridError("map offset is not aligned with the output grid")
    raw = (idx - int(offset)) * num
    if np.any(raw % den):
        raise GridError("pullback of an in-image grid point falls off the input grid")
    k = raw // den
    out = np.zeros(m + 1)
    out[idx] = p.values[k]
    return MaskedPath(SampledPath(out), mask)


def indicator_integrals(w_i: AffineMap, w_j: AffineMap) -> float:
    """Exact length of w_i([0,1]) ∩ w_j([0,1])."""
    return float(overlap_length(w_i, w_j))


def step_product_integral(
    p: SampledPath,
    w1: AffineMap | None,
    w2: AffineMap | None,
    lo: float,
    hi: float,
) -> float:
    """Exact integral over [lo, hi] of p(w1^{-1}(t)) * p(w2^{-1}(t)).

    ``None`` stands for the identity map. Both factors are step functions, so
    the integral is a finite sum over the union of their breakpoints.
    """
    if hi <= lo:
        return 0.0
    n = p.n
    knots = np.arange(n + 1) / n
    pts = [np.array([lo, hi])]
    for w in (w1, w2):
        b = knots if w is None else w(knots)
        pts.append(b[(b > lo) & (b < hi)])
    edges = np.unique(np.concatenate(pts))
    widths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    vals = []
    for w in (w1, w2):
        y = mids if w is None else w.inverse(mids)
        k = np.clip(np.floor(y * n).astype(np.int64), 0, n - 1)
        vals.append(p.cells[k])
    return float(np.sum(vals[0] * vals[1] * widths))


def write_csv(path: SampledPath, dest) -> None:
    """Write ``t,value`` rows with shortest round-trip float formatting."""
    own = isinstance(dest, (str, os.PathLike))
    fh = open(dest, "w", newline="") if own else dest
    try:
        fh.write("t,value\n")
        n = path.n
        for j, v in enumerate(path.values):
            fh.write(f"{repr(j / n)},{repr(float(v))}\n")
    finally:
        if own:
            fh.close()


def to_csv_string(path: SampledPath) -> str:
    buf = io.StringIO()
    write_csv(path, buf)
    return buf.getvalue()


def read_csv(src) -> SampledPath:
    own = isinstance(src, (str, os.PathLike))
    fh = open(src, newline="") if own else src
    try:
        rows = list(csv.reader(fh))
    finally:
        if own:
            fh.close()
    if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
        raise ValueError("path CSV must start with the header 't,value'")
    body = [r for r in rows[1:] if r]
    try:
        t = np.array([float(r[0]) for r in body])
        v = np.array([float(r[1]) for r in body])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"malformed path CSV row: {exc}") from None
    n = len(body) - 1
    if n < 1 or not np.allclose(t, np.arange(n + 1) / n, rtol=0, atol=1e-12):
        raise ValueError("path CSV t column must be the uniform grid j/n")
    return SampledPath(v)
