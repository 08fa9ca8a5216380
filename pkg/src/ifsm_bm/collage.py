"""Collage distance as a quadratic form in the grey-map parameters.

With x = (alpha_1..alpha_N, beta_1..beta_N), psi_k = v o w_k^{-1} on the image
of w_k and xi_k its indicator,

    Delta^2 = ||v - Tv||^2 = x^T A x + b^T x + c

with A = [[<psi_i,psi_j>, <psi_i,xi_j>], [<xi_i,psi_j>, <xi_i,xi_j>]],
b = -2 (<v,psi_i>, <v,xi_i>) and c = ||v||^2. Feasibility adds the single
linear constraint sum_k c_k (alpha_k ||v||_1 + beta_k) <= ||v||_1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .maps import AffineMap, is_nonoverlapping
from .operator import IfsmSystem, apply_operator
from .path import (
    GridError,
    SampledPath,
    indicator_integrals,
    l1_norm,
    l2_distance,
    step_product_integral,
)


@dataclass(frozen=True, eq=False)
class CollageQp:
    A: np.ndarray
    b: np.ndarray
    c: float
    g: np.ndarray
    h: float
    factors: np.ndarray

    @property
    def n_maps(self) -> int:
        return self.factors.size

    def objective(self, x: np.ndarray) -> float:
        return evaluate_form(self, x)

    def dump(self, dest) -> None:
        """Plain-text debug dump: dimension line, then A, b, c, g, h (not a stable format)."""
        with open(dest, "w") as fh:
            N2 = self.b.size
            fh.write(f"%collage-qp {N2}\n")
            for i in range(N2):
                fh.write(" ".join(repr(float(a)) for a in self.A[i]) + "\n")
            fh.write(" ".join(repr(float(a)) for a in self.b) + "\n")
            fh.write(f"{self.c!r}\n")
            fh.write(" ".join(repr(float(a)) for a in self.g) + "\n")
            fh.write(f"{self.h!r}\n")


def _constraint(v: SampledPath, factors: np.ndarray) -> tuple[np.ndarray, float]:
    v1 = l1_norm(v)
    return np.concatenate([factors * v1, factors]), v1


def _image_integral(v: SampledPath, w: AffineMap, lo: float, hi: float) -> float:
    """Exact integral over [lo, hi] (inside the image of w) of v(w^{-1}(t))."""
    if hi <= lo:
        return 0.0
    F = v.antiderivative(w.inverse(np.array([lo, hi])))
    return float(w.s) * float(F[1] - F[0])


def assemble(v: SampledPath, maps: Sequence[AffineMap]) -> CollageQp:
    """Assemble the collage form for arbitrary (possibly overlapping) maps."""
    maps = list(maps)
    if not maps:
        raise ValueError("need at least one map")
    N = len(maps)
    lo = np.array([float(w.image[0]) for w in maps])
    hi = np.array([float(w.image[1]) for w in maps])
    A = np.zeros((2 * N, 2 * N))
    b = np.zeros(2 * N)
    for i, wi in enumerate(maps):
        b[i] = -2.0 * step_product_integral(v, None, wi, lo[i], hi[i])
        F = v.antiderivative(np.array([lo[i], hi[i]]))
        b[N + i] = -2.0 * float(F[1] - F[0])
        x0 = np.maximum(lo[i], lo)
        x1 = np.minimum(hi[i], hi)
        for j in np.flatnonzero(x1 > x0):
            A[N + i, N + j] = indicator_integrals(wi, maps[j])
            A[i, N + j] = _image_integral(v, wi, x0[j], x1[j])
            if j >= i:
                A[i, j] = A[j, i] = step_product_integral(v, wi, maps[j], x0[j], x1[j])
    A[N:, :N] = A[:N, N:].T
    factors = np.array([w.factor for w in maps])
    g, h = _constraint(v, factors)
    return CollageQp(A, b, float(v.cells @ v.cells) / v.n, g, h, factors)


def assemble_nonoverlapping(v: SampledPath, maps: Sequence[AffineMap]) -> CollageQp:
    """Closed-form assembly for maps whose images meet only in null sets.

    Off-diagonal blocks vanish; a_ii = c_i int v^2, a_{i,N+i} = c_i int v,
    a_{N+i,N+i} = c_i.
    """
    maps = list(maps)
    if not maps:
        raise ValueError("need at least one map")
    if not is_nonoverlapping(maps).nonoverlapping:
        raise ValueError("maps overlap; use assemble()")
    N = len(maps)
    factors = np.array([w.factor for w in maps])
    int_v = float(v.cells.sum()) / v.n
    int_v2 = float(v.cells @ v.cells) / v.n
    A = np.zeros((2 * N, 2 * N))
    k = np.arange(N)
    A[k, k] = factors * int_v2
    A[N + k, N + k] = factors
    A[k, N + k] = A[N + k, k] = factors * int_v
    b = np.empty(2 * N)
    for i, w in enumerate(maps):
        lo, hi = (float(e) for e in w.image)
        b[i] = -2.0 * step_product_integral(v, None, w, lo, hi)
        F = v.antiderivative(np.array([lo, hi]))
        b[N + i] = -2.0 * float(F[1] - F[0])
    g, h = _constraint(v, factors)
    return CollageQp(A, b, int_v2, g, h, factors)


def evaluate_form(qp: CollageQp, x: np.ndarray) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != qp.b.shape:
        raise ValueError(f"parameter vector must have length {qp.b.size}, got {x.size}")
    return float(x @ qp.A @ x + qp.b @ x + qp.c)


def exact_refinement(maps: Sequence[AffineMap], n: int, limit: int = 1 << 12) -> int:
    """Smallest refinement r such that T v is exactly a step function on n*r cells."""
    dens = []
    for w in maps:
        dens.append(abs(w.s).denominator)
        dens.extend((e * n).denominator for e in w.image)
        dens.append((w.a * n).denominator)
    r = reduce(math.lcm, dens, 1)
    # grid refinements are powers of two
    r2 = 1
    while r2 < r:
        r2 *= 2
    if r2 % r or r2 > limit:
        raise GridError("maps cannot be resolved exactly on a dyadic refinement of the grid")
    return r2


def collage_distance(v: SampledPath, sys: IfsmSystem) -> float:
    """Direct ||v - Tv||^2, with Tv evaluated on a grid fine enough to be exact."""
    r = exact_refinement(sys.maps, v.n)
    Tv = apply_operator(sys, v, refine=r)
    return l2_distance(v.refine(r), Tv) ** 2
