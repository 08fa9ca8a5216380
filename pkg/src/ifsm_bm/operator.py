"""The IFSM operator (Tu)(x) = sum' alpha_k u(w_k^{-1}(x)) + beta_k and its fixed point.

On a grid the operator is realised as the cell-average projection of Tu:
each output cell receives the mean of Tu over that cell. This projection
is non-expansive in L^2, so the discrete operator inherits the Forte-Vrscay
contraction factor, and its fixed point is the cell average of the exact
fixed point. When Tu is constant on every output cell (always true for
wavelet maps on a grid refined by 1/min|s|) the result is Tu itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence

import numpy as np

from .maps import AffineMap, as_wavelet, wavelet_map
from .path import SampledPath, l2_distance


class NotContractiveError(ValueError):
    """The system's contractivity factor is >= 1."""


class ConvergenceError(RuntimeError):
    """Fixed-point iteration hit ``max_iter`` before reaching ``tol``."""

    def __init__(self, message: str, last_distance: float, path: SampledPath, iterations: int):
        super().__init__(message)
        self.last_distance = last_distance
        self.path = path
        self.iterations = iterations


class GreyMap(NamedTuple):
    """Affine grey-level map t -> alpha*t + beta; Lipschitz constant |alpha|."""

    alpha: float
    beta: float

    @property
    def lipschitz(self) -> float:
        return abs(self.alpha)

    def __call__(self, t):
        return self.alpha * np.asarray(t) + self.beta


@dataclass(frozen=True, eq=False)
class IfsmSystem:
    maps: tuple
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        maps = tuple(self.maps)
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        beta = np.array(self.beta, dtype=float).reshape(-1)
        if not maps:
            raise ValueError("an IFSM system needs at least one map")
        if not (len(maps) == alpha.size == beta.size):
            raise ValueError("maps, alpha and beta must have equal length")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValueError("grey-map coefficients must be finite")
        alpha.flags.writeable = False
        beta.flags.writeable = False
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[AffineMap, GreyMap | tuple]]) -> "IfsmSystem":
        pairs = list(pairs)
        return cls(
            tuple(w for w, _ in pairs),
            [float(g[0]) for _, g in pairs],
            [float(g[1]) for _, g in pairs],
        )

    @classmethod
    def from_vector(cls, maps: Sequence[AffineMap], x: np.ndarray) -> "IfsmSystem":
        """Build from the QP variable order (alpha_1..alpha_N, beta_1..beta_N)."""
        N = len(maps)
        x = np.asarray(x, dtype=float)
        if x.size != 2 * N:
            raise ValueError(f"parameter vector must have length {2 * N}, got {x.size}")
        return cls(tuple(maps), x[:N], x[N:])

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.alpha, self.beta])

    @property
    def pairs(self) -> list[tuple[AffineMap, GreyMap]]:
        return [(w, GreyMap(float(a), float(b))) for w, a, b in zip(self.maps, self.alpha, self.beta)]

    @property
    def factors(self) -> np.ndarray:
        return np.array([w.factor for w in self.maps])

    def __len__(self) -> int:
        return len(self.maps)

    def drop_null(self) -> "IfsmSystem":
        """Remove superfluous maps whose grey map is (0, 0)."""
        keep = (self.alpha != 0) | (self.beta != 0)
        if not keep.any():
            keep[0] = True
        return IfsmSystem(
            tuple(w for w, k in zip(self.maps, keep) if k), self.alpha[keep], self.beta[keep]
        )

    def subset(self, indices: Sequence[int]) -> "IfsmSystem":
        idx = list(indices)
        return IfsmSystem(tuple(self.maps[i] for i in idx), self.alpha[idx], self.beta[idx])

    # JSON descriptor: array of {level, position, alpha, beta}
    def to_records(self) -> list[dict]:
        out = []
        for w, a, b in zip(self.maps, self.alpha, self.beta):
            wi = as_wavelet(w)
            rec = (
                {"level": wi.level, "position": wi.position}
                if wi is not None
                else {"s": str(w.s), "a": str(w.a)}
            )
            rec.update(alpha=float(a), beta=float(b))
            out.append(rec)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_records(), indent=1)

    @classmethod
    def from_records(cls, records: Sequence[dict]) -> "IfsmSystem":
        maps, alpha, beta = [], [], []
        for rec in records:
            if "level" in rec:
                maps.append(wavelet_map(int(rec["level"]), int(rec["position"])))
            else:
                maps.append(AffineMap(Fraction(rec["s"]), Fraction(rec["a"])))
            alpha.append(float(rec["alpha"]))
            beta.append(float(rec["beta"]))
        return cls(tuple(maps), alpha, beta)

    @classmethod
    def from_json(cls, text: str) -> "IfsmSystem":
        return cls.from_records(json.loads(text))


def contractivity_factor(sys: IfsmSystem) -> float:
    """Forte-Vrscay bound C = sum_k |s_k|^(1/2) |alpha_k|."""
    return float(np.sum(np.sqrt(sys.factors) * np.abs(sys.alpha)))


class _Plan:
    """Precomputed cell/preimage geometry of one system on one grid pair."""

    def __init__(self, sys: IfsmSystem, n: int, m: int):
        self.n, self.m = n, m
        out, y0s, y1s, ca, cb = [], [], [], [], []
        for w, a, b in zip(sys.maps, sys.alpha, sys.beta):
            lo, hi = w.image
            J0, J1 = math.floor(lo * m), math.ceil(hi * m)
            J = np.arange(J0, J1)
            x0 = np.maximum(J / m, float(lo))
            x1 = np.minimum((J + 1) / m, float(hi))
            width = x1 - x0
            keep = width > 0
            J, x0, x1, width = J[keep], x0[keep], x1[keep], width[keep]
            out.append(J)
            y0s.append(w.inverse(x0))
            y1s.append(w.inverse(x1))
            ca.append(np.full(J.size, m * a * float(w.s)))
            cb.append(m * b * width)
        self.out = np.concatenate(out)
        y0 = np.clip(np.concatenate(y0s), 0.0, 1.0)
        y1 = np.clip(np.concatenate(y1s), 0.0, 1.0)
        self.i0, self.f0 = self._locate(y0)
        self.i1, self.f1 = self._locate(y1)
        self.ca = np.concatenate(ca)
        self.cb = np.concatenate(cb)

    def _locate(self, y):
        i = np.minimum(np.floor(y * self.n).astype(np.int64), self.n - 1)
        return i, y - i / self.n

    def apply(self, cells: np.ndarray) -> np.ndarray:
        cum = np.concatenate(([0.0], np.cumsum(cells))) / self.n
        F1 = cum[self.i1] + self.f1 * cells[self.i1]
        F0 = cum[self.i0] + self.f0 * cells[self.i0]
        res = np.bincount(self.out, weights=self.ca * (F1 - F0) + self.cb, minlength=self.m)
        return np.append(res, res[-1])


def apply_operator(sys: IfsmSystem, u: SampledPath, refine: int = 1) -> SampledPath:
    """Apply T to ``u``; the result lives on a grid ``refine`` times finer.

    Cells covered by no map image receive 0 (the primed sum is empty there).
    """
    if refine < 1 or refine & (refine - 1):
        raise ValueError(f"refine must be a power of two, got {refine}")
    plan = _Plan(sys, u.n, u.n * refine)
    return SampledPath(plan.apply(u.cells))


def iterate_operator(sys: IfsmSystem, u0: SampledPath) -> Iterator[SampledPath]:
    """Yield T u0, T^2 u0, ... on the grid of ``u0``."""
    plan = _Plan(sys, u0.n, u0.n)
    cells = u0.cells
    while True:
        nxt = plan.apply(cells)
        yield SampledPath(nxt)
        cells = nxt[:-1]


def fixed_point(
    sys: IfsmSystem,
    u0: SampledPath | None = None,
    *,
    n: int | None = None,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> tuple[SampledPath, int]:
    """Banach iteration from ``u0`` (zero path on ``n`` cells by default).

    Stops once successive iterates are within ``tol`` in L^2; the distance to
    the discrete fixed point is then at most tol*C/(1-C).
    """
    C = contractivity_factor(sys)
    if C >= 1:
        raise NotContractiveError(f"contractivity factor {C:.6g} >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if u0 is None:
        if n is None:
            raise ValueError("give either u0 or n")
        u0 = SampledPath.zeros(n)
    prev = u0
    d = np.inf
    for k, u in enumerate(iterate_operator(sys, u0), start=1):
        d = l2_distance(u, prev)
        if d <= tol:
            return u, k
        if k >= max_iter:
            raise ConvergenceError(
                f"no convergence in {max_iter} iterations (last distance {d:.3e})", d, u, k
            )
        prev = u
    raise AssertionError("unreachable")


def collage_bound(v: SampledPath, sys: IfsmSystem) -> float:
    """Collage Theorem bound d(v, Tv)/(1 - C) on the distance from v to the fixed point."""
    C = contractivity_factor(sys)
    if C >= 1:
        raise NotContractiveError(f"contractivity factor {C:.6g} >= 1")
    return l2_distance(v, apply_operator(sys, v)) / (1.0 - C)


def fixed_point_continuity_bound(
    sys1: IfsmSystem, sys2: IfsmSystem, probes: Iterable[SampledPath]
) -> float:
    """Estimate of sup_u d(T1 u, T2 u) / (1 - C1) over the probe set.

    The supremum runs over the probes only, so this is a lower estimate of
    the true bound on d(fixed point 1, fixed point 2).
    """
    C1 = contractivity_factor(sys1)
    if C1 >= 1:
        raise NotContractiveError(f"contractivity factor {C1:.6g} >= 1")
    probes = list(probes)
    if not probes:
        raise ValueError("probe set must be nonempty")
    d_sup = max(l2_distance(apply_operator(sys1, u), apply_operator(sys2, u)) for u in probes)
    return d_sup / (1.0 - C1)
