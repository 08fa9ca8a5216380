"""Seeded Brownian-motion trajectories: the Euler scheme and the Kac-Siegert series.

Gaussian variates come from :class:`GaussianStream`, numpy's PCG64 generator
seeded through a :class:`numpy.random.SeedSequence` (so streams can be
split), with the Marsaglia polar method applied to fixed-size blocks of
uniforms. Because blocks are fixed, the variate sequence does not depend
on how callers chunk their requests.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .path import SampledPath, _is_power_of_two

SEED_LIMIT = 1 << 64


class GaussianStream:
    """Reproducible N(0, 1) variates for one seed.

    Single consumer: each call to :meth:`normal` advances the stream.
    """

    ALGORITHM = "pcg64/polar-v1"
    _BLOCK = 512  # uniform pairs per polar block

    def __init__(self, seed: int, *, _seq: np.random.SeedSequence | None = None):
        seed = int(seed)
        if not 0 <= seed < SEED_LIMIT:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._seq = np.random.SeedSequence(seed) if _seq is None else _seq
        self._bits = np.random.Generator(np.random.PCG64(self._seq))
        self._buf = np.empty(0)
        self._pos = 0

    @property
    def algorithm(self) -> str:
        return self.ALGORITHM

    def spawn(self, k: int) -> list["GaussianStream"]:
        """Independent child streams, e.g. one per worker in a seed sweep."""
        return [GaussianStream(self.seed, _seq=s) for s in self._seq.spawn(k)]

    def _refill(self) -> np.ndarray:
        u = 2.0 * self._bits.random((self._BLOCK, 2)) - 1.0
        r2 = np.einsum("ij,ij->i", u, u)
        ok = (r2 > 0.0) & (r2 < 1.0)
        u, r2 = u[ok], r2[ok]
        # polar method: both coordinates of an accepted pair become variates
        return (u * np.sqrt(-2.0 * np.log(r2) / r2)[:, None]).reshape(-1)

    def normal(self, size: int) -> np.ndarray:
        size = int(size)
        if size < 0:
            raise ValueError("size must be nonnegative")
        out = np.empty(size)
        filled = 0
        while filled < size:
            if self._pos == self._buf.size:
                self._buf, self._pos = self._refill(), 0
            take = min(size - filled, self._buf.size - self._pos)
            out[filled : filled + take] = self._buf[self._pos : self._pos + take]
            filled += take
            self._pos += take
        return out


class FixedStream:
    """Stand-in stream that replays given values (for tests and worked examples)."""

    ALGORITHM = "fixed"

    def __init__(self, values):
        self._values = np.asarray(values, dtype=float).reshape(-1)
        self._pos = 0
        self.seed = None

    @property
    def algorithm(self) -> str:
        return self.ALGORITHM

    def normal(self, size: int) -> np.ndarray:
        if self._pos + size > self._values.size:
            raise ValueError("fixed stream exhausted")
        out = self._values[self._pos : self._pos + size].copy()
        self._pos += size
        return out


class ZeroStream(FixedStream):
    """Stream of zeros of unlimited length."""

    def __init__(self):
        super().__init__([])

    def normal(self, size: int) -> np.ndarray:
        return np.zeros(int(size))


def gaussian_stream(seed: int) -> GaussianStream:
    return GaussianStream(seed)


def _check_grid(n: int) -> None:
    if n < 2 or not _is_power_of_two(n):
        raise ValueError(f"grid cell count must be a power of two >= 2, got {n}")


def euler_bm(n_steps: int, n: int, stream) -> SampledPath:
    """Euler scheme B(t_{i+1}) = B(t_i) + sqrt(1/n_steps) Z_i on knots i/n_steps.

    Grid points between knots are filled by linear interpolation. The knots
    need not be grid points, although t = 0 and t = 1 always are.
    """
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    _check_grid(n)
    if n < n_steps:
        raise ValueError(f"grid n={n} is coarser than the {n_steps} Euler steps")
    z = stream.normal(n_steps)
    knots = np.concatenate(([0.0], np.cumsum(np.sqrt(1.0 / n_steps) * z)))
    t = np.arange(n + 1) / n
    return SampledPath(np.interp(t, np.arange(n_steps + 1) / n_steps, knots))


@dataclass(frozen=True)
class KacSiegertBasis:
    """phi_i(t) = 2 sqrt(2) / ((2i+1) pi) * sin((2i+1) pi t / 2) on the grid j/n."""

    m: int
    n: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"need at least one term, got m={self.m}")
        _check_grid(self.n)

    @cached_property
    def phi(self) -> np.ndarray:
        """Array of shape (m, n + 1)."""
        k = 2 * np.arange(self.m) + 1
        t = np.arange(self.n + 1) / self.n
        phi = (2 * np.sqrt(2) / (k * np.pi))[:, None] * np.sin(np.outer(k, t) * (np.pi / 2))
        phi[:, 0] = 0.0
        return phi

    def gram(self) -> np.ndarray:
        """Matrix of int_0^1 phi_i phi_j dt by the trapezoid rule.

        For these sines the trapezoid rule on a uniform grid is exact up to
        rounding, unlike a left-endpoint sum.
        """
        w = np.full(self.n + 1, 1.0 / self.n)
        w[[0, -1]] *= 0.5
        return (self.phi * w) @ self.phi.T

    def variances(self) -> np.ndarray:
        """Var of the m-term truncation at each grid point: sum_i phi_i(t)^2."""
        return np.sum(self.phi**2, axis=0)

    def kernel(self, s_index: int, t_index: int) -> float:
        """Truncated covariance sum_i phi_i(s) phi_i(t) at two grid indices."""
        return float(self.phi[:, s_index] @ self.phi[:, t_index])


def truncated_variance_at_one(m: int) -> float:
    """(8 / pi^2) sum_{i<m} (2i+1)^-2, the variance of the m-term series at t = 1."""
    k = 2 * np.arange(m) + 1
    return float(8 / np.pi**2 * np.sum(1.0 / k**2))


def kac_siegert_bm(m_terms: int, n: int, stream, basis: KacSiegertBasis | None = None) -> SampledPath:
    """Truncated series B(t) = sum_{i<m} Z_i phi_i(t); B(0) = 0 exactly."""
    if basis is None:
        basis = KacSiegertBasis(m_terms, n)
    elif (basis.m, basis.n) != (m_terms, n):
        raise ValueError("basis does not match m_terms and n")
    z = stream.normal(m_terms)
    return SampledPath(z @ basis.phi)
