"""Affine contraction maps on [0, 1] and the dyadic wavelet-type family.

Map parameters are held as exact rationals so that overlap and tiling
tests at dyadic endpoints are decided without rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(float(x))


@dataclass(frozen=True)
class AffineMap:
    """Contraction ``w(x) = s*x + a`` mapping [0, 1] into itself."""

    s: Fraction
    a: Fraction

    def __post_init__(self):
        s, a = _as_fraction(self.s), _as_fraction(self.a)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "a", a)
        if not 0 < abs(s) < 1:
            raise ValueError(f"scale must satisfy 0 < |s| < 1, got {s}")
        lo, hi = min(a, a + s), max(a, a + s)
        if lo < 0 or hi > 1:
            raise ValueError(f"image [{lo}, {hi}] is not contained in [0, 1]")

    @property
    def factor(self) -> float:
        """Contraction factor c = |s|, also the length of the image."""
        return float(abs(self.s))

    @property
    def image(self) -> tuple[Fraction, Fraction]:
        return (min(self.a, self.a + self.s), max(self.a, self.a + self.s))

    def __call__(self, x):
        return float(self.s) * np.asarray(x, dtype=float) + float(self.a)

    def inverse(self, t):
        return (np.asarray(t, dtype=float) - float(self.a)) / float(self.s)

    def exact(self, x: Fraction) -> Fraction:
        return self.s * x + self.a

    def exact_inverse(self, t: Fraction) -> Fraction:
        return (t - self.a) / self.s


class WaveletMapIndex(NamedTuple):
    level: int
    position: int
    linear_index: int


def linear_index(level: int, position: int) -> int:
    """Row-major position of w*_{level,position}: w*11 -> 1, w*12 -> 2, w*21 -> 3, ..."""
    _check_wavelet(level, position)
    return (2**level - 2) + position


def wavelet_index(k: int) -> WaveletMapIndex:
    """Inverse of :func:`linear_index`."""
    if k < 1:
        raise ValueError(f"linear index must be >= 1, got {k}")
    level = 1
    while k > 2 ** (level + 1) - 2:
        level += 1
    return WaveletMapIndex(level, k - (2**level - 2), k)


def _check_wavelet(level: int, position: int) -> None:
    if level < 1:
        raise ValueError(f"level must be >= 1, got {level}")
    if not 1 <= position <= 2**level:
        raise ValueError(f"position must lie in 1..{2**level}, got {position}")


def wavelet_map(level: int, position: int) -> AffineMap:
    """The wavelet-type map ``x -> (x + position - 1) / 2**level``."""
    _check_wavelet(level, position)
    return AffineMap(Fraction(1, 2**level), Fraction(position - 1, 2**level))


def wavelet_level(level: int) -> list[AffineMap]:
    """All 2**level maps of one level; these tile [0, 1] without overlap."""
    return [wavelet_map(level, j) for j in range(1, 2**level + 1)]


def wavelet_family(max_level: int) -> list[AffineMap]:
    """Levels 1..max_level in linear-index order, 2**(max_level+1) - 2 maps."""
    if max_level < 1:
        raise ValueError(f"max_level must be >= 1, got {max_level}")
    return [w for i in range(1, max_level + 1) for w in wavelet_level(i)]


def as_wavelet(w: AffineMap) -> WaveletMapIndex | None:
    """Recover (level, position) if ``w`` is a wavelet-type map, else None."""
    inv = 1 / w.s
    if w.s < 0 or inv.denominator != 1:
        return None
    m = inv.numerator
    level = m.bit_length() - 1
    if m != 2**level or level < 1:
        return None
    pos = w.a * m + 1
    if pos.denominator != 1 or not 1 <= pos <= m:
        return None
    return WaveletMapIndex(level, int(pos), linear_index(level, int(pos)))


def family_descriptor(max_level: int) -> str:
    return f"wavelet:M={max_level}"


def parse_family_descriptor(text: str) -> int:
    """Parse ``wavelet:M=<int>`` and return M."""
    kind, _, arg = text.partition(":")
    key, _, value = arg.partition("=")
    if kind != "wavelet" or key != "M" or not value.isdigit():
        raise ValueError(f"unrecognised map family descriptor {text!r}")
    return int(value)


def overlap_length(w1: AffineMap, w2: AffineMap) -> Fraction:
    lo1, hi1 = w1.image
    lo2, hi2 = w2.image
    return max(Fraction(0), min(hi1, hi2) - max(lo1, lo2))


class OverlapReport(NamedTuple):
    nonoverlapping: bool
    tiling: bool


def is_nonoverlapping(maps: Sequence[AffineMap]) -> OverlapReport:
    """Check pairwise zero-length image intersections, and coverage of [0, 1].

    Exact over rationals: images are sorted by left endpoint so only
    neighbours need comparing once the list is known to be disjoint.
    """
    if not maps:
        return OverlapReport(True, False)
    images = sorted(w.image for w in maps)
    nonoverlapping = all(
        images[k + 1][0] >= images[k][1] for k in range(len(images) - 1)
    )
    # coverage: sweep merged intervals
    reach = Fraction(0)
    for lo, hi in images:
        if lo > reach:
            break
        reach = max(reach, hi)
    return OverlapReport(nonoverlapping, reach >= 1)
