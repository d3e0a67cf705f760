"""Twiddle-factor lookup tables.

Only the first octant of the unit circle is stored (``n_max/8 + 1``
entries); the remaining twiddles of the upper half-plane are rebuilt with
exact sign flips and re/im swaps, so every reconstructed twiddle is itself
a correctly rounded value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from ..mpfloat import FP16, FP32, FloatFormat, decode
from ..mpfloat.oracle import round_from_exact

C32 = "C32"
C64 = "C64"

PART_FORMAT = {C32: FP16, C64: FP32}
MAX_POINTS = {C32: 1024, C64: 512}


def normalize_width(width: str) -> str:
    w = width.upper()
    if w not in PART_FORMAT:
        raise ValueError(f"unknown complex width {width!r} (expected C32 or C64)")
    return w


def _rounded_exp(k: int, n: int, fmt: FloatFormat) -> complex:
    with mpmath.workprec(160):
        ang = 2 * mpmath.pi * k / n
        re, im = mpmath.cos(ang), -mpmath.sin(ang)
        parts = []
        for v in (re, im):
            man, exp = abs(v).man_exp
            exact = Fraction(int(man)) * (Fraction(2) ** int(exp)) if man else Fraction(0)
            if v < 0:
                exact = -exact
            parts.append(round_from_exact(exact, fmt))
    vals = decode(np.array(parts, dtype=np.uint64), fmt)
    return complex(vals[0], vals[1])


def build_lut(width: str, n_max: int) -> np.ndarray:
    """First-octant LUT for ``n_max`` points: entries k = 0 .. n_max/8."""
    width = normalize_width(width)
    if n_max != MAX_POINTS[width]:
        raise ValueError(f"{width} LUT is built for {MAX_POINTS[width]} points, not {n_max}")
    fmt = PART_FORMAT[width]
    return np.array([_rounded_exp(k, n_max, fmt) for k in range(n_max // 8 + 1)],
                    dtype=np.complex128)


@dataclass(frozen=True)
class TwiddleTable:
    c64_lut: np.ndarray = field(repr=False)
    c32_luts: tuple[np.ndarray, np.ndarray] = field(repr=False)

    def __post_init__(self):
        if len(self.c64_lut) != 65 or any(len(t) != 129 for t in self.c32_luts):
            raise ValueError("LUT sizes must be 65 (C64) and 2 x 129 (C32)")
        for arr in (self.c64_lut, *self.c32_luts):
            arr.setflags(write=False)

    def lut(self, width: str, engine: int = 0) -> np.ndarray:
        width = normalize_width(width)
        return self.c64_lut if width == C64 else self.c32_luts[engine]

    def twiddle(self, k, width: str, engine: int = 0) -> np.ndarray:
        """W_{n_max}^k for 0 <= k < n_max/2, rebuilt from the octant LUT."""
        width = normalize_width(width)
        lut = self.lut(width, engine)
        n_max = MAX_POINTS[width]
        octant = n_max // 8
        k = np.asarray(k, dtype=np.int64)
        if np.any((k < 0) | (k >= n_max // 2)):
            raise ValueError("twiddle index outside the upper half-plane")
        second_quad = k >= 2 * octant
        j = np.where(second_quad, k - 2 * octant, k)
        mirrored = j > octant
        w = lut[np.where(mirrored, 2 * octant - j, j)]
        # first quadrant above the octant: swap and negate
        re = np.where(mirrored, -w.imag, w.real)
        im = np.where(mirrored, -w.real, w.imag)
        # second quadrant: multiply by -i
        re, im = np.where(second_quad, im, re), np.where(second_quad, -re, im)
        return re + 1j * im

    def for_size(self, n: int, width: str, engine: int = 0) -> np.ndarray:
        """W_n^k for k = 0 .. n/2 - 1, taken by striding the max-size LUT."""
        width = normalize_width(width)
        n_max = MAX_POINTS[width]
        if n < 2 or n > n_max or n & (n - 1):
            raise ValueError(f"no {width} twiddles for {n} points")
        return self.twiddle(np.arange(n // 2) * (n_max // n), width, engine)


def twiddle_table_build(width: str | None = None, n_max: int | None = None) -> TwiddleTable:
    """Build the accelerator's twiddle LUTs.

    Both C32 LUTs hold identical contents. ``width``/``n_max`` only validate
    a requested size; the table always carries both precisions.
    """
    if width is not None and n_max is not None and n_max != MAX_POINTS[normalize_width(width)]:
        raise ValueError(f"{width} LUT is built for {MAX_POINTS[normalize_width(width)]} points")
    return _default_table()


_TABLE: TwiddleTable | None = None


def _default_table() -> TwiddleTable:
    global _TABLE
    if _TABLE is None:
        c32 = build_lut(C32, 1024)
        _TABLE = TwiddleTable(build_lut(C64, 512), (c32, c32.copy()))
    return _TABLE
