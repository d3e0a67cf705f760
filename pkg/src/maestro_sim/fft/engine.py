"""Functional model of the radix-2 DIT FFT accelerator.

The butterfly network runs in place on natural-order input and leaves the
spectrum in bit-reversed order; every stage uses one twiddle per butterfly
group, which is what lets the hardware fetch each twiddle once per group.
Each real/imag output is produced by one DO-SDOTP evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..mpfloat import vec
from ..mpfloat.vec import SAME_FP16, SAME_FP32
from .cycles import FftCycleTrace, fft_cycle_model
from .twiddle import C32, C64, MAX_POINTS, PART_FORMAT, TwiddleTable, normalize_width, twiddle_table_build

FORWARD = "forward"
INVERSE = "inverse"

_PAIR = {C32: SAME_FP16, C64: SAME_FP32}


class InvalidLength(ValueError):
    """FFT size is not a supported power of two."""


def check_points(points: int, width: str) -> None:
    width = normalize_width(width)
    if points < 2 or points & (points - 1):
        raise InvalidLength(f"{points}-point FFT: size must be a power of two >= 2")
    if points > MAX_POINTS[width]:
        raise InvalidLength(f"{points}-point {width} FFT exceeds the {MAX_POINTS[width]}-point limit")


@dataclass(frozen=True)
class ComplexSample:
    """Scalar view of one complex sample (parts exact in the width's format)."""

    re: float
    im: float
    width: str = C32

    def __post_init__(self):
        fmt = PART_FORMAT[normalize_width(self.width)]
        q = vec.quantize(np.array([self.re, self.im]), fmt)
        if not np.array_equal(q, [self.re, self.im], equal_nan=True):
            raise ValueError(f"({self.re}, {self.im}) not representable as {self.width}")

    def __complex__(self) -> complex:
        return complex(self.re, self.im)


@dataclass
class FftJob:
    points: int
    width: str
    input: np.ndarray
    direction: str = FORWARD
    cycle_model_enabled: bool = True

    def __post_init__(self):
        self.width = normalize_width(self.width)
        if self.direction not in (FORWARD, INVERSE):
            raise ValueError(f"direction must be {FORWARD!r} or {INVERSE!r}")
        check_points(self.points, self.width)
        self.input = np.asarray(self.input, dtype=np.complex128)
        if self.input.shape[-1] != self.points:
            raise InvalidLength(
                f"input has {self.input.shape[-1]} samples for a {self.points}-point job")


@dataclass
class FftResult:
    output: np.ndarray      # natural order, after the final reordering step
    raw: np.ndarray         # bit-reversed order as written by the butterfly network
    trace: Optional[FftCycleTrace]


def quantize_complex(x, width: str) -> np.ndarray:
    fmt = PART_FORMAT[normalize_width(width)]
    x = np.asarray(x, dtype=np.complex128)
    return vec.quantize(x.real, fmt) + 1j * vec.quantize(x.imag, fmt)


def bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


def butterfly_r2(left, right, twiddle, width: str = C32, fused: bool = True):
    """Radix-2 DIT butterfly: ``(left + t*right, left - t*right)``.

    Works elementwise on complex carrier arrays. With ``fused`` each of the
    four real outputs is rounded once; otherwise products and partial sums
    are rounded as a conventional FMA datapath would.
    """
    pair = _PAIR[normalize_width(width)]
    sdotp = vec.do_sdotp if fused else vec.unfused_sdotp
    left = np.asarray(left, dtype=np.complex128)
    right = np.asarray(right, dtype=np.complex128)
    twiddle = np.asarray(twiddle, dtype=np.complex128)
    tr, ti = twiddle.real, twiddle.imag
    re_p, re_m = sdotp(tr, right.real, ti, right.imag, left.real, 1, pair)
    im_p, im_m = sdotp(tr, right.imag, ti, right.real, left.imag, 0, pair)
    return re_p + 1j * im_p, re_m + 1j * im_m


def fft_network(x: np.ndarray, width: str, twiddles: np.ndarray, fused: bool = True) -> np.ndarray:
    """Run all butterfly stages over the last axis; returns bit-reversed output."""
    n = x.shape[-1]
    stages = n.bit_length() - 1
    y = np.array(x, dtype=np.complex128, copy=True)
    batch = y.shape[:-1]
    for s in range(stages):
        half = n >> (s + 1)
        groups = 1 << s
        w = twiddles[bit_reverse_indices(groups) * half] if groups > 1 else twiddles[:1]
        blocks = y.reshape(*batch, groups, 2, half)
        tw = w.reshape(groups, 1)
        top, bot = butterfly_r2(blocks[..., 0, :], blocks[..., 1, :], tw, width, fused)
        blocks[..., 0, :] = top
        blocks[..., 1, :] = bot
        y = blocks.reshape(*batch, n)
    return y


def fft(job: FftJob, table: TwiddleTable | None = None, fused: bool = True) -> FftResult:
    """Evaluate an FFT job.

    The inverse uses conjugated twiddles and a final 1/N multiply in the
    job's format. Input samples are rounded to the job's width on entry.
    """
    table = table or twiddle_table_build()
    width = job.width
    fmt = PART_FORMAT[width]
    tw = table.for_size(job.points, width)
    if job.direction == INVERSE:
        tw = np.conj(tw)
    x = quantize_complex(job.input, width)
    raw = fft_network(x, width, tw, fused)
    if job.direction == INVERSE:
        scale = 1.0 / job.points
        raw = vec.fp_mul(raw.real, scale, fmt) + 1j * vec.fp_mul(raw.imag, scale, fmt)
    out = raw[..., bit_reverse_indices(job.points)]
    trace = fft_cycle_model(job) if job.cycle_model_enabled else None
    return FftResult(out, raw, trace)


def fft_forward(x, width: str = C64, fused: bool = True) -> np.ndarray:
    x = np.asarray(x)
    return fft(FftJob(x.shape[-1], width, x, FORWARD, False), fused=fused).output


def fft_inverse(x, width: str = C64, fused: bool = True) -> np.ndarray:
    x = np.asarray(x)
    return fft(FftJob(x.shape[-1], width, x, INVERSE, False), fused=fused).output
