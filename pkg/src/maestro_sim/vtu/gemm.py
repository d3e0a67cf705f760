"""Vector-Tensor Unit GEMM: functional dataflow plus cycle model, and the
vector-FPU outer-product baseline.

Computes ``Z = X @ W + Y``. Each computing element (CE) performs one FMA
per cycle and rounds once per FMA in the accumulator format; an output
element is the sequential FMA chain over ``k`` seeded with ``Y``.

Tiling follows the 12x4 CE array: a tile is 12 rows of Z by 16 columns
(each CE holds its X value for 16 cycles while 16 W values stream past)
and covers 4 values of k per 16 cycles. The inner loop walks k in chunks
of 16 (one LMUL=8 register group of W); between chunks the Y and Z
pointers swap so the partial Z becomes the next chunk's Y.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..mpfloat import FP16, FP32, FP8E4M3, FP8E5M2, FloatFormat, get_format
from ..mpfloat import vec


class ShapeMismatch(ValueError):
    pass


class UnsupportedFormat(ValueError):
    pass


_GEMM_PAIRS = {(FP16, FP16), (FP16, FP32), (FP8E4M3, FP16), (FP8E5M2, FP16)}


@dataclass(frozen=True)
class GemmShape:
    m: int
    n: int
    k: int
    in_format: FloatFormat = FP16
    acc_format: FloatFormat = FP16

    def __post_init__(self):
        object.__setattr__(self, "in_format", get_format(self.in_format))
        object.__setattr__(self, "acc_format", get_format(self.acc_format))
        if min(self.m, self.n, self.k) < 1:
            raise ShapeMismatch(f"GEMM dimensions must be positive, got {self.m}x{self.n}x{self.k}")
        if (self.in_format, self.acc_format) not in _GEMM_PAIRS:
            raise UnsupportedFormat(f"no GEMM datapath for {self.in_format}->{self.acc_format}")

    @property
    def fmas(self) -> int:
        return self.m * self.n * self.k


@dataclass(frozen=True)
class CeArraySpec:
    rows: int = 12
    cols: int = 4
    x_hold_cycles: int = 16
    col_stagger: tuple[int, ...] = (0, 4, 8, 12)

    def __post_init__(self):
        if len(self.col_stagger) != self.cols:
            raise ValueError("one stagger offset per column")
        steps = {b - a for a, b in zip(self.col_stagger, self.col_stagger[1:])}
        if steps and steps != {self.cols}:
            raise ValueError("column stagger step must equal the column count")

    @property
    def fma_per_cycle(self) -> int:
        return self.rows * self.cols

    @property
    def tile_m(self) -> int:
        return self.rows

    @property
    def tile_n(self) -> int:
        return self.x_hold_cycles


CE_ARRAY = CeArraySpec()
TILE_K = 16          # k values per LMUL=8 W register group
PORT_BITS = 256      # VRF port width
VAU_LANE_BITS = 64   # per FPU
VAU_FPUS = 4


@dataclass(frozen=True)
class VtuTiming:
    """Timing constants. ``swap_cycles`` and ``trigger_cycles`` are the
    calibrated overheads (fit once against the 96x64 utilization target)."""

    swap_cycles: int = 1
    trigger_cycles: int = 0


@dataclass(frozen=True)
class VauTiming:
    setup_cycles: int = 8
    scalar_issue_cycles: int = 4   # scalar-core work per outer-product step
    vlmax_bits: int = 4096         # VLEN 512 x LMUL 8


@dataclass
class GemmCycleTrace:
    engine: str
    m: int
    n: int
    k: int
    fma_issued: int
    peak_fma_per_cycle: int
    vrf_load_cycles: int = 0
    fill_cycles: int = 0
    compute_cycles: int = 0
    pointer_swap_cycles: int = 0
    port_conflict_stalls: int = 0
    writeback_cycles: int = 0
    trigger_cycles: int = 0
    passes: int = 0

    @property
    def total_cycles(self) -> int:
        return (self.vrf_load_cycles + self.fill_cycles + self.compute_cycles
                + self.pointer_swap_cycles + self.port_conflict_stalls
                + self.writeback_cycles + self.trigger_cycles)

    @property
    def utilization(self) -> float:
        return self.fma_issued / (self.total_cycles * self.peak_fma_per_cycle)

    @property
    def utilization_compute_only(self) -> float:
        """Utilization with the initial VRF load excluded."""
        return self.fma_issued / ((self.total_cycles - self.vrf_load_cycles)
                                  * self.peak_fma_per_cycle)

    @property
    def fma_per_cycle(self) -> float:
        return self.fma_issued / self.total_cycles

    @property
    def flops(self) -> int:
        return 2 * self.fma_issued

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(total_cycles=self.total_cycles, utilization=self.utilization,
                 utilization_compute_only=self.utilization_compute_only,
                 fma_per_cycle=self.fma_per_cycle, flops=self.flops)
        return d


def _words(elements: int, fmt: FloatFormat) -> int:
    return -(-elements * fmt.width // PORT_BITS)


def _prepare(x, w, y, shape: GemmShape):
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    y = np.zeros((shape.m, shape.n)) if y is None else np.asarray(y, dtype=np.float64)
    if x.shape != (shape.m, shape.k) or w.shape != (shape.k, shape.n) or y.shape != (shape.m, shape.n):
        raise ShapeMismatch(
            f"expected X {shape.m}x{shape.k}, W {shape.k}x{shape.n}, Y {shape.m}x{shape.n}; "
            f"got {x.shape}, {w.shape}, {y.shape}")
    return (vec.quantize(x, shape.in_format), vec.quantize(w, shape.in_format),
            vec.quantize(y, shape.acc_format))


def vtu_timing(shape: GemmShape, array: CeArraySpec = CE_ARRAY,
               timing: VtuTiming = VtuTiming()) -> GemmCycleTrace:
    tm, tn = array.tile_m, array.tile_n
    m_tiles = -(-shape.m // tm)
    n_tiles = -(-shape.n // tn)
    chunks = [min(TILE_K, shape.k - k0) for k0 in range(0, shape.k, TILE_K)]
    fin, fac = shape.in_format, shape.acc_format

    def compute(kt):
        return array.x_hold_cycles * -(-kt // array.cols)

    def xw_words(kt):
        return _words(tm * kt, fin) + _words(kt * tn, fin)

    zy_words = 2 * _words(tm * tn, fac)

    tr = GemmCycleTrace("vtu", shape.m, shape.n, shape.k, shape.fmas, array.fma_per_cycle)
    tr.trigger_cycles = timing.trigger_cycles
    tr.vrf_load_cycles = xw_words(chunks[0]) + _words(tm * tn, fac)
    tr.fill_cycles = array.col_stagger[-1]
    passes = [kt for _ in range(m_tiles * n_tiles) for kt in chunks]
    for i, kt in enumerate(passes):
        c = compute(kt)
        tr.compute_cycles += c
        # next operands stream in through the VLSU while Z drains and Y preloads
        last = i + 1 == len(passes)
        traffic = 0 if last else max(xw_words(passes[i + 1]), zy_words)
        tr.port_conflict_stalls += max(0, traffic - c)
        tr.pointer_swap_cycles += timing.swap_cycles
    tr.passes = len(passes)
    tr.writeback_cycles = _words(tm * tn, fac)
    return tr


def vtu_gemm(x, w, y, shape: GemmShape, timing: VtuTiming = VtuTiming(),
             array: CeArraySpec = CE_ARRAY):
    """Tiled VTU GEMM. Returns ``(Z, GemmCycleTrace)``; inputs are rounded to
    the shape's formats on entry."""
    x, w, y = _prepare(x, w, y, shape)
    tm, tn = array.tile_m, array.tile_n
    mp = -(-shape.m // tm) * tm
    np_ = -(-shape.n // tn) * tn
    xp = np.zeros((mp, shape.k))
    xp[:shape.m] = x
    wp = np.zeros((shape.k, np_))
    wp[:, :shape.n] = w
    zbuf = np.zeros((mp, np_))
    zbuf[:shape.m, :shape.n] = y
    # tiles: (m_tile, row, n_tile, col)
    zt = zbuf.reshape(mp // tm, tm, np_ // tn, tn)
    xt = xp.reshape(mp // tm, tm, shape.k)
    wt = wp.reshape(shape.k, np_ // tn, tn)
    acc = shape.acc_format
    ybuf = zt
    for k0 in range(0, shape.k, TILE_K):
        zt = ybuf.copy()
        for kk in range(k0, min(k0 + TILE_K, shape.k)):
            xs = xt[:, :, kk][:, :, None, None]
            ws = wt[kk][None, None, :, :]
            zt = vec.fp_fma(xs, ws, zt, acc)
        ybuf = zt  # pointer swap: this chunk's Z is the next chunk's Y
    z = zt.reshape(mp, np_)[:shape.m, :shape.n].copy()
    return z, vtu_timing(shape, array, timing)


def vau_timing(shape: GemmShape, timing: VauTiming = VauTiming()) -> GemmCycleTrace:
    fac = shape.acc_format
    lanes = VAU_FPUS * VAU_LANE_BITS // fac.width
    vlmax = timing.vlmax_bits // fac.width
    strips = [min(vlmax, shape.n - j) for j in range(0, shape.n, vlmax)]
    tr = GemmCycleTrace("vau", shape.m, shape.n, shape.k, shape.fmas, lanes)
    tr.trigger_cycles = timing.setup_cycles
    tr.vrf_load_cycles = _words(strips[0], fac)
    for vl in strips:
        step = -(-vl // lanes)
        tr.compute_cycles += shape.m * shape.k * step
        tr.port_conflict_stalls += shape.m * shape.k * max(0, timing.scalar_issue_cycles - step)
    tr.passes = shape.m * len(strips)
    tr.writeback_cycles = _words(strips[-1], fac)
    return tr


def vau_gemm(x, w, y, shape: GemmShape, timing: VauTiming = VauTiming()):
    """Outer-product GEMM on the vector FPUs: for each row i and each k,
    ``Z[i, :] += X[i, k] * W[k, :]`` as one vector FMA."""
    x, w, y = _prepare(x, w, y, shape)
    z = y.copy()
    acc = shape.acc_format
    for i in range(shape.m):
        row = z[i]
        for kk in range(shape.k):
            row = vec.fp_fma(x[i, kk], w[kk], row, acc)
        z[i] = row
    return z, vau_timing(shape, timing)


def reference_gemm(x, w, y, shape: GemmShape) -> np.ndarray:
    """Whole-matrix sequential FMA chain over k (no tiling)."""
    x, w, y = _prepare(x, w, y, shape)
    z = y.copy()
    for kk in range(shape.k):
        z = vec.fp_fma(x[:, kk:kk + 1], w[kk:kk + 1, :], z, shape.acc_format)
    return z
