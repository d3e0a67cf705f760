from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maestro_sim.mpfloat import FP16, FP32, FP8E4M3, quantize
from maestro_sim.perf import OperatingPoint, peak_gflops
from maestro_sim.vtu import (VAU, VLSU, VSLDU, VTU, BufferSpec, GemmShape, Request, ShapeMismatch,
                             TileTooLarge, UnsupportedFormat, VrfArbiter, buffer_accounting,
                             hex_dump, parse_hex_dump, reference_gemm, vau_gemm, vau_timing,
                             vrf_arbitrate, vrf_pack, vrf_unpack, vtu_gemm, vtu_timing)
from maestro_sim.vtu.buffers import format_table

from arbiter_oracle import ALL, check_grants

GOLDEN = Path(__file__).parent / "golden"


def operands(rng, m, n, k, fin=FP16, fac=FP16):
    return (quantize(rng.uniform(-1, 1, (m, k)), fin), quantize(rng.uniform(-1, 1, (k, n)), fin),
            quantize(rng.uniform(-1, 1, (m, n)), fac))


# ---------------------------------------------------------------- functional

def test_scalar_gemm():
    z, tr = vtu_gemm([[1.5]], [[2.0]], [[0.25]], GemmShape(1, 1, 1))
    assert z[0, 0] == 3.25 and tr.fma_issued == 1


def test_identity_weights():
    rng = np.random.default_rng(0)
    x, _, y = operands(rng, 12, 16, 16)
    z, _ = vtu_gemm(x, np.eye(16), np.zeros((12, 16)), GemmShape(12, 16, 16))
    assert np.array_equal(z, x)


@pytest.mark.parametrize("fin,fac", [(FP16, FP16), (FP16, FP32), (FP8E4M3, FP16)])
def test_engines_bit_identical(fin, fac):
    rng = np.random.default_rng(1)
    for m, n, k in [(40, 33, 50), (13, 17, 19), (1, 64, 3)]:
        x, w, y = operands(rng, m, n, k, fin, fac)
        shape = GemmShape(m, n, k, fin, fac)
        ref = reference_gemm(x, w, y, shape)
        assert np.array_equal(vtu_gemm(x, w, y, shape)[0], ref)
        assert np.array_equal(vau_gemm(x, w, y, shape)[0], ref)


def test_sequential_fma_semantics():
    # one rounding per FMA, in k order
    x = np.array([[1.0, 1.0, 1.0]])
    w = np.array([[2.0 ** -11], [2.0 ** -11], [1.0]])
    z, _ = vtu_gemm(x, w, [[1.0]], GemmShape(1, 1, 3))
    # 1 + 2^-11 ties to 1 twice, then + 1
    assert z[0, 0] == 2.0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 30), st.integers(1, 30), st.integers(1, 40), st.integers(0, 2 ** 31))
def test_gemm_vs_fp64_bound(m, n, k, seed):
    rng = np.random.default_rng(seed)
    x, w, y = operands(rng, m, n, k)
    z, _ = vtu_gemm(x, w, y, GemmShape(m, n, k))
    exact = x @ w + y
    u = 2.0 ** -11
    bound = (k * u / (1 - k * u)) * (np.abs(x) @ np.abs(w) + np.abs(y)) + k * 2.0 ** -24
    assert np.all(np.abs(z - exact) <= bound)


def test_shape_and_format_errors():
    with pytest.raises(ShapeMismatch):
        vtu_gemm(np.zeros((2, 3)), np.zeros((4, 2)), None, GemmShape(2, 2, 3))
    with pytest.raises(ShapeMismatch):
        GemmShape(0, 1, 1)
    with pytest.raises(UnsupportedFormat):
        GemmShape(4, 4, 4, FP32, FP16)


# ---------------------------------------------------------------- timing

def test_utilization_targets():
    big = vtu_timing(GemmShape(96, 64, 64))
    small = vtu_timing(GemmShape(12, 16, 16))
    assert abs(big.utilization - 0.98) <= 0.02
    assert abs(small.utilization - 0.50) <= 0.05
    assert big.utilization <= 1 and small.utilization <= 1
    assert abs(big.fma_per_cycle - 47) < 1
    gf = peak_gflops(48, 0.98, OperatingPoint(210e6))
    assert abs(gf - 19.8) / 19.8 <= 0.01


def test_vau_baseline_speedup():
    shape = GemmShape(96, 64, 64)
    speedup = vau_timing(shape).total_cycles / vtu_timing(shape).total_cycles
    assert 2.4 <= speedup <= 3.6


def test_trace_bookkeeping():
    tr = vtu_timing(GemmShape(24, 32, 40))
    assert tr.total_cycles == (tr.vrf_load_cycles + tr.fill_cycles + tr.compute_cycles
                               + tr.pointer_swap_cycles + tr.port_conflict_stalls
                               + tr.writeback_cycles + tr.trigger_cycles)
    assert tr.flops == 2 * 24 * 32 * 40
    assert tr.passes == 2 * 2 * 3
    d = tr.to_dict()
    assert d["utilization"] == tr.utilization


@settings(max_examples=50)
@given(st.integers(1, 200), st.integers(1, 200), st.integers(1, 200))
def test_utilization_never_exceeds_one(m, n, k):
    for tr in (vtu_timing(GemmShape(m, n, k)), vau_timing(GemmShape(m, n, k))):
        assert 0 < tr.utilization <= 1
        assert tr.total_cycles * tr.peak_fma_per_cycle >= tr.fma_issued


# ---------------------------------------------------------------- arbiter

def test_arbiter_exhaustive_single_bank():
    for bank in range(4):
        for mask in range(1 << len(ALL)):
            reqs = [Request(u, bank, op) for i, (u, op) in enumerate(ALL) if mask >> i & 1]
            check_grants(reqs, vrf_arbitrate(reqs))


def test_arbiter_soak():
    rng = np.random.default_rng(4)
    arb = VrfArbiter()
    for _ in range(5000):
        k = rng.integers(0, 8)
        new = [Request(*ALL[i][:1], int(rng.integers(0, 4)), ALL[i][1])
               for i in rng.integers(0, len(ALL), k)]
        pending = list(arb.pending)
        g = arb.step(new)
        check_grants(list(dict.fromkeys(pending + new)), g)
        assert arb.pending == g.stalled


def test_vtu_stalls_behind_vau_write():
    g = vrf_arbitrate([Request(VTU, 2, "wr"), Request(VAU, 2, "wr")])
    assert g.granted == [Request(VAU, 2, "wr")]
    arb = VrfArbiter()
    arb.step([Request(VTU, 2, "wr"), Request(VAU, 2, "wr")])
    g2 = arb.step()
    assert g2.granted == [Request(VTU, 2, "wr")]


def test_invalid_paths():
    with pytest.raises(ValueError):
        vrf_arbitrate([Request(VTU, 0, "vd")])
    with pytest.raises(ValueError):
        vrf_arbitrate([Request(VAU, 4, "vs1")])


# ---------------------------------------------------------------- buffers

def test_buffer_table():
    rep = buffer_accounting()
    assert rep["X"] == {"original": 576, "reduced": 288, "reduction_pct": -50.0}
    assert rep["Total"] == {"original": 1088, "reduced": 800, "reduction_pct": -26.5}
    assert buffer_accounting("reduced") == {"X": 288, "Y": 384, "W": 128, "Total": 800}
    text = format_table(rep)
    assert "X buffer 576 → 288 (−50%)" in text
    assert "totals 1088 → 800 (−26.5%)" in text


def test_buffer_spec_arithmetic():
    s = BufferSpec(x_queue_slots=1, x_sync_slots=0)
    assert s.x_bytes == 96 and s.total_bytes == 96 + 384 + 128


# ---------------------------------------------------------------- VRF image

def golden_tile():
    x = (np.arange(12 * 16).reshape(12, 16) % 37 - 18) / 4
    w = (np.arange(16 * 16).reshape(16, 16) % 29 - 14) / 8
    y = -(np.arange(12 * 16).reshape(12, 16) % 11) / 2
    return x, w, y


def test_vrf_golden_image():
    img = vrf_pack(*golden_tile())
    assert hex_dump(img) == (GOLDEN / "vrf_tile_12x16x16.hex").read_text()


def test_vrf_layout_by_hand():
    x, w, y = golden_tile()
    img = vrf_pack(x, w, y)
    # X word 3*kg + rg, element 4i + j holds x[4rg + i, 4kg + j]
    word = lambda g, k: img[g + k // 2, (k % 2) * 16:(k % 2) * 16 + 16]  # noqa: E731
    assert word(0, 0)[0] == 0xC480              # x[0,0] = -4.5
    assert word(0, 0)[5] == 0xB400              # x[1,1] = -0.25
    assert word(0, 3 * 1 + 2)[4 * 3 + 1] == np.float16(x[11, 5]).view(np.uint16)
    assert np.array_equal(word(16, 7), np.float16(w[7]).view(np.uint16))
    assert np.array_equal(word(8, 11), np.float16(y[11]).view(np.uint16))
    assert not img[24:].any()


@settings(max_examples=30)
@given(st.integers(1, 12), st.integers(1, 16), st.integers(1, 16), st.integers(0, 2 ** 31))
def test_vrf_roundtrip(m, n, k, seed):
    rng = np.random.default_rng(seed)
    x, w, y = operands(rng, m, n, k)
    img = vrf_pack(x, w, y)
    back = vrf_unpack(parse_hex_dump(hex_dump(img)), m, n, k)
    for a, b in zip(back, (x, w, y)):
        assert np.array_equal(a, b)


def test_vrf_tile_too_large():
    with pytest.raises(TileTooLarge):
        vrf_pack(np.zeros((13, 4)), np.zeros((4, 4)), np.zeros((13, 4)))
    with pytest.raises(TileTooLarge):
        vrf_pack(np.zeros((4, 17)), np.zeros((17, 4)), np.zeros((4, 4)))
