"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py`` and read the "acceptance criteria"
section of the terminal summary.
"""

import json
import time
from pathlib import Path

import ml_dtypes
import numpy as np
import pytest

import acceptance_log
from arbiter_oracle import ALL, check_grants
from maestro_sim.calibration import (FFT_CASES, butterfly_error_study, fft_errors,
                                     fft_thresholds, random_complex, wus_thresholds)
from maestro_sim.cli import main
from maestro_sim.fft import C32, C64, FftJob, fft_cycle_model
from maestro_sim.mpfloat import FP8E4M3, FP8E5M2, FP16, FP32, decode, encode, oracle, vec
from maestro_sim.perf import PRESETS, BatteryModel, battery_lifetime, peak_gflops
from maestro_sim.vtu import (GemmShape, Request, VrfArbiter, buffer_accounting, reference_gemm,
                             vrf_arbitrate, vtu_gemm, vtu_timing)
from maestro_sim.vtu.buffers import format_table
from maestro_sim.wus import (cnn_infer, oracle_errors, preprocess, random_model,
                             reference_infer, run_seed, synthesize_echo)
from maestro_sim.mpfloat import quantize

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = Path(__file__).parent / "golden"
FRESH_SEED = 90210


def verdict(number, title, ok, detail):
    acceptance_log.record(number, title, ok, detail)
    assert ok, detail


# ---------------------------------------------------------------- 1

def _clustered(rng, fmt, n, spread):
    e = rng.integers(fmt.bias - spread, fmt.bias + spread, n, dtype=np.uint64)
    m = rng.integers(0, 1 << fmt.man_bits, n, dtype=np.uint64)
    s = rng.integers(0, 2, n, dtype=np.uint64)
    return (s << np.uint64(fmt.width - 1)) | (e << np.uint64(fmt.man_bits)) | m


def _corners(fmt):
    tiny = float(decode(np.array([1], dtype=np.uint64), fmt)[0])
    big = float(fmt.max_finite)
    one_up = 1.0 + 2.0 ** -fmt.man_bits
    vals = [
        (1.0, 1.0, 1.0, 1.0, 0.0, 1), (-0.0, 1.0, 0.0, -1.0, -0.0, 0),
        (tiny, 0.5, tiny, 0.5, 0.0, 0), (tiny, tiny, 1.0, 1.0, -1.0, 0),
        (tiny, 1.0, -tiny, 1.0, tiny, 0), (big, 2.0, 1.0, 1.0, 0.0, 0),
        (big, 1.0, big, 1.0, -big, 0), (big, 1.0, big, 1.0, -big, 1),
        (np.inf, 1.0, np.inf, 1.0, 0.0, 1), (np.inf, 0.0, 1.0, 1.0, 0.0, 0),
        (-np.inf, 1.0, 1.0, 1.0, np.inf, 0), (np.nan, 1.0, 1.0, 1.0, 1.0, 0),
        (one_up, one_up, 1.0, 1.0, -3.0, 0), (one_up, -one_up, 1.0, 1.0, 0.0, 1),
        (2.0 ** (fmt.man_bits + 1) + 1, 1.0, 1.0, 1.0, 0.0, 0),
    ]
    return [[int(encode(np.array([v]), fmt)[0]) for v in row[:5]] + [row[5]] for row in vals]


def _check_tuples(bits, mods, fmt, pair):
    vals = [decode(b, fmt) for b in bits]
    s, d = vec.do_sdotp(*vals, mods, pair)
    s, d = encode(s, fmt).tolist(), encode(d, fmt).tolist()
    cols = [b.tolist() for b in bits]
    mods = mods.tolist()
    bad = 0
    for i in range(len(mods)):
        ref = oracle.exact_do_sdotp(cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i],
                                    mods[i], fmt, fmt)
        bad += ref != (s[i], d[i])
    return bad


def test_criterion_01_sdotp_bit_exact():
    t0 = time.perf_counter()
    n = 1_000_000
    checked, mismatches = 0, 0
    for fmt, pair in ((FP16, vec.SAME_FP16), (FP32, vec.SAME_FP32)):
        rng = np.random.default_rng(FRESH_SEED)
        bits = [rng.integers(0, 1 << fmt.width, n, dtype=np.uint64) for _ in range(5)]
        # a quarter of the tuples cluster exponents to force cancellation
        q = n // 4
        for k in range(5):
            bits[k][:q] = _clustered(rng, fmt, q, 3 if k < 4 else 5)
        mods = rng.integers(0, 2, n)
        mismatches += _check_tuples(bits, mods, fmt, pair)
        corner = np.array(_corners(fmt), dtype=np.uint64).T
        mismatches += _check_tuples(list(corner[:5]), corner[5].astype(np.int64), fmt, pair)
        checked += n + corner.shape[1]
    exhaustive_ok = True
    for fmt, ml in ((FP8E4M3, ml_dtypes.float8_e4m3fn), (FP8E5M2, ml_dtypes.float8_e5m2)):
        pats = np.arange(256, dtype=np.uint64)
        mine = decode(pats, fmt)
        ref = np.arange(256, dtype=np.uint8).view(ml).astype(np.float64)
        same = np.array_equal(mine, ref, equal_nan=True)
        nan = np.isnan(mine)
        back = encode(mine[~nan], fmt)
        exhaustive_ok &= same and np.array_equal(back, pats[~nan])
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and exhaustive_ok and elapsed < 120
    verdict(1, "DO-SDOTP bit-exact vs exact oracle", ok,
            f"{checked} tuples, {mismatches} mismatches, 8-bit exhaustive "
            f"{'ok' if exhaustive_ok else 'failed'}, {elapsed:.1f} s")


# ---------------------------------------------------------------- 2

def test_criterion_02_fused_beats_unfused():
    study = butterfly_error_study(100_000, FRESH_SEED)
    archived = json.loads((ROOT / "results" / "fused_vs_unfused.json").read_text())
    ok = (study["fused_mean_abs_err"] < study["unfused_mean_abs_err"]
          and archived["count"] >= 100_000
          and archived["fused_mean_abs_err"] < archived["unfused_mean_abs_err"])
    verdict(2, "fused butterfly error below unfused", ok,
            f"unfused/fused mean abs error {study['ratio_unfused_over_fused']:.3f} "
            f"(archived {archived['ratio_unfused_over_fused']:.3f})")


# ---------------------------------------------------------------- 3

def test_criterion_03_fft_accuracy():
    t0 = time.perf_counter()
    rng = np.random.default_rng(FRESH_SEED)
    parts, ok = [], True
    for width, points in FFT_CASES:
        fwd, rt = fft_errors(random_complex(rng, 1000, points, width), width)
        lf, lr = fft_thresholds(width, points)
        ok &= bool(fwd.max() < lf and rt.max() < lr)
        parts.append(f"{width}/{points}: fwd {fwd.max():.3g} < {lf:.3g}, rt {rt.max():.3g} < {lr:.3g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 300
    verdict(3, "FFT accuracy under calibrated thresholds", ok,
            "; ".join(parts) + f"; {elapsed:.1f} s")


# ---------------------------------------------------------------- 4

def test_criterion_04_fft_cycle_model():
    counts_ok = True
    for width, n_max in ((C32, 1024), (C64, 512)):
        n = 2
        while n <= n_max:
            tr = fft_cycle_model(FftJob(n, width, np.zeros(n)))
            counts_ok &= tr.butterflies == (n // 2) * (n.bit_length() - 1)
            n *= 2
    tr = fft_cycle_model(FftJob(1024, C32, np.zeros(1024)))
    fpc = tr.flop_per_cycle
    gflops = fpc * PRESETS["210mhz"].frequency_hz / 1e9
    ok = counts_ok and 15 <= fpc <= 20 and abs(fpc - 17.1) / 17.1 <= 0.15
    verdict(4, "FFT butterfly counts and FLOP/cycle band", ok,
            f"counts {'exact' if counts_ok else 'wrong'}, 1024-pt C32 {fpc:.2f} FLOP/cycle, "
            f"{gflops:.2f} GFLOPS at 210 MHz")


# ---------------------------------------------------------------- 5

def test_criterion_05_vtu_utilization():
    big = vtu_timing(GemmShape(96, 64, 64)).utilization
    small = vtu_timing(GemmShape(12, 16, 16)).utilization
    gf = peak_gflops(48, 0.98, PRESETS["210mhz"])
    gf_model = peak_gflops(48, big, PRESETS["210mhz"])
    ok = abs(big - 0.98) <= 0.02 and abs(small - 0.50) <= 0.05 and abs(gf - 19.8) / 19.8 <= 0.01
    verdict(5, "VTU utilization calibration and peak law", ok,
            f"96x64x64 {big:.4f}, 12x16 {small:.4f}, peak law {gf:.2f} GFLOPS "
            f"(model {gf_model:.2f})")


# ---------------------------------------------------------------- 6

def test_criterion_06_buffers():
    rep = buffer_accounting()
    text = format_table(rep)
    ok = (rep["X"] == {"original": 576, "reduced": 288, "reduction_pct": -50.0}
          and rep["Total"] == {"original": 1088, "reduced": 800, "reduction_pct": -26.5}
          and "X buffer 576 → 288 (−50%)" in text and "totals 1088 → 800 (−26.5%)" in text)
    verdict(6, "buffer accounting", ok,
            f"X {rep['X']['original']}->{rep['X']['reduced']}, "
            f"total {rep['Total']['original']}->{rep['Total']['reduced']} "
            f"({rep['Total']['reduction_pct']}%)")


# ---------------------------------------------------------------- 7

def test_criterion_07_vrf_arbitration():
    combos = 0
    for bank in range(4):
        for mask in range(1 << len(ALL)):
            reqs = [Request(u, bank, op) for i, (u, op) in enumerate(ALL) if mask >> i & 1]
            check_grants(reqs, vrf_arbitrate(reqs))
            combos += 1
    rng = np.random.default_rng(FRESH_SEED)
    arb = VrfArbiter()
    cycles, granted = 100_000, 0
    picks = rng.integers(0, len(ALL), (cycles, 6))
    banks = rng.integers(0, 4, (cycles, 6))
    sizes = rng.integers(0, 7, cycles)
    for c in range(cycles):
        new = [Request(ALL[i][0], int(b), ALL[i][1])
               for i, b in zip(picks[c, :sizes[c]], banks[c, :sizes[c]])]
        pending = list(arb.pending)
        g = arb.step(new)
        check_grants(list(dict.fromkeys(pending + new)), g)
        assert arb.pending == g.stalled
        granted += len(g.granted)
    verdict(7, "VRF arbitration invariants", True,
            f"{combos} single-cycle combinations, {cycles}-cycle soak, {granted} grants")


# ---------------------------------------------------------------- 8

def _gemm_case(rng, m, n, k):
    x = quantize(rng.uniform(-1, 1, (m, k)), FP16)
    w = quantize(rng.uniform(-1, 1, (k, n)), FP16)
    y = quantize(rng.uniform(-1, 1, (m, n)), FP16)
    shape = GemmShape(m, n, k)
    z, _ = vtu_gemm(x, w, y, shape)
    exact = np.array_equal(z, reference_gemm(x, w, y, shape))
    u = 2.0 ** -11
    bound = (k * u / (1 - k * u)) * (np.abs(x) @ np.abs(w) + np.abs(y)) + k * 2.0 ** -24
    return exact, bool(np.all(np.abs(z - (x @ w + y)) <= bound))


def test_criterion_08_gemm_functional():
    rng = np.random.default_rng(FRESH_SEED)
    shapes = [(m, n, k) for m in range(1, 17) for n in range(1, 17) for k in range(1, 17)]
    shapes += [tuple(int(v) for v in rng.integers(1, 65, 3)) for _ in range(100)]
    exact_fail = bound_fail = 0
    for m, n, k in shapes:
        exact, within = _gemm_case(rng, m, n, k)
        exact_fail += not exact
        bound_fail += not within
    verdict(8, "GEMM bit-exact vs sequential FMA", exact_fail == 0 and bound_fail == 0,
            f"{len(shapes)} shapes, {exact_fail} inexact, {bound_fail} outside FP64 bound")


# ---------------------------------------------------------------- 9

def test_criterion_09_wus_end_to_end():
    gold = json.loads((GOLDEN / "wus_seed0.json").read_text())
    model = random_model(gold["model_seed"])
    golden_ok = run_seed(gold["frame_seed"], model).digest() == gold["digest"]

    limits = wus_thresholds()
    worst: dict = {}
    for s in range(FRESH_SEED, FRESH_SEED + 8):
        errs = oracle_errors(run_seed(s, model), model)
        errs.pop("argmax_match")
        for k, v in errs.items():
            worst[k] = max(worst.get(k, 0.0), v)
    stages_ok = all(worst[k] <= limits[k] for k in worst)

    # random-model trials: reduced conv widths (final width 128) plus a full-width sample
    images = [quantize(preprocess(synthesize_echo(FRESH_SEED + i))[0], FP16) for i in range(100)]
    ulp = 2.0 ** -23
    sum_ok = True

    def trials(count, channels, offset):
        nonlocal sum_ok
        agree, low_margin_misses = 0, 0
        for t in range(count):
            m = random_model(offset + t, channels)
            img = images[t % len(images)]
            res = cnn_infer(img, m)
            _, probs = reference_infer(img, m)
            sum_ok &= abs(float(np.sum(res.probabilities)) - 1.0) <= 8 * ulp
            sum_ok &= bool(np.all((res.probabilities >= 0) & (res.probabilities <= 1)))
            if res.label == int(np.argmax(probs)):
                agree += 1
            else:
                top2 = np.sort(probs)[-2:]
                low_margin_misses += (top2[1] - top2[0]) <= limits["probabilities"]
        return agree, low_margin_misses

    red, red_low = trials(1000, (8, 16, 128), 100_000)
    full, full_low = trials(50, (32, 64, 128), 200_000)
    argmax_ok = red / 1000 >= 0.99 and full / 50 >= 0.99
    ok = golden_ok and stages_ok and sum_ok and argmax_ok
    worst_txt = ", ".join(f"{k} {worst[k]:.2g}/{limits[k]:.2g}" for k in sorted(worst))
    verdict(9, "WUS end-to-end", ok,
            f"golden {'match' if golden_ok else 'MISMATCH'}; stages {worst_txt}; softmax sum "
            f"{'within' if sum_ok else 'outside'} 8 ULP; argmax {red}/1000 reduced-width "
            f"({red_low} misses at margin <= tol), {full}/50 full-width ({full_low})")


# ---------------------------------------------------------------- 10

def test_criterion_10_battery():
    h12 = battery_lifetime(BatteryModel(320, 3.7, 12, 0.95))
    h14 = battery_lifetime(BatteryModel(320, 3.7, 14, 0.95))
    ok = abs(h12 - 94) / 94 <= 0.03 and abs(h14 - 82) / 82 <= 0.03
    verdict(10, "battery lifetime identities", ok, f"12 mW {h12:.1f} h, 14 mW {h14:.1f} h")


# ---------------------------------------------------------------- 11

CLI_RUNS = {
    "fft": ["fft", "--input", "random", "--seed", "3", "--compare-oracle"],
    "gemm": ["gemm", "--m", "24", "--n", "32", "--engine", "vau"],
    "wus": ["wus", "--frames", "2", "--oracle"],
    "buffers": ["buffers"],
    "lifetime": ["lifetime"],
    "sweep": ["sweep", "--count", "3000"],
    "calibrate": ["calibrate", "--fft-trials", "20", "--wus-frames", "1"],
}


def _artifacts(d: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(d.iterdir()) if p.name != "meta.json"}


def test_criterion_11_cli_determinism(tmp_path, capsys):
    bad = []
    for name, args in CLI_RUNS.items():
        outs = []
        for rep in "ab":
            d = tmp_path / f"{name}_{rep}"
            code = main([*args, "--out", str(d)])
            if code != 0:
                bad.append(f"{name} exit {code}")
            outs.append(_artifacts(d))
        if not outs[0] or outs[0] != outs[1]:
            bad.append(name)
    capsys.readouterr()
    verdict(11, "CLI determinism", not bad,
            f"{len(CLI_RUNS)} subcommands byte-identical" if not bad else "differs: " + ", ".join(bad))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
