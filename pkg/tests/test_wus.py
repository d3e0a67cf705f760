import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maestro_sim.fft import FftCycleTrace
from maestro_sim.mpfloat import FP16, FP32, quantize
from maestro_sim.vtu import ShapeMismatch
from maestro_sim.vtu.gemm import GemmCycleTrace
from maestro_sim.wus import (DEFAULT_PREPROC, SILENT_SCENARIO, CnnModel, ConvBlock, Dense,
                             EchoFrame, PreprocConfig, Scenario, cnn_infer, gaussian_filter,
                             hilbert_envelope, log_compress, oracle_errors, preprocess,
                             random_model, reference_infer, run_seed, softmax_fp32,
                             synthesize_echo, tgc)
from maestro_sim.wus.reference import (ref_gaussian_filter, ref_hilbert_envelope, ref_preprocess,
                                       ref_tgc, rel_l2)

GOLDEN = Path(__file__).parent / "golden"
SMALL = (4, 8, 16)


@pytest.fixture(scope="module")
def small_model():
    return random_model(7, SMALL)


def frame_of(values, fmt=FP32):
    return EchoFrame.from_values(np.broadcast_to(values, (8, 512)), fmt)


# ---------------------------------------------------------------- frames

def test_frame_shape_and_exactness():
    with pytest.raises(ValueError):
        EchoFrame(np.zeros((8, 511)))
    with pytest.raises(ValueError):
        EchoFrame(np.full((8, 512), 0.1), FP16)
    f = EchoFrame.from_values(np.full((8, 512), 0.1), FP16)
    assert f.data[0, 0] == float(np.float16(0.1)) and f.frame_rate == 39


def test_synthesis_deterministic_and_silent():
    a, b = synthesize_echo(11), synthesize_echo(11)
    assert a.data.tobytes() == b.data.tobytes()
    assert not np.array_equal(a.data, synthesize_echo(12).data)
    assert not synthesize_echo(3, SILENT_SCENARIO).data.any()


def test_scenario_dict_roundtrip():
    s = Scenario(reflectors=((50.0, 0.5),), noise_std=0.0)
    assert Scenario.from_dict(json.loads(json.dumps(s.to_dict()))) == s
    with pytest.raises(ValueError):
        Scenario.from_dict({"bogus": 1})


def test_envelope_peaks_at_reflector_depths():
    sc = Scenario(noise_std=0.0)
    f = synthesize_echo(5, sc)
    env = ref_preprocess(f.data)["envelope"]
    for c in range(8):
        for depth in sc.depths(c):
            lo, hi = int(depth) - 20, int(depth) + 21
            peak = lo + int(np.argmax(env[c, lo:hi]))
            assert abs(peak - depth) <= 2


# ---------------------------------------------------------------- preprocessing

def test_config_validation():
    with pytest.raises(ValueError):
        PreprocConfig(log_epsilon=0)
    with pytest.raises(ValueError):
        PreprocConfig(tgc_slope_db=float("inf"))
    with pytest.raises(ValueError):
        PreprocConfig(working_format="bf16")


def test_tgc_trivial_curves():
    x = synthesize_echo(1)
    out, _ = tgc(x, PreprocConfig(tgc_slope_db=0.0))
    assert np.array_equal(out.data, x.data)
    out, _ = tgc(x, PreprocConfig(tgc_gain_db=20.0, tgc_slope_db=0.0))
    assert np.array_equal(out.data, quantize(x.data * 10.0, FP32))


def test_tgc_ramp_vs_fp64():
    ramp = frame_of(np.linspace(-1, 1, 512))
    cfg = PreprocConfig(tgc_gain_db=3.0, tgc_slope_db=0.05)
    out, _ = tgc(ramp, cfg)
    ref = ref_tgc(ramp.data, cfg)
    # gain rounded once, product rounded once
    assert np.all(np.abs(out.data - ref) <= 2 * 2.0 ** -24 * np.abs(ref) + 1e-45)


def test_gaussian_filter_trivial_kernels():
    x = synthesize_echo(2)
    y, spec, _ = gaussian_filter(x, kernel=1.0)
    assert rel_l2(y.data, x.data) < 1e-6
    z, spec0, _ = gaussian_filter(x, kernel=0.0)
    assert not z.data.any() and not spec0.any()


def test_gaussian_filter_chirp_vs_fp64():
    t = np.arange(512)
    chirp = frame_of(np.cos(2 * np.pi * (40 + 0.05 * t) * t / 512))
    y, spec, _ = gaussian_filter(chirp)
    ry, rspec = ref_gaussian_filter(chirp.data)
    assert rel_l2(y.data, ry) < 1e-6
    assert rel_l2(spec, rspec) < 1e-6


def test_kernel_values_in_unit_interval():
    from maestro_sim.wus.preproc import gaussian_kernel
    g = gaussian_kernel(DEFAULT_PREPROC)
    assert np.all((g > 0) & (g <= 1))
    assert np.array_equal(g[1:], g[1:][::-1])


def test_envelope_of_cosine_is_flat():
    k, amp = 40, 0.75
    x = amp * np.cos(2 * np.pi * k * np.arange(512) / 512)
    spec = np.fft.fft(x)
    env, _ = hilbert_envelope(spec)
    assert np.max(np.abs(env - amp)) < 1e-5


def test_envelope_zero_and_am_burst():
    env, _ = hilbert_envelope(np.zeros(512))
    assert not env.any()
    t = np.arange(512)
    burst = np.exp(-0.5 * ((t - 256) / 30) ** 2) * np.cos(2 * np.pi * 60 * t / 512)
    spec = np.fft.fft(quantize(burst, FP32))
    env, _ = hilbert_envelope(spec)
    assert rel_l2(env, ref_hilbert_envelope(spec)) < 1e-6
    assert np.all(env >= 0)


def test_log_compress_contract():
    out, _ = log_compress(np.zeros((8, 512)))
    assert not out.any()
    out, _ = log_compress(np.full((8, 512), 0.3))
    assert np.all(out == 1.0)
    with pytest.raises(ValueError):
        log_compress(-np.ones(4))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_log_compress_preserves_order(seed):
    env = quantize(np.random.default_rng(seed).exponential(0.2, 512), FP32)
    out, _ = log_compress(env)
    order = np.argsort(env, kind="stable")
    assert np.all(np.diff(out[order]) >= 0)
    assert out.min() >= 0 and out.max() == 1.0


def test_fp16_working_precision_runs_on_c32():
    cfg = PreprocConfig(working_format="fp16")
    img, inter, stages = preprocess(synthesize_echo(3, fmt=FP16), cfg)
    assert np.array_equal(quantize(img, FP16), img)
    fft_traces = [t for s in stages for t in s.traces if isinstance(t, FftCycleTrace)]
    assert fft_traces and all(t.width == "C32" for t in fft_traces)


# ---------------------------------------------------------------- CNN

def test_zero_weights_give_uniform_softmax():
    m = random_model(0, SMALL, n_classes=5)
    zero = CnnModel([ConvBlock(b.weight * 0, b.bias * 0, b.pool) for b in m.blocks],
                    Dense(m.fc.weight * 0, m.fc.bias * 0), Dense(m.out.weight * 0, m.out.bias * 0))
    res = cnn_infer(np.random.default_rng(0).uniform(0, 1, (8, 512)), zero)
    assert np.all(res.probabilities == np.float32(1 / 5))


def test_identity_conv_sanity_net():
    w = np.ones((1, 1, 1, 1))
    net = CnnModel([ConvBlock(w, np.zeros(1), (1, 4))], Dense(np.eye(1), np.zeros(1)),
                   Dense(np.eye(1), np.zeros(1)))
    img = quantize(np.random.default_rng(1).uniform(0, 1, (8, 512)), FP16)
    res = cnn_infer(img, net)
    pooled = img.reshape(8, 128, 4).max(axis=2)
    acc = np.float16(0)
    for v in pooled.reshape(-1):
        acc = np.float16(acc + np.float16(v))
    assert res.features[0] == float(acc) / pooled.size
    assert res.label == 0 and res.probabilities[0] == 1.0


def test_model_shape_validation():
    m = random_model(1, SMALL)
    with pytest.raises(ShapeMismatch):
        CnnModel(m.blocks[::-1], m.fc, m.out)
    with pytest.raises(ShapeMismatch):
        CnnModel(m.blocks, Dense(np.zeros((8, 8)), np.zeros(8)), m.out)
    with pytest.raises(ShapeMismatch):
        ConvBlock(np.zeros((2, 1, 2, 2)), np.zeros(2))
    with pytest.raises(ShapeMismatch):
        CnnModel.from_tensors({"block0.weight": m.blocks[0].weight})
    with pytest.raises(ShapeMismatch):
        cnn_infer(np.zeros((8, 256)), m)


def test_default_architecture_ends_at_128():
    m = random_model(0)
    assert [b.cout for b in m.blocks] == [32, 64, 128]
    assert m.feature_dim == 128 and m.fc.weight.shape == (128, 128) and m.n_classes == 10
    assert all(tuple(b.pool) == (1, 4) for b in m.blocks)


def test_tensor_roundtrip(small_model):
    back = CnnModel.from_tensors(small_model.to_tensors())
    for k, v in small_model.to_tensors().items():
        assert np.array_equal(back.to_tensors()[k], v)


@settings(max_examples=50)
@given(st.lists(st.floats(-30, 30), min_size=2, max_size=16))
def test_softmax_normalization(logits):
    p = softmax_fp32(logits)
    assert np.all((p >= 0) & (p <= 1))
    assert abs(np.sum(p.astype(np.float32), dtype=np.float64) - 1) <= 8 * 2.0 ** -23
    assert abs(p.sum() - 1) <= 8 * 2.0 ** -23


def test_cnn_close_to_fp64(small_model):
    img, _, _ = preprocess(synthesize_echo(4))
    res = cnn_infer(img, small_model)
    logits, probs = reference_infer(quantize(img, FP16), small_model)
    assert rel_l2(res.logits, logits) < 2e-2
    assert res.label == int(np.argmax(probs))


def test_engine_mapping(small_model):
    res = cnn_infer(np.zeros((8, 512)), small_model)
    names = [s.name for s in res.stages]
    assert names == ["conv0", "conv1", "conv2", "gap", "fc", "softmax"]
    for s in res.stages[:3]:
        assert any(isinstance(t, GemmCycleTrace) and t.engine == "vtu" for t in s.traces)
    fc = [t for t in res.stages[4].traces if isinstance(t, GemmCycleTrace)]
    assert len(fc) == 2 and all(t.engine == "vau" for t in fc)


# ---------------------------------------------------------------- pipeline

def test_golden_digest():
    gold = json.loads((GOLDEN / "wus_seed0.json").read_text())
    run = run_seed(gold["frame_seed"], random_model(gold["model_seed"]))
    assert run.digest() == gold["digest"]
    assert run.result.label == gold["label"]
    assert (run.cycles, run.flops) == (gold["cycles"], gold["flops"])


def test_run_is_deterministic(small_model):
    a, b = run_seed(9, small_model), run_seed(9, small_model)
    assert a.digest() == b.digest()
    assert a.result.to_dict() == b.result.to_dict()


def test_work_conservation(small_model):
    run = run_seed(2, small_model)
    for s in run.stages:
        eng = s.by_engine()
        assert sum(e["flops"] for e in eng.values()) == s.flops
        assert sum(e["cycles"] for e in eng.values()) == s.cycles
        assert s.flops == sum(t.flops for t in s.traces)
    ffts = [t for s in run.preproc_stages for t in s.traces if isinstance(t, FftCycleTrace)]
    # forward, inverse (filter) and inverse (Hilbert) per channel
    assert len(ffts) == 3 * 8
    assert run.flops == sum(s.flops for s in run.stages)


def test_oracle_errors_below_calibrated(small_model):
    from maestro_sim.calibration import wus_thresholds
    lim = wus_thresholds()
    run = run_seed(31, small_model)
    errs = oracle_errors(run)
    for k, v in errs.items():
        assert v <= lim[k], k
