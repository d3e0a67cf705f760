"""Echo preprocessing: TGC, Gaussian band filter, Hilbert envelope, log compression.

FFTs run on the accelerator model (C64 for FP32 working precision, C32 for
FP16); elementwise work runs through the software FPU at the stage's
working precision. Each stage returns its output and a StageTrace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..fft import C32, C64, FftJob, fft
from ..fft.engine import FORWARD, INVERSE
from ..mpfloat import FP16, FP32, FloatFormat, get_format, quantize
from ..mpfloat import vec
from .frames import SAMPLES, EchoFrame
from .stages import StageTrace, vector_op

_WIDTH = {FP32.name: C64, FP16.name: C32}
_PAIR = {FP32.name: vec.SAME_FP32, FP16.name: vec.SAME_FP16}


@dataclass(frozen=True)
class PreprocConfig:
    tgc_gain_db: float = 0.0
    tgc_slope_db: float = 0.02         # dB per sample
    center_bin: float = 64.0
    sigma_frac: float = 0.15           # kernel sigma as a fraction of N
    log_epsilon: float = 1e-3
    working_format: str = "fp32"

    def __post_init__(self):
        if not (np.isfinite(self.tgc_gain_db) and np.isfinite(self.tgc_slope_db)):
            raise ValueError("TGC gain curve must be finite")
        if not self.log_epsilon > 0:
            raise ValueError("log compression epsilon must be positive")
        if not self.sigma_frac > 0:
            raise ValueError("kernel width must be positive")
        if get_format(self.working_format) not in (FP16, FP32):
            raise ValueError("preprocessing runs in fp16 or fp32")

    @property
    def fmt(self) -> FloatFormat:
        return get_format(self.working_format)

    @property
    def width(self) -> str:
        return _WIDTH[self.fmt.name]


DEFAULT_PREPROC = PreprocConfig()


def tgc_gain(cfg: PreprocConfig, n: int = SAMPLES) -> np.ndarray:
    i = np.arange(n, dtype=np.float64)
    return quantize(10.0 ** ((cfg.tgc_gain_db + cfg.tgc_slope_db * i) / 20.0), cfg.fmt)


def gaussian_kernel(cfg: PreprocConfig, n: int = SAMPLES) -> np.ndarray:
    """Real kernel over DFT bins, symmetric across conjugate bins."""
    k = np.arange(n)
    fold = np.minimum(k, n - k).astype(np.float64)
    sigma = cfg.sigma_frac * n
    g = quantize(np.exp(-((fold - cfg.center_bin) ** 2) / (2 * sigma ** 2)), cfg.fmt)
    return g


def hilbert_mask(n: int = SAMPLES) -> np.ndarray:
    h = np.zeros(n)
    h[0] = 1.0
    h[1:n // 2] = 2.0
    h[n // 2] = 1.0
    return h


def _fft_stage(x, cfg: PreprocConfig, direction: str, stage: StageTrace) -> np.ndarray:
    job = FftJob(x.shape[-1], cfg.width, x, direction)
    res = fft(job)
    stage.add(res.trace, x.shape[0])
    if direction == INVERSE:
        stage.add(vector_op("ifft_scale", x.size, cfg.fmt, ops=2, flops=2))
    return res.output


def _cmul_real(x, g, fmt) -> np.ndarray:
    return vec.fp_mul(x.real, g, fmt) + 1j * vec.fp_mul(x.imag, g, fmt)


def tgc(frame: EchoFrame, cfg: PreprocConfig = DEFAULT_PREPROC):
    stage = StageTrace("tgc")
    x = quantize(frame.data, cfg.fmt)
    out = vec.fp_mul(x, tgc_gain(cfg, x.shape[-1])[None, :], cfg.fmt)
    stage.add(vector_op("tgc_mul", x.size, cfg.fmt))
    return frame.with_data(out, cfg.fmt), stage


def gaussian_filter(frame: EchoFrame, cfg: PreprocConfig = DEFAULT_PREPROC, kernel=None):
    """Returns ``(filtered frame, filtered spectrum, StageTrace)``."""
    stage = StageTrace("gaussian_filter")
    x = quantize(frame.data, cfg.fmt)
    g = gaussian_kernel(cfg, x.shape[-1]) if kernel is None else quantize(
        np.broadcast_to(np.asarray(kernel, dtype=np.float64), (x.shape[-1],)), cfg.fmt)
    spec = _fft_stage(x, cfg, FORWARD, stage)
    spec = _cmul_real(spec, g[None, :], cfg.fmt)
    stage.add(vector_op("kernel_mul", spec.size, cfg.fmt, ops=2, flops=2))
    filtered = _fft_stage(spec, cfg, INVERSE, stage).real
    return frame.with_data(filtered, cfg.fmt), spec, stage


def hilbert_envelope(spectrum, cfg: PreprocConfig = DEFAULT_PREPROC):
    """Envelope of the analytic signal built from a (filtered) spectrum."""
    stage = StageTrace("hilbert_envelope")
    spectrum = np.atleast_2d(np.asarray(spectrum, dtype=np.complex128))
    n = spectrum.shape[-1]
    analytic_spec = _cmul_real(spectrum, hilbert_mask(n)[None, :], cfg.fmt)
    stage.add(vector_op("phase_shift", spectrum.size, cfg.fmt, ops=2, flops=2))
    z = _fft_stage(analytic_spec, cfg, INVERSE, stage)
    power, _ = vec.do_sdotp(z.real, z.real, z.imag, z.imag, 0.0, 0, _PAIR[cfg.fmt.name])
    env = vec.fp_sqrt(power, cfg.fmt)
    stage.add(vector_op("magnitude", z.size, cfg.fmt, ops=2, flops=4))
    return env, stage


def log_compress(envelope, epsilon: float | None = None, cfg: PreprocConfig = DEFAULT_PREPROC):
    """``log(1 + env/eps)`` scaled by the frame maximum into [0, 1]."""
    stage = StageTrace("log_compress")
    fmt = cfg.fmt
    eps = cfg.log_epsilon if epsilon is None else epsilon
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    env = np.asarray(envelope, dtype=np.float64)
    if np.any(env < 0):
        raise ValueError("envelope must be non-negative")
    ratio = vec.fp_div(env, quantize(np.float64(eps), fmt), fmt)
    logs = quantize(np.log1p(ratio), fmt)
    peak = logs.max()
    out = vec.fp_div(logs, peak, fmt) if peak > 0 else np.zeros_like(logs)
    stage.add(vector_op("log", env.size, fmt, ops=3, flops=3))
    stage.add(vector_op("frame_max", env.size, fmt, ops=1, flops=1))
    return out, stage


def preprocess(frame: EchoFrame, cfg: PreprocConfig = DEFAULT_PREPROC):
    """Full chain. Returns ``(image, intermediates, stages)``."""
    amplified, s1 = tgc(frame, cfg)
    filtered, spec, s2 = gaussian_filter(amplified, cfg)
    env, s3 = hilbert_envelope(spec, cfg)
    image, s4 = log_compress(env, cfg=cfg)
    inter = {"tgc": amplified.data, "filtered": filtered.data, "spectrum": spec,
             "envelope": env, "compressed": image}
    return image, inter, [s1, s2, s3, s4]
