"""FP64 reference preprocessing (numpy FFT, no rounding to narrow formats)."""

from __future__ import annotations

import numpy as np

from .preproc import DEFAULT_PREPROC, PreprocConfig, hilbert_mask


def _kernel(cfg: PreprocConfig, n: int) -> np.ndarray:
    k = np.arange(n)
    fold = np.minimum(k, n - k).astype(np.float64)
    sigma = cfg.sigma_frac * n
    return np.exp(-((fold - cfg.center_bin) ** 2) / (2 * sigma ** 2))


def ref_tgc(x, cfg: PreprocConfig = DEFAULT_PREPROC) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    i = np.arange(x.shape[-1])
    return x * 10.0 ** ((cfg.tgc_gain_db + cfg.tgc_slope_db * i) / 20.0)


def ref_gaussian_filter(x, cfg: PreprocConfig = DEFAULT_PREPROC, kernel=None):
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    g = _kernel(cfg, n) if kernel is None else np.broadcast_to(np.asarray(kernel, float), (n,))
    spec = np.fft.fft(x, axis=-1) * g
    return np.fft.ifft(spec, axis=-1).real, spec


def ref_hilbert_envelope(spectrum) -> np.ndarray:
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    return np.abs(np.fft.ifft(spectrum * hilbert_mask(spectrum.shape[-1]), axis=-1))


def ref_log_compress(env, epsilon: float) -> np.ndarray:
    logs = np.log1p(np.asarray(env, dtype=np.float64) / epsilon)
    peak = logs.max()
    return logs / peak if peak > 0 else np.zeros_like(logs)


def ref_preprocess(x, cfg: PreprocConfig = DEFAULT_PREPROC) -> dict:
    amplified = ref_tgc(x, cfg)
    filtered, spec = ref_gaussian_filter(amplified, cfg)
    env = ref_hilbert_envelope(spec)
    return {"tgc": amplified, "filtered": filtered, "spectrum": spec, "envelope": env,
            "compressed": ref_log_compress(env, cfg.log_epsilon)}


def rel_l2(a, b) -> float:
    a = np.asarray(a)
    b = np.asarray(b)
    den = np.linalg.norm(b)
    num = np.linalg.norm(a - b)
    if den == 0:
        return 0.0 if num == 0 else float("inf")
    return float(num / den)
