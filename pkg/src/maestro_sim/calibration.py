"""Error-threshold calibration.

A calibration run records the worst error of an ensemble against the FP64
oracle; thresholds are frozen at ``THRESHOLD_FACTOR`` times that maximum
and stored in ``calibration.json`` next to this module. Acceptance checks
run fresh ensembles (different seeds) against the frozen thresholds.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .fft import C32, C64, fft_forward, fft_inverse, quantize_complex

THRESHOLD_FACTOR = 2.0
CALIBRATION_FILE = Path(__file__).with_name("calibration.json")
FFT_CASES = ((C64, 512), (C32, 1024))
CALIBRATION_SEED = 20240
WUS_FRAMES = 16


def random_complex(rng: np.random.Generator, trials: int, points: int, width: str) -> np.ndarray:
    x = rng.uniform(-1, 1, (trials, points)) + 1j * rng.uniform(-1, 1, (trials, points))
    return quantize_complex(x, width)


def fft_errors(x: np.ndarray, width: str) -> tuple[np.ndarray, np.ndarray]:
    """Per-vector relative L2 errors: forward vs FP64 DFT, and round trip vs input."""
    y = fft_forward(x, width)
    ref = np.fft.fft(x, axis=-1)
    fwd = np.linalg.norm(y - ref, axis=-1) / np.linalg.norm(ref, axis=-1)
    back = fft_inverse(y, width)
    rt = np.linalg.norm(back - x, axis=-1) / np.linalg.norm(x, axis=-1)
    return fwd, rt


def calibrate_fft(trials: int = 1000, seed: int = CALIBRATION_SEED) -> dict:
    out = {}
    rng = np.random.default_rng(seed)
    for width, points in FFT_CASES:
        fwd, rt = fft_errors(random_complex(rng, trials, points, width), width)
        out[f"{width}_{points}"] = {"max_forward_rel_l2": float(fwd.max()),
                                    "max_roundtrip_rel_l2": float(rt.max()),
                                    "trials": trials}
    return out


def butterfly_error_study(count: int = 100_000, seed: int = CALIBRATION_SEED) -> dict:
    """Mean absolute error of fused vs unfused C32 butterflies against FP64.

    Inputs are random FP16 samples in [-1, 1) and twiddles drawn from the
    1024-point table. Both paths see identical operands.
    """
    from .fft import butterfly_r2, twiddle_table_build

    rng = np.random.default_rng(seed)
    left = random_complex(rng, 1, count, C32)[0]
    right = random_complex(rng, 1, count, C32)[0]
    tw = twiddle_table_build().twiddle(rng.integers(0, 512, count), C32)
    exact_top, exact_bot = left + tw * right, left - tw * right
    out = {"count": count, "seed": seed, "width": C32}
    for name, fused in (("fused", True), ("unfused", False)):
        top, bot = butterfly_r2(left, right, tw, C32, fused)
        err = np.concatenate([np.abs((top - exact_top).real), np.abs((top - exact_top).imag),
                              np.abs((bot - exact_bot).real), np.abs((bot - exact_bot).imag)])
        out[f"{name}_mean_abs_err"] = float(err.mean())
        out[f"{name}_max_abs_err"] = float(err.max())
    out["ratio_unfused_over_fused"] = out["unfused_mean_abs_err"] / out["fused_mean_abs_err"]
    return out


def calibrate_wus(frames: int = WUS_FRAMES, seed: int = CALIBRATION_SEED, model_seed: int = 0) -> dict:
    from .wus import oracle_errors, random_model, run_seed

    model = random_model(model_seed)
    worst: dict = {}
    for s in range(frames):
        errs = oracle_errors(run_seed(seed + s, model), model)
        errs.pop("argmax_match")
        for k, v in errs.items():
            worst[k] = max(worst.get(k, 0.0), v)
    return {"max_rel_l2": worst, "frames": frames, "model_seed": model_seed}


def run_calibration(path: Path = CALIBRATION_FILE, fft_trials: int = 1000,
                    wus_frames: int = WUS_FRAMES) -> dict:
    data = {"factor": THRESHOLD_FACTOR, "seed": CALIBRATION_SEED,
            "fft": calibrate_fft(fft_trials), "wus": calibrate_wus(wus_frames)}
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data


def load_calibration(path: Path = CALIBRATION_FILE) -> dict:
    return json.loads(Path(path).read_text())


def fft_thresholds(width: str, points: int, cal: dict | None = None) -> tuple[float, float]:
    """(forward, round-trip) relative-L2 limits for a calibrated case."""
    cal = cal or load_calibration()
    c = cal["fft"][f"{width.upper()}_{points}"]
    f = cal["factor"]
    return f * c["max_forward_rel_l2"], f * c["max_roundtrip_rel_l2"]


def wus_thresholds(cal: dict | None = None) -> dict:
    cal = cal or load_calibration()
    return {k: cal["factor"] * v for k, v in cal["wus"]["max_rel_l2"].items()}
