"""Echo frames and the deterministic synthetic A-mode source."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..mpfloat import FP16, FP32, FloatFormat, get_format, quantize

CHANNELS = 8
SAMPLES = 512
FRAME_RATE_HZ = 39.0


@dataclass
class EchoFrame:
    data: np.ndarray
    fmt: FloatFormat = FP32
    frame_rate: float = FRAME_RATE_HZ

    def __post_init__(self):
        self.fmt = get_format(self.fmt)
        if self.fmt not in (FP16, FP32):
            raise ValueError("echo frames are FP16 or FP32")
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (CHANNELS, SAMPLES):
            raise ValueError(f"frame must be {CHANNELS}x{SAMPLES}, got {self.data.shape}")
        q = quantize(self.data, self.fmt)
        if not np.array_equal(q, self.data):
            raise ValueError(f"frame values are not exact {self.fmt.name} values")

    @classmethod
    def from_values(cls, values, fmt=FP32, frame_rate: float = FRAME_RATE_HZ) -> "EchoFrame":
        fmt = get_format(fmt)
        return cls(quantize(np.asarray(values, dtype=np.float64), fmt), fmt, frame_rate)

    def with_data(self, data, fmt=None) -> "EchoFrame":
        return EchoFrame.from_values(data, fmt or self.fmt, self.frame_rate)


@dataclass(frozen=True)
class Scenario:
    """Reflector layout for :func:`synthesize_echo`.

    ``reflectors`` holds ``(depth_sample, amplitude)`` pairs; channel ``c``
    sees every reflector shifted by ``c * channel_shift`` samples.
    ``center_bin`` sets the carrier frequency in DFT-bin units of a
    512-point frame.
    """

    reflectors: tuple[tuple[float, float], ...] = ((96.0, 1.0), (224.0, 0.8), (352.0, 0.6))
    channel_shift: float = 3.0
    center_bin: float = 64.0
    burst_sigma: float = 6.0
    attenuation_db_per_sample: float = 0.02
    noise_std: float = 0.01
    amplitude: float = 1.0

    def depths(self, channel: int) -> list[float]:
        return [d + channel * self.channel_shift for d, _ in self.reflectors]

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        d = dict(d)
        if "reflectors" in d:
            d["reflectors"] = tuple((float(a), float(b)) for a, b in d["reflectors"])
        return cls(**d)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["reflectors"] = [list(r) for r in self.reflectors]
        return d


DEFAULT_SCENARIO = Scenario()
SILENT_SCENARIO = Scenario(amplitude=0.0, noise_std=0.0)


def synthesize_echo(seed: int, scenario: Scenario = DEFAULT_SCENARIO, fmt=FP32) -> EchoFrame:
    """Gaussian-windowed tone bursts with depth attenuation plus seeded noise."""
    rng = np.random.default_rng(seed)
    t = np.arange(SAMPLES, dtype=np.float64)
    w0 = 2 * np.pi * scenario.center_bin / SAMPLES
    atten = 10.0 ** (-scenario.attenuation_db_per_sample * t / 20.0)
    data = np.zeros((CHANNELS, SAMPLES))
    for c in range(CHANNELS):
        phase = rng.uniform(0, 2 * np.pi, len(scenario.reflectors))
        for (depth, amp), ph in zip(zip(scenario.depths(c), (a for _, a in scenario.reflectors)), phase):
            window = np.exp(-0.5 * ((t - depth) / scenario.burst_sigma) ** 2)
            data[c] += amp * window * np.cos(w0 * (t - depth) + ph)
        data[c] *= atten
    data = scenario.amplitude * (data + scenario.noise_std * rng.standard_normal(data.shape))
    if scenario.amplitude == 0:
        data = np.zeros_like(data)
    return EchoFrame.from_values(data, fmt)
