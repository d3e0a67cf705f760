"""Throughput reports from engine traces, plus battery and energy identities.

Report schema (``SCHEMA_VERSION`` 1)::

    {"schema": "maestro-sim/perf", "version": 1,
     "frequency_hz": float,
     "engines": {name: {"cycles", "flops", "flop_per_cycle", "utilization",
                        "utilization_defined", "gflops_at_f", "jobs"}},
     "stages": {name: {"cycles", "flops"}},
     "speedups": {name: float}}

``utilization`` is null when a trace carries no work.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .fft import FftCycleTrace
from .vtu.gemm import GemmCycleTrace

SCHEMA = "maestro-sim/perf"
SCHEMA_VERSION = 1


class EmptyTraceSet(ValueError):
    pass


class NonPositivePower(ValueError):
    pass


@dataclass(frozen=True)
class OperatingPoint:
    frequency_hz: float
    voltage_v: float | None = None   # metadata only

    def __post_init__(self):
        if not self.frequency_hz > 0:
            raise ValueError("frequency must be positive")

    @classmethod
    def preset(cls, name: str) -> "OperatingPoint":
        try:
            return PRESETS[name.lower()]
        except KeyError:
            raise ValueError(f"unknown operating point {name!r}; presets: {sorted(PRESETS)}") from None


PRESETS = {
    "90mhz": OperatingPoint(90e6, 0.85),
    "210mhz": OperatingPoint(210e6, 1.2),
}


def _engine(trace) -> str:
    if isinstance(trace, FftCycleTrace):
        return "fft"
    if isinstance(trace, GemmCycleTrace):
        return trace.engine
    return getattr(trace, "engine", "vu")


def _peak_work(trace) -> tuple[int, int]:
    """(issued work units, peak units per cycle) used for utilization."""
    if isinstance(trace, GemmCycleTrace):
        return trace.fma_issued, trace.peak_fma_per_cycle
    if isinstance(trace, FftCycleTrace):
        from .fft.cycles import butterflies_per_cycle
        return trace.butterflies, butterflies_per_cycle(trace.width)
    return 0, 0


@dataclass
class EngineSummary:
    cycles: int = 0
    flops: int = 0
    work: int = 0
    peak_cycles: int = 0   # cycles x peak rate, summed
    jobs: int = 0

    def add(self, trace) -> None:
        self.cycles += trace.total_cycles
        self.flops += trace.flops
        work, peak = _peak_work(trace)
        self.work += work
        self.peak_cycles += trace.total_cycles * peak
        self.jobs += 1

    @property
    def flop_per_cycle(self) -> float:
        return self.flops / self.cycles if self.cycles else 0.0

    @property
    def utilization(self) -> float | None:
        if self.peak_cycles == 0 or self.work == 0:
            return None
        return self.work / self.peak_cycles

    def gflops(self, op: OperatingPoint) -> float:
        return self.flop_per_cycle * op.frequency_hz / 1e9

    def to_dict(self, op: OperatingPoint) -> dict:
        u = self.utilization
        return {"cycles": self.cycles, "flops": self.flops, "jobs": self.jobs,
                "flop_per_cycle": self.flop_per_cycle, "utilization": u,
                "utilization_defined": u is not None, "gflops_at_f": self.gflops(op)}


@dataclass
class PerfReport:
    op_point: OperatingPoint
    engines: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    speedups: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "version": SCHEMA_VERSION,
                "frequency_hz": self.op_point.frequency_hz,
                "engines": {k: v.to_dict(self.op_point) for k, v in sorted(self.engines.items())},
                "stages": self.stages, "speedups": self.speedups}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        f_mhz = self.op_point.frequency_hz / 1e6
        rows = [f"operating point: {f_mhz:g} MHz",
                f"{'engine':<8}{'jobs':>7}{'cycles':>12}{'flops':>14}{'flop/cyc':>10}"
                f"{'util':>8}{'GFLOPS':>9}"]
        for name, e in sorted(self.engines.items()):
            u = e.utilization
            rows.append(f"{name:<8}{e.jobs:>7}{e.cycles:>12}{e.flops:>14}{e.flop_per_cycle:>10.3f}"
                        f"{('n/a' if u is None else f'{u:.4f}'):>8}{e.gflops(self.op_point):>9.3f}")
        if self.stages:
            rows.append("")
            rows.append(f"{'stage':<18}{'cycles':>12}{'flops':>14}")
            for name, s in self.stages.items():
                rows.append(f"{name:<18}{s['cycles']:>12}{s['flops']:>14}")
        for name, v in self.speedups.items():
            rows.append(f"speedup {name}: {v:.3f}x")
        return "\n".join(rows) + "\n"


def report(traces, op_point: OperatingPoint = PRESETS["210mhz"], stages=None,
           baselines: dict | None = None) -> PerfReport:
    """Aggregate traces per engine.

    ``stages`` is an optional list of StageTrace objects whose traces are
    included. ``baselines`` maps a label to ``(baseline_cycles, cycles)``
    and yields ``baseline_cycles / cycles`` speedups.
    """
    traces = list(traces)
    stages = list(stages or [])
    for s in stages:
        traces.extend(s.traces)
    if not traces:
        raise EmptyTraceSet("no traces to report on")
    rep = PerfReport(op_point)
    for t in traces:
        rep.engines.setdefault(_engine(t), EngineSummary()).add(t)
    for s in stages:
        agg = rep.stages.setdefault(s.name, {"cycles": 0, "flops": 0})
        agg["cycles"] += s.cycles
        agg["flops"] += s.flops
    for label, (base, cyc) in (baselines or {}).items():
        rep.speedups[label] = base / cyc
    return rep


def peak_gflops(fma_per_cycle: float, utilization: float, op: OperatingPoint) -> float:
    """GEMM peak law: 2 flops per FMA."""
    return 2.0 * fma_per_cycle * utilization * op.frequency_hz / 1e9


def fft_gflops(butterflies: int, cycles: int, op: OperatingPoint) -> float:
    return 10.0 * butterflies / cycles * op.frequency_hz / 1e9


@dataclass(frozen=True)
class BatteryModel:
    capacity_mah: float = 320.0
    voltage_v: float = 3.7
    avg_power_mw: float = 12.0
    efficiency: float = 0.95   # calibration constant

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        if not (self.capacity_mah > 0 and self.voltage_v > 0):
            raise ValueError("capacity and voltage must be positive")

    @property
    def energy_mwh(self) -> float:
        return self.capacity_mah * self.voltage_v


def battery_lifetime(model: BatteryModel) -> float:
    """Hours of operation: capacity x voltage x efficiency / power."""
    if not model.avg_power_mw > 0:
        raise NonPositivePower(f"average power must be positive, got {model.avg_power_mw} mW")
    return model.energy_mwh * model.efficiency / model.avg_power_mw


def energy_per_frame(avg_power_mw: float, frame_latency_s: float) -> float:
    """mJ spent at ``avg_power_mw`` over ``frame_latency_s``."""
    if avg_power_mw < 0 or frame_latency_s < 0:
        raise ValueError("power and latency must be non-negative")
    return avg_power_mw * frame_latency_s


def energy_interpretations(avg_power_mw: float, frame_rate_hz: float, latency_s: float) -> dict:
    """Energy under both integration windows: per frame period and per inference."""
    return {"per_frame_period_mj": energy_per_frame(avg_power_mw, 1.0 / frame_rate_hz),
            "per_inference_mj": energy_per_frame(avg_power_mw, latency_s)}
