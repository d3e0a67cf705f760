"""First-order cycle model of the FFT accelerator.

Rules:

* non-final stages issue one C64 or two C32 butterflies per cycle (the C64
  engine is split into two C32 engines);
* the final stage writes bit-reversed samples, at most two per cycle, so a
  C64 stage keeps full rate while a C32 stage drops to half;
* a stage takes at least two cycles, since left and right wings are
  fetched on consecutive cycles;
* a fixed configure/fill/drain overhead is added once per job.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .twiddle import C32, normalize_width

DEFAULT_OVERHEAD_CYCLES = 16
FLOPS_PER_BUTTERFLY = 10  # 4 mul + 6 add/sub
FINAL_STAGE_WRITES_PER_CYCLE = 2
MIN_STAGE_CYCLES = 2


@dataclass
class FftCycleTrace:
    points: int
    width: str
    butterflies_per_stage: list[int] = field(default_factory=list)
    cycles_per_stage: list[int] = field(default_factory=list)
    stall_cycles: int = 0
    overhead_cycles: int = DEFAULT_OVERHEAD_CYCLES

    @property
    def butterflies(self) -> int:
        return sum(self.butterflies_per_stage)

    @property
    def total_cycles(self) -> int:
        return sum(self.cycles_per_stage) + self.overhead_cycles

    @property
    def flops(self) -> int:
        return FLOPS_PER_BUTTERFLY * self.butterflies

    @property
    def flop_per_cycle(self) -> float:
        return self.flops / self.total_cycles

    def to_dict(self) -> dict:
        d = asdict(self)
        d.update(butterflies=self.butterflies, total_cycles=self.total_cycles,
                 flops=self.flops, flop_per_cycle=self.flop_per_cycle)
        return d


def butterflies_per_cycle(width: str) -> int:
    return 2 if normalize_width(width) == C32 else 1


def fft_cycle_model(job, overhead_cycles: int = DEFAULT_OVERHEAD_CYCLES) -> FftCycleTrace:
    """Cycle trace for an :class:`FftJob` (only ``points`` and ``width`` matter)."""
    from .engine import check_points

    check_points(job.points, job.width)
    n = job.points
    rate = butterflies_per_cycle(job.width)
    stages = n.bit_length() - 1
    per_stage = n // 2
    trace = FftCycleTrace(n, normalize_width(job.width), overhead_cycles=overhead_cycles)
    for s in range(stages):
        compute = -(-per_stage // rate)
        if s == stages - 1:
            write_rate = FINAL_STAGE_WRITES_PER_CYCLE // 2  # butterflies per cycle
            cycles = -(-per_stage // min(rate, write_rate))
            trace.stall_cycles = cycles - compute
        else:
            cycles = compute
        trace.butterflies_per_stage.append(per_stage)
        trace.cycles_per_stage.append(max(cycles, MIN_STAGE_CYCLES))
    return trace
