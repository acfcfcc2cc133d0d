"""Memory-access trace parsing, serialization and synthetic generation.

Trace files are plain text, one access per line:

    <gap> <R|W> <0xaddress>

where `gap` is the number of non-memory instructions executed before the
access. Lines starting with `#` are comments; the generator writes its
parameters into a header comment. Round-trips are bit-exact at the event
level.
"""

from __future__ import annotations

import heapq
import io
import random
from dataclasses import dataclass, field
from typing import Iterable, TextIO

READ = "R"
WRITE = "W"


@dataclass(frozen=True)
class TraceEvent:
    gap: int
    op: str  # READ | WRITE
    addr: int
    line_no: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.gap < 0:
            raise ValueError(f"gap must be >= 0, got {self.gap}")
        if self.op not in (READ, WRITE):
            raise ValueError(f"op must be R or W, got {self.op!r}")
        if self.addr < 0:
            raise ValueError("address must be non-negative")


@dataclass(frozen=True)
class Trace:
    events: tuple[TraceEvent, ...]
    name: str = "trace"

    @property
    def instructions(self) -> int:
        """Total instruction count: every access plus its preceding gap."""
        return sum(e.gap + 1 for e in self.events)

    def __len__(self):
        return len(self.events)


class TraceParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def parse_trace(stream: TextIO | str, name: str = "trace") -> Trace:
    """Parse a trace file; malformed lines raise with their line number."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    events = []
    for line_no, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise TraceParseError(line_no, f"expected 'gap op addr', got {line!r}")
        gap_s, op, addr_s = parts
        if not gap_s.isdigit():
            raise TraceParseError(line_no, f"gap must be a decimal count, got {gap_s!r}")
        if op not in (READ, WRITE):
            raise TraceParseError(line_no, f"op must be R or W, got {op!r}")
        if not addr_s.lower().startswith("0x"):
            raise TraceParseError(line_no, f"address must be 0x-hex, got {addr_s!r}")
        try:
            addr = int(addr_s, 16)
        except ValueError:
            raise TraceParseError(line_no, f"bad hex address {addr_s!r}") from None
        events.append(TraceEvent(int(gap_s), op, addr, line_no=line_no))
    return Trace(tuple(events), name=name)


def serialize_trace(trace: Trace, header: Iterable[str] = ()) -> str:
    """Canonical text form; `header` lines are emitted as leading comments."""
    lines = [f"# {h}" for h in header]
    lines.extend(f"{e.gap} {e.op} 0x{e.addr:x}" for e in trace.events)
    return "\n".join(lines) + "\n"


def write_trace(trace: Trace, path, header: Iterable[str] = ()) -> None:
    with open(path, "w") as fh:
        fh.write(serialize_trace(trace, header))


def load_trace(path) -> Trace:
    with open(path) as fh:
        return parse_trace(fh, name=str(path))


@dataclass(frozen=True)
class UniformGaps:
    """Per-block reuse gaps drawn uniformly from [low, high] instructions."""

    low: int
    high: int

    def __post_init__(self):
        if not 0 < self.low <= self.high:
            raise ValueError(f"need 0 < low <= high, got [{self.low}, {self.high}]")

    @property
    def mean(self) -> float:
        return (self.low + self.high) / 2

    def sample(self, rng: random.Random) -> int:
        return rng.randint(self.low, self.high)

    def describe(self) -> str:
        return f"uniform low={self.low} high={self.high}"


@dataclass(frozen=True)
class BimodalGaps:
    """Short/long reuse-gap mixture: short mode with weight `short_weight`."""

    short_low: int
    short_high: int
    long_low: int
    long_high: int
    short_weight: float = 0.2

    def __post_init__(self):
        if not 0 < self.short_low <= self.short_high <= self.long_low <= self.long_high:
            raise ValueError("modes must satisfy 0 < short <= long")
        if not 0.0 <= self.short_weight <= 1.0:
            raise ValueError("short_weight must be in [0, 1]")

    @property
    def mean(self) -> float:
        short = (self.short_low + self.short_high) / 2
        long = (self.long_low + self.long_high) / 2
        return self.short_weight * short + (1 - self.short_weight) * long

    def sample(self, rng: random.Random) -> int:
        if rng.random() < self.short_weight:
            return rng.randint(self.short_low, self.short_high)
        return rng.randint(self.long_low, self.long_high)

    def describe(self) -> str:
        return (f"bimodal short=[{self.short_low},{self.short_high}] "
                f"long=[{self.long_low},{self.long_high}] w={self.short_weight}")


@dataclass(frozen=True)
class SynthParams:
    """Knobs for the synthetic workload generator.

    Reuse gaps are measured in instructions, so the same trace exercises
    different expiry behavior at different clock frequencies. The realized
    memory-op fraction follows working_set_blocks / mean reuse gap; use
    `for_rate` to derive a consistent working-set size from a target rate.
    """

    working_set_blocks: int
    reuse_gaps: UniformGaps | BimodalGaps
    write_fraction: float
    memory_op_fraction: float
    total_instructions: int
    seed: int
    line_bytes: int = 64
    base_addr: int = 0x10000

    def __post_init__(self):
        if self.working_set_blocks < 1:
            raise ValueError("working set needs at least one block")
        if not 0.0 <= self.write_fraction <= 1.0:
            raise ValueError("write_fraction must be in [0, 1]")
        if not 0.0 < self.memory_op_fraction <= 1.0:
            raise ValueError("memory_op_fraction must be in (0, 1]")
        if self.total_instructions < 1:
            raise ValueError("total_instructions must be >= 1")

    @classmethod
    def for_rate(cls, reuse_gaps, memory_op_fraction, write_fraction,
                 total_instructions, seed, **kw) -> "SynthParams":
        """Size the working set so the access rate matches the reuse gaps."""
        blocks = max(1, round(memory_op_fraction * reuse_gaps.mean))
        return cls(working_set_blocks=blocks, reuse_gaps=reuse_gaps,
                   write_fraction=write_fraction,
                   memory_op_fraction=memory_op_fraction,
                   total_instructions=total_instructions, seed=seed, **kw)

    def describe(self) -> list[str]:
        return [
            f"synth seed={self.seed} blocks={self.working_set_blocks} "
            f"total={self.total_instructions}",
            f"synth gaps: {self.reuse_gaps.describe()}",
            f"synth write_fraction={self.write_fraction} "
            f"memory_op_fraction={self.memory_op_fraction}",
        ]


def gen_synthetic(params: SynthParams, name: str | None = None) -> Trace:
    """Generate a trace whose per-block reuse gaps follow the configured
    distribution.

    Each block is an independent renewal process over virtual instruction
    time; accesses are emitted in time order, so realized per-block gaps
    equal the drawn values up to same-instruction collisions. Addresses
    stride by the line size so every block occupies its own cache line.
    """
    rng = random.Random(params.seed)
    blocks = params.working_set_blocks
    total = params.total_instructions

    # Stagger first touches across one mean gap so accesses don't arrive in
    # a single burst at t=0.
    heap: list[tuple[int, int]] = []
    spread = max(1, int(params.reuse_gaps.mean))
    for b in range(blocks):
        first = 1 + rng.randrange(spread)
        heap.append((first, b))
    heapq.heapify(heap)

    events = []
    cursor = 0  # instructions emitted so far
    while heap:
        due, b = heapq.heappop(heap)
        at = max(due, cursor + 1)  # serialize same-instruction collisions
        if at > total:
            break
        op = WRITE if rng.random() < params.write_fraction else READ
        addr = params.base_addr + b * params.line_bytes
        events.append(TraceEvent(at - cursor - 1, op, addr))
        cursor = at
        heapq.heappush(heap, (at + params.reuse_gaps.sample(rng), b))

    if not events:
        raise ValueError("parameters produced an empty trace; "
                         "total_instructions is shorter than the first reuse gap")
    # Pin the final access to the last instruction so the trace length is
    # exactly total_instructions.
    last = events[-1]
    slack = total - cursor
    if slack:
        events[-1] = TraceEvent(last.gap + slack, last.op, last.addr)
    return Trace(tuple(events), name=name or f"synth-{params.seed}")


def concat_traces(*traces: Trace, name: str | None = None) -> Trace:
    """Join traces back to back; later segments keep their gap structure, so
    a phase change is simply two generated traces concatenated."""
    events = []
    for t in traces:
        events.extend(t.events)
    if not events:
        raise ValueError("nothing to concatenate")
    return Trace(tuple(events), name=name or traces[0].name)


@dataclass(frozen=True)
class TraceStats:
    events: int
    reads: int
    writes: int
    instructions: int
    unique_blocks: int
    gap_histogram: dict

    @property
    def write_fraction(self) -> float:
        return self.writes / self.events if self.events else 0.0

    @property
    def memory_op_fraction(self) -> float:
        return self.events / self.instructions if self.instructions else 0.0


def trace_stats(trace: Trace, line_bytes: int = 64) -> TraceStats:
    """Exact summary counts; the gap histogram buckets by powers of two."""
    reads = sum(1 for e in trace.events if e.op == READ)
    blocks = {e.addr // line_bytes for e in trace.events}
    hist: dict[int, int] = {}
    for e in trace.events:
        bucket = 0 if e.gap == 0 else 1 << (e.gap.bit_length() - 1)
        hist[bucket] = hist.get(bucket, 0) + 1
    return TraceStats(
        events=len(trace.events),
        reads=reads,
        writes=len(trace.events) - reads,
        instructions=trace.instructions,
        unique_blocks=len(blocks),
        gap_histogram=dict(sorted(hist.items())),
    )
