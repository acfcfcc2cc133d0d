"""Set-associative L1 data cache with per-block retention expiry.

Volatile blocks carry a k-state monitor counter ticking at retention/k from
their fill (or last write). When the counter reaches k-1 the block is written
back if dirty and invalidated, so no block's age ever reaches the full
retention time. A shadow copy with infinite retention replays the identical
access sequence and serves as the oracle that classifies misses: a miss is an
expiration miss exactly when the shadow still hits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .config import CoreSpec, MemTechnology, access_cycles

HIT = "hit"
MISS = "miss"
MISS_NONE = "none"
MISS_EXPIRATION = "expiration"
MISS_OTHER = "other"

READ = "R"
WRITE = "W"


class _Block:
    __slots__ = ("tag", "valid", "dirty", "fill_ns", "expiry_ns", "last_use",
                 "counter")

    def __init__(self):
        self.tag = -1
        self.valid = False
        self.dirty = False
        self.fill_ns = 0.0
        self.expiry_ns = math.inf
        self.last_use = 0
        self.counter = 0


@dataclass
class CacheStats:
    """Cumulative event counters; all are non-negative and monotone in a run."""

    read_hits: int = 0
    write_hits: int = 0
    read_misses: int = 0
    write_misses: int = 0
    expiration_misses: int = 0
    early_writebacks: int = 0
    writebacks: int = 0
    evictions: int = 0
    bus_read_requests: int = 0
    bus_write_requests: int = 0
    mem_busy_read_cycles: int = 0
    mem_busy_write_cycles: int = 0
    mem_idle_cycles: int = 0
    mem_read_hits: int = 0  # fills served by the next level
    shadow_misses: int = 0

    @property
    def hits(self) -> int:
        return self.read_hits + self.write_hits

    @property
    def misses(self) -> int:
        return self.read_misses + self.write_misses

    @property
    def accesses(self) -> int:
        return self.hits + self.misses

    @property
    def cache_reads(self) -> int:
        """Array read operations: every read access probes the data array."""
        return self.read_hits + self.read_misses

    @property
    def cache_writes(self) -> int:
        """Array write operations: fills, write hits and all write-backs."""
        return self.mem_read_hits + self.write_hits + self.writebacks + self.early_writebacks

    def copy(self) -> "CacheStats":
        return replace(self)

    def delta(self, start: "CacheStats") -> "CacheStats":
        """Element-wise difference since `start`; either operand unchanged."""
        if not isinstance(start, CacheStats):
            raise ValueError(f"snapshot must be CacheStats, got {type(start).__name__}")
        out = CacheStats()
        for f in fields(CacheStats):
            d = getattr(self, f.name) - getattr(start, f.name)
            if d < 0:
                raise ValueError(
                    f"snapshot mismatch: {f.name} would be negative ({d}); "
                    "the snapshot does not precede this state")
            setattr(out, f.name, d)
        return out

    def settle_idle(self, total_cycles: float) -> None:
        """Derive idle cycles from total minus bus-busy cycles.

        Kept monotone (never decreased) so window deltas stay non-negative
        even when write-back bursts momentarily outrun the cycle count.
        """
        busy = self.mem_busy_read_cycles + self.mem_busy_write_cycles
        self.mem_idle_cycles = max(self.mem_idle_cycles,
                                   int(max(0, total_cycles - busy)))


def snapshot_stats(state_or_stats, window_start: CacheStats) -> CacheStats:
    """Window delta since a previously captured snapshot; accepts either a
    CacheState or its stats object."""
    current = getattr(state_or_stats, "stats", state_or_stats)
    return current.delta(window_start)


@dataclass(frozen=True)
class AccessOutcome:
    kind: str  # HIT | MISS
    miss_class: str  # MISS_NONE | MISS_EXPIRATION | MISS_OTHER
    stall_cycles: int
    writeback_issued: bool


@dataclass(frozen=True)
class ExpiredBlock:
    set_index: int
    way: int
    tag: int
    age_ns: float
    was_dirty: bool


class CacheState:
    """One core's L1 data cache plus its infinite-retention shadow.

    Single-owner: exactly one simulation engine may mutate a CacheState;
    distinct instances are independent.
    """

    def __init__(self, core: CoreSpec, freq_ghz: float | None = None,
                 tech: MemTechnology | None = None):
        self.core = core
        self.tech = tech if tech is not None else core.data_tech
        self.geometry = core.geometry
        self.freq_ghz = freq_ghz if freq_ghz is not None else core.operating_freq_ghz

        geo = self.geometry
        self._line_shift = geo.line_bytes.bit_length() - 1
        self._set_mask = geo.sets - 1
        self._sets = [[_Block() for _ in range(geo.ways)] for _ in range(geo.sets)]
        self.volatile = self.tech.is_volatile
        # Shadow only exists for volatile techs; with infinite retention the
        # primary is its own oracle and expiration misses are zero.
        self._shadow = ([[_Block() for _ in range(geo.ways)] for _ in range(geo.sets)]
                        if self.volatile else None)

        k = core.counter_states_k
        self.counter_states_k = k
        if self.volatile:
            retention_ns = self.tech.retention_time * 1e9
            self._tick_ns = retention_ns / k
            self.lifetime_ns = self._tick_ns * (k - 1)
        else:
            self._tick_ns = math.inf
            self.lifetime_ns = math.inf

        self.read_cycles = access_cycles(self.freq_ghz, self.tech.hit_latency_ns)
        self.write_cycles = access_cycles(self.freq_ghz, self.tech.write_latency_ns)
        self.penalty_cycles = access_cycles(self.freq_ghz, core.miss_penalty_ns)

        self.stats = CacheStats()
        self._seq = 0
        self._last_now_ns = 0.0

    # -- retention ---------------------------------------------------------

    def advance_retention(self, now_ns: float) -> list[ExpiredBlock]:
        """Advance every monitor counter to `now_ns`, expiring stale blocks.

        Counters equal floor(age / (retention/k)) capped at k-1; a block
        reaching k-1 is written back if dirty and invalidated, always at age
        lifetime_ns = (k-1)/k x retention.
        """
        if now_ns < self._last_now_ns:
            raise ValueError(
                f"time ran backwards: {now_ns} ns < {self._last_now_ns} ns")
        self._last_now_ns = now_ns
        if not self.volatile:
            return []
        expired = []
        tick = self._tick_ns
        lifetime = self.lifetime_ns
        for si, blocks in enumerate(self._sets):
            for wi, b in enumerate(blocks):
                if not b.valid:
                    continue
                age = now_ns - b.fill_ns
                # Reaching state k-1 and reaching age (k-1)*tick are the same
                # event; the age comparison is the float-robust form.
                if age >= lifetime:
                    expired.append(ExpiredBlock(si, wi, b.tag, lifetime, b.dirty))
                    self._expire(b)
                else:
                    b.counter = int(age / tick)
        return expired

    def _expire(self, b: _Block) -> None:
        if b.dirty:
            st = self.stats
            st.early_writebacks += 1
            st.bus_write_requests += 1
            st.mem_busy_write_cycles += self.penalty_cycles
        b.valid = False
        b.dirty = False
        b.counter = 0
        b.tag = -1
        b.expiry_ns = math.inf

    # -- access ------------------------------------------------------------

    def access(self, addr: int, op: str, now_ns: float) -> AccessOutcome:
        if op not in (READ, WRITE):
            raise ValueError(f"op must be R or W, got {op!r}")
        kind, miss_class, stall, wb = self._access(addr, op == WRITE, now_ns)
        return AccessOutcome(kind, miss_class, stall, wb)

    def _access(self, addr: int, is_write: bool, now_ns: float):
        """Hot path shared by the public API and the engine."""
        if now_ns < self._last_now_ns:
            raise ValueError(
                f"time ran backwards: {now_ns} ns < {self._last_now_ns} ns")
        self._last_now_ns = now_ns
        st = self.stats
        tag = addr >> self._line_shift
        blocks = self._sets[tag & self._set_mask]
        self._seq += 1
        seq = self._seq

        # Settle this set's counters first: an access never sees a block
        # whose lifetime has already elapsed.
        if self.volatile:
            for b in blocks:
                if b.valid and now_ns >= b.expiry_ns:
                    self._expire(b)
            shadow_hit = self._shadow_access(tag, seq)
        else:
            shadow_hit = False

        hit = None
        for b in blocks:
            if b.valid and b.tag == tag:
                hit = b
                break

        if hit is not None:
            hit.last_use = seq
            if is_write:
                st.write_hits += 1
                # An array write fully restores the cell, so retention restarts.
                hit.dirty = True
                hit.fill_ns = now_ns
                hit.expiry_ns = now_ns + self.lifetime_ns
                hit.counter = 0
                return (HIT, MISS_NONE, self.write_cycles, False)
            st.read_hits += 1
            return (HIT, MISS_NONE, self.read_cycles, False)

        # Miss: classify against the shadow, then allocate.
        if is_write:
            st.write_misses += 1
            stall = self.write_cycles + self.penalty_cycles
        else:
            st.read_misses += 1
            stall = self.read_cycles + self.penalty_cycles
        if shadow_hit:
            st.expiration_misses += 1
            miss_class = MISS_EXPIRATION
        else:
            miss_class = MISS_OTHER
            if not self.volatile:
                # With infinite retention the primary is its own shadow.
                st.shadow_misses += 1

        victim = None
        for b in blocks:
            if not b.valid:
                victim = b
                break
        if victim is None:
            victim = blocks[0]
            for b in blocks:
                if b.last_use < victim.last_use:
                    victim = b
            st.evictions += 1

        wb = victim.valid and victim.dirty
        if wb:
            st.writebacks += 1
            st.bus_write_requests += 1
            st.mem_busy_write_cycles += self.penalty_cycles

        st.mem_read_hits += 1
        st.bus_read_requests += 1
        st.mem_busy_read_cycles += self.penalty_cycles

        victim.tag = tag
        victim.valid = True
        victim.dirty = is_write
        victim.fill_ns = now_ns
        victim.expiry_ns = now_ns + self.lifetime_ns
        victim.last_use = seq
        victim.counter = 0
        return (MISS, miss_class, stall, wb)

    def _shadow_access(self, tag: int, seq: int) -> bool:
        """Replay the access on the infinite-retention copy; True on hit."""
        blocks = self._shadow[tag & self._set_mask]
        for b in blocks:
            if b.valid and b.tag == tag:
                b.last_use = seq
                return True
        self.stats.shadow_misses += 1
        victim = None
        for b in blocks:
            if not b.valid:
                victim = b
                break
        if victim is None:
            victim = blocks[0]
            for b in blocks:
                if b.last_use < victim.last_use:
                    victim = b
        victim.tag = tag
        victim.valid = True
        victim.last_use = seq
        return False

    # -- inspection --------------------------------------------------------

    def snapshot(self) -> CacheStats:
        return self.stats.copy()

    def valid_blocks(self) -> list[tuple[int, int, int]]:
        """(set, way, tag) for every currently valid block."""
        out = []
        for si, blocks in enumerate(self._sets):
            for wi, b in enumerate(blocks):
                if b.valid:
                    out.append((si, wi, b.tag))
        return out

    def block_counter(self, set_index: int, way: int) -> int:
        return self._sets[set_index][way].counter
