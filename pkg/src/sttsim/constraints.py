"""Performance-constraint kinds, their deadline rules and feature sets."""

from __future__ import annotations

import math
from dataclasses import dataclass

NO_CONSTRAINT = "none"
SLACK20 = "slack20"
SLACK10 = "slack10"
BEST_PERF = "best-perf"

KINDS = (NO_CONSTRAINT, SLACK20, SLACK10, BEST_PERF)

_SLACK = {
    NO_CONSTRAINT: math.inf,
    SLACK20: 0.20,
    SLACK10: 0.10,
    BEST_PERF: 0.0,
}

# Which profiled counters each constraint's prediction model consumes.
FEATURE_SETS = {
    NO_CONSTRAINT: ("l1d_hits", "l1d_read_misses", "l1d_total_misses",
                    "l1i_total_misses", "mem_bus_util_read"),
    BEST_PERF: ("l1d_read_misses", "mem_idle_time", "mem_read_hits"),
    SLACK10: ("l1d_read_misses", "mem_idle_time", "mem_read_hits"),
    SLACK20: ("l1d_hits", "l1d_read_accesses", "l1d_read_misses",
              "mem_idle_time", "mem_bus_util_write"),
}


@dataclass(frozen=True)
class Constraint:
    kind: str

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}; "
                             f"expected one of {KINDS}")

    @property
    def slack(self) -> float:
        return _SLACK[self.kind]

    @property
    def bounded(self) -> bool:
        return self.kind != NO_CONSTRAINT

    def deadline(self, best_latency_s: float) -> float:
        """Latency bound: best achievable latency relaxed by the slack."""
        if not self.bounded:
            return math.inf
        return best_latency_s * (1.0 + self.slack)

    @property
    def feature_names(self) -> tuple[str, ...]:
        return FEATURE_SETS[self.kind]
