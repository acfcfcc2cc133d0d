"""Runtime core selection: history table, profile/predict/verify loop and
multiprogrammed dispatch.

A new application is profiled on the profiling core, the constraint's model
predicts a core, and the choice is verified: deadline violations escalate to
faster cores, and a prediction that would cost more than the base-core path
falls back to it, so a committed decision never spends more than that
fallback. Decisions land in a bounded LRU history table; a repeat encounter
skips profiling and prediction entirely.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass

from .config import System, voltage_for_frequency
from .constraints import Constraint
from .engine import PowerModel, RunResult, exhaustive_sweep, simulate_run
from .features import profile_application
from .predictor import CorePredictor
from .trace import Trace

DEFAULT_PROFILING_INTERVAL = 3_000_000
DEFAULT_PREDICTION_TIME_S = 3.23e-6
DEFAULT_MIGRATION_TIME_S = 7.94e-6
DEFAULT_HISTORY_CAPACITY = 120


@dataclass(frozen=True)
class HistoryEntry:
    core: str
    freq_ghz: float
    constraint_kind: str


class HistoryTable:
    """Bounded app -> decision map with least-recently-used replacement.

    An entry only satisfies a lookup under the constraint it was stored
    with; a changed constraint forces re-profiling.
    """

    def __init__(self, capacity: int = DEFAULT_HISTORY_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._entries: OrderedDict[str, HistoryEntry] = OrderedDict()

    def __len__(self):
        return len(self._entries)

    def __contains__(self, app: str):
        return app in self._entries

    def lookup(self, app: str, constraint_kind: str) -> HistoryEntry | None:
        entry = self._entries.get(app)
        if entry is None or entry.constraint_kind != constraint_kind:
            return None
        self._entries.move_to_end(app)
        return entry

    def record(self, app: str, core: str, freq_ghz: float,
               constraint_kind: str) -> None:
        self._entries[app] = HistoryEntry(core, freq_ghz, constraint_kind)
        self._entries.move_to_end(app)
        while len(self._entries) > self.capacity:
            self._entries.popitem(last=False)

    def apps(self) -> list[str]:
        """Entries oldest-first (the first is next to be evicted)."""
        return list(self._entries)


@dataclass(frozen=True)
class ScheduleDecision:
    app: str
    constraint_kind: str
    core: str
    freq_ghz: float
    path: tuple[tuple[str, str], ...]
    ranking: tuple[str, ...]
    from_history: bool
    profiling_instructions: int
    profiling_time_s: float
    profiling_energy_j: float
    prediction_time_s: float
    prediction_energy_j: float
    migrations: int
    migration_time_s: float
    migration_energy_j: float
    energy_j: float  # committed path total, overheads included
    time_s: float  # committed path total, overheads included
    run_wall_time_s: float  # full run on the final (core, freq)
    base_energy_j: float  # the base-core fallback path's total
    deadline_s: float
    deadline_met: bool
    violation: bool  # no core could meet the deadline


@dataclass(frozen=True)
class AppPlacement:
    app: str
    cluster: int
    core: str
    freq_ghz: float
    start_s: float
    completion_s: float
    energy_j: float
    ranking: tuple[str, ...]
    decision: ScheduleDecision


@dataclass(frozen=True)
class WorkloadAssignment:
    placements: tuple[AppPlacement, ...]
    total_energy_j: float
    any_violation: bool


@dataclass
class _PathCost:
    """One candidate (core, freq) with its committed-path accounting."""

    core: str
    freq_ghz: float
    full_run: RunResult
    energy_j: float
    time_s: float
    migrations: int


class Scheduler:
    """Single decision-maker over one system; decisions are serialized and
    deterministic for a fixed app sequence."""

    def __init__(self, system: System, power: PowerModel,
                 models: dict[str, CorePredictor] | None = None,
                 history: HistoryTable | None = None,
                 profiling_interval: int = DEFAULT_PROFILING_INTERVAL,
                 prediction_time_s: float = DEFAULT_PREDICTION_TIME_S,
                 migration_time_s: float = DEFAULT_MIGRATION_TIME_S):
        self.system = system
        self.power = power
        self.models = models or {}
        self.history = history if history is not None else HistoryTable()
        self.profiling_interval = profiling_interval
        self.prediction_time_s = prediction_time_s
        self.migration_time_s = migration_time_s
        prof_core = system.core(system.profiling_core)
        self._overhead_power_w = power.static_power_w(
            voltage_for_frequency(prof_core.dvfs, prof_core.operating_freq_ghz))

    # -- deadlines -----------------------------------------------------------

    def deadline_for(self, trace: Trace, constraint: Constraint,
                     best_latency_s: float | None = None,
                     via_sweep: bool = False) -> float:
        """Deadline = best achievable latency relaxed by the slack.

        The best latency is taken from the caller, from a full sweep, or
        measured on the fastest core at its cap.
        """
        if not constraint.bounded:
            return math.inf
        if best_latency_s is None:
            if via_sweep:
                sweep = exhaustive_sweep(trace, self.system, self.power,
                                         Constraint("best-perf"))
                best_latency_s = min(r.wall_time_s for r in sweep.rows)
            else:
                fastest = self.system.core(self.system.speed_order()[0])
                run = simulate_run(trace, fastest, fastest.freq_cap_ghz, self.power)
                best_latency_s = run.wall_time_s
        return constraint.deadline(best_latency_s)

    # -- candidate evaluation ------------------------------------------------

    def _estimate_freq(self, trace: Trace, core, deadline_s: float,
                       interval: int) -> float | None:
        """Energy-best grid frequency by profiled-window estimates, honoring
        the deadline when one applies. None when no frequency looks feasible."""
        total = trace.instructions
        best = None
        for freq in core.dvfs.grid():
            est = simulate_run(trace, core, freq, self.power, limit=interval)
            if est.instructions == 0:
                continue
            scale = total / est.instructions
            est_time = est.wall_time_s * scale
            est_energy = est.total_energy_j * scale
            if est_time > deadline_s:
                continue
            key = (est_energy, est_time, freq)
            if best is None or key < best[0]:
                best = (key, freq)
        return best[1] if best else None

    def _path_cost(self, trace: Trace, core_label: str, freq_ghz: float,
                   prof_run: RunResult | None) -> _PathCost:
        """Committed-path accounting for finishing `trace` on a core.

        A fresh decision starts with the profiling window on the profiling
        core and resumes cold on the final core; prediction and migration
        overheads are charged as time plus profiling-core static power.
        """
        core = self.system.core(core_label)
        full = simulate_run(trace, core, freq_ghz, self.power)
        if prof_run is None:
            # History hit: the app starts directly on the stored core.
            return _PathCost(core_label, freq_ghz, full, full.total_energy_j,
                             full.wall_time_s, 0)
        migrations = 0 if core_label == self.system.profiling_core else 1
        pred_e = self.prediction_time_s * self._overhead_power_w
        migr_t = migrations * self.migration_time_s
        migr_e = migr_t * self._overhead_power_w
        if migrations == 0:
            # The run continues in place; the full run already covers the
            # profiled window with warm caches.
            energy = full.total_energy_j + pred_e
            time = full.wall_time_s + self.prediction_time_s
        else:
            rest = simulate_run(trace, core, freq_ghz, self.power,
                                start=prof_run.instructions)
            energy = (prof_run.total_energy_j + rest.total_energy_j
                      + pred_e + migr_e)
            time = (prof_run.wall_time_s + rest.wall_time_s
                    + self.prediction_time_s + migr_t)
        return _PathCost(core_label, freq_ghz, full, energy, time, migrations)

    def _evaluate(self, trace: Trace, core_label: str, deadline_s: float,
                  prof_run: RunResult | None, interval: int) -> _PathCost | None:
        """Pick a frequency for the core and verify the deadline on the full
        run. Window estimates choose the frequency, but a core is only
        declared infeasible once its cap misses the deadline on a verified
        full run."""
        core = self.system.core(core_label)
        freq = self._estimate_freq(trace, core, deadline_s, interval)
        if freq is not None:
            cost = self._path_cost(trace, core_label, freq, prof_run)
            if cost.full_run.wall_time_s <= deadline_s:
                return cost
        if freq != core.freq_cap_ghz:
            cost = self._path_cost(trace, core_label, core.freq_cap_ghz, prof_run)
            if cost.full_run.wall_time_s <= deadline_s:
                return cost
        return None

    # -- the main loop -------------------------------------------------------

    def run_application(self, trace: Trace, constraint: Constraint,
                        deadline_s: float | None = None) -> ScheduleDecision:
        """Decide where `trace` runs; see the module docstring for the flow."""
        model = self.models.get(constraint.kind)
        if model is None:
            raise ValueError(f"no trained model for constraint {constraint.kind!r}")
        app = trace.name

        entry = self.history.lookup(app, constraint.kind)
        if entry is not None:
            cost = self._path_cost(trace, entry.core, entry.freq_ghz, None)
            if deadline_s is None:
                deadline_s = math.inf
            return self._decision(
                app, constraint, cost, path=((entry.core, "history"),),
                ranking=(), from_history=True, prof_run=None,
                base_energy=math.inf, deadline_s=deadline_s,
                violation=False)

        interval = self.profiling_interval
        feats, prof_run = profile_application(trace, self.system, self.power,
                                              interval)
        predicted = model.predict_one(feats)
        ranking = tuple(model.rank_labels(feats))
        path = [(self.system.profiling_core, "profile"), (predicted, "predicted")]

        if deadline_s is None:
            deadline_s = self.deadline_for(trace, constraint)

        order = self.system.speed_order()
        current = predicted
        cost = self._evaluate(trace, current, deadline_s, prof_run, interval)
        violation = False
        while cost is None:
            pos = order.index(current)
            if pos == 0:
                # Nothing meets the deadline: take the fastest cap point.
                violation = True
                fastest = self.system.core(order[0])
                cost = self._path_cost(trace, order[0], fastest.freq_cap_ghz,
                                       prof_run)
                if order[0] != current:
                    path.append((order[0], "escalated-deadline"))
                break
            current = order[pos - 1]
            path.append((current, "escalated-deadline"))
            cost = self._evaluate(trace, current, deadline_s, prof_run, interval)

        base_label = self.system.base_core
        base_energy = math.inf
        if cost.core != base_label:
            base_cost = self._evaluate(trace, base_label, deadline_s, prof_run,
                                       interval)
            if base_cost is not None:
                base_energy = base_cost.energy_j
                if cost.energy_j >= base_cost.energy_j:
                    cost = base_cost
                    path.append((base_label, "rejected-energy"))
        if cost.core == base_label and not math.isfinite(base_energy):
            base_energy = cost.energy_j

        self.history.record(app, cost.core, cost.freq_ghz, constraint.kind)
        return self._decision(app, constraint, cost, tuple(path), ranking,
                              from_history=False, prof_run=prof_run,
                              base_energy=base_energy, deadline_s=deadline_s,
                              violation=violation)

    def _decision(self, app, constraint, cost: _PathCost, path, ranking,
                  from_history, prof_run, base_energy, deadline_s,
                  violation) -> ScheduleDecision:
        pred_t = 0.0 if from_history else self.prediction_time_s
        migr_t = cost.migrations * self.migration_time_s
        return ScheduleDecision(
            app=app,
            constraint_kind=constraint.kind,
            core=cost.core,
            freq_ghz=cost.freq_ghz,
            path=tuple(path),
            ranking=tuple(ranking),
            from_history=from_history,
            profiling_instructions=0 if prof_run is None else prof_run.instructions,
            profiling_time_s=0.0 if prof_run is None else prof_run.wall_time_s,
            profiling_energy_j=0.0 if prof_run is None else prof_run.total_energy_j,
            prediction_time_s=pred_t,
            prediction_energy_j=pred_t * self._overhead_power_w,
            migrations=cost.migrations,
            migration_time_s=migr_t,
            migration_energy_j=migr_t * self._overhead_power_w,
            energy_j=cost.energy_j,
            time_s=cost.time_s,
            run_wall_time_s=cost.full_run.wall_time_s,
            base_energy_j=base_energy if math.isfinite(base_energy) else cost.energy_j,
            deadline_s=deadline_s,
            deadline_met=cost.full_run.wall_time_s <= deadline_s,
            violation=violation,
        )

    # -- multiprogrammed dispatch ---------------------------------------------

    def dispatch_workload(self, traces: list[Trace], constraint: Constraint,
                          deadline_s: float | None = None) -> WorkloadAssignment:
        """Place each app (in listed order) on its highest-ranked free core.

        One app per core, no preemption, no queueing: more apps than cores is
        rejected. Profiling is a staging phase and does not occupy a core.
        """
        model = self.models.get(constraint.kind)
        if model is None:
            raise ValueError(f"no trained model for constraint {constraint.kind!r}")
        slots = len(self.system.cores) * self.system.cluster_count
        if len(traces) > slots:
            raise ValueError(f"{len(traces)} apps exceed {slots} cores; "
                             "queueing is not modeled")

        taken: set[tuple[int, str]] = set()
        placements = []
        any_violation = False
        interval = self.profiling_interval
        for trace in traces:
            feats, prof_run = profile_application(trace, self.system,
                                                  self.power, interval)
            ranking = tuple(model.rank_labels(feats))
            cluster, chosen = next(
                (cl, lab) for lab in ranking
                for cl in range(self.system.cluster_count)
                if (cl, lab) not in taken)
            taken.add((cluster, chosen))

            core = self.system.core(chosen)
            bound = deadline_s if deadline_s is not None else math.inf
            freq = self._estimate_freq(trace, core, bound, interval)
            if freq is None:
                freq = core.freq_cap_ghz
            cost = self._path_cost(trace, chosen, freq, prof_run)
            met = cost.full_run.wall_time_s <= bound
            any_violation = any_violation or not met
            decision = self._decision(
                app=trace.name, constraint=constraint, cost=cost,
                path=((self.system.profiling_core, "profile"),
                      (chosen, "predicted")),
                ranking=ranking, from_history=False, prof_run=prof_run,
                base_energy=math.inf, deadline_s=bound, violation=not met)
            placements.append(AppPlacement(
                app=trace.name, cluster=cluster, core=chosen, freq_ghz=freq,
                start_s=0.0, completion_s=cost.time_s, energy_j=cost.energy_j,
                ranking=ranking, decision=decision))
        return WorkloadAssignment(
            placements=tuple(placements),
            total_energy_j=sum(p.energy_j for p in placements),
            any_violation=any_violation,
        )
