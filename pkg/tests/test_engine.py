import math
import random

import pytest

from sttsim import (CacheStats, Constraint, PowerModel, STT_10US, SRAM,
                    SynthParams, System, Trace, TraceEvent, UniformGaps,
                    cache_energy, default_system, edp, exhaustive_sweep,
                    gen_synthetic, pareto_flags, processor_energy,
                    simulate_run, sram_system)
from sttsim.trace import READ, WRITE


def one_gap_trace(gap, op=READ, addr=0x40):
    return Trace((TraceEvent(gap, op, addr),), name="tiny")


def rand_trace(seed, events=400, blocks=64, max_gap=3000, wf=0.4):
    rng = random.Random(seed)
    evs = [TraceEvent(rng.randrange(max_gap),
                      WRITE if rng.random() < wf else READ,
                      0x4000 + 64 * rng.randrange(blocks))
           for _ in range(events)]
    return Trace(tuple(evs), name=f"rand-{seed}")


class TestTiming:
    def test_pure_compute_window(self, system, power):
        # 1000 non-memory instructions at 2 GHz: 1000 cycles, 500 ns.
        run = simulate_run(one_gap_trace(5000), system.core("core3"), 2.0,
                           power, limit=1000)
        assert run.instructions == 1000
        assert run.cycles == 1000
        assert run.wall_time_s == pytest.approx(500e-9, rel=1e-12)
        assert run.mem_accesses == 0

    def test_stall_accounting_identity(self, system, power):
        for seed in range(6):
            tr = rand_trace(seed)
            for label, freq in (("core1", 1.6), ("core4", 0.8), ("core4", 2.0)):
                core = system.core(label)
                run = simulate_run(tr, core, freq, power)
                st = run.stats
                rc = core.read_cycles(freq)
                wc = core.write_cycles(freq)
                pc = math.ceil(round(freq * core.miss_penalty_ns, 9))
                stalls = (st.read_hits * rc + st.write_hits * wc
                          + st.read_misses * (rc + pc)
                          + st.write_misses * (wc + pc))
                assert run.cycles == core.base_cpi * run.nonmem_instructions + stalls

    def test_wall_time_matches_cycles(self, system, power):
        run = simulate_run(rand_trace(1), system.core("core2"), 1.2, power)
        assert run.wall_time_s == run.cycles / 1.2 * 1e-9

    def test_limit_is_exact(self, system, power):
        tr = rand_trace(2)
        run = simulate_run(tr, system.core("core1"), 1.6, power, limit=1234)
        assert run.instructions == 1234

    def test_start_resumes_cold(self, system, power):
        tr = rand_trace(3)
        total = tr.instructions
        head = simulate_run(tr, system.core("core1"), 1.6, power, limit=1000)
        rest = simulate_run(tr, system.core("core1"), 1.6, power, start=1000)
        assert head.instructions + rest.instructions == total

    def test_frequency_must_be_on_the_core_grid(self, system, power):
        tr = one_gap_trace(10)
        with pytest.raises(ValueError):
            simulate_run(tr, system.core("core1"), 1.8, power)  # above cap
        with pytest.raises(ValueError):
            simulate_run(tr, system.core("core3"), 1.5, power)  # off grid

    def test_empty_trace_rejected(self, system, power):
        with pytest.raises(ValueError):
            simulate_run(Trace(()), system.core("core1"), 1.6, power)

    def test_determinism(self, system, power):
        tr = rand_trace(4)
        a = simulate_run(tr, system.core("core4"), 2.0, power)
        b = simulate_run(tr, system.core("core4"), 2.0, power)
        assert a == b

    def test_expiration_miss_disappears_at_higher_frequency(self, system, power):
        # Three reads of one block; the reuse gap spans the block lifetime at
        # 0.8 GHz but not at 1.6 GHz.
        tr = Trace((TraceEvent(0, READ, 0x40), TraceEvent(3000, READ, 0x40),
                    TraceEvent(5500, READ, 0x40)), name="fig")
        core1 = system.core("core1")
        slow = simulate_run(tr, core1, 0.8, power)
        fast = simulate_run(tr, core1, 1.6, power)
        assert slow.stats.expiration_misses == 1
        assert fast.stats.expiration_misses == 0


class TestEnergy:
    def test_hand_counted_dynamic_energy(self):
        st = CacheStats(read_hits=1000, write_hits=500)
        dyn, _ = cache_energy(st, STT_10US, 0.0)
        assert dyn == pytest.approx(16e-9, rel=1e-12)

    def test_idle_leakage(self):
        stt_dyn, stt_leak = cache_energy(CacheStats(), STT_10US, 1e-3)
        sram_dyn, sram_leak = cache_energy(CacheStats(), SRAM, 1e-3)
        assert stt_dyn == 0.0 and sram_dyn == 0.0
        assert stt_leak == pytest.approx(13.1448e-6, rel=1e-12)
        assert sram_leak == pytest.approx(50.328e-6, rel=1e-12)
        assert abs(sram_leak / stt_leak - 3.829) < 1e-3

    def test_writes_count_fills_and_writebacks(self):
        st = CacheStats(write_hits=10, mem_read_hits=5, writebacks=3,
                        early_writebacks=2)
        dyn, _ = cache_energy(st, STT_10US, 0.0)
        assert dyn == pytest.approx(20 * 0.026e-9, rel=1e-12)

    def test_negative_wall_time_rejected(self):
        with pytest.raises(ValueError):
            cache_energy(CacheStats(), STT_10US, -1.0)

    def test_zero_active_cycles(self, system, power):
        dyn, _ = processor_energy(0.0, 1e-3, system.core("core3"), 2.0, power)
        assert dyn == 0.0

    def test_capacitance_linearity(self, system, power):
        doubled = PowerModel(effective_capacitance_f=2 * power.effective_capacitance_f,
                             static_points=power.static_points)
        core = system.core("core3")
        d1, s1 = processor_energy(5000.0, 1e-6, core, 2.0, power)
        d2, s2 = processor_energy(5000.0, 1e-6, core, 2.0, doubled)
        assert d2 == pytest.approx(2 * d1, rel=1e-12)
        assert s2 == s1

    def test_voltage_squared_scaling(self, system, power):
        # Same trace at the two voltage endpoints: dynamic-energy ratio is
        # (V1^2 x active1) / (V2^2 x active2).
        tr = rand_trace(5)
        core = system.core("core4")
        lo = simulate_run(tr, core, 0.8, power)
        hi = simulate_run(tr, core, 2.0, power)
        expect = (0.9 ** 2 * lo.active_cycles) / (1.35 ** 2 * hi.active_cycles)
        assert lo.core_dynamic_j / hi.core_dynamic_j == pytest.approx(expect, rel=1e-12)

    def test_energy_conservation(self, system, power):
        run = simulate_run(rand_trace(6), system.core("core2"), 1.0, power)
        total = (run.cache_dynamic_j + run.cache_leakage_j
                 + run.core_dynamic_j + run.core_static_j)
        assert run.total_energy_j == total

    def test_edp(self):
        assert edp(2.0, 3.0) == 6.0
        assert edp(0.0, 5.0) == 0.0
        with pytest.raises(ValueError):
            edp(-1.0, 1.0)

    def test_run_edp_is_definitional(self, system, power):
        run = simulate_run(rand_trace(7), system.core("core1"), 0.8, power)
        assert run.edp_js == edp(run.total_energy_j, run.wall_time_s)


class TestSweep:
    def test_single_core_system(self, power):
        sys1 = System(cores=(default_system().core("core2"),))
        tr = rand_trace(8)
        sweep = exhaustive_sweep(tr, sys1, power, Constraint("none"))
        assert sweep.best_core == "core2"
        assert len(sweep.rows) == len(sys1.cores[0].dvfs.grid())

    def test_hit_dominated_write_free_prefers_top_frequency(self, system, power):
        # All cache terms equal across cores once expiry is out of reach:
        # the winner is the max-frequency, lowest-static point.
        params = SynthParams(working_set_blocks=4, reuse_gaps=UniformGaps(80, 120),
                             write_fraction=0.0, memory_op_fraction=0.04,
                             total_instructions=5000, seed=3)
        tr = gen_synthetic(params)
        sweep = exhaustive_sweep(tr, system, power, Constraint("none"))
        assert sweep.best.freq_ghz == 2.0
        assert sweep.best.core_id == "core3"  # core-index tie-break vs core4
        assert sweep.best.stats.expiration_misses == 0

    def test_long_reuse_gaps_punish_short_retention(self, system, power):
        # ~50us reuse at 0.8 GHz: expiration write-backs dominate the 10us
        # core, so both longer-retention cores beat it.
        params = SynthParams(working_set_blocks=400,
                             reuse_gaps=UniformGaps(35_000, 45_000),
                             write_fraction=0.3, memory_op_fraction=0.01,
                             total_instructions=400_000, seed=5)
        tr = gen_synthetic(params)
        sweep = exhaustive_sweep(tr, system, power, Constraint("none"))
        best = {}
        for row in sweep.rows:
            if (row.core_id not in best
                    or row.total_energy_j < best[row.core_id].total_energy_j):
                best[row.core_id] = row
        assert best["core3"].total_energy_j < best["core1"].total_energy_j
        assert best["core4"].total_energy_j < best["core1"].total_energy_j
        assert best["core1"].stats.early_writebacks > 0

    def test_sram_misses_are_frequency_invariant(self, power):
        core = sram_system().cores[0]
        tr = rand_trace(9, blocks=800)  # force real evictions
        misses = {simulate_run(tr, core, f, power).stats.misses
                  for f in core.dvfs.grid()}
        assert len(misses) == 1

    def test_deadline_violation_flags_fastest(self, system, power):
        tr = rand_trace(10)
        sweep = exhaustive_sweep(tr, system, power, Constraint("slack10"),
                                 deadline_s=1e-12)
        assert sweep.violation
        fastest = min(sweep.rows, key=lambda r: r.wall_time_s)
        assert sweep.best.wall_time_s == fastest.wall_time_s

    def test_derived_deadline_is_always_feasible(self, system, power):
        tr = rand_trace(11)
        for kind in ("best-perf", "slack10", "slack20", "none"):
            sweep = exhaustive_sweep(tr, system, power, Constraint(kind))
            assert not sweep.violation
            assert sweep.best.wall_time_s <= sweep.deadline_s

    def test_pareto_flags(self):
        class Row:
            def __init__(self, e, t):
                self.total_energy_j = e
                self.wall_time_s = t
        rows = [Row(1, 3), Row(2, 2), Row(3, 1), Row(3, 3)]
        assert pareto_flags(rows) == [True, True, True, False]

    def test_select_best_prefers_energy_then_latency_then_index(self, system, power):
        tr = rand_trace(12)
        sweep = exhaustive_sweep(tr, system, power, Constraint("none"))
        best = sweep.best
        for row in sweep.rows:
            key = (row.total_energy_j, row.wall_time_s,
                   system.core_index(row.core_id))
            best_key = (best.total_energy_j, best.wall_time_s,
                        system.core_index(best.core_id))
            assert best_key <= key
