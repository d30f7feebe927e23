"""Decoder FSM: signal traces, fail-loud faults, and oracle equivalence.

Every run here is checked two ways: the protocol monitor audits the bus
while the straight-line interpreter (tests/oracles.py) replays the same
stream with no FSM at all.  Both the accuracy counter and the full core
state must agree bit for bit.
"""

import numpy as np
import pytest

from snncosim.aer import encode, end_of_sample, label, spike
from snncosim.bus import Bus
from snncosim.core import CoreBusAdapter, NetworkConfig, RsnnCore
from snncosim.decoder import DONE, RUNNING, WAIT_BATCH, WAIT_EPOCH, AerDecoder
from snncosim.errors import FsmFault, SimError
from snncosim.monitor import ProtocolMonitor, RecordingSink
from snncosim.runtime import (
    BufferMemory,
    Cosim,
    RunPlan,
    ScheduleEntry,
    plan_batches,
    run_epochs,
)
from snncosim.spi import (
    REG_INFER_ACC_EN,
    REG_LABEL_DELAY,
    REG_N_EPOCHS,
    REG_SAMPLES_PER_BATCH,
    REG_SAMPLES_PER_EPOCH,
    ParamBank,
    SpiFrame,
    spi_transfer,
)

from oracles import random_events, straight_line_epoch, words_of


def make_bank(spe=1, spb=1, epochs=1, delay=0, infer_acc=1):
    bank = ParamBank()
    for reg, val in ((REG_SAMPLES_PER_EPOCH, spe),
                     (REG_SAMPLES_PER_BATCH, spb),
                     (REG_N_EPOCHS, epochs),
                     (REG_LABEL_DELAY, delay),
                     (REG_INFER_ACC_EN, infer_acc)):
        spi_transfer(bank, SpiFrame.write(reg, val))
    return bank


def make_sim(words, bank, core, sinks=(), timeout=64, ready_latency=0,
             depth=256):
    bus = Bus()
    memory = BufferMemory(depth)
    memory.write_batch(words)
    fsm = AerDecoder(bus, memory, bank, timeout=timeout)
    adapter = CoreBusAdapter(core, bus, ready_latency=ready_latency)
    return Cosim(bus, fsm, adapter, sinks)


def drive(sim, until, limit=100_000):
    for _ in range(limit):
        status = sim.step()
        if status == until:
            return status
    raise AssertionError(f"status {until} not reached in {limit} steps")


def fresh_core(seed=11, **kw):
    cfg = NetworkConfig(n_in=kw.pop("n_in", 8), n_hid=kw.pop("n_hid", 12),
                        n_out=kw.pop("n_out", 3), **kw)
    return RsnnCore(cfg, seed)


class TestSingleSampleTrace:
    """The one-sample stream [Spike(2,0), Label(1,1), End(2)]."""

    WORDS = [encode(spike(2, 0)), encode(label(1, 1)),
             encode(end_of_sample(2))]

    def run_trace(self):
        core = fresh_core()
        rec = RecordingSink()
        mon = ProtocolMonitor()
        mon.expect_epoch([(2, 1)])
        sim = make_sim(self.WORDS, make_bank(), core, (rec, mon))
        sim.bus.start = 1
        sim.step()
        sim.bus.start = 0
        drive(sim, WAIT_EPOCH)
        return core, rec, mon, sim

    def test_monitor_clean(self):
        _, _, mon, _ = self.run_trace()
        assert mon.violations == []

    def test_signal_order(self):
        _, rec, _, _ = self.run_trace()
        sample_up = rec.changes("sample")[0][0]
        sample_down = [s for s, v in rec.changes("sample") if v == 0][0]
        req_up = [s for s, v in rec.changes("aer_req") if v == 1][0]
        ack_up = [s for s, v in rec.changes("aer_ack") if v == 1][0]
        ticks = [s for s, v in rec.series("time_tick") if v == 1]
        tv_up = [s for s, v in rec.changes("target_valid") if v == 1][0]
        tv_down = [s for s, v in rec.changes("target_valid") if v == 0
                   and s > tv_up][0]
        out_up = [s for s, v in rec.changes("out_req") if v == 1][0]

        assert len(ticks) == 2                      # one per network tick
        assert sample_up < req_up <= ack_up < ticks[0]
        assert rec.series("aer_addr")[req_up][1] == 2
        assert ticks[0] < tv_up < ticks[1] < sample_down
        assert tv_down == sample_down               # window closes with sample
        assert sample_down <= out_up
        assert rec.series("target_data")[tv_up][1] == 1

    def test_accuracy_matches_oracle(self):
        core, _, _, sim = self.run_trace()
        oracle_core = fresh_core()
        from snncosim.aer import decode
        events = [decode(w) for w in self.WORDS]
        correct = straight_line_epoch(oracle_core, events, learn_enabled=True)
        assert sim.fsm.last_epoch_acc == correct
        assert sim.bus.epoch_acc == correct
        assert core.weight_hash() == oracle_core.weight_hash()


class TestFaults:
    def test_empty_memory_faults_at_first_read(self):
        core = fresh_core()
        bus = Bus()
        fsm = AerDecoder(bus, BufferMemory(16), make_bank())
        adapter = CoreBusAdapter(core, bus)
        sim = Cosim(bus, fsm, adapter)
        bus.start = 1
        sim.step()                                   # IDLE: arms the sample
        with pytest.raises(FsmFault, match="read-before-write"):
            sim.step()                               # first READM

    def test_zero_word_is_malformed(self):
        class ZeroMemory:
            depth = 16

            def read(self, addr):
                return 0

        core = fresh_core()
        bus = Bus()
        fsm = AerDecoder(bus, ZeroMemory(), make_bank())
        adapter = CoreBusAdapter(core, bus)
        sim = Cosim(bus, fsm, adapter)
        bus.start = 1
        sim.step()
        with pytest.raises(FsmFault, match="unknown type code"):
            sim.step()

    @pytest.mark.parametrize("word,needle", [
        (0x03100000, "spike address"),               # channel 0x100 > 8 bits
        (0x02010000, "label"),                       # class 16 > 4 bits
        (0x7F000000, "unknown type code"),
    ])
    def test_malformed_words(self, word, needle):
        core = fresh_core()
        sim = make_sim([word], make_bank(), core)
        sim.bus.start = 1
        sim.step()
        with pytest.raises(FsmFault, match=needle):
            drive(sim, WAIT_EPOCH, limit=10)

    def test_handshake_timeout(self):
        core = fresh_core()
        words = words_of(random_events(3, 1, 8, 3))
        sim = make_sim(words, make_bank(), core, timeout=8, ready_latency=20)
        sim.bus.start = 1
        sim.step()
        with pytest.raises(FsmFault, match="protocol timeout"):
            drive(sim, WAIT_EPOCH, limit=200)

    def test_spike_address_outside_network(self):
        words = [encode(spike(200, 0)), encode(end_of_sample(2))]
        core = fresh_core(n_in=8)
        sim = make_sim(words, make_bank(), core)
        sim.bus.start = 1
        sim.step()
        with pytest.raises(SimError, match="spike address 200"):
            drive(sim, WAIT_EPOCH, limit=20)

    @pytest.mark.parametrize("spe,spb,epochs,needle", [
        (0, 1, 1, "SAMPLES_PER_EPOCH/SAMPLES_PER_BATCH unset"),
        (4, 0, 1, "SAMPLES_PER_EPOCH/SAMPLES_PER_BATCH unset"),
        (4, 8, 1, "exceeds"),
        (4, 3, 1, "not divisible"),
        (4, 2, 0, "N_EPOCHS unset"),
    ])
    def test_runtime_param_validation(self, spe, spb, epochs, needle):
        core = fresh_core()
        sim = make_sim([0], make_bank(spe=spe, spb=spb, epochs=epochs), core)
        sim.bus.start = 1
        with pytest.raises(FsmFault, match=needle):
            sim.step()


class TestOracleEquivalence:
    """FSM-driven runs must be bit-identical to the straight-line replay."""

    def assert_equivalent(self, events, *, n_in=8, n_out=3, seed=5,
                          epochs=1, spb=None, learn=True, infer_acc=1,
                          delay=0):
        words = words_of(events)
        plan = plan_batches(words, spb or len(
            [w for w in words if w >> 24 == 0x01]))
        run_plan = RunPlan(
            {"s": plan},
            [ScheduleEntry("s", learn, e) for e in range(epochs)])

        fsm_core = fresh_core(seed, n_in=n_in, n_out=n_out)
        bank = make_bank(delay=delay, infer_acc=infer_acc)
        mon = ProtocolMonitor()
        rows = run_epochs(run_plan, fsm_core, bank, monitor=mon)

        oracle_core = fresh_core(seed, n_in=n_in, n_out=n_out)
        for e in range(epochs):
            correct = straight_line_epoch(
                oracle_core, events, learn_enabled=learn,
                label_delay=delay, infer_acc=bool(infer_acc))
            assert rows[e].correct == correct, f"epoch {e}"

        fs, os_ = fsm_core.state, oracle_core.state
        for name in ("w_in", "w_rec", "w_out", "v_hid", "v_out", "z_hid",
                     "zbar_in", "zbar_hid", "elig_in", "elig_rec",
                     "elig_out", "out_accum"):
            assert np.array_equal(getattr(fs, name), getattr(os_, name)), name
        assert mon.violations == []
        return rows

    @pytest.mark.parametrize("stream_seed", [1, 2, 3, 4])
    def test_learning_runs(self, stream_seed):
        events = random_events(stream_seed, 6, 8, 3)
        self.assert_equivalent(events, seed=stream_seed + 100)

    def test_multi_epoch_learning(self):
        events = random_events(9, 5, 8, 3)
        self.assert_equivalent(events, epochs=4)

    def test_batched_learning(self):
        events = random_events(10, 6, 8, 3)
        self.assert_equivalent(events, spb=2, epochs=2)

    def test_inference_only(self):
        events = random_events(11, 6, 8, 3)
        core_before = fresh_core(5)
        rows = self.assert_equivalent(events, learn=False)
        assert rows[0].correct >= 0
        # TEST=1 must leave the weights untouched
        fsm_core = fresh_core(5)
        bank = make_bank()
        run_epochs(RunPlan({"s": plan_batches(words_of(events), 6)},
                           [ScheduleEntry("s", False, 0)]), fsm_core, bank)
        assert fsm_core.weight_hash() == core_before.weight_hash()

    def test_final_membrane_readout(self):
        events = random_events(12, 6, 8, 3)
        self.assert_equivalent(events, infer_acc=0)

    def test_runtime_label_delay(self):
        events = random_events(13, 6, 8, 3, label_last=True, label_margin=4)
        self.assert_equivalent(events, delay=3)

    def test_delay_in_register_equals_delay_in_stamp(self):
        base = random_events(14, 5, 8, 3, label_last=True, label_margin=4)
        shifted = []
        for e in base:
            if e.kind.name == "LABEL":
                shifted.append(label(e.addr_or_label, e.tick + 3))
            else:
                shifted.append(e)

        core_a = fresh_core(21)
        run_epochs(RunPlan({"s": plan_batches(words_of(base), 5)},
                           [ScheduleEntry("s", True, 0)]),
                   core_a, make_bank(delay=3))
        core_b = fresh_core(21)
        run_epochs(RunPlan({"s": plan_batches(words_of(shifted), 5)},
                           [ScheduleEntry("s", True, 0)]),
                   core_b, make_bank(delay=0))
        assert core_a.weight_hash() == core_b.weight_hash()

    def test_label_at_end_tick_is_inert(self):
        events = [spike(0, 0), label(1, 2), end_of_sample(2)]
        core = fresh_core(7)
        before = core.weight_hash()
        rows = self.assert_equivalent(events, seed=7)
        # window opens at the final tick: no learning step ever runs
        fsm_core = fresh_core(7)
        run_epochs(RunPlan({"s": plan_batches(words_of(events), 1)},
                           [ScheduleEntry("s", True, 0)]),
                   fsm_core, make_bank())
        assert fsm_core.weight_hash() == before
        assert rows[0].total == 1


class TestBatching:
    def test_batch_done_coincides_with_epoch_done_when_single_batch(self):
        events = random_events(20, 50, 8, 3, min_end=2, max_end=4)
        words = words_of(events)
        plan = plan_batches(words, 50)
        core = fresh_core()
        rec = RecordingSink(("batch_done", "epoch_done"))
        rows = run_epochs(RunPlan({"s": plan},
                                  [ScheduleEntry("s", True, 0)]),
                          core, make_bank(), sinks=(rec,))
        assert rows[0].total == 50
        batch_steps = {s for s, v in rec.series("batch_done") if v}
        epoch_steps = {s for s, v in rec.series("epoch_done") if v}
        assert batch_steps == epoch_steps and len(epoch_steps) == 1

    def test_intermediate_batches_pause_the_fsm(self):
        events = random_events(21, 6, 8, 3)
        words = words_of(events)
        plan = plan_batches(words, 2)
        core = fresh_core()
        rec = RecordingSink(("batch_done", "epoch_done"))
        run_epochs(RunPlan({"s": plan}, [ScheduleEntry("s", True, 0)]),
                   core, make_bank(), sinks=(rec,))
        batch_only = [s for s, v in rec.series("batch_done") if v]
        epoch = [s for s, v in rec.series("epoch_done") if v]
        assert len(epoch) == 1
        assert len(batch_only) == 3                  # two END_B plus END_E

    def test_short_second_batch_faults_on_stale_read(self):
        # host reloads a smaller batch; reads past it must fault, not replay
        memory = BufferMemory(32)
        memory.write_batch([1, 2, 3, 4])
        memory.write_batch([9])
        assert memory.read(0) == 9
        with pytest.raises(FsmFault, match="read-before-write"):
            memory.read(1)


class TestSinkTransparency:
    def test_sinks_do_not_perturb_the_run(self, tmp_path):
        from snncosim.monitor import CsvTraceSink, VcdTraceSink

        events = random_events(30, 4, 8, 3)
        plan = plan_batches(words_of(events), 2)

        core_a = fresh_core(3)
        rows_a = run_epochs(RunPlan({"s": plan},
                                    [ScheduleEntry("s", True, 0)]),
                            core_a, make_bank())

        core_b = fresh_core(3)
        with open(tmp_path / "t.csv", "w") as cf, \
                open(tmp_path / "t.vcd", "w") as vf:
            sinks = (RecordingSink(), CsvTraceSink(cf), VcdTraceSink(vf))
            rows_b = run_epochs(RunPlan({"s": plan},
                                        [ScheduleEntry("s", True, 0)]),
                                core_b, make_bank(), sinks=sinks)
        assert rows_a == rows_b
        assert core_a.weight_hash() == core_b.weight_hash()
        assert (tmp_path / "t.csv").read_text().startswith("step,signal,value")
        assert "$enddefinitions" in (tmp_path / "t.vcd").read_text()
