"""Protocol monitor: it must actually catch broken handshakes and counters."""

from snncosim.bus import Bus
from snncosim.monitor import ProtocolMonitor, RecordingSink


def play(mon, frames):
    """Feed a list of {signal: value} deltas to the monitor."""
    bus = Bus()
    bus.timing_error_rdy = 1
    for step, frame in enumerate(frames):
        for k, v in frame.items():
            setattr(bus, k, v)
        mon.observe(step, bus)
    return bus


class TestHandshakeOrder:
    def test_textbook_four_phase_clean(self):
        mon = ProtocolMonitor()
        play(mon, [{"aer_req": 1, "aer_addr": 3}, {"aer_ack": 1},
                   {"aer_req": 0}, {"aer_ack": 0}])
        assert mon.violations == []

    def test_merged_rise_and_fall_clean(self):
        mon = ProtocolMonitor()
        play(mon, [{"aer_req": 1, "aer_ack": 1, "aer_addr": 3},
                   {"aer_req": 0, "aer_ack": 0}])
        assert mon.violations == []

    def test_ack_without_request(self):
        mon = ProtocolMonitor()
        play(mon, [{"aer_ack": 1}])
        assert any("AER handshake order" in v for v in mon.violations)

    def test_request_dropped_before_ack(self):
        mon = ProtocolMonitor()
        play(mon, [{"out_req": 1}, {"out_req": 0}])
        assert any("OUT handshake order" in v for v in mon.violations)

    def test_ack_stuck_after_request_reasserts(self):
        mon = ProtocolMonitor()
        play(mon, [{"out_req": 1}, {"out_ack": 1}, {"out_req": 0},
                   {"out_req": 1}])
        assert any("OUT handshake order" in v for v in mon.violations)

    def test_address_must_hold_while_req_high(self):
        mon = ProtocolMonitor()
        play(mon, [{"aer_req": 1, "aer_addr": 3}, {"aer_addr": 4},
                   {"aer_ack": 1}])
        assert any("AER_ADDR changed" in v for v in mon.violations)

    def test_out_data_must_hold_while_req_high(self):
        mon = ProtocolMonitor()
        play(mon, [{"out_req": 1, "out_data": 1}, {"out_data": 2}])
        assert any("OUT_DATA changed" in v for v in mon.violations)


class TestLevelRules:
    def test_target_valid_during_test_mode(self):
        mon = ProtocolMonitor()
        play(mon, [{"test": 1, "target_valid": 1}])
        assert any("TEST=1" in v for v in mon.violations)

    def test_time_tick_outside_sample(self):
        mon = ProtocolMonitor()
        play(mon, [{"time_tick": 1}])
        assert any("outside a sample" in v for v in mon.violations)


class TestEpochAccounting:
    def sample_frames(self, end_tick, out_data):
        frames = [{"sample": 1}]
        for _ in range(end_tick):
            frames.append({"time_tick": 1})
            frames.append({"time_tick": 0})
        frames.append({"sample": 0})
        frames.append({"out_req": 1, "out_data": out_data})
        frames.append({"out_ack": 1})
        frames.append({"out_req": 0})
        frames.append({"out_ack": 0})
        return frames

    def test_tick_count_mismatch_detected(self):
        mon = ProtocolMonitor()
        mon.expect_epoch([(5, 1)])
        play(mon, self.sample_frames(end_tick=4, out_data=1))
        assert any("expected 5" in v for v in mon.violations)

    def test_epoch_acc_recount_mismatch_detected(self):
        mon = ProtocolMonitor()
        mon.expect_epoch([(2, 1)])
        frames = self.sample_frames(2, out_data=1)
        frames.append({"epoch_done": 1, "epoch_acc": 0})  # counter lied low
        play(mon, frames)
        assert any("recount" in v for v in mon.violations)

    def test_epoch_acc_cannot_exceed_samples(self):
        mon = ProtocolMonitor()
        mon.expect_epoch([(2, 1), (2, 0)])
        frames = self.sample_frames(2, out_data=1)
        frames[-1] = {"out_ack": 0, "epoch_acc": 2}
        play(mon, frames)
        assert any("exceeds" in v for v in mon.violations)

    def test_correct_run_is_clean(self):
        mon = ProtocolMonitor()
        mon.expect_epoch([(3, 1), (2, 0)])
        frames = self.sample_frames(3, out_data=1)
        frames[-1] = {"out_ack": 0, "epoch_acc": 1}       # match scored
        frames += self.sample_frames(2, out_data=2)        # miss: label is 0
        frames.append({"epoch_done": 1})
        play(mon, frames)
        assert mon.violations == []

    def test_extra_sample_detected(self):
        mon = ProtocolMonitor()
        mon.expect_epoch([(2, 1)])
        frames = self.sample_frames(2, 1) + self.sample_frames(2, 1)
        play(mon, frames)
        assert any("more samples than expected" in v for v in mon.violations)


class TestRecordingSink:
    def test_series_and_changes(self):
        rec = RecordingSink(("sample", "time_tick"))
        bus = Bus()
        for step in range(4):
            bus.sample = 1 if step >= 1 else 0
            bus.time_tick = step % 2
            rec.observe(step, bus)
        assert rec.series("sample") == [(0, 0), (1, 1), (2, 1), (3, 1)]
        assert rec.changes("sample") == [(0, 0), (1, 1)]
        assert rec.changes("time_tick") == [(0, 0), (1, 1), (2, 0), (3, 1)]
