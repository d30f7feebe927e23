"""Trace sinks: recording, CSV/VCD export, and the protocol monitor.

A sink is any object with ``observe(step, bus)``; the scheduler calls it
once per step after the FSM and the core have both updated the bus.
Observation never feeds back into the simulation.
"""

from __future__ import annotations

from .bus import SIGNALS, Bus

# 4-phase legality, indexed by (prev_req, prev_ack, req, ack) as a 4-bit
# number.  Either side may follow the other combinationally within one
# observed step (REQ/ACK rising together, falling together, or ACK rising
# as REQ already falls); everything else must keep the REQ up, ACK up,
# REQ down, ACK down order.
_LEGAL = [False] * 16
for _pr, _pa, _r, _a in (
    (0, 0, 0, 0), (0, 0, 1, 0), (0, 0, 1, 1),
    (1, 0, 1, 0), (1, 0, 1, 1), (1, 0, 0, 1),
    (1, 1, 1, 1), (1, 1, 0, 1), (1, 1, 0, 0),
    (0, 1, 0, 1), (0, 1, 0, 0),
):
    _LEGAL[_pr * 8 + _pa * 4 + _r * 2 + _a] = True


class RecordingSink:
    """Stores one record per step: (step, value per selected signal)."""

    def __init__(self, signals: tuple[str, ...] | None = None):
        self.signals = tuple(signals) if signals else SIGNALS
        self.records: list[tuple] = []

    def observe(self, step: int, bus: Bus) -> None:
        self.records.append(
            (step,) + tuple(getattr(bus, s) for s in self.signals))

    def series(self, name: str) -> list[tuple[int, int]]:
        """(step, value) pairs for one signal."""
        i = self.signals.index(name) + 1
        return [(r[0], r[i]) for r in self.records]

    def changes(self, name: str) -> list[tuple[int, int]]:
        """(step, value) pairs at the steps where the signal changed."""
        out = []
        prev = None
        for step, value in self.series(name):
            if value != prev:
                out.append((step, value))
                prev = value
        return out


class CsvTraceSink:
    """Streams change-only rows `step,signal,value` to a text file."""

    def __init__(self, fileobj, signals: tuple[str, ...] | None = None):
        self.f = fileobj
        self.signals = tuple(signals) if signals else SIGNALS
        self._prev = {s: None for s in self.signals}
        self.f.write("step,signal,value\n")

    def observe(self, step: int, bus: Bus) -> None:
        prev = self._prev
        f = self.f
        for s in self.signals:
            v = getattr(bus, s)
            if v != prev[s]:
                f.write(f"{step},{s},{v}\n")
                prev[s] = v


_VCD_WIDTHS = {
    "aer_addr": 8, "out_data": 8, "target_data": 8, "epoch_acc": 32,
}


class VcdTraceSink:
    """Streams a value-change dump (one step = one time unit)."""

    def __init__(self, fileobj, signals: tuple[str, ...] | None = None):
        self.f = fileobj
        self.signals = tuple(signals) if signals else SIGNALS
        self._ids = {s: chr(33 + i) for i, s in enumerate(self.signals)}
        self._prev = {s: None for s in self.signals}
        f = self.f
        f.write("$timescale 1ns $end\n$scope module cosim $end\n")
        for s in self.signals:
            width = _VCD_WIDTHS.get(s, 1)
            f.write(f"$var wire {width} {self._ids[s]} {s} $end\n")
        f.write("$upscope $end\n$enddefinitions $end\n")

    def observe(self, step: int, bus: Bus) -> None:
        changes = []
        for s in self.signals:
            v = getattr(bus, s)
            if v != self._prev[s]:
                self._prev[s] = v
                if _VCD_WIDTHS.get(s, 1) == 1:
                    changes.append(f"{v & 1}{self._ids[s]}")
                else:
                    changes.append(f"b{v:b} {self._ids[s]}")
        if changes:
            self.f.write(f"#{step}\n" + "\n".join(changes) + "\n")


class ProtocolMonitor:
    """Streaming checker for the bus-level invariants.

    Violations are collected, not raised, so a whole run can be audited in
    one pass.  Checks: 4-phase ordering and data stability on both AER
    channels, TARGET_VALID suppressed while TEST is high, per-sample
    TIME_TICK pulse count against the expected end tick, the epoch accuracy
    counter against an offline recount of matching inferences, and
    EPOCH_ACC never exceeding the number of samples processed.

    ``expect_epoch`` arms the per-sample expectations (end tick, label) for
    the upcoming epoch; without it only the stream-independent checks run.
    """

    def __init__(self):
        self.violations: list[str] = []
        self._prev: Bus | None = None
        self._p_aer = (0, 0)
        self._p_out = (0, 0)
        self._aer_data = -1
        self._out_data = -1
        self._in_sample = False
        self._ticks_in_sample = 0
        self._sample_idx = 0
        self._recount = 0
        self._expected: list[tuple[int, int]] | None = None
        self._last_label = -1

    def expect_epoch(self, expected: list[tuple[int, int]] | None) -> None:
        """Arm (end_tick, label) expectations for the next epoch's samples."""
        self._expected = expected
        self._sample_idx = 0
        self._recount = 0

    def observe(self, step: int, bus: Bus) -> None:
        v = self.violations
        req, ack = bus.aer_req, bus.aer_ack
        pr, pa = self._p_aer
        if not _LEGAL[pr * 8 + pa * 4 + req * 2 + ack]:
            v.append(f"step {step}: AER handshake order violated "
                     f"({pr}{pa} -> {req}{ack})")
        if req:
            if not pr:
                self._aer_data = bus.aer_addr
            elif bus.aer_addr != self._aer_data:
                v.append(f"step {step}: AER_ADDR changed while REQ high")
        self._p_aer = (req, ack)

        req, ack = bus.out_req, bus.out_ack
        pr, pa = self._p_out
        if not _LEGAL[pr * 8 + pa * 4 + req * 2 + ack]:
            v.append(f"step {step}: OUT handshake order violated "
                     f"({pr}{pa} -> {req}{ack})")
        if req:
            if not pr:
                self._out_data = bus.out_data
            elif bus.out_data != self._out_data:
                v.append(f"step {step}: OUT_DATA changed while REQ high")
        out_accepted = ack and not pa  # responder latched the inference
        self._p_out = (req, ack)

        if bus.target_valid and bus.test:
            v.append(f"step {step}: TARGET_VALID asserted while TEST=1")

        if bus.sample:
            if not self._in_sample:
                self._in_sample = True
                self._ticks_in_sample = 0
            if bus.time_tick:
                self._ticks_in_sample += 1
        elif self._in_sample:
            self._in_sample = False
            if self._expected is not None:
                if self._sample_idx < len(self._expected):
                    end_tick, label = self._expected[self._sample_idx]
                    if self._ticks_in_sample != end_tick:
                        v.append(
                            f"step {step}: sample {self._sample_idx} ran "
                            f"{self._ticks_in_sample} TIME_TICK pulses, "
                            f"expected {end_tick}")
                    self._last_label = label
                else:
                    v.append(f"step {step}: more samples than expected "
                             f"({self._sample_idx + 1})")
                    self._last_label = -1
                self._sample_idx += 1
        elif bus.time_tick:
            v.append(f"step {step}: TIME_TICK pulsed outside a sample")

        # recount matches at the acceptance edge of the output handshake
        if out_accepted and self._expected is not None:
            if self._last_label >= 0 and bus.out_data == self._last_label:
                self._recount += 1
            self._last_label = -1

        if bus.epoch_done and self._expected is not None:
            if bus.epoch_acc != self._recount:
                v.append(
                    f"step {step}: EPOCH_ACC={bus.epoch_acc} but recount "
                    f"of matching inferences is {self._recount}")
        if bus.epoch_acc > self._sample_idx and self._expected is not None:
            v.append(f"step {step}: EPOCH_ACC={bus.epoch_acc} exceeds "
                     f"{self._sample_idx} samples processed")
