"""Shared signal bus between the decoder FSM, the core, and the host.

One mutable object holds every wire of the co-simulation: levels persist
until rewritten, pulses (time_tick, new_batch, new_epoch) are valid for a
single scheduler step and cleared by their driver on the next one.  Trace
sinks observe the bus once per step, after both the FSM and the core have
updated their outputs.
"""

from __future__ import annotations

SIGNALS = (
    "start",
    "sample",
    "time_tick",
    "timing_error_rdy",
    "target_valid",
    "target_data",
    "infer_acc",
    "test",
    "aer_req",
    "aer_ack",
    "aer_addr",
    "out_req",
    "out_ack",
    "out_data",
    "batch_done",
    "epoch_done",
    "new_batch",
    "new_epoch",
    "epoch_acc",
)


class Bus:
    """All co-simulation wires, as plain integer attributes."""

    __slots__ = SIGNALS

    def __init__(self):
        for name in SIGNALS:
            setattr(self, name, 0)

    def snapshot(self) -> tuple:
        return (self.start, self.sample, self.time_tick, self.timing_error_rdy,
                self.target_valid, self.target_data, self.infer_acc, self.test,
                self.aer_req, self.aer_ack, self.aer_addr,
                self.out_req, self.out_ack, self.out_data,
                self.batch_done, self.epoch_done, self.new_batch,
                self.new_epoch, self.epoch_acc)
