"""Cycle-driven decoder FSM: event words in, paced bus activity out.

The FSM reads 32-bit event words from the buffer memory, paces network
timesteps with TIME_TICK pulses, delivers spikes over the input AER
handshake, opens the TARGET_VALID learning window when a label arrives
(suppressed while TEST is high), collects each sample's inference over the
output handshake, and maintains the per-epoch accuracy counter.  Batch and
epoch boundaries hand control back to the host through the
BATCH_DONE/NEW_BATCH and EPOCH_DONE/NEW_EPOCH pulse pairs.

One ``step()`` call is one clock-equivalent: the FSM updates its outputs,
then the core adapter responds, then any trace sinks observe the bus.
Malformed words and stuck handshakes raise FsmFault rather than wedging.
"""

from __future__ import annotations

from .aer import ADDR_MAX, LABEL_MAX, TYPE_END, TYPE_LABEL, TYPE_SPIKE
from .bus import Bus
from .errors import FsmFault

IDLE = 0
READM = 1
TICK = 2
SPIKE = 3
LABEL = 4
END_S = 5
END_B = 6
END_E = 7

STATE_NAMES = ("IDLE", "READM", "TICK", "SPIKE", "LABEL",
               "END_S", "END_B", "END_E")

# step() status codes for cheap host polling
RUNNING = 0
WAIT_BATCH = 1
WAIT_EPOCH = 2
DONE = 3

_PEND_SPIKE = 0
_PEND_LABEL = 1


class AerDecoder:
    """The batch-capable decoder FSM over a shared bus and buffer memory."""

    def __init__(self, bus: Bus, memory, bank, timeout: int = 64):
        self.bus = bus
        self.memory = memory
        self.bank = bank
        self.timeout = timeout
        self.state = IDLE
        self.cursor = 0
        self.current_tick = 0
        self.stored_label = -1
        self.samples_in_batch = 0
        self.samples_in_epoch = 0
        self.epochs_done = 0
        self.last_epoch_acc = -1
        self.finished = False
        self._pend_kind = 0
        self._pend_addr = 0
        self._pend_tick = 0
        self._end_tick = 0
        self._end_phase = 0
        self._wait = 0
        self._prev_start = 0
        self._params = None

    def _snapshot_params(self) -> None:
        p = self.bank.runtime_snapshot()
        if p.samples_per_epoch <= 0 or p.samples_per_batch <= 0:
            raise FsmFault(
                "run started with SAMPLES_PER_EPOCH/SAMPLES_PER_BATCH unset")
        if p.samples_per_batch > p.samples_per_epoch:
            raise FsmFault(
                f"SAMPLES_PER_BATCH {p.samples_per_batch} exceeds "
                f"SAMPLES_PER_EPOCH {p.samples_per_epoch}")
        if p.samples_per_epoch % p.samples_per_batch != 0:
            raise FsmFault(
                f"SAMPLES_PER_EPOCH {p.samples_per_epoch} not divisible by "
                f"SAMPLES_PER_BATCH {p.samples_per_batch}")
        if p.n_epochs <= 0:
            raise FsmFault("run started with N_EPOCHS unset")
        self._params = p

    def _begin_sample(self) -> None:
        bus = self.bus
        bus.sample = 1
        bus.infer_acc = 1 if self._params.infer_acc_en else 0
        self.current_tick = 0
        self.stored_label = -1
        self.state = READM
        self._wait = 0

    def _bump_wait(self, what: str) -> None:
        self._wait += 1
        if self._wait > self.timeout:
            raise FsmFault(
                f"protocol timeout after {self.timeout} steps waiting for "
                f"{what} (state {STATE_NAMES[self.state]}, "
                f"sample {self.samples_in_epoch} of epoch {self.epochs_done})")

    def step(self) -> int:
        """Advance one clock; returns a RUNNING/WAIT_*/DONE status code."""
        bus = self.bus
        bus.time_tick = 0
        st = self.state

        if st == TICK:
            if bus.timing_error_rdy:
                bus.time_tick = 1
                self.current_tick += 1
                self._wait = 0
                if self.current_tick >= self._pend_tick:
                    self.state = SPIKE if self._pend_kind == _PEND_SPIKE else LABEL
            else:
                self._bump_wait("TIMING_ERROR_RDY")
            return RUNNING

        if st == READM:
            addr = self.cursor
            word = self.memory.read(addr)
            self.cursor = addr + 1
            code = (word >> 24) & 0xFF
            field = (word >> 12) & 0xFFF
            tick = word & 0xFFF
            if code == TYPE_SPIKE:
                if field > ADDR_MAX:
                    raise FsmFault(
                        f"malformed word at buffer[{addr}]: spike address "
                        f"{field:#x} exceeds 8-bit channel")
                if tick > self.current_tick:
                    self._pend_kind = _PEND_SPIKE
                    self._pend_addr = field
                    self._pend_tick = tick
                    self.state = TICK
                else:
                    self._pend_addr = field
                    self.state = SPIKE
            elif code == TYPE_LABEL:
                if field > LABEL_MAX:
                    raise FsmFault(
                        f"malformed word at buffer[{addr}]: label "
                        f"{field:#x} exceeds 16-class range")
                eff = tick + self._params.label_delay
                if eff > self.current_tick:
                    self._pend_kind = _PEND_LABEL
                    self._pend_addr = field
                    self._pend_tick = eff
                    self.state = TICK
                else:
                    self._pend_addr = field
                    self.state = LABEL
            elif code == TYPE_END:
                self._end_tick = tick
                self._end_phase = 0
                self.state = END_S
            else:
                raise FsmFault(
                    f"malformed word at buffer[{addr}]: unknown type code "
                    f"{code:#04x} in {word:#010x}")
            self._wait = 0
            return RUNNING

        if st == SPIKE:
            if not bus.aer_req:
                bus.aer_addr = self._pend_addr
                bus.aer_req = 1
            elif bus.aer_ack:
                bus.aer_req = 0
                self.state = READM
                self._wait = 0
            else:
                self._bump_wait("AER_ACK rise")
            return RUNNING

        if st == LABEL:
            self.stored_label = self._pend_addr
            bus.target_data = self._pend_addr
            if not bus.test:
                bus.target_valid = 1
            self.state = READM
            return RUNNING

        if st == END_S:
            phase = self._end_phase
            if phase == 0:
                if self.current_tick < self._end_tick:
                    if bus.timing_error_rdy:
                        bus.time_tick = 1
                        self.current_tick += 1
                        self._wait = 0
                    else:
                        self._bump_wait("TIMING_ERROR_RDY")
                else:
                    bus.sample = 0
                    bus.target_valid = 0
                    self._end_phase = 1
                    self._wait = 0
            elif phase == 1:
                if bus.out_req:
                    bus.out_ack = 1
                    if bus.out_data == self.stored_label:
                        bus.epoch_acc += 1
                    self._end_phase = 2
                    self._wait = 0
                else:
                    self._bump_wait("OUT_REQ rise")
            else:
                if not bus.out_req:
                    bus.out_ack = 0
                    self.samples_in_batch += 1
                    self.samples_in_epoch += 1
                    p = self._params
                    if self.samples_in_epoch >= p.samples_per_epoch:
                        self.state = END_E
                    elif self.samples_in_batch >= p.samples_per_batch:
                        self.state = END_B
                    else:
                        self._begin_sample()
                    self._wait = 0
                else:
                    self._bump_wait("OUT_REQ fall")
            return RUNNING

        if st == END_B:
            bus.batch_done = 1
            if bus.new_batch:
                bus.batch_done = 0
                self.samples_in_batch = 0
                self.cursor = 0
                self._begin_sample()
                return RUNNING
            return WAIT_BATCH

        if st == END_E:
            # epoch end is also a batch end: the host reloads either way
            bus.epoch_done = 1
            bus.batch_done = 1
            if self.last_epoch_acc < 0:
                self.last_epoch_acc = bus.epoch_acc
            if bus.new_epoch:
                bus.epoch_done = 0
                bus.batch_done = 0
                bus.epoch_acc = 0
                self.epochs_done += 1
                self.samples_in_epoch = 0
                self.samples_in_batch = 0
                self.cursor = 0
                self.last_epoch_acc = -1
                if self.epochs_done >= self._params.n_epochs:
                    self.finished = True
                    self.state = IDLE
                    return DONE
                self._snapshot_params()
                self._begin_sample()
                return RUNNING
            return WAIT_EPOCH

        # IDLE
        if self.finished:
            return DONE
        start = bus.start
        if start and not self._prev_start:
            self._prev_start = start
            self._snapshot_params()
            self.cursor = 0
            self.samples_in_batch = 0
            self.samples_in_epoch = 0
            self.epochs_done = 0
            bus.epoch_acc = 0
            self._begin_sample()
            return RUNNING
        self._prev_start = start
        return RUNNING
