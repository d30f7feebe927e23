"""Host-side runtime: buffer memory, batch planning, and the epoch driver.

The host stands in for the controller firmware: it programs the parameter
bank over SPI, stages sample-aligned batches of event words into the shared
buffer memory, pulses START/NEW_BATCH/NEW_EPOCH, and harvests the per-epoch
accuracy counter into metrics rows.  Everything advances under one
deterministic scheduler; the host acts only when the FSM reports a
batch/epoch boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .aer import TYPE_END, TYPE_LABEL, lint_stream
from .bus import Bus
from .core import CoreBusAdapter, RsnnCore
from .decoder import DONE, RUNNING, WAIT_BATCH, WAIT_EPOCH, AerDecoder
from .errors import FsmFault, PlanError
from .monitor import ProtocolMonitor
from .spi import (
    REG_N_EPOCHS,
    REG_SAMPLES_PER_BATCH,
    REG_SAMPLES_PER_EPOCH,
    ParamBank,
    SpiFrame,
    spi_transfer,
)

DEFAULT_DEPTH = 16384


class BufferMemory:
    """Bounded word memory shared by the host (writes) and the FSM (reads).

    Every offload bumps a generation tag; reading a word the host has not
    written in the current batch is a fault, so host/FSM desynchronization
    surfaces immediately instead of replaying stale events.
    """

    def __init__(self, depth: int = DEFAULT_DEPTH):
        self.depth = depth
        self._words = [0] * depth
        self._tags = [0] * depth
        self._gen = 1
        self._written = 0

    def write_batch(self, words) -> None:
        n = len(words)
        if n > self.depth:
            raise PlanError(
                f"batch of {n} words exceeds buffer depth {self.depth}")
        self._gen += 1
        gen = self._gen
        w, t = self._words, self._tags
        for i, word in enumerate(words):
            w[i] = word
            t[i] = gen
        self._written = n

    def read(self, addr: int) -> int:
        if addr >= self.depth or self._tags[addr] != self._gen:
            raise FsmFault(
                f"read-before-write at buffer[{addr}] "
                f"(host wrote {self._written} words this batch)")
        return self._words[addr]


@dataclass
class SplitPlan:
    """One dataset split cut into whole-sample batches that fit the buffer."""

    name: str
    words: list[int]
    samples_per_batch: int
    n_samples: int
    batches: list[tuple[int, int]]          # word ranges, sample-aligned
    expected: list[tuple[int, int]]         # (end_tick, label) per sample


def plan_batches(words, samples_per_batch: int, depth: int = DEFAULT_DEPTH,
                 name: str = "stream") -> SplitPlan:
    """Partition a lint-clean stream into equal sample-aligned batches.

    Rejects streams whose sample count is not divisible by the batch size
    (short batches would desynchronize the FSM counters) and batches that
    do not fit the buffer.
    """
    words = list(words)
    errors = [d for d in lint_stream(words) if d.severity == "error"]
    if errors:
        raise PlanError(
            f"{name}: stream fails lint with {len(errors)} errors; "
            f"first: {errors[0]}")
    if samples_per_batch <= 0:
        raise PlanError(f"{name}: samples_per_batch must be positive")

    boundaries = []                         # index one past each EndOfSample
    expected = []
    label = -1
    for i, w in enumerate(words):
        code = w >> 24
        if code == TYPE_LABEL:
            label = (w >> 12) & 0xFFF
        elif code == TYPE_END:
            boundaries.append(i + 1)
            expected.append((w & 0xFFF, label))
            label = -1
    n_samples = len(boundaries)
    if n_samples == 0:
        raise PlanError(f"{name}: stream contains no samples")
    if n_samples % samples_per_batch != 0:
        raise PlanError(
            f"{name}: {n_samples} samples not divisible by batch size "
            f"{samples_per_batch}")

    batches = []
    start = 0
    for b in range(samples_per_batch - 1, n_samples, samples_per_batch):
        end = boundaries[b]
        if end - start > depth:
            raise PlanError(
                f"{name}: batch of {end - start} words exceeds buffer "
                f"depth {depth}")
        batches.append((start, end))
        start = end
    return SplitPlan(name=name, words=words,
                     samples_per_batch=samples_per_batch,
                     n_samples=n_samples, batches=batches, expected=expected)


@dataclass(frozen=True)
class ScheduleEntry:
    """One epoch of the run: which split, whether to learn, reported index."""

    split: str
    learn: bool
    epoch: int


@dataclass
class RunPlan:
    splits: dict
    schedule: list[ScheduleEntry] = field(default_factory=list)

    def validate(self) -> None:
        for e in self.schedule:
            if e.split not in self.splits:
                raise PlanError(f"schedule references unknown split {e.split!r}")


@dataclass(frozen=True)
class MetricsRow:
    epoch: int
    split: str
    correct: int
    total: int
    accuracy: float


def write_metrics_csv(path, rows, aborted: bool = False) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "split", "correct", "total", "accuracy"])
        for r in rows:
            writer.writerow([r.epoch, r.split, r.correct, r.total,
                             repr(r.accuracy)])
        if aborted:
            f.write("# ABORTED\n")


class Cosim:
    """Deterministic scheduler: FSM half-step, core half-step, then sinks."""

    def __init__(self, bus: Bus, fsm: AerDecoder, adapter: CoreBusAdapter,
                 sinks: tuple = ()):
        self.bus = bus
        self.fsm = fsm
        self.adapter = adapter
        self.sinks = tuple(sinks)
        self.step_index = 0

    def step(self) -> int:
        status = self.fsm.step()
        self.adapter.step()
        i = self.step_index
        for sink in self.sinks:
            sink.observe(i, self.bus)
        self.step_index = i + 1
        return status


def run_epochs(plan: RunPlan, core: RsnnCore, bank: ParamBank,
               bus: Bus | None = None, memory: BufferMemory | None = None,
               sinks: tuple = (), monitor: ProtocolMonitor | None = None,
               timeout: int = 64, ready_latency: int = 0,
               max_steps: int | None = None,
               on_row=None) -> list[MetricsRow]:
    """Execute the full epoch schedule; returns one metrics row per epoch.

    The caller provides a configured bank and core; this function drives
    everything else: batch offload, boundary handshakes, per-epoch register
    refresh (epoch size/batch size follow each schedule entry's split), the
    TEST level, and monitor re-arming.
    """
    plan.validate()
    if not plan.schedule:
        return []
    bus = bus or Bus()
    memory = memory or BufferMemory()
    for split in plan.splits.values():
        for start, end in split.batches:
            if end - start > memory.depth:
                raise PlanError(
                    f"{split.name}: planned batch exceeds buffer depth "
                    f"{memory.depth}")

    all_sinks = tuple(sinks) + ((monitor,) if monitor is not None else ())
    fsm = AerDecoder(bus, memory, bank, timeout=timeout)
    adapter = CoreBusAdapter(core, bus, ready_latency=ready_latency)
    sim = Cosim(bus, fsm, adapter, all_sinks)

    def stage_entry(entry: ScheduleEntry) -> SplitPlan:
        split = plan.splits[entry.split]
        spi_transfer(bank, SpiFrame.write(REG_SAMPLES_PER_EPOCH,
                                          split.n_samples))
        spi_transfer(bank, SpiFrame.write(REG_SAMPLES_PER_BATCH,
                                          split.samples_per_batch))
        bus.test = 0 if entry.learn else 1
        if monitor is not None:
            monitor.expect_epoch(split.expected)
        start, end = split.batches[0]
        memory.write_batch(split.words[start:end])
        return split

    rows: list[MetricsRow] = []
    entry_idx = 0
    # the FSM's epoch count must mirror the schedule length exactly
    spi_transfer(bank, SpiFrame.write(REG_N_EPOCHS, len(plan.schedule)))
    split = stage_entry(plan.schedule[0])
    batch_idx = 1

    bus.start = 1
    sim.step()
    bus.start = 0

    steps = 0
    while True:
        status = sim.step()
        steps += 1
        if max_steps is not None and steps > max_steps:
            raise FsmFault(f"run exceeded max_steps={max_steps}")
        if status == RUNNING:
            continue
        if status == WAIT_BATCH:
            start, end = split.batches[batch_idx]
            memory.write_batch(split.words[start:end])
            batch_idx += 1
            bus.new_batch = 1
            sim.step()
            bus.new_batch = 0
        elif status == WAIT_EPOCH:
            if entry_idx >= len(plan.schedule):
                raise FsmFault(
                    "FSM requested an epoch beyond the end of the schedule")
            entry = plan.schedule[entry_idx]
            correct = fsm.last_epoch_acc
            total = plan.splits[entry.split].n_samples
            row = MetricsRow(entry.epoch, entry.split, correct, total,
                             correct / total)
            rows.append(row)
            if on_row is not None:
                on_row(row)
            entry_idx += 1
            if entry_idx < len(plan.schedule):
                split = stage_entry(plan.schedule[entry_idx])
                batch_idx = 1
            bus.new_epoch = 1
            sim.step()
            bus.new_epoch = 0
        elif status == DONE:
            break

    if monitor is not None and monitor.violations:
        raise FsmFault(
            f"protocol monitor reported {len(monitor.violations)} "
            f"violations; first: {monitor.violations[0]}")
    return rows
