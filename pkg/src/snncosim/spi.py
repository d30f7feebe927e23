"""SPI slave model: parameter bank registers and the memory access window.

Frames are 32 bits: [31] read/write flag (1 = write), [30:16] address,
[15:0] data.  Addresses 0x0000-0x00FF are the 16-bit configuration
registers; addresses from 0x4000 upward form a window into the attached
network state (weights packed two signed bytes per word, little-endian,
then hidden and output membranes one 16-bit word each).  Unassigned
register reads return 0; unassigned writes are rejected.

Config scripts reuse the hex-word-per-line stream file format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np

from .aer import read_words
from .errors import SpiError

REG_THRESHOLD = 0x00
REG_ALPHA_LSB = 0x01
REG_KAPPA = 0x02
REG_N_IN = 0x03
REG_N_HID = 0x04
REG_N_OUT = 0x05
REG_FIRING_MODE = 0x06
REG_LR_SHIFT = 0x07
REG_SAMPLES_PER_EPOCH = 0x08
REG_SAMPLES_PER_BATCH = 0x09
REG_N_EPOCHS = 0x0A
REG_LABEL_DELAY = 0x0B
REG_INFER_ACC_EN = 0x0C
REG_SEED_LO = 0x0D
REG_SEED_HI = 0x0E

REGISTERS = {
    "THRESHOLD": REG_THRESHOLD,
    "ALPHA_LSB": REG_ALPHA_LSB,
    "KAPPA": REG_KAPPA,
    "N_IN": REG_N_IN,
    "N_HID": REG_N_HID,
    "N_OUT": REG_N_OUT,
    "FIRING_MODE": REG_FIRING_MODE,
    "LR_SHIFT": REG_LR_SHIFT,
    "SAMPLES_PER_EPOCH": REG_SAMPLES_PER_EPOCH,
    "SAMPLES_PER_BATCH": REG_SAMPLES_PER_BATCH,
    "N_EPOCHS": REG_N_EPOCHS,
    "LABEL_DELAY": REG_LABEL_DELAY,
    "INFER_ACC_EN": REG_INFER_ACC_EN,
    "SEED_LO": REG_SEED_LO,
    "SEED_HI": REG_SEED_HI,
}

RESET_VALUES = {
    REG_THRESHOLD: 0x03F0,
    REG_ALPHA_LSB: 0x00FE,
    REG_KAPPA: 0x0037,
    REG_LR_SHIFT: 0x0404,
    REG_INFER_ACC_EN: 0x0001,
}

MEM_WINDOW_BASE = 0x4000
ADDR_MASK = 0x7FFF


def pack_lr_shift(shift_hid: int, shift_out: int) -> int:
    """LR_SHIFT register layout: low byte hidden shift, high byte output shift."""
    return ((shift_out & 0xFF) << 8) | (shift_hid & 0xFF)


def unpack_lr_shift(value: int) -> tuple[int, int]:
    return value & 0xFF, (value >> 8) & 0xFF


@dataclass(frozen=True)
class SpiFrame:
    raw: int

    @classmethod
    def write(cls, addr: int, data: int) -> "SpiFrame":
        if not 0 <= addr <= ADDR_MASK:
            raise SpiError(f"address {addr:#x} outside 15-bit range")
        if not 0 <= data <= 0xFFFF:
            raise SpiError(f"data {data:#x} outside 16-bit range")
        return cls((1 << 31) | (addr << 16) | data)

    @classmethod
    def read(cls, addr: int) -> "SpiFrame":
        if not 0 <= addr <= ADDR_MASK:
            raise SpiError(f"address {addr:#x} outside 15-bit range")
        return cls(addr << 16)

    @property
    def is_write(self) -> bool:
        return bool(self.raw >> 31)

    @property
    def addr(self) -> int:
        return (self.raw >> 16) & ADDR_MASK

    @property
    def data(self) -> int:
        return self.raw & 0xFFFF


class RuntimeParams(NamedTuple):
    """The registers the decoder FSM snapshots at run/epoch boundaries."""

    samples_per_epoch: int
    samples_per_batch: int
    n_epochs: int
    label_delay: int
    infer_acc_en: int


class ParamBank:
    """Configuration registers plus an optional window into network storage."""

    def __init__(self):
        self._regs = dict(RESET_VALUES)
        for addr in REGISTERS.values():
            self._regs.setdefault(addr, 0)
        self._state = None
        self._regions: list[tuple[int, np.ndarray, bool]] = []

    def attach_state(self, state) -> None:
        """Expose a NetworkState's storage through the memory window.

        Window order: w_in, w_rec, w_out (packed bytes), v_hid, v_out
        (16-bit words).  Each region starts on a word boundary.
        """
        self._state = state
        self._regions = []
        offset = 0
        for m in (state.w_in, state.w_rec, state.w_out):
            flat = m.reshape(-1).view(np.uint8)
            self._regions.append((offset, flat, True))
            offset += (flat.shape[0] + 1) // 2
        for v in (state.v_hid, state.v_out):
            flat = v.view(np.uint16)
            self._regions.append((offset, flat, False))
            offset += flat.shape[0]
        self._window_words = offset

    def read(self, addr: int) -> int:
        if addr >= MEM_WINDOW_BASE:
            return self._mem_read(addr - MEM_WINDOW_BASE)
        if addr > 0xFF or addr not in self._regs:
            return 0
        return self._regs[addr]

    def write(self, addr: int, data: int) -> None:
        if addr >= MEM_WINDOW_BASE:
            self._mem_write(addr - MEM_WINDOW_BASE, data)
            return
        if addr > 0xFF or addr not in self._regs:
            raise SpiError(f"write to unassigned register {addr:#06x}")
        self._regs[addr] = data & 0xFFFF

    def _locate(self, widx: int):
        if self._state is None:
            raise SpiError("memory window accessed with no attached state")
        if not 0 <= widx < self._window_words:
            raise SpiError(
                f"memory window word {widx:#x} outside "
                f"[0, {self._window_words:#x})")
        for base, flat, packed in reversed(self._regions):
            if widx >= base:
                return widx - base, flat, packed
        raise SpiError(f"memory window word {widx:#x} unmapped")

    def _mem_read(self, widx: int) -> int:
        off, flat, packed = self._locate(widx)
        if not packed:
            return int(flat[off])
        lo = int(flat[2 * off])
        hi = int(flat[2 * off + 1]) if 2 * off + 1 < flat.shape[0] else 0
        return lo | (hi << 8)

    def _mem_write(self, widx: int, data: int) -> None:
        off, flat, packed = self._locate(widx)
        if not packed:
            flat[off] = data & 0xFFFF
            return
        flat[2 * off] = data & 0xFF
        if 2 * off + 1 < flat.shape[0]:
            flat[2 * off + 1] = (data >> 8) & 0xFF

    def runtime_snapshot(self) -> RuntimeParams:
        return RuntimeParams(
            samples_per_epoch=self.read(REG_SAMPLES_PER_EPOCH),
            samples_per_batch=self.read(REG_SAMPLES_PER_BATCH),
            n_epochs=self.read(REG_N_EPOCHS),
            label_delay=self.read(REG_LABEL_DELAY),
            infer_acc_en=self.read(REG_INFER_ACC_EN),
        )

    def seed(self) -> int:
        return self.read(REG_SEED_LO) | (self.read(REG_SEED_HI) << 16)


def spi_transfer(bank: ParamBank, frame: SpiFrame) -> int:
    """Execute one frame; writes echo the written value, reads return it."""
    if frame.is_write:
        bank.write(frame.addr, frame.data)
        return frame.data
    return bank.read(frame.addr)


@dataclass
class ScriptReport:
    """Outcome of applying a config script; rejects stop the script."""

    applied: int = 0
    rejected: list = field(default_factory=list)  # (index, frame, message)

    @property
    def ok(self) -> bool:
        return not self.rejected


def load_config_script(bank: ParamBank, frames: Iterable[SpiFrame]) -> ScriptReport:
    """Apply frames in order, stopping at the first rejected one."""
    report = ScriptReport()
    for i, frame in enumerate(frames):
        try:
            spi_transfer(bank, frame)
        except SpiError as err:
            report.rejected.append((i, frame, str(err)))
            break
        report.applied += 1
    return report


def script_from_file(path: str | Path) -> list[SpiFrame]:
    """Parse a hex-word config script file into frames."""
    return [SpiFrame(w) for w in read_words(path)]


def script_to_file(path: str | Path, frames: Iterable[SpiFrame],
                   header: str | None = None) -> None:
    from .aer import write_words
    write_words(path, (f.raw for f in frames), header=header)


def network_config_from_bank(bank: ParamBank):
    """Build a NetworkConfig from the current register values."""
    from .core import NetworkConfig
    sh, so = unpack_lr_shift(bank.read(REG_LR_SHIFT))
    threshold = bank.read(REG_THRESHOLD)
    if threshold >= 0x8000:
        threshold -= 0x10000
    return NetworkConfig(
        n_in=bank.read(REG_N_IN),
        n_hid=bank.read(REG_N_HID),
        n_out=bank.read(REG_N_OUT),
        threshold=threshold,
        alpha=bank.read(REG_ALPHA_LSB) & 0xFF,
        kappa=bank.read(REG_KAPPA) & 0xFF,
        firing_mode=bank.read(REG_FIRING_MODE),
        lr_shift_hid=sh,
        lr_shift_out=so,
    )
