"""Behavioral model of the accelerator core.

A recurrent layer of leaky integrate-and-fire neurons driven by input
spikes, a non-spiking leaky-integrator output layer, per-synapse eligibility
accumulators, and an online weight-update rule driven by a broadcast error
signal.  All dynamics run in saturating fixed point (16-bit membranes, 8-bit
weights and leak fractions) through the kernel backends, so trajectories are
bit-reproducible for a given seed.

``CoreBusAdapter`` gives the core its bus personality: it acknowledges input
spikes on the AER channel, executes one network tick per TIME_TICK pulse,
learns while TARGET_VALID is high, and sends the inferred class over the
output channel after SAMPLE falls.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .bus import Bus
from .errors import SimError
from .fixedpoint import LEAK_MAX, TRACE_QUANTUM, V_MAX
from .prng import XorShift64Star

FIRING_RESET = 0
FIRING_SUBTRACT = 1
FIRING_MODES = {"reset-to-zero": FIRING_RESET, "subtract-threshold": FIRING_SUBTRACT}

FEEDBACK_SYMMETRIC = 0
FEEDBACK_RANDOM = 1
FEEDBACK_MODES = {"symmetric": FEEDBACK_SYMMETRIC, "fixed-random": FEEDBACK_RANDOM}

WEIGHT_INIT_LO = -16
WEIGHT_INIT_HI = 15

SNAPSHOT_MAGIC = b"RSNNSNP1"
_HEADER = struct.Struct("<HHHhBBBBBBQ")


@dataclass
class NetworkConfig:
    """Sizes, fixed-point hyperparameters, and learning-rule settings."""

    n_in: int
    n_hid: int
    n_out: int
    threshold: int = 0x03F0
    alpha: int = 0xFE
    kappa: int = 0x37
    firing_mode: int = FIRING_RESET
    lr_shift_hid: int = 4
    lr_shift_out: int = 4
    feedback_mode: int = FEEDBACK_SYMMETRIC
    feedback_seed: int = 1

    def validate(self) -> None:
        if not 1 <= self.n_in <= 256:
            raise SimError(f"n_in={self.n_in} outside [1, 256]")
        if not 1 <= self.n_hid <= 256:
            raise SimError(f"n_hid={self.n_hid} outside [1, 256]")
        if not 1 <= self.n_out <= 16:
            raise SimError(f"n_out={self.n_out} outside [1, 16]")
        if not 0 < self.threshold <= V_MAX:
            raise SimError(f"threshold={self.threshold:#x} must be positive 16-bit")
        for name in ("alpha", "kappa"):
            v = getattr(self, name)
            if not 0 <= v <= LEAK_MAX:
                raise SimError(f"{name}={v:#x} outside 8-bit unsigned range")
        if self.firing_mode not in (FIRING_RESET, FIRING_SUBTRACT):
            raise SimError(f"firing_mode={self.firing_mode} unknown")
        if self.feedback_mode not in (FEEDBACK_SYMMETRIC, FEEDBACK_RANDOM):
            raise SimError(f"feedback_mode={self.feedback_mode} unknown")
        for name in ("lr_shift_hid", "lr_shift_out"):
            v = getattr(self, name)
            if not 0 <= v <= 31:
                raise SimError(f"{name}={v} outside [0, 31]")


@dataclass
class NetworkState:
    """Weights plus all per-sample dynamic state."""

    w_in: np.ndarray
    w_rec: np.ndarray
    w_out: np.ndarray
    v_hid: np.ndarray
    v_out: np.ndarray
    z_hid: np.ndarray
    zbar_in: np.ndarray
    zbar_hid: np.ndarray
    elig_in: np.ndarray
    elig_rec: np.ndarray
    elig_out: np.ndarray
    out_accum: np.ndarray
    tick: int = 0

    @classmethod
    def zeros(cls, cfg: NetworkConfig) -> "NetworkState":
        return cls(
            w_in=np.zeros((cfg.n_hid, cfg.n_in), np.int8),
            w_rec=np.zeros((cfg.n_hid, cfg.n_hid), np.int8),
            w_out=np.zeros((cfg.n_out, cfg.n_hid), np.int8),
            v_hid=np.zeros(cfg.n_hid, np.int16),
            v_out=np.zeros(cfg.n_out, np.int16),
            z_hid=np.zeros(cfg.n_hid, np.uint8),
            zbar_in=np.zeros(cfg.n_in, np.int16),
            zbar_hid=np.zeros(cfg.n_hid, np.int16),
            elig_in=np.zeros((cfg.n_hid, cfg.n_in), np.int16),
            elig_rec=np.zeros((cfg.n_hid, cfg.n_hid), np.int16),
            elig_out=np.zeros((cfg.n_out, cfg.n_hid), np.int16),
            out_accum=np.zeros(cfg.n_out, np.int64),
        )


def init_weights(state: NetworkState, seed: int,
                 lo: int = WEIGHT_INIT_LO, hi: int = WEIGHT_INIT_HI) -> None:
    """Fill all three weight matrices from one seeded stream.

    Draw order (w_in, w_rec, w_out, each row-major) is part of the file
    contract: the same seed must give the same network everywhere.  The
    recurrent diagonal is cleared after drawing.  ``lo``/``hi`` set the
    uniform draw range; wider ranges suit high firing thresholds.
    """
    if not -128 <= lo <= hi <= 127:
        raise SimError(f"weight init range [{lo}, {hi}] invalid for int8")
    g = XorShift64Star(seed)
    for m in (state.w_in, state.w_rec, state.w_out):
        flat = m.reshape(-1)
        for i in range(flat.shape[0]):
            flat[i] = g.next_range(lo, hi)
    np.fill_diagonal(state.w_rec, 0)


class RsnnCore:
    """Single-owner network instance: one logical thread drives it."""

    def __init__(self, cfg: NetworkConfig, seed: int | None = None,
                 state: NetworkState | None = None):
        cfg.validate()
        self.cfg = cfg
        self.state = state if state is not None else NetworkState.zeros(cfg)
        if seed is not None:
            init_weights(self.state, seed)
        if cfg.feedback_mode == FEEDBACK_RANDOM:
            self._fb = XorShift64Star(cfg.feedback_seed).fill_int8(
                (cfg.n_out, cfg.n_hid), WEIGHT_INIT_LO, WEIGHT_INIT_HI)
        else:
            self._fb = self.state.w_out  # live alias: symmetric feedback
        self._spike_vec = np.zeros(cfg.n_in, np.uint8)

    def reset_sample_state(self) -> None:
        """Zero everything except the weights."""
        s = self.state
        s.v_hid[:] = 0
        s.v_out[:] = 0
        s.z_hid[:] = 0
        s.zbar_in[:] = 0
        s.zbar_hid[:] = 0
        s.elig_in[:] = 0
        s.elig_rec[:] = 0
        s.elig_out[:] = 0
        s.out_accum[:] = 0
        s.tick = 0

    def step_tick(self, spikes=None, learn: bool = False,
                  target: int = -1, infer_acc: bool = True) -> np.ndarray:
        """Advance one timestep; returns the new hidden spike bits (live view).

        ``spikes`` is an iterable of input addresses or an n_in indicator
        array.  With ``learn`` set, a weight update using ``target`` follows
        the state update within the same tick.
        """
        if spikes is None:
            vec = self._spike_vec
            vec[:] = 0
        elif isinstance(spikes, np.ndarray):
            vec = spikes
        else:
            vec = self._spike_vec
            vec[:] = 0
            n_in = self.cfg.n_in
            for a in spikes:
                if not 0 <= a < n_in:
                    raise SimError(f"spike address {a} outside n_in={n_in}")
                vec[a] = 1
        self._tick_raw(vec, learn, target, infer_acc)
        return self.state.z_hid

    def _tick_raw(self, spike_vec: np.ndarray, learn: bool,
                  target: int, infer_acc: bool) -> None:
        s, cfg = self.state, self.cfg
        kernels.tick(
            s.v_hid, s.v_out, s.z_hid, s.zbar_in, s.zbar_hid,
            s.elig_in, s.elig_rec, s.elig_out, s.out_accum,
            s.w_in, s.w_rec, s.w_out, spike_vec,
            cfg.threshold, cfg.alpha, cfg.kappa, cfg.firing_mode,
            TRACE_QUANTUM)
        if learn:
            self.apply_eprop_update(target, infer_acc)
        s.tick += 1

    def apply_eprop_update(self, target: int, infer_acc: bool = True) -> None:
        """One weight update against ``target`` using the current traces."""
        s, cfg = self.state, self.cfg
        if not 0 <= target < cfg.n_out:
            raise SimError(f"invalid target {target} for n_out={cfg.n_out}")
        kernels.learn(
            s.w_in, s.w_rec, s.w_out, s.elig_in, s.elig_rec, s.elig_out,
            s.v_out, s.out_accum, self._fb, target, infer_acc,
            cfg.lr_shift_hid, cfg.lr_shift_out)

    def readout_classification(self, mode: str = "accumulated") -> int:
        """Winning output index; ties go to the lowest index."""
        if mode == "accumulated":
            return int(np.argmax(self.state.out_accum))
        if mode == "final-membrane":
            return int(np.argmax(self.state.v_out))
        raise SimError(f"unknown readout mode {mode!r}")

    def readout_regression(self) -> np.ndarray:
        """Snapshot of the output membranes at the current tick."""
        return self.state.v_out.copy()

    def weight_hash(self) -> str:
        """SHA-256 over the three weight matrices (shape-tagged)."""
        m = hashlib.sha256()
        for a in (self.state.w_in, self.state.w_rec, self.state.w_out):
            m.update(struct.pack("<HH", *a.shape))
            m.update(a.tobytes())
        return m.hexdigest()

    def save_snapshot(self, path) -> None:
        cfg = self.cfg
        with open(path, "wb") as f:
            f.write(SNAPSHOT_MAGIC)
            f.write(_HEADER.pack(
                cfg.n_in, cfg.n_hid, cfg.n_out, cfg.threshold,
                cfg.alpha, cfg.kappa, cfg.firing_mode, cfg.feedback_mode,
                cfg.lr_shift_hid, cfg.lr_shift_out, cfg.feedback_seed))
            f.write(self.state.w_in.tobytes())
            f.write(self.state.w_rec.tobytes())
            f.write(self.state.w_out.tobytes())

    @classmethod
    def load_snapshot(cls, path) -> "RsnnCore":
        with open(path, "rb") as f:
            blob = f.read()
        if blob[:8] != SNAPSHOT_MAGIC:
            raise SimError(f"{path}: not a network snapshot (bad magic)")
        hdr = blob[8:8 + _HEADER.size]
        if len(hdr) < _HEADER.size:
            raise SimError(f"{path}: truncated snapshot header")
        (n_in, n_hid, n_out, threshold, alpha, kappa, firing_mode,
         feedback_mode, sh, so, fb_seed) = _HEADER.unpack(hdr)
        cfg = NetworkConfig(
            n_in=n_in, n_hid=n_hid, n_out=n_out, threshold=threshold,
            alpha=alpha, kappa=kappa, firing_mode=firing_mode,
            lr_shift_hid=sh, lr_shift_out=so, feedback_mode=feedback_mode,
            feedback_seed=fb_seed)
        core = cls(cfg)
        sizes = (n_hid * n_in, n_hid * n_hid, n_out * n_hid)
        if len(blob) != 8 + _HEADER.size + sum(sizes):
            raise SimError(f"{path}: snapshot length does not match header sizes")
        off = 8 + _HEADER.size
        for m, n in zip((core.state.w_in, core.state.w_rec, core.state.w_out),
                        sizes):
            m.reshape(-1)[:] = np.frombuffer(blob, np.int8, n, off)
            off += n
        return core


class CoreBusAdapter:
    """Drives the core's side of the bus, one call per scheduler step.

    Per step: detect SAMPLE edges (reset on rise, emit inference on fall),
    execute a network tick on TIME_TICK (learning while TARGET_VALID is
    high), acknowledge the input AER handshake, and run the request side of
    the output handshake.  ``ready_latency`` holds TIMING_ERROR_RDY low for
    that many steps after each executed tick.
    """

    def __init__(self, core: RsnnCore, bus: Bus, ready_latency: int = 0):
        self.core = core
        self.bus = bus
        self.ready_latency = ready_latency
        self._spikes = np.zeros(core.cfg.n_in, np.uint8)
        self._prev_sample = 0
        self._pending_out = -1
        self._ready_wait = 0
        bus.timing_error_rdy = 1

    def step(self) -> None:
        bus = self.bus
        core = self.core
        sample = bus.sample
        if sample != self._prev_sample:
            if sample:
                core.reset_sample_state()
                self._spikes[:] = 0
                self._pending_out = -1
            else:
                mode = "accumulated" if bus.infer_acc else "final-membrane"
                self._pending_out = core.readout_classification(mode)
            self._prev_sample = sample

        if bus.time_tick:
            core._tick_raw(self._spikes, bus.target_valid != 0,
                           bus.target_data, bus.infer_acc != 0)
            self._spikes[:] = 0
            if self.ready_latency:
                self._ready_wait = self.ready_latency
                bus.timing_error_rdy = 0
        elif self._ready_wait:
            self._ready_wait -= 1
            if self._ready_wait == 0:
                bus.timing_error_rdy = 1

        if bus.aer_req:
            if not bus.aer_ack:
                addr = bus.aer_addr
                if addr >= core.cfg.n_in:
                    raise SimError(
                        f"spike address {addr} outside n_in={core.cfg.n_in}")
                self._spikes[addr] = 1
                bus.aer_ack = 1
        elif bus.aer_ack:
            bus.aer_ack = 0

        if self._pending_out >= 0:
            if not bus.out_req and not bus.out_ack:
                bus.out_data = self._pending_out
                bus.out_req = 1
            elif bus.out_req and bus.out_ack:
                bus.out_req = 0
                self._pending_out = -1
