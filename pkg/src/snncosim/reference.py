"""Double-precision reference network with swappable learning pieces.

This mirrors the integer core's update order exactly but runs in float64,
so it serves two jobs: an oracle for trajectory tests (with dyadic leaks
and no saturation the two models agree bit for bit), and the float-mode
vehicle for gradient-direction checks against an unrolled-in-time oracle.

Swappable pieces, each a config field:
  - surrogate: "boxcar" (1 inside a half-threshold band, the comparator
    form the integer core uses) or "triangular" (peak 1 at threshold,
    linear falloff over a half-threshold half-width).
  - error_mode: "sign" (one-hot winner minus one-hot target, the integer
    core's divider-free rule) or "mse" (per-tick readout minus a float
    target vector).
  - elig_mode: "accumulate" (running sums, mirroring the integer
    datapath) or "filtered" (output-leak low-pass of the per-tick traces,
    which makes the update match the unrolled gradient's temporal credit).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SURROGATES = ("boxcar", "triangular")
ERROR_MODES = ("sign", "mse")
ELIG_MODES = ("accumulate", "filtered")
FIRING_MODES = ("reset", "subtract")
READOUTS = ("accumulated", "final-membrane")


def surrogate_grad(v_pre, threshold: float, kind: str) -> np.ndarray:
    """Pseudo-derivative of the spike nonlinearity at pre-reset membranes."""
    half = threshold / 2.0
    dist = np.abs(v_pre - threshold)
    if kind == "boxcar":
        return (dist < half).astype(np.float64)
    if kind == "triangular":
        return np.maximum(0.0, 1.0 - dist / half)
    raise ValueError(f"unknown surrogate {kind!r}")


@dataclass
class FloatConfig:
    n_in: int
    n_hid: int
    n_out: int
    threshold: float
    alpha: float                       # hidden leak factor in [0, 1]
    kappa: float                       # output leak factor in [0, 1]
    firing_mode: str = "reset"
    surrogate: str = "boxcar"
    error_mode: str = "sign"
    elig_mode: str = "accumulate"
    readout: str = "accumulated"
    trace_quantum: float = 1.0
    lr: float = 1.0 / 16.0

    def validate(self) -> None:
        if self.surrogate not in SURROGATES:
            raise ValueError(f"unknown surrogate {self.surrogate!r}")
        if self.error_mode not in ERROR_MODES:
            raise ValueError(f"unknown error_mode {self.error_mode!r}")
        if self.elig_mode not in ELIG_MODES:
            raise ValueError(f"unknown elig_mode {self.elig_mode!r}")
        if self.firing_mode not in FIRING_MODES:
            raise ValueError(f"unknown firing_mode {self.firing_mode!r}")
        if self.readout not in READOUTS:
            raise ValueError(f"unknown readout {self.readout!r}")
        if not (0.0 <= self.alpha <= 1.0 and 0.0 <= self.kappa <= 1.0):
            raise ValueError("leak factors must lie in [0, 1]")


class FloatNet:
    """Float64 twin of the integer core; weights are copied, never aliased.

    ``step(..., apply=True)`` updates weights immediately (the integer
    core's per-tick behavior); ``apply=False`` accumulates the would-be
    update into ``dw_in/dw_rec/dw_out`` so an episode's total update can
    be compared against a gradient oracle without disturbing the run.
    """

    def __init__(self, cfg: FloatConfig, w_in, w_rec, w_out, fb=None):
        cfg.validate()
        self.cfg = cfg
        self.w_in = np.asarray(w_in, np.float64).copy()
        self.w_rec = np.asarray(w_rec, np.float64).copy()
        self.w_out = np.asarray(w_out, np.float64).copy()
        if self.w_in.shape != (cfg.n_hid, cfg.n_in):
            raise ValueError("w_in shape mismatch")
        if self.w_rec.shape != (cfg.n_hid, cfg.n_hid):
            raise ValueError("w_rec shape mismatch")
        if self.w_out.shape != (cfg.n_out, cfg.n_hid):
            raise ValueError("w_out shape mismatch")
        self._fb = None if fb is None else np.asarray(fb, np.float64).copy()
        self.reset_sample()
        self.zero_updates()

    @property
    def fb(self) -> np.ndarray:
        return self.w_out if self._fb is None else self._fb

    def reset_sample(self) -> None:
        cfg = self.cfg
        self.v_hid = np.zeros(cfg.n_hid)
        self.v_out = np.zeros(cfg.n_out)
        self.out_accum = np.zeros(cfg.n_out)
        self.z_prev = np.zeros(cfg.n_hid)
        self.zbar_in = np.zeros(cfg.n_in)
        self.zbar_hid = np.zeros(cfg.n_hid)
        self.zbar_rec = np.zeros(cfg.n_hid)     # filtered previous spikes
        self.elig_in = np.zeros((cfg.n_hid, cfg.n_in))
        self.elig_rec = np.zeros((cfg.n_hid, cfg.n_hid))
        self.elig_out = np.zeros(cfg.n_hid)
        self.tick = 0

    def zero_updates(self) -> None:
        cfg = self.cfg
        self.dw_in = np.zeros((cfg.n_hid, cfg.n_in))
        self.dw_rec = np.zeros((cfg.n_hid, cfg.n_hid))
        self.dw_out = np.zeros((cfg.n_out, cfg.n_hid))

    def step(self, x, learn: bool = False, target=None,
             apply: bool = True) -> np.ndarray:
        cfg = self.cfg
        x = np.asarray(x, np.float64)
        q = cfg.trace_quantum

        self.v_hid = cfg.alpha * self.v_hid + self.w_in @ x \
            + self.w_rec @ self.z_prev
        psi = surrogate_grad(self.v_hid, cfg.threshold, cfg.surrogate)
        z = (self.v_hid >= cfg.threshold).astype(np.float64)
        if cfg.firing_mode == "reset":
            self.v_hid = np.where(z > 0, 0.0, self.v_hid)
        else:
            self.v_hid = self.v_hid - cfg.threshold * z

        self.v_out = cfg.kappa * self.v_out + self.w_out @ z
        self.out_accum += self.v_out

        self.zbar_in = cfg.alpha * self.zbar_in + q * x
        self.zbar_hid = cfg.alpha * self.zbar_hid + q * z
        if cfg.elig_mode == "accumulate":
            self.elig_in += np.outer(psi, self.zbar_in)
            self.elig_rec += np.outer(psi, self.zbar_hid)
            self.elig_out = cfg.kappa * self.elig_out + q * z
        else:
            self.zbar_rec = cfg.alpha * self.zbar_rec + q * self.z_prev
            self.elig_in = cfg.kappa * self.elig_in \
                + np.outer(psi, self.zbar_in)
            self.elig_rec = cfg.kappa * self.elig_rec \
                + np.outer(psi, self.zbar_rec)
            self.elig_out = cfg.kappa * self.elig_out + q * z

        if learn:
            self._learn(target, apply)

        self.z_prev = z
        self.tick += 1
        return z

    def _error(self, target) -> np.ndarray:
        cfg = self.cfg
        if cfg.error_mode == "sign":
            scores = self.out_accum if cfg.readout == "accumulated" \
                else self.v_out
            winner = int(np.argmax(scores))
            err = np.zeros(cfg.n_out)
            err[winner] += 1.0
            err[int(target)] -= 1.0
            return err
        return self.v_out - np.asarray(target, np.float64)

    def _learn(self, target, apply: bool) -> None:
        err = self._error(target)
        learn_sig = self.fb.T @ err
        d_out = np.outer(err, self.elig_out)
        d_in = learn_sig[:, None] * self.elig_in
        d_rec = learn_sig[:, None] * self.elig_rec
        if apply:
            lr = self.cfg.lr
            self.w_out -= lr * d_out
            self.w_in -= lr * d_in
            self.w_rec -= lr * d_rec
            np.fill_diagonal(self.w_rec, 0.0)
        else:
            self.dw_out += d_out
            self.dw_in += d_in
            self.dw_rec += d_rec

    def readout_classification(self) -> int:
        scores = self.out_accum if self.cfg.readout == "accumulated" \
            else self.v_out
        return int(np.argmax(scores))
