"""Vectorized numpy implementation of the tick and learn kernels.

All intermediates are int64 (wide accumulate), saturated once per update
step.  Leak multiplication and learning-rate shifts truncate toward zero;
negative operands are handled by shifting the magnitude so the result never
picks up the floor bias of a plain arithmetic shift.
"""

from __future__ import annotations

import numpy as np

from ..fixedpoint import LEAK_BITS, V_MAX, V_MIN, W_MAX, W_MIN

NAME = "numpy"


def _leak(v: np.ndarray, a: int) -> np.ndarray:
    p = v * a
    return np.where(p >= 0, p >> LEAK_BITS, -((-p) >> LEAK_BITS))


def _trunc_shift(p: np.ndarray, s: int) -> np.ndarray:
    return np.where(p >= 0, p >> s, -((-p) >> s))


def tick(v_hid, v_out, z_hid, zbar_in, zbar_hid, elig_in, elig_rec, elig_out,
         out_accum, w_in, w_rec, w_out, spikes_in,
         threshold, alpha, kappa, firing_mode, quantum):
    """One network timestep, mutating the state arrays in place.

    Order: hidden leak+integrate, fire (pseudo-derivative taken pre-reset),
    output leak+integrate+accumulate, trace update, eligibility update.
    ``z_hid`` holds the previous tick's spikes on entry and this tick's on
    exit.  ``firing_mode`` 0 resets fired membranes to zero, 1 subtracts the
    threshold.
    """
    spikes64 = spikes_in.astype(np.int64)
    acc = _leak(v_hid.astype(np.int64), alpha)
    acc += w_in.astype(np.int64) @ spikes64
    acc += w_rec.astype(np.int64) @ z_hid.astype(np.int64)
    v_new = np.clip(acc, V_MIN, V_MAX)

    h = (np.abs(v_new - threshold) < (threshold >> 1)).astype(np.int64)
    fired = v_new >= threshold
    if firing_mode == 0:
        v_new = np.where(fired, 0, v_new)
    else:
        v_new = np.where(fired, v_new - threshold, v_new)
    v_hid[:] = v_new.astype(np.int16)
    z_new = fired.astype(np.int64)

    vo = _leak(v_out.astype(np.int64), kappa)
    vo += w_out.astype(np.int64) @ z_new
    vo = np.clip(vo, V_MIN, V_MAX)
    v_out[:] = vo.astype(np.int16)
    out_accum += vo

    zbar_in[:] = np.clip(
        _leak(zbar_in.astype(np.int64), alpha) + quantum * spikes64,
        V_MIN, V_MAX).astype(np.int16)
    zbar_hid[:] = np.clip(
        _leak(zbar_hid.astype(np.int64), alpha) + quantum * z_new,
        V_MIN, V_MAX).astype(np.int16)

    elig_in[:] = np.clip(
        elig_in.astype(np.int64) + h[:, None] * zbar_in.astype(np.int64),
        V_MIN, V_MAX).astype(np.int16)
    elig_rec[:] = np.clip(
        elig_rec.astype(np.int64) + h[:, None] * zbar_hid.astype(np.int64),
        V_MIN, V_MAX).astype(np.int16)
    elig_out[:] = np.clip(
        _leak(elig_out.astype(np.int64), kappa) + quantum * z_new[None, :],
        V_MIN, V_MAX).astype(np.int16)

    z_hid[:] = fired.astype(z_hid.dtype)


def learn(w_in, w_rec, w_out, elig_in, elig_rec, elig_out, v_out, out_accum,
          fb, target, use_accum, shift_hid, shift_out):
    """One weight update, mutating the weight matrices in place.

    Error per output is (winner one-hot) - (target one-hot).  The learning
    signal is computed from ``fb`` before w_out is touched, so symmetric
    feedback (fb aliasing w_out) sees the pre-update values.
    """
    if use_accum:
        winner = int(np.argmax(out_accum))
    else:
        winner = int(np.argmax(v_out))
    err = np.zeros(v_out.shape[0], dtype=np.int64)
    err[winner] += 1
    err[target] -= 1
    if not err.any():
        return

    learn_sig = fb.astype(np.int64).T @ err

    p = err[:, None] * elig_out.astype(np.int64)
    w_out[:] = np.clip(
        w_out.astype(np.int64) - _trunc_shift(p, shift_out),
        W_MIN, W_MAX).astype(np.int8)

    p = learn_sig[:, None] * elig_in.astype(np.int64)
    w_in[:] = np.clip(
        w_in.astype(np.int64) - _trunc_shift(p, shift_hid),
        W_MIN, W_MAX).astype(np.int8)

    p = learn_sig[:, None] * elig_rec.astype(np.int64)
    w_rec[:] = np.clip(
        w_rec.astype(np.int64) - _trunc_shift(p, shift_hid),
        W_MIN, W_MAX).astype(np.int8)
    np.fill_diagonal(w_rec, 0)


def warmup() -> None:
    """No compilation step for the numpy backend."""
