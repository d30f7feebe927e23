"""Numba-jitted implementation of the tick and learn kernels.

Scalar loops over int64 locals, mirroring the numpy backend operation for
operation so the two produce bit-identical states.  Compiled lazily with an
on-disk cache; call warmup() once before timing anything.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..fixedpoint import V_MAX, V_MIN, W_MAX, W_MIN

NAME = "numba"


@njit(cache=True)
def tick(v_hid, v_out, z_hid, zbar_in, zbar_hid, elig_in, elig_rec, elig_out,
         out_accum, w_in, w_rec, w_out, spikes_in,
         threshold, alpha, kappa, firing_mode, quantum):
    n_hid = v_hid.shape[0]
    n_in = zbar_in.shape[0]
    n_out = v_out.shape[0]
    half = threshold >> 1

    # gather active presynaptic indices once; integration touches only them
    act_in = np.empty(n_in, np.int64)
    na = 0
    for i in range(n_in):
        if spikes_in[i]:
            act_in[na] = i
            na += 1
    act_rec = np.empty(n_hid, np.int64)
    nr = 0
    for k in range(n_hid):
        if z_hid[k]:
            act_rec[nr] = k
            nr += 1

    h = np.empty(n_hid, np.int64)
    z_new = np.empty(n_hid, np.uint8)
    for j in range(n_hid):
        p = np.int64(v_hid[j]) * alpha
        acc = p >> 8 if p >= 0 else -((-p) >> 8)
        for t in range(na):
            acc += w_in[j, act_in[t]]
        for t in range(nr):
            acc += w_rec[j, act_rec[t]]
        if acc > V_MAX:
            acc = V_MAX
        elif acc < V_MIN:
            acc = V_MIN
        d = acc - threshold
        if d < 0:
            d = -d
        h[j] = 1 if d < half else 0
        if acc >= threshold:
            z_new[j] = 1
            acc = 0 if firing_mode == 0 else acc - threshold
        else:
            z_new[j] = 0
        v_hid[j] = acc

    for k in range(n_out):
        p = np.int64(v_out[k]) * kappa
        acc = p >> 8 if p >= 0 else -((-p) >> 8)
        for j in range(n_hid):
            if z_new[j]:
                acc += w_out[k, j]
        if acc > V_MAX:
            acc = V_MAX
        elif acc < V_MIN:
            acc = V_MIN
        v_out[k] = acc
        out_accum[k] += acc

    for i in range(n_in):
        p = np.int64(zbar_in[i]) * alpha
        acc = p >> 8 if p >= 0 else -((-p) >> 8)
        if spikes_in[i]:
            acc += quantum
        if acc > V_MAX:
            acc = V_MAX
        elif acc < V_MIN:
            acc = V_MIN
        zbar_in[i] = acc
    for j in range(n_hid):
        p = np.int64(zbar_hid[j]) * alpha
        acc = p >> 8 if p >= 0 else -((-p) >> 8)
        if z_new[j]:
            acc += quantum
        if acc > V_MAX:
            acc = V_MAX
        elif acc < V_MIN:
            acc = V_MIN
        zbar_hid[j] = acc

    for j in range(n_hid):
        if h[j]:
            for i in range(n_in):
                acc = np.int64(elig_in[j, i]) + zbar_in[i]
                if acc > V_MAX:
                    acc = V_MAX
                elif acc < V_MIN:
                    acc = V_MIN
                elig_in[j, i] = acc
            for k in range(n_hid):
                acc = np.int64(elig_rec[j, k]) + zbar_hid[k]
                if acc > V_MAX:
                    acc = V_MAX
                elif acc < V_MIN:
                    acc = V_MIN
                elig_rec[j, k] = acc
    for k in range(n_out):
        for j in range(n_hid):
            p = np.int64(elig_out[k, j]) * kappa
            acc = p >> 8 if p >= 0 else -((-p) >> 8)
            if z_new[j]:
                acc += quantum
            if acc > V_MAX:
                acc = V_MAX
            elif acc < V_MIN:
                acc = V_MIN
            elig_out[k, j] = acc

    for j in range(n_hid):
        z_hid[j] = z_new[j]


@njit(cache=True)
def learn(w_in, w_rec, w_out, elig_in, elig_rec, elig_out, v_out, out_accum,
          fb, target, use_accum, shift_hid, shift_out):
    n_hid = w_in.shape[0]
    n_in = w_in.shape[1]
    n_out = v_out.shape[0]

    winner = 0
    if use_accum:
        best = out_accum[0]
        for k in range(1, n_out):
            if out_accum[k] > best:
                best = out_accum[k]
                winner = k
    else:
        best16 = v_out[0]
        for k in range(1, n_out):
            if v_out[k] > best16:
                best16 = v_out[k]
                winner = k
    if winner == target:
        return

    err = np.zeros(n_out, np.int64)
    err[winner] += 1
    err[target] -= 1

    # learning signal from the feedback matrix before w_out changes
    learn_sig = np.zeros(n_hid, np.int64)
    for k in range(n_out):
        e = err[k]
        if e != 0:
            for j in range(n_hid):
                learn_sig[j] += np.int64(fb[k, j]) * e

    for k in range(n_out):
        e = err[k]
        if e == 0:
            continue
        for j in range(n_hid):
            p = e * np.int64(elig_out[k, j])
            d = p >> shift_out if p >= 0 else -((-p) >> shift_out)
            acc = np.int64(w_out[k, j]) - d
            if acc > W_MAX:
                acc = W_MAX
            elif acc < W_MIN:
                acc = W_MIN
            w_out[k, j] = acc

    for j in range(n_hid):
        sig = learn_sig[j]
        if sig == 0:
            continue
        for i in range(n_in):
            p = sig * np.int64(elig_in[j, i])
            d = p >> shift_hid if p >= 0 else -((-p) >> shift_hid)
            acc = np.int64(w_in[j, i]) - d
            if acc > W_MAX:
                acc = W_MAX
            elif acc < W_MIN:
                acc = W_MIN
            w_in[j, i] = acc
        for k in range(n_hid):
            p = sig * np.int64(elig_rec[j, k])
            d = p >> shift_hid if p >= 0 else -((-p) >> shift_hid)
            acc = np.int64(w_rec[j, k]) - d
            if acc > W_MAX:
                acc = W_MAX
            elif acc < W_MIN:
                acc = W_MIN
            w_rec[j, k] = acc
        w_rec[j, j] = 0


def warmup() -> None:
    """Force JIT compilation on a minimal network so timed runs stay jit-free."""
    v_hid = np.zeros(2, np.int16)
    v_out = np.zeros(2, np.int16)
    z_hid = np.zeros(2, np.uint8)
    zbar_in = np.zeros(2, np.int16)
    zbar_hid = np.zeros(2, np.int16)
    elig_in = np.zeros((2, 2), np.int16)
    elig_rec = np.zeros((2, 2), np.int16)
    elig_out = np.zeros((2, 2), np.int16)
    out_accum = np.zeros(2, np.int64)
    w_in = np.zeros((2, 2), np.int8)
    w_rec = np.zeros((2, 2), np.int8)
    w_out = np.zeros((2, 2), np.int8)
    spikes = np.zeros(2, np.uint8)
    tick(v_hid, v_out, z_hid, zbar_in, zbar_hid, elig_in, elig_rec, elig_out,
         out_accum, w_in, w_rec, w_out, spikes, 1008, 254, 55, 0, 8)
    learn(w_in, w_rec, w_out, elig_in, elig_rec, elig_out, v_out, out_accum,
          w_out, 0, True, 4, 4)
