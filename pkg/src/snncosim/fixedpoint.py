"""Saturating fixed-point scalar arithmetic for the accelerator model.

Three storage formats, fixed at compile time and isolated here so the widths
can be revised in one place:

  * membrane / trace words: 16-bit signed integers (integer membrane units)
  * leak factors:           8-bit unsigned fractions, value = raw / 256
  * synaptic weights:       8-bit signed integers

All arithmetic saturates at the storage bounds; nothing wraps.  Leak
multiplication truncates toward zero (the hardware right-shift analog), so
repeated leaking always drives a value to 0 in finitely many steps.
"""

from __future__ import annotations

MEMBRANE_BITS = 16
LEAK_BITS = 8
WEIGHT_BITS = 8

V_MIN = -(1 << (MEMBRANE_BITS - 1))   # -32768
V_MAX = (1 << (MEMBRANE_BITS - 1)) - 1  # 32767
W_MIN = -(1 << (WEIGHT_BITS - 1))     # -128
W_MAX = (1 << (WEIGHT_BITS - 1)) - 1  # 127
LEAK_MAX = (1 << LEAK_BITS) - 1       # 255
LEAK_ONE = 1 << LEAK_BITS             # denominator of the leak fraction

# Raw membrane units added to a filtered spike trace per presynaptic spike.
# Chosen so traces survive the truncating leak (a bare 1 would vanish after
# one leak step at any factor below 0xFF) while leaving int16 headroom for
# the eligibility accumulators.
TRACE_QUANTUM = 8


def sat16(x: int) -> int:
    """Clamp to the 16-bit signed membrane range."""
    if x > V_MAX:
        return V_MAX
    if x < V_MIN:
        return V_MIN
    return x


def sat8(x: int) -> int:
    """Clamp to the 8-bit signed weight range."""
    if x > W_MAX:
        return W_MAX
    if x < W_MIN:
        return W_MIN
    return x


def leak_mul(v: int, a: int) -> int:
    """Multiply a membrane word by a leak fraction: trunc((v * a) / 256).

    Truncation is toward zero, so the result never exceeds ``v`` in
    magnitude and never flips sign.
    """
    if not 0 <= a <= LEAK_MAX:
        raise ValueError(f"leak factor {a:#x} outside 8-bit unsigned range")
    p = v * a
    if p >= 0:
        return sat16(p >> LEAK_BITS)
    return sat16(-((-p) >> LEAK_BITS))


def sat_add(v: int, w: int) -> int:
    """Saturating signed addition of membrane/weight words."""
    return sat16(v + w)


def trunc_shift(x: int, shift: int) -> int:
    """Arithmetic right shift truncating toward zero (not toward -inf).

    Used for power-of-two learning-rate scaling, where floor semantics on
    negative products would leave a systematic -1 drift.
    """
    if x >= 0:
        return x >> shift
    return -((-x) >> shift)
