"""Per-tick kernel benchmark: numba backend vs pure-numpy fallback.

Both backends implement the identical integer update rules, so before
timing anything this script replays a shared spike raster through each
and insists every state array stays bit-identical.  Timings then cover
the two hot paths separately: plain inference ticks, and ticks that also
apply the weight update (the shape of a supervised tail window).

Run:  python3 benchmarks/bench_kernels.py [--ticks N] [--density P]
"""

import argparse
import copy
import importlib
import time

import numpy as np

from snncosim.core import NetworkConfig, RsnnCore, TRACE_QUANTUM, init_weights
from snncosim.prng import XorShift64Star

SHAPES = ((12, 38, 4), (40, 100, 2), (64, 256, 10))


def load_backends():
    backends = {}
    for name in ("numpy", "numba"):
        try:
            backends[name] = importlib.import_module(
                f"snncosim.kernels.{name}_backend")
        except ImportError:
            print(f"note: {name} backend unavailable, skipping")
    return backends


def fresh_state(shape, seed=1):
    n_in, n_hid, n_out = shape
    cfg = NetworkConfig(n_in=n_in, n_hid=n_hid, n_out=n_out,
                        threshold=0x0100, kappa=0xF0,
                        lr_shift_hid=13, lr_shift_out=4)
    core = RsnnCore(cfg)
    init_weights(core.state, seed, -64, 63)
    return cfg, copy.deepcopy(core.state)


def raster(shape, ticks, density, seed=7):
    rng = XorShift64Star(seed)
    n_in = shape[0]
    out = np.zeros((ticks, n_in), np.uint8)
    for t in range(ticks):
        for i in range(n_in):
            if rng.next_unit() < density:
                out[t, i] = 1
    return out


def drive(mod, cfg, state, spikes, with_learn):
    s = state
    fb = s.w_out
    for t in range(spikes.shape[0]):
        mod.tick(s.v_hid, s.v_out, s.z_hid, s.zbar_in, s.zbar_hid,
                 s.elig_in, s.elig_rec, s.elig_out, s.out_accum,
                 s.w_in, s.w_rec, s.w_out, spikes[t],
                 cfg.threshold, cfg.alpha, cfg.kappa, cfg.firing_mode,
                 TRACE_QUANTUM)
        if with_learn:
            mod.learn(s.w_in, s.w_rec, s.w_out, s.elig_in, s.elig_rec,
                      s.elig_out, s.v_out, s.out_accum, fb,
                      t % cfg.n_out, True, cfg.lr_shift_hid,
                      cfg.lr_shift_out)


def check_equivalence(backends, shape, density):
    spikes = raster(shape, 200, density)
    finals = {}
    for name, mod in backends.items():
        cfg, state = fresh_state(shape)
        drive(mod, cfg, state, spikes, with_learn=True)
        finals[name] = state
    names = sorted(finals)
    ref = finals[names[0]]
    for other in names[1:]:
        st = finals[other]
        for field in ("v_hid", "v_out", "z_hid", "zbar_in", "zbar_hid",
                      "elig_in", "elig_rec", "elig_out", "out_accum",
                      "w_in", "w_rec", "w_out"):
            a, b = getattr(ref, field), getattr(st, field)
            if not np.array_equal(a, b):
                raise SystemExit(
                    f"backends diverge on {field} for shape {shape}")


def bench_one(mod, shape, ticks, density, with_learn):
    cfg, state = fresh_state(shape)
    spikes = raster(shape, min(ticks, 512), density)
    reps = max(1, ticks // spikes.shape[0])
    drive(mod, cfg, state, spikes[:32], with_learn)   # jit / cache warmup
    t0 = time.perf_counter()
    for _ in range(reps):
        drive(mod, cfg, state, spikes, with_learn)
    dt = time.perf_counter() - t0
    return dt / (reps * spikes.shape[0])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ticks", type=int, default=20000,
                    help="ticks per measurement (default 20000)")
    ap.add_argument("--density", type=float, default=0.08,
                    help="input spike probability per channel per tick")
    args = ap.parse_args()

    backends = load_backends()
    if not backends:
        raise SystemExit("no kernel backend importable")

    for shape in SHAPES:
        check_equivalence(backends, shape, args.density)
    print(f"equivalence: all backends bit-identical over 200 learning "
          f"ticks on {len(SHAPES)} shapes\n")

    header = f"{'shape':>12} {'mode':>10}"
    for name in backends:
        header += f" {name + ' µs/tick':>16}"
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)
    for shape in SHAPES:
        for with_learn in (False, True):
            mode = "tick+learn" if with_learn else "tick"
            line = f"{'/'.join(map(str, shape)):>12} {mode:>10}"
            per = {}
            for name, mod in backends.items():
                per[name] = bench_one(mod, shape, args.ticks,
                                      args.density, with_learn)
                line += f" {per[name] * 1e6:>16.2f}"
            if len(per) == 2:
                line += f" {per['numpy'] / per['numba']:>8.1f}x"
            print(line)


if __name__ == "__main__":
    main()
