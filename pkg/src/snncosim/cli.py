"""Command-line experiment harness.

Commands:

    snncosim build-dataset <cfg>            generate stream files + manifest
    snncosim run <cfg> [--trace F] [--dry-run]
    snncosim lint <stream>
    snncosim sweep <cfg-glob> --jobs N

Exit codes: 0 success, 1 config error, 2 lint error, 3 runtime fault.
Relative output paths resolve against $SNNCOSIM_OUTDIR (default: cwd).
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import glob as globmod
import os
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

from .aer import lint_stream, read_words, save_stream
from .config import Config, parse_config
from .core import (
    FEEDBACK_MODES,
    FIRING_MODES,
    NetworkConfig,
    RsnnCore,
    WEIGHT_INIT_HI,
    WEIGHT_INIT_LO,
    init_weights,
)
from .datasets import BrailleSpec, CueTaskSpec, encode_braille, generate_cue_dataset
from .errors import ConfigError, EXIT_OK, LintError, SimError
from .monitor import CsvTraceSink, ProtocolMonitor, VcdTraceSink
from .runtime import (
    BufferMemory,
    DEFAULT_DEPTH,
    RunPlan,
    ScheduleEntry,
    plan_batches,
    run_epochs,
    write_metrics_csv,
)
from .spi import (
    REG_ALPHA_LSB,
    REG_FIRING_MODE,
    REG_INFER_ACC_EN,
    REG_KAPPA,
    REG_LABEL_DELAY,
    REG_LR_SHIFT,
    REG_N_HID,
    REG_N_IN,
    REG_N_OUT,
    REG_SEED_HI,
    REG_SEED_LO,
    REG_THRESHOLD,
    ParamBank,
    SpiFrame,
    load_config_script,
    network_config_from_bank,
    pack_lr_shift,
    script_to_file,
)

OUTDIR_ENV = "SNNCOSIM_OUTDIR"


def resolve_out(path: str) -> Path:
    """Resolve a config-supplied output path against $SNNCOSIM_OUTDIR."""
    p = Path(path)
    if p.is_absolute():
        return p
    return Path(os.environ.get(OUTDIR_ENV, ".")) / p


@dataclass
class Experiment:
    """Everything a run needs, assembled from one config file."""

    kind: str                       # "cue" or "braille"
    cue: CueTaskSpec | None
    braille: BrailleSpec | None
    streams: dict                   # split name -> path (str as configured)
    manifest: str | None
    net: NetworkConfig
    weight_seed: int
    init_lo: int
    init_hi: int
    label_delay: int
    infer_acc: bool
    epochs: int
    val_every: int
    final_test: bool
    batch_size: int
    depth: int
    timeout: int
    ready_latency: int
    metrics_csv: str | None
    trace: str | None
    snapshot: str | None
    spi_script: str | None


def _build_cue_spec(cfg: Config) -> CueTaskSpec:
    d = CueTaskSpec()
    return CueTaskSpec(
        n_samples=cfg.get_int("dataset.n_samples", d.n_samples),
        n_cues=cfg.get_int("dataset.n_cues", d.n_cues),
        cue_window_ticks=cfg.get_int("dataset.cue_window_ticks",
                                     d.cue_window_ticks),
        delay_ticks=cfg.get_int("dataset.delay_ticks", d.delay_ticks),
        decision_window_ticks=cfg.get_int("dataset.decision_window_ticks",
                                          d.decision_window_ticks),
        group_size=cfg.get_int("dataset.group_size", d.group_size),
        spike_prob_active=cfg.get_float("dataset.spike_prob_active",
                                        d.spike_prob_active),
        spike_prob_noise=cfg.get_float("dataset.spike_prob_noise",
                                       d.spike_prob_noise),
        label_delay=cfg.get_int("dataset.label_delay", d.label_delay),
        seed=cfg.get_int("dataset.seed", d.seed),
    )


def _build_braille_spec(cfg: Config) -> BrailleSpec:
    d = BrailleSpec()
    classes = cfg.get_list("dataset.classes", list(d.classes))
    return BrailleSpec(
        classes=tuple(classes),
        n_per_class=cfg.get_int("dataset.n_per_class", d.n_per_class),
        duration_ticks=cfg.get_int("dataset.duration_ticks", d.duration_ticks),
        bump_width=cfg.get_int("dataset.bump_width", d.bump_width),
        bump_amp=cfg.get_float("dataset.bump_amp", d.bump_amp),
        amp_jitter=cfg.get_float("dataset.amp_jitter", d.amp_jitter),
        crosstalk=cfg.get_float("dataset.crosstalk", d.crosstalk),
        noise_sd=cfg.get_float("dataset.noise_sd", d.noise_sd),
        jitter_ticks=cfg.get_float("dataset.jitter_ticks", d.jitter_ticks),
        delta_threshold=cfg.get_float("dataset.delta_threshold",
                                      d.delta_threshold),
        label_delay=cfg.get_int("dataset.label_delay", d.label_delay),
        train_frac=cfg.get_float("dataset.train_frac", d.train_frac),
        val_frac=cfg.get_float("dataset.val_frac", d.val_frac),
        polarity_split=cfg.get_bool("dataset.polarity_split",
                                    d.polarity_split),
        seed=cfg.get_int("dataset.seed", d.seed),
        source_csv=cfg.get_str("dataset.source_csv", None),
    )


def build_experiment(cfg: Config) -> Experiment:
    kind = cfg.get_choice("dataset.kind", ("cue", "braille"))
    cue = braille = None
    if kind == "cue":
        cue = _build_cue_spec(cfg)
        cue.validate()
        n_in, n_out = cue.n_in, 2
        splits = ("train", "val")
    else:
        braille = _build_braille_spec(cfg)
        braille.validate()
        n_in, n_out = (24 if braille.polarity_split else 12), \
            len(braille.classes)
        splits = ("train", "val", "test")

    streams = {}
    for split in splits:
        key = f"dataset.{split}_stream"
        if cfg.has(key) or split != "test":
            streams[split] = cfg.get_str(key)
        else:
            cfg.get_str(key, None)
    manifest = cfg.get_str("dataset.manifest", None)

    # explicit size keys are allowed but must agree with the dataset
    for key, derived in (("network.n_in", n_in), ("network.n_out", n_out)):
        stated = cfg.get_int(key, derived)
        if stated != derived:
            raise ConfigError(
                f"{key} = {stated} contradicts the dataset's {derived}")

    firing = cfg.get_choice("network.firing_mode", tuple(FIRING_MODES),
                            "reset-to-zero")
    feedback = cfg.get_choice("network.feedback_mode", tuple(FEEDBACK_MODES),
                              "symmetric")
    defaults = NetworkConfig(n_in=n_in, n_hid=1, n_out=n_out)
    net = NetworkConfig(
        n_in=n_in,
        n_hid=cfg.get_int("network.n_hid"),
        n_out=n_out,
        threshold=cfg.get_int("network.threshold", defaults.threshold),
        alpha=cfg.get_int("network.alpha", defaults.alpha),
        kappa=cfg.get_int("network.kappa", defaults.kappa),
        firing_mode=FIRING_MODES[firing],
        lr_shift_hid=cfg.get_int("network.lr_shift_hid",
                                 defaults.lr_shift_hid),
        lr_shift_out=cfg.get_int("network.lr_shift_out",
                                 defaults.lr_shift_out),
        feedback_mode=FEEDBACK_MODES[feedback],
        feedback_seed=cfg.get_int("network.feedback_seed",
                                  defaults.feedback_seed),
    )
    net.validate()

    epochs = cfg.get_int("run.epochs")
    if epochs < 0:
        raise ConfigError("run.epochs must be >= 0")
    val_every = cfg.get_int("run.val_every", 1)
    if val_every < 0:
        raise ConfigError("run.val_every must be >= 0 (0 disables validation)")
    final_test = cfg.get_bool("run.final_test", False)
    if final_test and "test" not in streams:
        raise ConfigError("run.final_test needs dataset.test_stream")

    exp = Experiment(
        kind=kind, cue=cue, braille=braille, streams=streams,
        manifest=manifest, net=net,
        weight_seed=cfg.get_int("network.seed", 1),
        init_lo=cfg.get_int("network.init_lo", WEIGHT_INIT_LO),
        init_hi=cfg.get_int("network.init_hi", WEIGHT_INIT_HI),
        label_delay=cfg.get_int("bank.label_delay", 0),
        infer_acc=cfg.get_bool("bank.infer_acc_en", True),
        epochs=epochs, val_every=val_every, final_test=final_test,
        batch_size=cfg.get_int("run.batch_size"),
        depth=cfg.get_int("run.buffer_depth", DEFAULT_DEPTH),
        timeout=cfg.get_int("run.timeout", 64),
        ready_latency=cfg.get_int("run.ready_latency", 0),
        metrics_csv=cfg.get_str("run.metrics_csv", None),
        trace=cfg.get_str("run.trace", None),
        snapshot=cfg.get_str("run.snapshot", None),
        spi_script=cfg.get_str("run.spi_script", None),
    )
    cfg.reject_unconsumed()
    if not -128 <= exp.init_lo <= exp.init_hi <= 127:
        raise ConfigError(
            f"network.init_lo/init_hi [{exp.init_lo}, {exp.init_hi}] "
            "must be a valid int8 range")
    return exp


def spi_script_frames(exp: Experiment) -> list[SpiFrame]:
    """The register writes that configure one run (batch counters are
    managed per schedule entry by the runtime)."""
    net = exp.net
    return [
        SpiFrame.write(REG_THRESHOLD, net.threshold & 0xFFFF),
        SpiFrame.write(REG_ALPHA_LSB, net.alpha),
        SpiFrame.write(REG_KAPPA, net.kappa),
        SpiFrame.write(REG_N_IN, net.n_in),
        SpiFrame.write(REG_N_HID, net.n_hid),
        SpiFrame.write(REG_N_OUT, net.n_out),
        SpiFrame.write(REG_FIRING_MODE, net.firing_mode),
        SpiFrame.write(REG_LR_SHIFT,
                       pack_lr_shift(net.lr_shift_hid, net.lr_shift_out)),
        SpiFrame.write(REG_LABEL_DELAY, exp.label_delay),
        SpiFrame.write(REG_INFER_ACC_EN, 1 if exp.infer_acc else 0),
        SpiFrame.write(REG_SEED_LO, exp.weight_seed & 0xFFFF),
        SpiFrame.write(REG_SEED_HI, (exp.weight_seed >> 16) & 0xFFFF),
    ]


def _config_header(kind: str, spec) -> str:
    fields = dataclasses.asdict(spec)
    body = " ".join(f"{k}={v}" for k, v in fields.items())
    return f"kind={kind} {body}"


def cmd_build_dataset(cfg_path: str) -> int:
    exp = build_experiment(parse_config(cfg_path))
    header = _config_header(exp.kind, exp.cue or exp.braille)
    # generate fully in memory first: a failure must leave no partial files
    if exp.kind == "cue":
        train, val = generate_cue_dataset(exp.cue)
        by_split = {"train": train, "val": val}
        manifest_lines = ["kind = cue"] + [
            f"{k} = {v}" for k, v in dataclasses.asdict(exp.cue).items()]
    else:
        ds = encode_braille(exp.braille)
        by_split = {"train": ds.train, "val": ds.val, "test": ds.test}
        manifest_lines = ds.manifest_lines()

    for split, path in exp.streams.items():
        out = resolve_out(path)
        out.parent.mkdir(parents=True, exist_ok=True)
        save_stream(out, by_split[split], header=header)
        n = sum(1 for e in by_split[split] if (e.kind.value == "end_of_sample"))
        print(f"wrote {split}: {out} ({n} samples, "
              f"{len(by_split[split])} words)")
    if exp.manifest:
        out = resolve_out(exp.manifest)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("".join(line + "\n" for line in manifest_lines))
        print(f"wrote manifest: {out}")
    return EXIT_OK


def _load_split(exp: Experiment, split: str):
    path = resolve_out(exp.streams[split])
    if not path.exists():
        raise ConfigError(f"dataset.{split}_stream: {path} does not exist "
                          "(run build-dataset first)")
    words = read_words(path)
    errors = [d for d in lint_stream(words) if d.severity == "error"]
    if errors:
        raise LintError(f"{path}: {errors[0]}")
    return plan_batches(words, exp.batch_size, depth=exp.depth, name=split)


def _make_schedule(exp: Experiment) -> list[ScheduleEntry]:
    entries = []
    for e in range(exp.epochs):
        entries.append(ScheduleEntry("train", True, e))
        if exp.val_every and (e + 1) % exp.val_every == 0:
            entries.append(ScheduleEntry("val", False, e))
    if exp.final_test:
        entries.append(ScheduleEntry("test", False, max(exp.epochs - 1, 0)))
    return entries


def cmd_run(cfg_path: str, trace_override: str | None = None,
            dry_run: bool = False) -> int:
    exp = build_experiment(parse_config(cfg_path))
    if exp.metrics_csv is None and not dry_run:
        raise ConfigError("run.metrics_csv is required (or use --dry-run)")

    split_names = ["train"]
    if exp.val_every:
        split_names.append("val")
    if exp.final_test:
        split_names.append("test")
    splits = {name: _load_split(exp, name) for name in split_names}
    schedule = _make_schedule(exp)
    plan = RunPlan(splits=splits, schedule=schedule)
    plan.validate()

    bank = ParamBank()
    frames = spi_script_frames(exp)
    report = load_config_script(bank, frames)
    if not report.ok:
        index, _, message = report.rejected[0]
        raise ConfigError(
            f"SPI config script rejected at frame {index}: {message}")
    core_cfg = dataclasses.replace(
        network_config_from_bank(bank),
        feedback_mode=exp.net.feedback_mode,
        feedback_seed=exp.net.feedback_seed)
    core = RsnnCore(core_cfg)
    init_weights(core.state, exp.weight_seed, exp.init_lo, exp.init_hi)

    if dry_run:
        total = sum(splits[e.split].n_samples for e in schedule)
        print(f"dry-run ok: {len(schedule)} scheduled epochs over "
              f"{len(splits)} splits ({total} sample presentations), "
              f"network {core_cfg.n_in}/{core_cfg.n_hid}/{core_cfg.n_out}")
        return EXIT_OK

    if exp.spi_script:
        script_to_file(resolve_out(exp.spi_script), frames,
                       header="run configuration register writes")

    trace_path = trace_override or exp.trace
    trace_file = None
    sinks = ()
    if trace_path:
        out = resolve_out(trace_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        trace_file = open(out, "w", newline="\n")
        sink_cls = VcdTraceSink if out.suffix == ".vcd" else CsvTraceSink
        sinks = (sink_cls(trace_file),)

    monitor = ProtocolMonitor()
    metrics_path = resolve_out(exp.metrics_csv)
    metrics_path.parent.mkdir(parents=True, exist_ok=True)
    rows: list = []
    try:
        run_epochs(plan, core, bank, memory=BufferMemory(exp.depth),
                   sinks=sinks, monitor=monitor, timeout=exp.timeout,
                   ready_latency=exp.ready_latency, on_row=rows.append)
    except SimError as exc:
        write_metrics_csv(metrics_path, rows, aborted=True)
        print(f"aborted after {len(rows)} rows: {exc}", file=sys.stderr)
        raise
    finally:
        if trace_file:
            trace_file.close()

    write_metrics_csv(metrics_path, rows)
    if exp.snapshot:
        snap = resolve_out(exp.snapshot)
        snap.parent.mkdir(parents=True, exist_ok=True)
        core.save_snapshot(snap)
    for name in split_names:
        last = [r for r in rows if r.split == name]
        if last:
            print(f"{name}: {len(last)} rows, final accuracy "
                  f"{last[-1].accuracy:.4f} ({last[-1].correct}"
                  f"/{last[-1].total})")
    print(f"metrics: {metrics_path}")
    return EXIT_OK


def cmd_lint(stream_path: str) -> int:
    path = Path(stream_path)
    if not path.exists():
        raise ConfigError(f"{path}: no such stream file")
    words = []
    linemap = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            try:
                word = int(line, 16)
            except ValueError:
                print(f"{path}:{lineno}: error: not a hex word: {line!r}")
                return LintError.exit_code
            if len(line) != 8 or word > 0xFFFFFFFF:
                print(f"{path}:{lineno}: error: expected 8 hex digits, "
                      f"got {line!r}")
                return LintError.exit_code
            words.append(word)
            linemap.append(lineno)

    if not words:
        print(f"{path}:1: error: missing-end-of-sample: empty stream "
              "contains no samples")
        return LintError.exit_code

    diags = lint_stream(words)
    for d in diags:
        where = linemap[d.index] if 0 <= d.index < len(linemap) else "?"
        print(f"{path}:{where}: {d.severity}: {d.code}: {d.message}")
    n_err = sum(1 for d in diags if d.severity == "error")
    if n_err:
        print(f"{n_err} error(s)")
        return LintError.exit_code
    print(f"ok: {len(words)} words, {len(diags)} warning(s)")
    return EXIT_OK


def cmd_sweep(pattern: str, jobs: int) -> int:
    paths = sorted(globmod.glob(pattern))
    if not paths:
        raise ConfigError(f"sweep pattern {pattern!r} matches no configs")
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")

    def one(path: str) -> int:
        proc = subprocess.run(
            [sys.executable, "-m", "snncosim", "run", path],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
        return proc.returncode

    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        codes = list(pool.map(one, paths))
    worst = 0
    for path, code in zip(paths, codes):
        print(f"{'ok' if code == 0 else f'exit {code}'}: {path}")
        worst = max(worst, code)
    return worst


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="snncosim",
        description="Experiment harness for the spiking-network co-simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-dataset", help="generate stream files")
    p.add_argument("config")

    p = sub.add_parser("run", help="execute an experiment config")
    p.add_argument("config")
    p.add_argument("--trace", default=None,
                   help="write a bus trace (.vcd or .csv by extension)")
    p.add_argument("--dry-run", action="store_true",
                   help="validate config and streams, run 0 epochs")

    p = sub.add_parser("lint", help="check an event stream file")
    p.add_argument("stream")

    p = sub.add_parser("sweep", help="run many configs in parallel")
    p.add_argument("pattern")
    p.add_argument("--jobs", type=int, default=1)

    args = parser.parse_args(argv)
    try:
        if args.command == "build-dataset":
            return cmd_build_dataset(args.config)
        if args.command == "run":
            return cmd_run(args.config, args.trace, args.dry_run)
        if args.command == "lint":
            return cmd_lint(args.stream)
        if args.command == "sweep":
            return cmd_sweep(args.pattern, args.jobs)
        raise AssertionError(args.command)
    except SimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
