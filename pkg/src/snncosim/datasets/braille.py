"""Braille tactile classification pipeline: recordings to event streams.

The source is a set of 12-channel capacitance recordings of a fingertip
sliding over one 6-dot Braille cell (two electrodes per dot).  When no
recording file is supplied, a synthetic stand-in generator produces
recordings with the same shape: each dot present in the cell raises a
bump on its two channels as its row is crossed, with cross-talk onto the
vertically adjacent dot's channels, per-sample timing jitter, amplitude
jitter, and additive noise.  A per-channel send-on-delta encoder turns
recordings into spike events; labels and end markers are appended per
sample, and splits are stratified by class.

All randomness flows through one seeded xorshift generator using only
rational arithmetic, so regeneration is byte-identical on any platform.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from ..aer import (
    Event,
    EventKind,
    encode_stream,
    end_of_sample,
    label,
    lint_stream,
    spike,
    split_samples,
)
from ..errors import ConfigError, LintError
from ..prng import XorShift64Star

# 6-dot cells: dots 1-3 run down the left column, 4-6 down the right.
# Dot d occupies row (d-1) % 3 and drives channels 2(d-1) and 2(d-1)+1.
BRAILLE_CELLS = {
    "Space": (),
    "A": (1,),
    "E": (1, 5),
    "I": (2, 4),
    "O": (1, 3, 5),
    "U": (1, 3, 6),
    "Y": (1, 3, 4, 5, 6),
}

DEFAULT_CLASSES = ("Space", "A", "E", "I", "O", "U", "Y")

N_CHANNELS = 12

# uniform(-1/2, 1/2) has standard deviation 1/sqrt(12); this rescales a
# single uniform draw to unit standard deviation without transcendentals
_UNIT_SD = 3.4641016151377544


@dataclass(frozen=True)
class BrailleSpec:
    classes: tuple[str, ...] = DEFAULT_CLASSES
    n_per_class: int = 200
    duration_ticks: int = 160
    bump_width: int = 12
    bump_amp: float = 2.0
    amp_jitter: float = 0.2
    crosstalk: float = 0.35
    noise_sd: float = 0.05
    jitter_ticks: float = 3.0
    delta_threshold: float = 0.25
    label_delay: int = 20
    train_frac: float = 0.7
    val_frac: float = 0.2
    polarity_split: bool = False
    seed: int = 1
    source_csv: str | None = None

    def validate(self) -> None:
        if not self.classes:
            raise ConfigError("no classes requested")
        for c in self.classes:
            if c not in BRAILLE_CELLS:
                raise ConfigError(f"unknown Braille class {c!r}")
        if len(set(self.classes)) != len(self.classes):
            raise ConfigError("duplicate class in subset")
        if len(self.classes) > 16:
            raise ConfigError("label field holds at most 16 classes")
        if self.n_per_class < 1:
            raise ConfigError("n_per_class must be at least 1")
        if not 2 <= self.duration_ticks <= 4095:
            raise ConfigError("duration_ticks must fit the 12-bit tick field")
        if self.bump_width < 1 or self.bump_amp <= 0:
            raise ConfigError("bump shape parameters must be positive")
        if self.delta_threshold <= 0:
            raise ConfigError("delta_threshold must be positive")
        if not 1 <= self.label_delay < self.duration_ticks:
            raise ConfigError("label_delay must lie in [1, duration)")
        if self.train_frac <= 0 or self.val_frac < 0:
            raise ConfigError("split fractions must be positive")
        if self.train_frac + self.val_frac >= 1.0:
            raise ConfigError("train+val fractions leave no test split")


def _dot_row(dot: int) -> int:
    return (dot - 1) % 3


def _dot_channels(dot: int) -> tuple[int, int]:
    base = 2 * (dot - 1)
    return base, base + 1


def _neighbors(dot: int) -> tuple[int, ...]:
    # vertically adjacent dots in the same column
    col_base = 1 if dot <= 3 else 4
    row = _dot_row(dot)
    out = []
    if row > 0:
        out.append(col_base + row - 1)
    if row < 2:
        out.append(col_base + row + 1)
    return tuple(out)


def synth_recordings(spec: BrailleSpec):
    """Synthesize (class_name, T x 12 array) recordings, class-major order."""
    spec.validate()
    rng = XorShift64Star(spec.seed)
    T = spec.duration_ticks
    t_axis = np.arange(T, dtype=np.float64)
    row_times = np.array([T * (r + 1) / 4.0 for r in range(3)])
    recordings = []
    for cls in spec.classes:
        dots = BRAILLE_CELLS[cls]
        for _ in range(spec.n_per_class):
            jitter = np.array([(rng.next_unit() - 0.5) * 2.0
                               * spec.jitter_ticks for _ in range(3)])
            trace = np.zeros((T, N_CHANNELS))
            for dot in dots:
                amp = spec.bump_amp * (
                    1.0 + (rng.next_unit() - 0.5) * 2.0 * spec.amp_jitter)
                center = row_times[_dot_row(dot)] + jitter[_dot_row(dot)]
                bump = amp * np.maximum(
                    0.0, 1.0 - np.abs(t_axis - center) / spec.bump_width)
                for ch in _dot_channels(dot):
                    trace[:, ch] += bump
                for nb in _neighbors(dot):
                    for ch in _dot_channels(nb):
                        trace[:, ch] += spec.crosstalk * bump
            noise_scale = spec.noise_sd * _UNIT_SD
            noise = np.array([(rng.next_unit() - 0.5)
                              for _ in range(T * N_CHANNELS)])
            trace += noise.reshape(T, N_CHANNELS) * noise_scale
            recordings.append((cls, trace))
    return recordings


def write_raw_csv(path, recordings) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["sample_id", "class", "time"]
                   + [f"ch{i}" for i in range(N_CHANNELS)])
        for sid, (cls, trace) in enumerate(recordings):
            for t, row in enumerate(trace):
                w.writerow([sid, cls, t] + [repr(float(v)) for v in row])


def read_raw_csv(path):
    by_sample: dict[int, tuple[str, list]] = {}
    try:
        f = open(path, newline="")
    except OSError as exc:
        raise ConfigError(f"cannot read raw recordings: {exc}") from exc
    with f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or header[:3] != ["sample_id", "class", "time"]:
            raise ConfigError(f"{path}: not a raw recording file")
        for row in reader:
            sid = int(row[0])
            cls = row[1]
            entry = by_sample.setdefault(sid, (cls, []))
            if entry[0] != cls:
                raise ConfigError(f"{path}: sample {sid} changes class")
            entry[1].append([float(v) for v in row[3:3 + N_CHANNELS]])
    out = []
    for sid in sorted(by_sample):
        cls, rows = by_sample[sid]
        out.append((cls, np.asarray(rows)))
    return out


def delta_encode(trace, threshold: float, polarity_split: bool = False):
    """Send-on-delta per channel: a spike when the signal moves a threshold
    step away from the tracked reference, which then takes one step toward
    the signal.  At most one event per channel per tick (the reference
    tracker steps once per cycle), so fast transients emit over several
    ticks.  Returns (tick, addr) pairs in tick order.  Polarity is folded
    onto the channel's own address unless split, which moves OFF events to
    address channel + width.
    """
    trace = np.asarray(trace, np.float64)
    T, n_ch = trace.shape
    refs = trace[0].copy()
    events = []
    for t in range(1, T):
        for ch in range(n_ch):
            v = trace[t, ch]
            if v - refs[ch] >= threshold:
                events.append((t, ch))
                refs[ch] += threshold
            elif refs[ch] - v >= threshold:
                events.append((t, ch + n_ch if polarity_split else ch))
                refs[ch] -= threshold
    return events


@dataclass
class BrailleDataset:
    spec: BrailleSpec
    train: list[Event]
    val: list[Event]
    test: list[Event]
    split_ids: dict[str, list[int]] = field(default_factory=dict)

    @property
    def n_in(self) -> int:
        return 2 * N_CHANNELS if self.spec.polarity_split else N_CHANNELS

    def manifest_lines(self) -> list[str]:
        spec = self.spec
        lines = ["kind = braille",
                 f"classes = {','.join(spec.classes)}",
                 f"seed = {spec.seed}",
                 f"n_per_class = {spec.n_per_class}",
                 f"duration_ticks = {spec.duration_ticks}",
                 f"delta_threshold = {spec.delta_threshold!r}",
                 f"label_delay = {spec.label_delay}",
                 f"source = {spec.source_csv or 'synthetic'}"]
        for name in ("train", "val", "test"):
            ids = ",".join(str(i) for i in self.split_ids.get(name, []))
            lines.append(f"split.{name} = {ids}")
        return lines


def _encode_sample(spec: BrailleSpec, trace, cls_index: int) -> list[Event]:
    pairs = delta_encode(trace, spec.delta_threshold, spec.polarity_split)
    end = spec.duration_ticks
    label_tick = end - spec.label_delay
    events: list[Event] = []
    placed = False
    for t, addr in pairs:
        if not placed and t > label_tick:
            events.append(label(cls_index, label_tick))
            placed = True
        events.append(spike(addr, t))
    if not placed:
        events.append(label(cls_index, label_tick))
    events.append(end_of_sample(end))
    return events


def encode_braille(spec: BrailleSpec) -> BrailleDataset:
    """Generate or ingest recordings, encode, split, label, and lint."""
    spec.validate()
    if spec.source_csv:
        recordings = read_raw_csv(spec.source_csv)
        recordings = [r for r in recordings if r[0] in spec.classes]
    else:
        recordings = synth_recordings(spec)

    by_class: dict[str, list[int]] = {c: [] for c in spec.classes}
    for i, (cls, _) in enumerate(recordings):
        if cls in by_class:
            by_class[cls].append(i)
    for cls, ids in by_class.items():
        if not ids:
            raise ConfigError(f"class {cls!r} missing from source")

    # offset the seed so split shuffles never share the synthesis stream
    rng = XorShift64Star(spec.seed + 0x517)
    split_ids = {"train": [], "val": [], "test": []}
    for cls in spec.classes:
        ids = list(by_class[cls])
        rng.shuffle(ids)
        n = len(ids)
        n_train = int(n * spec.train_frac + 0.5)
        n_val = int(n * spec.val_frac + 0.5)
        if n_train + n_val >= n + 1:
            raise ConfigError(
                f"class {cls!r}: split sizes exceed {n} available samples")
        split_ids["train"].extend(ids[:n_train])
        split_ids["val"].extend(ids[n_train:n_train + n_val])
        split_ids["test"].extend(ids[n_train + n_val:])
    for ids in split_ids.values():
        rng.shuffle(ids)                     # interleave classes in order

    cls_index = {c: k for k, c in enumerate(spec.classes)}
    streams: dict[str, list[Event]] = {}
    for name, ids in split_ids.items():
        stream: list[Event] = []
        for i in ids:
            cls, trace = recordings[i]
            stream.extend(_encode_sample(spec, trace, cls_index[cls]))
        errors = [d for d in lint_stream(encode_stream(stream))
                  if d.severity == "error"]
        if errors:
            raise LintError(f"{name} split fails lint: {errors[0]}")
        streams[name] = stream

    return BrailleDataset(spec=spec, train=streams["train"],
                          val=streams["val"], test=streams["test"],
                          split_ids=split_ids)


def subset_classes(events: list[Event], mapping: dict[int, int]) -> list[Event]:
    """Keep samples whose label is in the map, rewriting labels densely."""
    out: list[Event] = []
    for sample in split_samples(events):
        labels = [e for e in sample if e.kind is EventKind.LABEL]
        if len(labels) != 1:
            raise LintError(
                f"sample with {len(labels)} labels cannot be subset")
        old = labels[0].addr_or_label
        if old not in mapping:
            continue
        for e in sample:
            if e.kind is EventKind.LABEL:
                out.append(label(mapping[old], e.tick))
            else:
                out.append(e)
    return out
