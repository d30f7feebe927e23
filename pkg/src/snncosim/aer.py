"""32-bit address-event codec and event-stream tooling.

Word layout (MSB first):

  [31:24]  type code: 0x03 spike, 0x02 label, 0x01 end-of-sample
  [23:12]  neuron address (spike) or class label (label); 0 for end-of-sample
  [11:0]   target time tick

Spike addresses ride an 8-bit channel so must fit in [0, 255]; labels index
at most 16 output neurons so must fit in [0, 15]; ticks are 12-bit.  The
on-disk stream format is plain ASCII, one 8-hex-digit word per line, with
`#` comment lines, shared by dataset files and buffer-memory images.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CodecError

TYPE_SPIKE = 0x03
TYPE_LABEL = 0x02
TYPE_END = 0x01

ADDR_MAX = 255
LABEL_MAX = 15
TICK_MAX = 4095


class EventKind(enum.Enum):
    SPIKE = "spike"
    LABEL = "label"
    END_OF_SAMPLE = "end_of_sample"


_KIND_TO_CODE = {
    EventKind.SPIKE: TYPE_SPIKE,
    EventKind.LABEL: TYPE_LABEL,
    EventKind.END_OF_SAMPLE: TYPE_END,
}
_CODE_TO_KIND = {v: k for k, v in _KIND_TO_CODE.items()}


@dataclass(frozen=True)
class Event:
    """One decoded stream event."""

    kind: EventKind
    addr_or_label: int
    tick: int

    def __post_init__(self):
        if not 0 <= self.tick <= TICK_MAX:
            raise CodecError(
                f"tick {self.tick} outside 12-bit range", code="field-out-of-range")
        if self.kind is EventKind.SPIKE and not 0 <= self.addr_or_label <= ADDR_MAX:
            raise CodecError(
                f"spike address {self.addr_or_label} exceeds 8-bit channel",
                code="field-out-of-range")
        if self.kind is EventKind.LABEL and not 0 <= self.addr_or_label <= LABEL_MAX:
            raise CodecError(
                f"label {self.addr_or_label} exceeds 16-class range",
                code="field-out-of-range")
        if self.kind is EventKind.END_OF_SAMPLE and self.addr_or_label != 0:
            raise CodecError(
                "end-of-sample events carry no address/label payload",
                code="field-out-of-range")


def spike(addr: int, tick: int) -> Event:
    return Event(EventKind.SPIKE, addr, tick)


def label(cls: int, tick: int) -> Event:
    return Event(EventKind.LABEL, cls, tick)


def end_of_sample(tick: int) -> Event:
    return Event(EventKind.END_OF_SAMPLE, 0, tick)


def encode(e: Event) -> int:
    """Pack an event into its 32-bit word."""
    return (_KIND_TO_CODE[e.kind] << 24) | (e.addr_or_label << 12) | e.tick


def decode(word: int) -> Event:
    """Unpack a 32-bit word, rejecting reserved type codes and oversized fields."""
    if not 0 <= word <= 0xFFFFFFFF:
        raise CodecError(f"{word:#x} is not a 32-bit word", code="word-out-of-range")
    code = (word >> 24) & 0xFF
    field = (word >> 12) & 0xFFF
    tick = word & 0xFFF
    if code not in _CODE_TO_KIND:
        raise CodecError(
            f"unknown type code {code:#04x} in word {word:#010x}",
            code="unknown-type-code")
    kind = _CODE_TO_KIND[code]
    if kind is EventKind.SPIKE and field > ADDR_MAX:
        raise CodecError(
            f"spike address {field:#x} exceeds 8-bit channel in word {word:#010x}",
            code="spike-address-overflow")
    if kind is EventKind.LABEL and field > LABEL_MAX:
        raise CodecError(
            f"label {field:#x} exceeds 16-class range in word {word:#010x}",
            code="label-overflow")
    if kind is EventKind.END_OF_SAMPLE:
        field = 0  # bits [23:12] are unused for this type; ignore whatever is there
    return Event(kind, field, tick)


def encode_stream(events: Iterable[Event]) -> list[int]:
    return [encode(e) for e in events]


def decode_stream(words: Iterable[int]) -> list[Event]:
    return [decode(w) for w in words]


@dataclass(frozen=True)
class Diagnostic:
    """One linter finding; ``severity`` is "error" or "warning"."""

    index: int
    code: str
    severity: str
    message: str

    def __str__(self) -> str:
        return f"word {self.index}: {self.severity}: {self.code}: {self.message}"


def lint_stream(words: Iterable[int]) -> list[Diagnostic]:
    """Check a word stream for decode and per-sample structure problems.

    Findings (never exceptions): undecodable words, ticks that go backwards
    within a sample, ticks past the sample's terminator, a missing final
    terminator, and samples whose label count differs from one (warning).
    """
    out: list[Diagnostic] = []
    last_tick = 0
    label_count = 0
    sample_start = 0
    in_sample = False
    pending: list[tuple[int, int]] = []  # (index, tick) awaiting the end tick

    for i, w in enumerate(words):
        try:
            e = decode(w)
        except CodecError as err:
            out.append(Diagnostic(i, err.code, "error", str(err)))
            continue
        if not in_sample:
            in_sample = True
            sample_start = i
            last_tick = 0
            label_count = 0
            pending = []
        if e.kind is EventKind.END_OF_SAMPLE:
            for j, t in pending:
                if t > e.tick:
                    out.append(Diagnostic(
                        j, "tick-beyond-end", "error",
                        f"event tick {t} exceeds sample end tick {e.tick}"))
            if label_count != 1:
                out.append(Diagnostic(
                    i, "label-count", "warning",
                    f"sample starting at word {sample_start} carries "
                    f"{label_count} labels (expected 1)"))
            in_sample = False
            continue
        if e.tick < last_tick:
            out.append(Diagnostic(
                i, "non-monotonic-tick", "error",
                f"tick {e.tick} after tick {last_tick}"))
        last_tick = max(last_tick, e.tick)
        pending.append((i, e.tick))
        if e.kind is EventKind.LABEL:
            label_count += 1

    if in_sample:
        out.append(Diagnostic(
            sample_start, "missing-end-of-sample", "error",
            "stream ends inside a sample (no end-of-sample terminator)"))
    return out


def split_samples(events: list[Event]) -> list[list[Event]]:
    """Partition a decoded stream at end-of-sample markers (inclusive)."""
    samples: list[list[Event]] = []
    cur: list[Event] = []
    for e in events:
        cur.append(e)
        if e.kind is EventKind.END_OF_SAMPLE:
            samples.append(cur)
            cur = []
    if cur:
        raise CodecError("stream ends inside a sample", code="missing-end-of-sample")
    return samples


def write_words(path: str | Path, words: Iterable[int], header: str | None = None) -> None:
    """Write a hex word file: one 8-hex-digit word per line, LF terminated."""
    with open(path, "w", newline="\n") as f:
        if header:
            for line in header.splitlines():
                f.write(f"# {line}\n")
        for w in words:
            f.write(f"{w:08x}\n")


def read_words(path: str | Path) -> list[int]:
    """Read a hex word file, skipping blank and comment lines."""
    return list(iter_words(path))


def iter_words(path: str | Path) -> Iterator[int]:
    with open(path, "r") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if len(line) != 8:
                raise CodecError(
                    f"{path}:{lineno}: expected 8 hex digits, got {line!r}",
                    code="malformed-line")
            try:
                yield int(line, 16)
            except ValueError:
                raise CodecError(
                    f"{path}:{lineno}: not a hex word: {line!r}",
                    code="malformed-line") from None


def save_stream(path: str | Path, events: Iterable[Event], header: str | None = None) -> None:
    write_words(path, encode_stream(events), header=header)


def load_stream(path: str | Path) -> list[Event]:
    return decode_stream(read_words(path))
