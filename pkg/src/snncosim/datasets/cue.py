"""Binary navigation task: accumulate lateral cues, answer after a delay.

Each sample presents a sequence of cues, one per window, on either the
left-cue or right-cue input group; a silent retention delay follows, then a
decision-cue window during which the answer is scored.  The label is the
majority cue side, delivered late in the sample (delayed supervision).

Input layout: four equal groups of neurons, addresses ascending —
left cues, right cues, decision cue, background noise.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..aer import Event, end_of_sample, label, spike
from ..errors import ConfigError
from ..prng import XorShift64Star

LABEL_LEFT = 0
LABEL_RIGHT = 1


@dataclass(frozen=True)
class CueTaskSpec:
    n_samples: int = 50
    n_cues: int = 7
    cue_window_ticks: int = 10
    delay_ticks: int = 50
    decision_window_ticks: int = 20
    group_size: int = 10
    spike_prob_active: float = 0.4
    spike_prob_noise: float = 0.05
    label_delay: int = 20
    seed: int = 1

    @property
    def n_in(self) -> int:
        return 4 * self.group_size

    @property
    def end_tick(self) -> int:
        return (self.n_cues * self.cue_window_ticks + self.delay_ticks
                + self.decision_window_ticks)

    def validate(self) -> None:
        if self.n_samples < 1:
            raise ConfigError("n_samples must be at least 1")
        if self.n_cues < 1:
            raise ConfigError("n_cues must be at least 1")
        if min(self.cue_window_ticks, self.delay_ticks,
               self.decision_window_ticks, self.group_size) < 1:
            raise ConfigError("window lengths and group size must be >= 1")
        for name, p in (("spike_prob_active", self.spike_prob_active),
                        ("spike_prob_noise", self.spike_prob_noise)):
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if not 1 <= self.label_delay <= self.end_tick:
            raise ConfigError("label_delay must lie in [1, end_tick]")
        if self.end_tick > 4095:
            raise ConfigError(
                f"sample length {self.end_tick} exceeds the 12-bit tick field")
        if self.n_in > 256:
            raise ConfigError("input count exceeds 8-bit addressing")


def _draw_sides(rng: XorShift64Star, n_cues: int) -> list[int]:
    # regenerate on a tie so the majority label is always defined
    while True:
        sides = [rng.next_below(2) for _ in range(n_cues)]
        rights = sum(sides)
        if rights * 2 != n_cues:
            return sides


def _one_sample(spec: CueTaskSpec, rng: XorShift64Star) -> list[Event]:
    gs = spec.group_size
    sides = _draw_sides(rng, spec.n_cues)
    rights = sum(sides)
    lab = LABEL_RIGHT if rights * 2 > spec.n_cues else LABEL_LEFT

    cue_end = spec.n_cues * spec.cue_window_ticks
    decision_start = cue_end + spec.delay_ticks
    end = spec.end_tick
    label_tick = end - spec.label_delay

    events: list[Event] = []
    for t in range(end):
        if t < cue_end:
            side = sides[t // spec.cue_window_ticks]
            active_base = side * gs             # left group 0, right group 1
        elif t >= decision_start:
            active_base = 2 * gs                # decision-cue group
        else:
            active_base = -1                    # retention delay: silence
        if active_base >= 0:
            for n in range(gs):
                if rng.next_unit() < spec.spike_prob_active:
                    events.append(spike(active_base + n, t))
        for n in range(3 * gs, 4 * gs):         # background noise group
            if rng.next_unit() < spec.spike_prob_noise:
                events.append(spike(n, t))
        if t == label_tick:
            events.append(label(lab, t))
    events.append(end_of_sample(end))
    return events


def generate_cue_dataset(spec: CueTaskSpec):
    """Returns (train_events, validation_events), each spec.n_samples long.

    Both streams come from one seeded generator, so a spec is one exact
    dataset: regeneration is byte-identical.
    """
    spec.validate()
    rng = XorShift64Star(spec.seed)
    train: list[Event] = []
    val: list[Event] = []
    for _ in range(spec.n_samples):
        train.extend(_one_sample(spec, rng))
    for _ in range(spec.n_samples):
        val.extend(_one_sample(spec, rng))
    return train, val
