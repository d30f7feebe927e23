"""Dataset generators and ingestion pipelines producing event streams."""

from .braille import (
    BRAILLE_CELLS,
    BrailleSpec,
    delta_encode,
    encode_braille,
    read_raw_csv,
    subset_classes,
    synth_recordings,
    write_raw_csv,
)
from .cue import CueTaskSpec, generate_cue_dataset

__all__ = [
    "BRAILLE_CELLS",
    "BrailleSpec",
    "CueTaskSpec",
    "delta_encode",
    "encode_braille",
    "generate_cue_dataset",
    "read_raw_csv",
    "subset_classes",
    "synth_recordings",
    "write_raw_csv",
]
