"""Deterministic co-simulator of a recurrent SNN accelerator SoC.

The package models the accelerator side (fixed-point LIF/LI network with
eligibility-trace online learning), the control side (AER event decoder FSM,
SPI parameter bank, batch-offload host runtime) and an experiment harness
for two event-stream classification tasks.
"""

__version__ = "0.1.0"
