"""Exception types shared across the simulator, mapped to CLI exit codes."""

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_LINT = 2
EXIT_RUNTIME = 3


class SimError(Exception):
    """Base class for all simulator errors."""

    exit_code = EXIT_RUNTIME


class ConfigError(SimError):
    """Malformed experiment config, SPI script or invalid parameter value."""

    exit_code = EXIT_CONFIG


class CodecError(SimError):
    """Event word that cannot be encoded or decoded.

    ``code`` carries a stable machine-readable reason (for example
    "unknown-type-code") so stream linters can turn the exception into a
    diagnostic without parsing the message.
    """

    exit_code = EXIT_LINT

    def __init__(self, message: str, code: str = "codec-error"):
        super().__init__(message)
        self.code = code


class LintError(SimError):
    """Event stream rejected by the stream linter."""

    exit_code = EXIT_LINT


class SpiError(SimError):
    """Rejected SPI frame (unassigned register write, window out of range)."""

    exit_code = EXIT_CONFIG


class FsmFault(SimError):
    """Decoder FSM halted: malformed word, handshake timeout, protocol fault."""

    exit_code = EXIT_RUNTIME


class PlanError(SimError):
    """Batch plan that cannot be realized (depth exceeded, non-divisible epoch)."""

    exit_code = EXIT_CONFIG
