class ConfigError(ValueError):
    """Invalid code, decoder or run configuration."""


class InputError(ValueError):
    """Malformed numeric input (wrong length, non-finite LLRs)."""


class ScheduleError(RuntimeError):
    """A decoding round was issued before its inputs were available."""


class LedgerError(RuntimeError):
    """Memory ledger misuse, e.g. a double release."""
