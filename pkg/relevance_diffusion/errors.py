"""Exceptions shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration; `key` names the offending entry"""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class CheckpointError(ValueError):
    """Checkpoint missing, unreadable or written by an incompatible format version"""
    pass


class NumericalAbort(RuntimeError):
    """Training or sampling produced non-finite numbers"""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
