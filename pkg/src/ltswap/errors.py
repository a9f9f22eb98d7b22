"""Shared exception types."""


class LtswapError(Exception):
    pass


class ConfigError(LtswapError):
    """Bad or missing configuration (file, key, or referenced path)."""


class InputError(LtswapError):
    """Malformed input artifact; message should name the offending line."""


class BackendError(LtswapError):
    """LLM or scorer backend failed after retries."""


class MalformedResponseError(BackendError):
    """Backend replied, but the reply could not be parsed. Carries raw text."""

    def __init__(self, message, raw=""):
        super().__init__(message)
        self.raw = raw


class PipelineError(LtswapError):
    """Stage-level failure (missing upstream artifact, bad stage name)."""
