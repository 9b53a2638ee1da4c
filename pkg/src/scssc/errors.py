"""Exception types used across the package.

The CLI maps these onto exit codes: InputError -> 2 (bad files or
configuration), NumericalError -> 1 (a computation failed).
"""


class InputError(ValueError):
    """Unreadable, malformed, or inconsistent input data / configuration."""


class NumericalError(RuntimeError):
    """A numerical routine failed to produce a valid result."""


class PipelineStageError(NumericalError):
    """Failure inside a named pipeline stage."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage '{stage}': {message}")
        self.stage = stage
