"""Exception types shared across the package.

Everything user-facing derives from :class:`HajjGuardError` so the CLI can
map domain failures to a single exit code.
"""


class HajjGuardError(Exception):
    """Base class for all domain errors raised by this package."""


class DatasetError(HajjGuardError):
    """Malformed dataset or registry input.

    ``line`` and ``field`` are set when the problem can be pinned to a
    specific JSON-lines record.
    """

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"field '{field}'")
        prefix = ": ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.field = field


class ConfigError(HajjGuardError):
    """Invalid configuration value (generator, feature flags, run config)."""


class TrainingError(HajjGuardError):
    """A classifier could not be trained on the given data."""


class ConvergenceError(TrainingError):
    """Optimizer hit its hard iteration cap before satisfying its exit test."""

    def __init__(self, message: str, violation: float):
        super().__init__(f"{message} (worst constraint violation {violation:.3e})")
        self.violation = violation


class GridSearchError(HajjGuardError):
    """A grid-search candidate failed to train; identifies the candidate."""

    def __init__(self, params: dict, cause: Exception):
        super().__init__(f"candidate {params!r} failed: {cause}")
        self.params = dict(params)


class ModelFormatError(HajjGuardError):
    """Model file is corrupt, truncated, or fails its checksum."""


class UnsupportedVersionError(ModelFormatError):
    """Model file declares a format version this build does not understand."""


class UnsupportedModelError(HajjGuardError):
    """Requested analysis is undefined for this model type (e.g. feature
    importance for a non-linear SVM kernel)."""
