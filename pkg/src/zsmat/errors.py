"""Exception types shared across the engine."""


class ValidationError(ValueError):
    """Malformed input data (detections file, track table, CSV row...)."""


class ConfigError(ValueError):
    """Inconsistent or unknown run-configuration values."""


class DegenerateDistribution(ValueError):
    """A score sample that cannot be split into two clusters."""


class ProtocolError(RuntimeError):
    """A malformed or out-of-order segmenter protocol message."""


class TrackingAbort(RuntimeError):
    """The segmenter failed mid-sequence; the whole sequence is abandoned."""
