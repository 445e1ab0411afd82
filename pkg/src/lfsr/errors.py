"""Error types shared across the package.

Plain ValueError is used for malformed argument values; the classes here
cover the remaining failure kinds so callers can tell them apart.
"""


class DimensionError(ValueError):
    """Shapes of the participating arrays are incompatible."""


class StateError(RuntimeError):
    """Operation is invalid in the current state (missing tape, stale
    index map, absent upstream weights, ...)."""


class FormatError(ValueError):
    """A serialized payload does not follow the expected layout."""


class IngestionError(ValueError):
    """On-disk input (image directory, dataset) cannot be loaded."""
