"""Exception types raised across the package."""


class GraphAnnError(Exception):
    """Base class for all graphann errors."""


class DimensionMismatchError(GraphAnnError, ValueError):
    """Vector length does not match the index dimension."""


class DuplicateIdError(GraphAnnError, ValueError):
    """External id already present or was used before (ids are never reused)."""


class UnknownIdError(GraphAnnError, KeyError):
    """External id is not live in the index."""


class AlreadyFlaggedError(GraphAnnError, ValueError):
    """External id is already in the deletion flag set."""


class EmptyIndexError(GraphAnnError, ValueError):
    """Operation requires a non-empty index."""


class SearchParameterError(GraphAnnError, ValueError):
    """Invalid search parameters (for example ef < k)."""


class ConfigError(GraphAnnError, ValueError):
    """Invalid run or protocol configuration."""


class DatasetFormatError(GraphAnnError, ValueError):
    """Malformed or inconsistent dataset file."""


class SnapshotError(GraphAnnError, ValueError):
    """Unreadable, corrupt, or incompatible index snapshot."""
