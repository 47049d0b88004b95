"""Exception types shared across the package.

DataError (and subclasses) map to CLI exit code 2; anything else that
escapes the pipeline maps to exit code 3.
"""


class DataError(Exception):
    """Invalid or inconsistent input data."""


class PlyError(DataError):
    """Malformed PLY file (bad header, missing property, short payload)."""


class CameraFileError(DataError):
    """Malformed camera JSON file."""


class MaskError(DataError):
    """Malformed or inconsistent instance-mask files."""


class ValidationError(DataError):
    """Dataset failed invariant validation."""
