"""Exception types shared across the package."""


class SurfdiceError(Exception):
    """Base class for all errors raised by this package."""


class GridMismatchError(SurfdiceError):
    """Two grids differ in shape or spacing where they must agree."""


class SparseLabelError(SurfdiceError):
    """Sparse labels violate their structural constraints."""


class MissingOrganError(SurfdiceError):
    """An organ required for aggregation has no breakdown."""


class CalibrationError(SurfdiceError):
    """Tolerance calibration received unusable input."""


class NiftiError(SurfdiceError):
    """A file could not be read or written as the supported NIfTI-1 subset."""


class UnsupportedDataTypeError(NiftiError):
    """The file's datatype code is outside the supported set."""


class NonBinaryMaskError(NiftiError):
    """A file read as a mask contains values other than 0 and 1."""


class ManifestError(SurfdiceError):
    """A dataset manifest violates its schema; message carries a JSON pointer."""


class ReportError(SurfdiceError):
    """An evaluation report file could not be parsed."""
