"""Exception hierarchy shared by all tomokit modules."""


class TomokitError(Exception):
    """Base class for all tomokit failures."""


class GeometryError(TomokitError):
    """Invalid grid geometry, shapes, or numeric parameters."""


class CoverageError(TomokitError):
    """Offset or direction sampling fails to cover the data support."""


class FormatError(TomokitError):
    """Malformed TGM container or incompatible header."""


class InvariantError(TomokitError):
    """A runtime invariant gate was violated (inconsistent data)."""


class NyquistError(TomokitError):
    """Grid too coarse for the spectral content of the input."""


class SupportError(TomokitError):
    """Field support conflicts with a domain restriction (singular set)."""
