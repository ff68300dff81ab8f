"""tomokit: numerical integral-geometry toolkit."""

from . import errors, grid, radon, tgm

__all__ = ["errors", "grid", "radon", "tgm"]
__version__ = "0.1.0"
