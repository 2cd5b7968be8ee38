"""Exception hierarchy."""


class PolyfieldError(Exception):
    """Base class for library errors."""


class GeometryError(PolyfieldError, ValueError):
    """A ring or polyline violates a geometric invariant."""


class DimensionError(PolyfieldError, ValueError):
    """Grid or vector shapes do not agree."""


class PlacementError(PolyfieldError, RuntimeError):
    """The scene generator could not place the requested buildings."""


class FormatError(PolyfieldError, ValueError):
    """A file could not be parsed. ``where`` names the file and position."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
