"""Exception types raised by the library."""


class RelunetError(Exception):
    """Base class for library errors."""


class DimensionError(RelunetError, ValueError):
    """Shapes of layers or inputs do not line up."""


class ConstructionError(RelunetError, ValueError):
    """A builder received parameters outside its valid range."""


class PrecisionError(ConstructionError):
    """Requested construction cannot be realized exactly in float64."""


class NetworkFormatError(RelunetError, ValueError):
    """A serialized network could not be parsed.

    The ``location`` attribute names where the problem was found, either a
    ``line:col`` pair for malformed JSON or a path such as ``layers[2].bias``.
    """

    def __init__(self, message, location=""):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)
