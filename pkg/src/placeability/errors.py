"""Exception types shared across the package."""


class PlaceabilityError(Exception):
    """Base class for all errors raised by this package."""


class GeometryError(PlaceabilityError):
    pass


class DegenerateHull(GeometryError):
    """Fewer than three points, or all points collinear."""

    def __init__(self, count, message=None):
        self.count = int(count)
        super().__init__(message or f"degenerate hull from {self.count} point(s)")


class DegenerateSupport(GeometryError):
    """Support contacts do not span a polygon (point or knife-edge contact)."""

    def __init__(self, count, message=None):
        self.count = int(count)
        super().__init__(message or f"degenerate support from {self.count} contact(s)")


class EmptyGeometry(GeometryError):
    pass


class InsufficientPoints(GeometryError):
    def __init__(self, count, required):
        self.count = int(count)
        self.required = int(required)
        super().__init__(f"need at least {required} points, got {count}")


class MissingNormals(GeometryError):
    pass


class ShapeError(PlaceabilityError, ValueError):
    pass


class ParseError(PlaceabilityError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class ConfigError(PlaceabilityError, ValueError):
    pass


class NoFeasiblePair(PlaceabilityError):
    """No grasp-placement combination has a positive unified score.

    ``diagnostics`` maps stage names to the number of candidates that stage
    eliminated, so callers can tell which constraint emptied the set.
    """

    def __init__(self, message="no feasible grasp-placement pair", diagnostics=None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)
