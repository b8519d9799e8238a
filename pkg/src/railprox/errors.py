"""Exception hierarchy shared by every pipeline stage."""


class RailproxError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(RailproxError):
    """Bad configuration: missing column, bad flag value, unreadable path."""


class EmptyInputError(RailproxError):
    pass


class GazetteerError(RailproxError):
    pass


class GeometryError(RailproxError):
    pass


class ProjectionError(GeometryError):
    """Point too far from the projection origin for a local planar map."""


class RulesetError(RailproxError):
    pass


class AnalysisError(RailproxError):
    pass


class SchemaVersionError(RailproxError):
    pass


class StageError(RailproxError):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
