"""Exception types raised across the package."""


class TdoaAtlasError(ValueError):
    """Base class for every error raised by tdoa_atlas."""


class DegenerateConfigError(TdoaAtlasError):
    """Two or more sensors coincide, so the array cannot localize anything."""


class GeometryClassError(TdoaAtlasError):
    """The operation is not defined for the configuration's geometry class."""


class DependentForms(TdoaAtlasError):
    """Two covectors are linearly dependent."""


class AtSensorError(TdoaAtlasError):
    """The gradient of a distance function is undefined at a sensor."""


class AmbiguousComponent(TdoaAtlasError):
    """A tau point could not be assigned to exactly one double-cover component."""


class DependentPlanes(TdoaAtlasError):
    """The two plane equations are parallel and do not meet."""


class CoincidentPlanes(TdoaAtlasError):
    """The two plane equations describe the same plane."""


class NoRealRoots(TdoaAtlasError):
    """The quadratic in the line parameter has no real solution."""


class IllConditioned(TdoaAtlasError):
    """The implicitization design matrix has no well separated null direction."""


class OffPlane(TdoaAtlasError):
    """A triple of range differences does not satisfy tau10 - tau20 + tau21 = 0."""
