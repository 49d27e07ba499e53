class PrepError(Exception):
    message = 'Supervision generation failed!'

    def __init__(self, detail: str | None = None):
        self.detail = detail or self.message
        super().__init__(self.detail)


# --- Invalid input (CLI exit code 2) ---

class InvalidInput(PrepError):
    message = 'Invalid input!'


class ChipNotFound(InvalidInput):
    message = 'Chip file not found!'


class UnsupportedRaster(InvalidInput):
    message = 'Unsupported raster format!'


class EmptyRaster(InvalidInput):
    message = 'Raster has zero size!'


class GeometryOutOfBounds(InvalidInput):
    message = 'Synthetic geometry lies outside the chip!'


class InvalidConfig(InvalidInput):
    message = 'Invalid configuration!'


class EmptyPointSet(InvalidInput):
    message = 'Point set is empty!'


class TooFewPoints(InvalidInput):
    message = 'Fewer points than mixture components!'


class SingularComponentError(InvalidInput):
    message = 'Singular component has no assigned points!'

    def __init__(self, component: int, detail: str | None = None):
        self.component = component
        super().__init__(detail or f"Component {component} is singular but has no hard-assigned points")


class NotPositiveDefinite(InvalidInput):
    message = 'Covariance is not symmetric positive-definite!'


class ShapeMismatch(InvalidInput):
    message = 'Array shapes do not match!'


class ChannelMismatch(InvalidInput):
    message = 'Feature channel counts do not match!'


class NonFiniteInput(InvalidInput):
    message = 'Input contains non-finite values!'


class ManifestError(InvalidInput):
    message = 'Manifest could not be built!'


# --- Container codec ---

class ContainerError(PrepError):
    message = 'Corrupt container!'


class BadMagic(ContainerError):
    message = 'Bad container magic!'


class UnsupportedVersion(ContainerError):
    message = 'Unsupported container version!'


class TruncatedPayload(ContainerError):
    message = 'Container payload is truncated!'


# --- Output ---

class OutputNotWritable(PrepError):
    message = 'Output directory is not writable!'
