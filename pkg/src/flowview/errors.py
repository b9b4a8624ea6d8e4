"""Exception types shared across the package."""


class FlowViewError(Exception):
    """Base class for all flowview errors."""


class UnsupportedFormatError(FlowViewError):
    """File is neither PNG nor binary P6 PPM (maxval 255)."""


class CorruptDataError(FlowViewError):
    """File payload is truncated or otherwise inconsistent with its header."""


class BadMagicError(CorruptDataError):
    """A .flo file does not start with the expected magic number."""


class DimensionMismatchError(FlowViewError):
    """Operands do not share the same pixel grid."""


class PointAtInfinityError(FlowViewError):
    """Projective transform sent a point to the plane at infinity."""


class TooFewPointsError(FlowViewError):
    """Fewer than four correspondences were supplied."""


class DegenerateConfigurationError(FlowViewError):
    """Point configuration is too ill-conditioned to estimate a homography."""


class SingularMatrixError(FlowViewError):
    """A homography that must be inverted is numerically singular."""


class DegenerateHistogramError(FlowViewError):
    """Source image histogram collapses the transfer-curve anchors (s1 == s2)."""


class DegenerateFieldError(FlowViewError):
    """A scalar field is constant, so no threshold can split it."""


class InvalidParameterError(FlowViewError):
    """A user-supplied parameter is outside its documented range."""


class PipelineError(FlowViewError):
    """A pipeline stage failed; the message carries the stage label."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
