"""Two-image virtual viewpoint synthesis and parallax close-up.

The pipeline rectifies an image pair onto a common plane, matches their
colors, estimates dense bidirectional optical flow, and renders any
intermediate viewpoint by proportional flow interpolation; flow magnitude
doubles as an inverse-depth proxy for parallax-correct close-ups.
"""

from .closeup import (
    CloseupParams,
    LayerMask,
    auto_tau,
    closeup_fused,
    layered_zoom,
    segment_foreground,
    uniform_zoom,
)
from .color import TransferCurve, apply_transfer, curve_eval, fit_transfer, percentile
from .errors import (
    BadMagicError,
    CorruptDataError,
    DegenerateConfigurationError,
    DegenerateFieldError,
    DegenerateHistogramError,
    DimensionMismatchError,
    FlowViewError,
    InvalidParameterError,
    PipelineError,
    PointAtInfinityError,
    SingularMatrixError,
    TooFewPointsError,
    UnsupportedFormatError,
)
from .flow import (
    FlowParams,
    bidirectional_flow,
    flow_to_color,
    horn_schunck_level,
    pyramidal_flow,
    warp_backward,
)
from .pipeline import PairConfig, PreparedPair, prepare_pair, run_pipeline
from .raster import (
    FlowField,
    GrayImage,
    Image,
    ScalarField,
    build_pyramid,
    flow_magnitude,
    load_image,
    read_flo,
    sample_bilinear,
    save_image,
    to_gray,
    write_flo,
)
from .registration import (
    Correspondence,
    Homography,
    apply_homography,
    compose_rectifying,
    estimate_homography,
    find_correspondences,
    ransac_homography,
    warp_perspective,
)
from .synthesis import (
    SynthesisParams,
    ViewResult,
    forward_warp,
    fuse_views,
    overlay_rgb,
    scale_flow,
    synthesize_view,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
