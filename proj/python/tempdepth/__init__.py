"""Toolkit for temporally consistent video depth at desk scale.

The heavy lifting lives in the compiled extension; this package re-exports
its surface: surface normals from depth, normal-variance difference masks,
temporal feature alignment, depth losses with analytic gradients, temporal
consistency metrics, a synthetic scene generator, and the PFM/PGM/FGRID
file formats used by the command-line tool.
"""

from tempdepth._core import (  # noqa: F401
    AttentionWeights,
    EmptyInputError,
    FormatError,
    IoError,
    NumericError,
    PreconditionError,
    SceneObject,
    SceneSpec,
    Shape,
    SizeError,
    TruncationError,
    backward_warp,
    depth_metrics,
    directional_variance,
    downsample_mask_max,
    finite_diff,
    fuse_features,
    fuse_video_feature,
    iou,
    mask_loss,
    motion_baseline,
    mse,
    mse_grad,
    ms_forward,
    normals_from_depth,
    qtc,
    raw_mask,
    read_fgrid,
    read_mask_pgm,
    read_pfm,
    refine_mask,
    render_sequence,
    rtc,
    silog,
    silog_grad,
    sns_align,
    sns_forward,
    sns_similarity,
    sobel_gradients,
    total_loss,
    toy_feature_extractor,
    write_fgrid,
    write_mask_pgm,
    write_pfm,
)

__version__ = "0.1.0"
