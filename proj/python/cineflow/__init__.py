"""Joint reconstruction of complex cine MRI and motion.

Arrays are complex128 with shape (t, x, y). The pipeline functions take a
YAML config path and mirror the ``cineflow`` command line tool.
"""

from ._cineflow import (
    CineflowError,
    evaluate,
    flow_residual,
    load_sequence,
    load_spatial_mask,
    load_velocity,
    make_mask,
    psnr,
    reconstruct,
    save_sequence,
    simulate,
    ssim,
)

__all__ = [
    "CineflowError",
    "evaluate",
    "flow_residual",
    "load_sequence",
    "load_spatial_mask",
    "load_velocity",
    "make_mask",
    "psnr",
    "reconstruct",
    "save_sequence",
    "simulate",
    "ssim",
]
