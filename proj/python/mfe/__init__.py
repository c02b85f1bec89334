"""Morphable face model fitting, texture recovery and compositing."""

from ._core import (
    Error,
    FaceParams,
    MorphableModel,
    composite,
    default_model,
    fit,
    gradcheck,
    l1,
    mouth_mask,
    procedural_texture,
    psnr,
    read_png,
    recover_texture,
    relight,
    render,
    sample_params,
    set_num_threads,
    ssim,
    write_png,
)

__all__ = [
    "Error",
    "FaceParams",
    "MorphableModel",
    "composite",
    "default_model",
    "fit",
    "gradcheck",
    "l1",
    "mouth_mask",
    "procedural_texture",
    "psnr",
    "read_png",
    "recover_texture",
    "relight",
    "render",
    "sample_params",
    "set_num_threads",
    "ssim",
    "write_png",
]
