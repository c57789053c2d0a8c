"""Hybrid radiance fields: Gaussian rendering backed by hash-grid neural fields."""

from ._core import (
    Camera,
    Checkpoint,
    ConfigError,
    CorruptStream,
    DataError,
    DivergenceError,
    InvalidInput,
    compress,
    contract,
    decompress,
    psnr,
    run,
    ssim,
    synth,
)

__all__ = [
    "Camera",
    "Checkpoint",
    "ConfigError",
    "CorruptStream",
    "DataError",
    "DivergenceError",
    "InvalidInput",
    "compress",
    "contract",
    "decompress",
    "psnr",
    "run",
    "ssim",
    "synth",
]
