"""Adaptive-shell volumetric rendering."""

from ._core import (
    Camera,
    ConfigError,
    DomainError,
    IoError,
    NumericalError,
    Scene,
    Shell,
    alpha_interval,
    extract_shell,
    interval_sample_count,
    phi,
    psnr,
    render_band,
    render_full,
    run_cli,
)

__all__ = [
    "Camera",
    "ConfigError",
    "DomainError",
    "IoError",
    "NumericalError",
    "Scene",
    "Shell",
    "alpha_interval",
    "extract_shell",
    "interval_sample_count",
    "phi",
    "psnr",
    "render_band",
    "render_full",
    "run_cli",
]
