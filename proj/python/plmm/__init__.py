"""Hyperspectral unmixing with the perturbed linear mixing model."""

from ._plmm import (
    AdmmConfig,
    ConfigError,
    DegenerateError,
    IoError,
    NumericError,
    ShapeError,
    evaluate,
    fcls,
    generate,
    initialize,
    load_hsm,
    pack_variability,
    reconstruct,
    save_hsm,
    spectral_angle_deg,
    unmix,
    unpack_variability,
    variability_energy,
    vca,
)

__all__ = [
    "AdmmConfig",
    "ConfigError",
    "DegenerateError",
    "IoError",
    "NumericError",
    "ShapeError",
    "evaluate",
    "fcls",
    "generate",
    "initialize",
    "load_hsm",
    "pack_variability",
    "reconstruct",
    "save_hsm",
    "spectral_angle_deg",
    "unmix",
    "unpack_variability",
    "variability_energy",
    "vca",
]
