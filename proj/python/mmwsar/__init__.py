"""Near-field mmWave SAR imaging and waveform-domain attack simulation.

Thin package wrapper around the compiled extension; everything public lives
in ``_mmwsar``.
"""

from ._mmwsar import (  # noqa: F401
    ApertureGrid,
    ConfigError,
    ImageGrid,
    InjectionOperator,
    NumericError,
    PropagationOperator,
    RadarConfig,
    Scene,
    Vec3,
    dia_optimize,
    inject,
    psnr,
    reconstruct,
    resolved_config,
    run_experiment,
    run_experiment_to_dir,
    soft_threshold,
    ssim,
    synth_chirp,
    to_magnitude,
    vjp,
)

__all__ = [
    "ApertureGrid",
    "ConfigError",
    "ImageGrid",
    "InjectionOperator",
    "NumericError",
    "PropagationOperator",
    "RadarConfig",
    "Scene",
    "Vec3",
    "dia_optimize",
    "inject",
    "psnr",
    "reconstruct",
    "resolved_config",
    "run_experiment",
    "run_experiment_to_dir",
    "soft_threshold",
    "ssim",
    "synth_chirp",
    "to_magnitude",
    "vjp",
]
