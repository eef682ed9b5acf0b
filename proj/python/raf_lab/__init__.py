from ._core import (
    ConfigError,
    ContractViolation,
    Error,
    hann_window,
    mstft_distance,
    objectives,
    quality_gap_vector,
    resample,
    run_segment_size_study,
    run_toy1d,
    run_wave_toy,
    stft_magnitude,
    toy_quality_gap,
)

__all__ = [
    "ConfigError",
    "ContractViolation",
    "Error",
    "hann_window",
    "mstft_distance",
    "objectives",
    "quality_gap_vector",
    "resample",
    "run_segment_size_study",
    "run_toy1d",
    "run_wave_toy",
    "stft_magnitude",
    "toy_quality_gap",
]
