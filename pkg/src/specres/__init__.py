"""Recovery of off-grid spikes from low-pass Fourier intensity samples."""
from .model import (
    IntensitySamples,
    SparseSignal,
    check_admissibility,
    generate_signal,
    measure_intensities,
    model_order,
    reference_instance,
    threshold_samples,
)
from .pipeline import RecoveryConfig, RecoveryReport, compare_solutions, recover

__version__ = "0.1.0"

__all__ = [
    "IntensitySamples",
    "RecoveryConfig",
    "RecoveryReport",
    "SparseSignal",
    "check_admissibility",
    "compare_solutions",
    "generate_signal",
    "measure_intensities",
    "model_order",
    "recover",
    "reference_instance",
    "threshold_samples",
]
