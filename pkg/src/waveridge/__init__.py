"""Ridge detection and harmonic mode decomposition for nonstationary signals.

The toolkit covers the full pipeline: short-time Fourier / synchrosqueezing
transforms, joint multi-harmonic ridge detection on the resulting
time-frequency matrices, ridge-based component reconstruction and harmonic
least-squares peeling, penalty auto-tuning, a seeded synthetic benchmark,
and walking-detection indices for accelerometer magnitude signals.
"""

__version__ = "0.1.0"

from .errors import (
    DataFormatError,
    DegenerateInputError,
    DegeneratePhaseError,
    EmptyRidgeError,
    InfeasibleRidgeError,
    InvalidParameterError,
    WaveridgeError,
)
from .tfa import (
    ReassignmentMap,
    Signal,
    Tfr,
    WindowPair,
    design_window,
    gaussian_window,
    reassignment_operator,
    sst1,
    sst2,
    stft,
    stft_derivative,
    transform,
)

__all__ = [
    "__version__",
    "WaveridgeError",
    "InvalidParameterError",
    "DegenerateInputError",
    "DegeneratePhaseError",
    "InfeasibleRidgeError",
    "EmptyRidgeError",
    "DataFormatError",
    "Signal",
    "WindowPair",
    "Tfr",
    "ReassignmentMap",
    "gaussian_window",
    "design_window",
    "stft",
    "stft_derivative",
    "reassignment_operator",
    "sst1",
    "sst2",
    "transform",
]
