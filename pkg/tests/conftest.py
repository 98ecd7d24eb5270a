import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from waveridge import tfa


@pytest.fixture(scope="session")
def tone_200():
    """10 Hz unit cosine at fs=200, 10 s, with its matched window."""
    fs, f0 = 200.0, 10.0
    t = np.arange(int(fs * 10)) / fs
    sig = tfa.Signal(np.cos(2 * np.pi * f0 * t), fs)
    window = tfa.design_window(fs, fundamental_hz=f0, cycles=10)
    return sig, window, f0


@pytest.fixture(scope="session")
def harmonic3_signal():
    """Noise-free 1.5 Hz tone with exact 2nd and 3rd harmonics at fs=200."""
    fs, f1 = 200.0, 1.5
    t = np.arange(int(fs * 30)) / fs
    x = (
        1.0 * np.cos(2 * np.pi * f1 * t)
        + 0.8 * np.cos(2 * np.pi * 2 * f1 * t + 0.4)
        + 0.6 * np.cos(2 * np.pi * 3 * f1 * t + 1.1)
    )
    sig = tfa.Signal(x, fs)
    window = tfa.design_window(fs, fundamental_hz=f1, cycles=10)
    return sig, window, f1


def random_tfr(rng, n_times, n_bins, dt=0.1, dxi=0.5):
    vals = rng.normal(size=(n_times, n_bins)) + 1j * rng.normal(size=(n_times, n_bins))
    return tfa.Tfr(values=vals, dt=dt, dxi=dxi, kind=tfa.STFT)
