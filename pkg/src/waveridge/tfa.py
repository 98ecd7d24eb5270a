"""Short-time Fourier transform and synchrosqueezing on a fixed discrete grid.

All transforms share one grid convention: a signal sampled at ``fs`` Hz is
analysed against ``M`` frequency bins, bin ``m`` (1-based) sitting at
``m * fs / (2 M)`` Hz; frequency zero is skipped.  Windows are discretised on
the unit interval [-1/2, 1/2] with ``2 K + 1`` taps, so the centre tap of a
Gaussian window is exactly 1.

Frame phases are referenced to the window centre.  This keeps band sums of
the squeezed transform coherent, which is what makes ridge-based component
reconstruction work (see :func:`waveridge.decompose.reconstruct_component`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .defaults import DEFAULTS
from .errors import InvalidParameterError

__all__ = [
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
    "default_threshold",
]

STFT = "stft"
SST1 = "sst1"
SST2 = "sst2"

_KINDS = (STFT, SST1, SST2)


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled real-valued series."""

    samples: np.ndarray
    fs: float
    t0: float = 0.0

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidParameterError("signal must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(samples)):
            raise InvalidParameterError("signal samples must all be finite")
        if not (np.isfinite(self.fs) and self.fs > 0):
            raise InvalidParameterError("sampling rate must be finite and positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.fs

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n) / self.fs


@dataclass(frozen=True, eq=False)
class WindowPair:
    """Analysis window and its derivative on the unit-interval grid.

    ``h`` and ``dh`` both have ``2 * half_length + 1`` taps; ``dh`` is the
    derivative with respect to the unit-interval coordinate, so converting to
    a per-sample derivative means dividing by ``2 * half_length``.
    """

    h: np.ndarray
    dh: np.ndarray
    half_length: int
    sigma: float

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        dh = np.asarray(self.dh, dtype=np.float64)
        k = int(self.half_length)
        if k < 1:
            raise InvalidParameterError("window half-length must be at least 1")
        if h.shape != (2 * k + 1,) or dh.shape != (2 * k + 1,):
            raise InvalidParameterError("window arrays must have length 2*half_length + 1")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "dh", dh)
        object.__setattr__(self, "half_length", k)

    @property
    def n_taps(self) -> int:
        return 2 * self.half_length + 1


def gaussian_window(half_length: int, sigma: float) -> WindowPair:
    """Sampled Gaussian window and its derivative.

    The window is ``exp(-u^2 / (2 sigma^2))`` on the grid
    ``u = k / (2 half_length) - 1/2``, ``k = 0 .. 2 half_length``, so the
    centre tap is exactly 1 and the derivative vanishes there.

    Parameters
    ----------
    half_length : int
        Half the tap count; the window has ``2 * half_length + 1`` taps.
    sigma : float
        Shape parameter.  Around 0.15 keeps the Gaussian essentially
        supported on the unit interval.
    """
    if half_length < 1:
        raise InvalidParameterError("half_length must be at least 1")
    if not sigma > 0:
        raise InvalidParameterError("sigma must be positive")
    k = int(half_length)
    u = np.arange(2 * k + 1) / (2.0 * k) - 0.5
    h = np.exp(-(u**2) / (2.0 * sigma**2))
    dh = -u * h / sigma**2
    return WindowPair(h=h, dh=dh, half_length=k, sigma=float(sigma))


def design_window(
    fs: float,
    fundamental_hz: float | None = None,
    cycles: float | None = None,
    sigma: float | None = None,
    half_length: int | None = None,
) -> WindowPair:
    """Gaussian window spanning a number of cycles of a nominal fundamental.

    ``half_length`` overrides the cycle rule when given.
    """
    if sigma is None:
        sigma = DEFAULTS["window_sigma"]
    if half_length is None:
        if fundamental_hz is None:
            fundamental_hz = DEFAULTS["nominal_fundamental_hz"]
        if cycles is None:
            cycles = DEFAULTS["window_cycles"]
        if fundamental_hz <= 0 or cycles <= 0:
            raise InvalidParameterError("fundamental and cycle count must be positive")
        half_length = max(1, int(round(0.5 * cycles * fs / fundamental_hz)))
    return gaussian_window(half_length, sigma)


@dataclass(eq=False)
class Tfr:
    """Complex time-frequency matrix with its grid metadata.

    ``values`` has one row per analysis frame and one column per frequency
    bin; ``dt`` is the frame step in seconds (``hop / fs``) and ``dxi`` the
    bin step in Hz.  ``win_half_length`` records the window used to build an
    STFT so the reassignment operator can normalise its frequency offsets.
    """

    values: np.ndarray
    dt: float
    dxi: float
    kind: str
    win_half_length: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.size == 0:
            raise InvalidParameterError("TFR values must form a nonempty 2-d matrix")
        if not np.issubdtype(values.dtype, np.complexfloating):
            values = values.astype(np.complex128)
        if self.kind not in _KINDS:
            raise InvalidParameterError(f"kind must be one of {_KINDS}")
        if not (self.dt > 0 and self.dxi > 0):
            raise InvalidParameterError("grid steps must be positive")
        if not np.all(np.isfinite(values.view(np.float64))):
            raise InvalidParameterError("TFR entries must be finite")
        self.values = values

    @property
    def n_times(self) -> int:
        return self.values.shape[0]

    @property
    def n_bins(self) -> int:
        return self.values.shape[1]

    @property
    def freqs_hz(self) -> np.ndarray:
        return (np.arange(self.n_bins) + 1) * self.dxi

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_times) * self.dt

    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(eq=False)
class ReassignmentMap:
    """Per-bin frequency offsets, in bins, with NaN marking undefined entries.

    Entries are undefined exactly where the source STFT magnitude does not
    exceed ``threshold``.
    """

    omega: np.ndarray
    threshold: float

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=np.float64)
        if omega.ndim != 2:
            raise InvalidParameterError("omega must be a 2-d matrix")
        if not self.threshold > 0:
            raise InvalidParameterError("threshold must be positive")
        self.omega = omega

    @property
    def defined(self) -> np.ndarray:
        return np.isfinite(self.omega)


def default_threshold(values: np.ndarray) -> float:
    """Magnitude floor: 10 machine epsilons of the peak magnitude."""
    peak = float(np.max(np.abs(values))) if values.size else 0.0
    eps = np.finfo(np.float64).eps
    return 10.0 * eps * peak if peak > 0 else 10.0 * eps


def _frame_spectra(
    x: np.ndarray, weights: np.ndarray, half_length: int, n_bins: int, hop: int
) -> np.ndarray:
    """Windowed DFT of every ``hop``-th frame, phase-referenced to the frame centre.

    The signal is zero-extended, each frame is multiplied by ``weights`` and
    folded into a length ``2 n_bins`` buffer with the centre tap at position
    zero (wrapping), then transformed.  Bins 1..n_bins are returned.
    """
    k = half_length
    m2 = 2 * n_bins
    frame_starts = np.arange(0, x.size, hop)
    padded = np.pad(x, (k, k))
    taps = np.arange(2 * k + 1)
    positions = (taps - k) % m2
    collide = (2 * k + 1) > m2

    out = np.empty((frame_starts.size, n_bins), dtype=np.complex128)
    block = max(1, int(2**22 // max(m2, 2 * k + 1)))
    for lo in range(0, frame_starts.size, block):
        sel = frame_starts[lo : lo + block]
        frames = padded[sel[:, None] + taps[None, :]] * weights
        buf = np.zeros((sel.size, m2))
        if collide:
            np.add.at(buf, (np.arange(sel.size)[:, None], positions[None, :]), frames)
        else:
            buf[:, positions] = frames
        out[lo : lo + sel.size] = np.fft.rfft(buf, axis=1)[:, 1 : n_bins + 1]
    return out


def _check_stft_args(signal: Signal, window: WindowPair, n_bins: int, hop: int):
    if n_bins < 1:
        raise InvalidParameterError("n_bins must be at least 1")
    if hop < 1:
        raise InvalidParameterError("hop must be at least 1")
    if not isinstance(signal, Signal):
        raise InvalidParameterError("signal must be a Signal")
    if not isinstance(window, WindowPair):
        raise InvalidParameterError("window must be a WindowPair")


def stft(signal: Signal, window: WindowPair, n_bins: int, hop: int = 1) -> Tfr:
    """Short-time Fourier transform on the half-spectrum grid.

    Parameters
    ----------
    signal : Signal
    window : WindowPair
        Only the ``h`` taps are used; see :func:`stft_derivative` for the
        companion transform with the derivative taps.
    n_bins : int
        Number of frequency bins M; bin m sits at ``m * fs / (2 M)`` Hz.
    hop : int, optional
        Frame step in samples.  The output grid has ``dt = hop / fs``.
    """
    _check_stft_args(signal, window, n_bins, hop)
    vals = _frame_spectra(signal.samples, window.h, window.half_length, n_bins, hop)
    return Tfr(
        values=vals,
        dt=hop / signal.fs,
        dxi=signal.fs / (2.0 * n_bins),
        kind=STFT,
        win_half_length=window.half_length,
    )


def stft_derivative(signal: Signal, window: WindowPair, n_bins: int, hop: int = 1) -> Tfr:
    """STFT taken with the window-derivative taps (unit-interval units)."""
    _check_stft_args(signal, window, n_bins, hop)
    vals = _frame_spectra(signal.samples, window.dh, window.half_length, n_bins, hop)
    return Tfr(
        values=vals,
        dt=hop / signal.fs,
        dxi=signal.fs / (2.0 * n_bins),
        kind=STFT,
        win_half_length=window.half_length,
    )


def reassignment_operator(
    V: Tfr, Vd: Tfr, threshold: float | None = None
) -> ReassignmentMap:
    """Frequency offsets, in bins, from the window-derivative STFT.

    For a coefficient at bin m belonging to a tone at bin m0 the offset is
    approximately ``m - m0``, so ``m - round(omega)`` recovers the tone bin.
    Entries with ``|V| <= threshold`` are undefined (NaN).

    ``Vd`` must be the transform of the same frames under the derivative
    taps, as returned by :func:`stft_derivative`.  Since those taps live in
    unit-interval units, the offset normalisation is
    ``n_bins / (2 pi half_length)``.
    """
    if V.values.shape != Vd.values.shape:
        raise InvalidParameterError("V and Vd must have the same shape")
    k = V.win_half_length or Vd.win_half_length
    if k is None:
        raise InvalidParameterError(
            "reassignment needs the window half-length; build inputs with stft()"
        )
    if threshold is None:
        threshold = default_threshold(V.values)
    if not threshold > 0:
        raise InvalidParameterError("threshold must be positive")
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = Vd.values / V.values
    omega = (V.n_bins / (2.0 * np.pi * k)) * ratio.imag
    defined = np.abs(V.values) > threshold
    omega = np.where(defined, omega, np.nan)
    return ReassignmentMap(omega=omega, threshold=float(threshold))


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def _squeeze(values: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """Move each defined coefficient from bin m to ``m - round(omega)``.

    Rounding is half away from zero; targets outside 1..M are dropped.
    """
    n, m = values.shape
    defined = np.isfinite(omega)
    shift = _round_half_away(np.where(defined, omega, 0.0)).astype(np.int64)
    target = (np.arange(1, m + 1)[None, :] - shift)  # 1-based target bins
    ok = defined & (target >= 1) & (target <= m)
    rows, cols = np.nonzero(ok)
    flat = rows * m + (target[rows, cols] - 1)
    src = values[rows, cols]
    out = np.bincount(flat, weights=src.real, minlength=n * m) + 1j * np.bincount(
        flat, weights=src.imag, minlength=n * m
    )
    return out.reshape(n, m)


def sst1(V: Tfr, rmap: ReassignmentMap) -> Tfr:
    """First-order synchrosqueezing of an STFT.

    Every bin with a defined offset contributes its full coefficient to
    exactly one target bin, so row mass over in-range reassignments is
    conserved.
    """
    if V.values.shape != rmap.omega.shape:
        raise InvalidParameterError("V and reassignment map must have the same shape")
    vals = _squeeze(V.values, rmap.omega)
    return Tfr(values=vals, dt=V.dt, dxi=V.dxi, kind=SST1, win_half_length=V.win_half_length)


def sst2(
    signal: Signal,
    window: WindowPair,
    n_bins: int,
    threshold: float | None = None,
    hop: int = 1,
) -> Tfr:
    """Second-order synchrosqueezing with chirp-rate corrected offsets.

    Three transforms of the same frames are taken: the window itself, its
    per-sample derivative, and the time-weighted window.  The chirp rate
    estimated from them removes the frequency-offset bias that a linear
    chirp induces in the first-order operator; where the chirp-rate
    denominator falls below the magnitude floor the first-order offset is
    used instead.  On zero-chirp tones the output is indistinguishable from
    first-order squeezing.
    """
    _check_stft_args(signal, window, n_bins, hop)
    k = window.half_length
    x = signal.samples
    taps_t = np.arange(2 * k + 1, dtype=np.float64) - k  # per-sample time weights

    V = _frame_spectra(x, window.h, k, n_bins, hop)
    if not np.any(V):
        return Tfr(
            values=np.zeros_like(V), dt=hop / signal.fs,
            dxi=signal.fs / (2.0 * n_bins), kind=SST2, win_half_length=k,
        )
    V1 = _frame_spectra(x, window.dh / (2.0 * k), k, n_bins, hop)  # d/dsample taps
    V2 = _frame_spectra(x, taps_t * window.h, k, n_bins, hop)

    if threshold is None:
        threshold = default_threshold(V)
    if not threshold > 0:
        raise InvalidParameterError("threshold must be positive")

    absV = np.abs(V)
    defined = absV > threshold
    with np.errstate(invalid="ignore", divide="ignore"):
        z1 = V1 / V
        z2 = V2 / V
    scale = n_bins / np.pi
    omega1 = scale * z1.imag

    # chirp-rate correction: q = Re(z1)/Im(z2), offset -> omega1 + scale*q*Re(z2)
    denom_mag = np.abs((V2 * np.conj(V)).imag)
    usable = defined & (denom_mag > threshold * absV)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = scale * (z1.real / z2.imag) * z2.real
    omega = np.where(usable & np.isfinite(corr), omega1 + corr, omega1)
    omega = np.where(defined, omega, np.nan)

    vals = _squeeze(V, omega)
    return Tfr(
        values=vals, dt=hop / signal.fs, dxi=signal.fs / (2.0 * n_bins),
        kind=SST2, win_half_length=k,
    )


def transform(
    signal: Signal,
    window: WindowPair,
    n_bins: int,
    kind: str = SST2,
    threshold: float | None = None,
    hop: int = 1,
) -> Tfr:
    """Build an STFT, first-order SST or second-order SST in one call."""
    if kind == STFT:
        return stft(signal, window, n_bins, hop)
    if kind == SST1:
        V = stft(signal, window, n_bins, hop)
        Vd = stft_derivative(signal, window, n_bins, hop)
        if not np.any(V.values):
            return Tfr(values=np.zeros_like(V.values), dt=V.dt, dxi=V.dxi,
                       kind=SST1, win_half_length=V.win_half_length)
        rmap = reassignment_operator(V, Vd, threshold)
        return sst1(V, rmap)
    if kind == SST2:
        return sst2(signal, window, n_bins, threshold, hop)
    raise InvalidParameterError(f"unknown transform kind {kind!r}")
