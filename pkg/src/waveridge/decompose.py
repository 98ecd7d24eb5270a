"""Component reconstruction from squeezed transforms and harmonic peeling.

The outer loop alternates ridge detection on the synchrosqueezed transform
of the current residual with a harmonic least-squares fit of the detected
component, subtracting each freshly fitted component before hunting for the
next.  Later sweeps re-detect harmonics around the previous fundamental
tracks, which tightens the estimates once the strongest components are out
of the way.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline
from scipy.signal import savgol_filter

from . import ridge as ridge_mod
from . import tfa
from .defaults import DEFAULTS
from .errors import (
    DegenerateInputError,
    DegeneratePhaseError,
    EmptyRidgeError,
    InvalidParameterError,
)
from .ridge import PenaltyConfig, Ridge, RidgeSet, SegmentPlan
from .tfa import Signal, Tfr, WindowPair

__all__ = [
    "ComplexComponent",
    "ImtEstimate",
    "DecompositionResult",
    "reconstruct_component",
    "phase_unwrap",
    "samd_fit",
    "samd_mhrd",
    "ridge_ordering",
    "default_recon_bandwidth",
]


@dataclass(eq=False)
class ComplexComponent:
    """Analytic component values along a ridge."""

    values: np.ndarray
    source_ridge: Ridge

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim != 1 or values.size == 0:
            raise InvalidParameterError("component must be a nonempty 1-d sequence")
        if not np.all(np.isfinite(values.view(np.float64))):
            raise InvalidParameterError("component values must be finite")
        self.values = values

    @property
    def amplitudes(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass(eq=False)
class ImtEstimate:
    """Fitted oscillatory component: per-harmonic amplitude and phase tracks.

    ``composite`` is exactly ``sum_j harmonic_amps[j] * cos(2 pi *
    harmonic_phases[j])``; phases are in cycles.
    """

    fundamental_phase: np.ndarray
    harmonic_amps: np.ndarray
    harmonic_phases: np.ndarray
    composite: np.ndarray
    harmonic_order: int


@dataclass(eq=False)
class DecompositionResult:
    """Per-component, per-sweep estimates plus the final residual.

    ``estimates[j][i]`` is component j's fit after sweep i; ``residual`` is
    the input minus the final composites, exactly.
    """

    estimates: list
    ridges: list
    residual: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def n_components(self) -> int:
        return len(self.estimates)

    def composite(self, component: int, sweep: int = -1) -> np.ndarray:
        return self.estimates[component][sweep].composite


def default_recon_bandwidth(ridge: Ridge) -> float:
    """Reconstruction bandwidth rule: a fifth of the mean fundamental IF,
    never narrower than a few bins."""
    mean_if = float(np.mean(ridge.freqs_hz))
    return max(
        DEFAULTS["recon_band_factor"] * mean_if,
        DEFAULTS["recon_band_min_bins"] * ridge.dxi,
    )


def reconstruct_component(S: Tfr, c: Ridge, delta_hz: float) -> ComplexComponent:
    """Band-integrated component along a ridge of a squeezed transform.

    Sums ``S`` over bins within ``delta_hz`` of the ridge frequency at each
    frame and scales by ``1 / n_bins`` (equal to twice the sample period
    times the bin width) so that a real cosine of amplitude A whose ridge
    sits on the tone reconstructs to magnitude approximately A.  Frames
    whose band misses the grid entirely yield 0 and a warning; this cannot
    happen for an in-range ridge.
    """
    if not delta_hz > 0:
        raise InvalidParameterError("bandwidth must be positive")
    T, M = S.values.shape
    if c.bins.size != T:
        raise InvalidParameterError("ridge length must match the TFR time axis")
    half_bins = delta_hz / S.dxi
    cols = np.arange(1, M + 1)
    inband = np.abs(cols[None, :] - c.bins[:, None]) < half_bins
    empty = ~inband.any(axis=1)
    if empty.any():
        warnings.warn(
            f"reconstruction band empty at {int(empty.sum())} frame(s); "
            "those samples are zero",
            stacklevel=2,
        )
    values = (S.values * inband).sum(axis=1) / M
    return ComplexComponent(values=values, source_ridge=c)


def phase_unwrap(
    component: ComplexComponent,
    guide_cycles_per_step: np.ndarray | None = None,
) -> np.ndarray:
    """Continuous phase of a component, in cycles.

    By default consecutive phase differences are brought into (-1/2, 1/2]
    before the cumulative correction, so oscillations above half a cycle
    per step alias.  When the expected per-step advance is known (for
    instance from a detected ridge on a thinned time grid), passing it as
    ``guide_cycles_per_step`` resolves the whole-cycle ambiguity instead.

    Samples with zero magnitude take no part in unwrapping; their phase is
    linearly interpolated from the surrounding nonzero samples (held flat
    past the ends).
    """
    values = component.values
    nz = np.abs(values) > 0
    if not nz.any():
        raise DegenerateInputError("cannot unwrap an all-zero component")
    idx = np.nonzero(nz)[0]
    if guide_cycles_per_step is None:
        cycles = np.unwrap(np.angle(values[idx])) / (2.0 * np.pi)
    else:
        guide = np.asarray(guide_cycles_per_step, dtype=np.float64)
        if guide.shape not in ((values.size,), (values.size - 1,)):
            raise InvalidParameterError(
                "guide must hold one expected advance per sample or per step"
            )
        per_step = guide[1:] if guide.size == values.size else guide
        cum_guide = np.concatenate([[0.0], np.cumsum(per_step)])
        angles = np.angle(values[idx]) / (2.0 * np.pi)
        d = np.diff(angles)
        expected = np.diff(cum_guide[idx])
        d += np.round(expected - d)
        cycles = np.concatenate([[angles[0]], angles[0] + np.cumsum(d)])
    if idx.size == values.size:
        return cycles
    return np.interp(np.arange(values.size), idx, cycles)


def _smooth_track(track: np.ndarray, window_samples: float) -> np.ndarray:
    """Local-quadratic smoothing for phase tracks.

    A second-order fit reproduces linear chirps exactly, so only the
    noise-driven wobble is attenuated.
    """
    win = int(round(window_samples))
    if win % 2 == 0:
        win += 1
    if win < 5 or track.size <= win:
        return track
    return savgol_filter(track, win, polyorder=2, mode="interp")


def _spline_basis(n_samples: int, n_basis: int) -> np.ndarray:
    """Clamped uniform B-spline basis (cubic where possible) on [0, 1]."""
    degree = min(3, n_basis - 1)
    n_interior = n_basis - degree - 1
    x = np.linspace(0.0, 1.0, n_samples)
    knots = np.concatenate(
        [
            np.zeros(degree + 1),
            np.linspace(0.0, 1.0, n_interior + 2)[1:-1],
            np.ones(degree + 1),
        ]
    )
    basis = BSpline.design_matrix(x, knots, degree, extrapolate=False).toarray()
    return basis


def samd_fit(
    f: Signal,
    phi1: np.ndarray,
    harmonic_order: int,
    n_knots: int = 15,
) -> ImtEstimate:
    """Least-squares harmonic fit against a fixed fundamental phase.

    The signal is projected onto ``A_j(t) cos(2 pi j phi1) + B_j(t)
    sin(2 pi j phi1)`` for ``j = 1..harmonic_order``, with the quadrature
    envelopes ``A_j, B_j`` living on a smooth spline basis of ``n_knots``
    coefficients.  Per-harmonic amplitude is ``sqrt(A^2 + B^2)`` and the
    phase track absorbs the quadrature angle.

    Raises :class:`DegeneratePhaseError` when the design is rank-deficient,
    e.g. for a constant phase.
    """
    phi1 = np.asarray(phi1, dtype=np.float64)
    if phi1.shape != (f.n,):
        raise InvalidParameterError("phase track must match the signal length")
    if np.any(np.diff(phi1) < 0):
        raise InvalidParameterError("fundamental phase must be nondecreasing")
    if harmonic_order < 1:
        raise InvalidParameterError("harmonic order must be at least 1")
    if n_knots < 2:
        raise InvalidParameterError("need at least 2 spline coefficients")

    basis = _spline_basis(f.n, n_knots)
    d = harmonic_order
    cols = []
    for j in range(1, d + 1):
        cj = np.cos(2.0 * np.pi * j * phi1)
        sj = np.sin(2.0 * np.pi * j * phi1)
        cols.append(basis * cj[:, None])
        cols.append(basis * sj[:, None])
    design = np.hstack(cols)
    coef, _, rank, _ = np.linalg.lstsq(design, f.samples, rcond=None)
    if rank < design.shape[1]:
        raise DegeneratePhaseError(
            "harmonic design matrix is rank deficient; the phase track is too flat"
        )

    nb = basis.shape[1]
    amps = np.empty((d, f.n))
    phases = np.empty((d, f.n))
    for j in range(d):
        a = basis @ coef[2 * j * nb : (2 * j + 1) * nb]
        b = basis @ coef[(2 * j + 1) * nb : (2 * j + 2) * nb]
        amps[j] = np.hypot(a, b)
        phases[j] = (j + 1) * phi1 + np.arctan2(-b, a) / (2.0 * np.pi)
    composite = (amps * np.cos(2.0 * np.pi * phases)).sum(axis=0)
    return ImtEstimate(
        fundamental_phase=phi1,
        harmonic_amps=amps,
        harmonic_phases=phases,
        composite=composite,
        harmonic_order=d,
    )


def ridge_ordering(ridge_sets: list[RidgeSet]) -> np.ndarray:
    """Permutation sorting ridge sets by mean fundamental bin, ascending.

    Exact ties fall back to the first-sample bin, then to input order.
    """
    if not ridge_sets:
        raise InvalidParameterError("need at least one ridge set")
    means = np.array([rs.rows[0].mean() for rs in ridge_sets])
    firsts = np.array([rs.rows[0][0] for rs in ridge_sets])
    return np.lexsort((firsts, means))


def samd_mhrd(
    f: Signal,
    n_components: int,
    n_sweeps: int,
    n_harmonics: int,
    penalties: PenaltyConfig | None = None,
    beta: float | None = None,
    plan: SegmentPlan | None = None,
    delta_hz: float | None = None,
    n_bins: int | None = None,
    window: WindowPair | None = None,
    hop: int = 1,
    n_knots: int = 15,
    threshold: float | None = None,
    delta_max: int | None = None,
    fundamental_range_hz: tuple[float, float] | None = None,
    detect_surface: str | None = None,
    phase_smooth_s: float = 0.8,
    peel_within_sweep: bool = True,
) -> DecompositionResult:
    """Full detect-reconstruct-peel decomposition.

    Per sweep, each component is re-estimated against the input minus the
    freshest estimates of the others: harmonic ridges are detected on the
    residual's transform (jointly on sweep one, around the previous
    fundamental afterwards), the fundamental is reconstructed from the
    residual's second-order squeezed transform and unwrapped, and the
    component is refit by :func:`samd_fit` with ``harmonic_order =
    n_harmonics``.  Components are relabelled by ascending fundamental IF
    at the end of each sweep.

    ``detect_surface`` chooses the magnitude surface the ridge detector
    scores: the default "stft" (spectrogram-style) surface has no empty
    bins, which keeps weak fundamentals competitive under heavy noise;
    "sst2" scores the squeezed surface itself.  Reconstruction always
    integrates the squeezed transform.

    ``hop`` thins the transform's time axis for detection and phase
    estimation; the fit itself always runs at full rate.  The unwrapped
    fundamental phase is smoothed by a local quadratic over
    ``phase_smooth_s`` seconds before the fit: the model assumes slowly
    varying frequency, so this removes noise-driven phase wobble (which
    the slow quadrature envelopes cannot absorb and which otherwise
    wrecks the higher harmonics) without biasing chirps.  A sweep's
    re-estimate replaces the carried one only when it explains the
    current working signal at least as well, so later sweeps refine
    rather than churn.  With ``peel_within_sweep=False`` the subtraction
    of earlier components is deferred to the end of each sweep, so all
    detections within a sweep see the same residual.

    Raises :class:`EmptyRidgeError` when a pass finds nothing left to
    extract (residual numerically zero).
    """
    if n_components < 1 or n_sweeps < 1:
        raise InvalidParameterError("component and sweep counts must be at least 1")
    if beta is None:
        beta = DEFAULTS["beta"]
    if penalties is None:
        lam1 = DEFAULTS["lambda1"]
        dl = DEFAULTS["delta_lambda"]
        penalties = PenaltyConfig(
            lam=[(1.0 - k * dl) * lam1 for k in range(n_harmonics)]
        )
    if window is None:
        window = tfa.design_window(f.fs)
    if n_bins is None:
        n_bins = max(8, int(round(f.fs / (2.0 * DEFAULTS["dxi_hz"]))))
    detect_surface = detect_surface or DEFAULTS["detect_surface"]
    if detect_surface not in (tfa.STFT, tfa.SST2):
        raise InvalidParameterError("detect_surface must be 'stft' or 'sst2'")

    L, I, K = n_components, n_sweeps, n_harmonics
    f0 = f.samples
    frame_pos = np.arange(0, f.n, hop)
    full_pos = np.arange(f.n)

    composites = [np.zeros(f.n) for _ in range(L)]
    history: list[list[ImtEstimate]] = [[] for _ in range(L)]
    seeds: list[RidgeSet | None] = [None] * L
    final_sets: list[RidgeSet | None] = [None] * L

    for i in range(I):
        detect_base = f0 - sum(composites) if not peel_within_sweep else None
        for ell in range(L):
            if peel_within_sweep:
                work = f0 - sum(
                    composites[j] for j in range(L) if j != ell
                ) if L > 1 else f0
            else:
                work = detect_base + composites[ell]
            if np.linalg.norm(work) <= 1e-12 * max(np.linalg.norm(f0), 1.0):
                raise EmptyRidgeError(
                    f"nothing left to extract for component {ell + 1} on sweep {i + 1}"
                )
            sig = Signal(work, f.fs, f.t0)
            try:
                S = tfa.sst2(sig, window, n_bins, threshold=threshold, hop=hop)
                R = (
                    tfa.stft(sig, window, n_bins, hop=hop)
                    if detect_surface == tfa.STFT
                    else S
                )
                if i == 0 or seeds[ell] is None:
                    seg_plan = plan or SegmentPlan.default(R.n_times, R.dt, R.dxi)
                    cset = ridge_mod.mhrd(
                        R, K, penalties, beta, seg_plan, delta_max=delta_max,
                        fundamental_range_hz=fundamental_range_hz,
                    )
                else:
                    cset = ridge_mod.mhrd_conditioned(
                        R, seeds[ell].fundamental, K, penalties, beta,
                        delta_max=delta_max,
                    )
            except DegenerateInputError as exc:
                raise EmptyRidgeError(
                    f"no signal content left for component {ell + 1} on sweep {i + 1}"
                ) from exc

            fund = cset.fundamental
            band = delta_hz if delta_hz is not None else default_recon_bandwidth(fund)
            comp = reconstruct_component(S, fund, band)
            phase_frames = phase_unwrap(
                comp, guide_cycles_per_step=fund.freqs_hz * S.dt
            )
            if phase_smooth_s > 0:
                phase_frames = _smooth_track(phase_frames, phase_smooth_s / S.dt)
            phi_full = (
                phase_frames
                if hop == 1
                else np.interp(full_pos, frame_pos, phase_frames)
            )
            phi_full = np.maximum.accumulate(phi_full)
            est = samd_fit(Signal(work, f.fs, f.t0), phi_full, K, n_knots)
            if history[ell]:
                # refits must earn their keep: a marginal residual change is
                # noise churn, not refinement
                prev = history[ell][-1]
                r_new = np.linalg.norm(work - est.composite)
                r_old = np.linalg.norm(work - prev.composite)
                if r_new > 0.99 * r_old:
                    est = prev
            composites[ell] = est.composite
            history[ell].append(est)
            seeds[ell] = cset
            final_sets[ell] = cset

        order = ridge_ordering([s for s in final_sets])
        composites = [composites[j] for j in order]
        history = [history[j] for j in order]
        seeds = [seeds[j] for j in order]
        final_sets = [final_sets[j] for j in order]

    residual = f0 - sum(composites)
    return DecompositionResult(
        estimates=history,
        ridges=final_sets,
        residual=residual,
        params={
            "n_components": L,
            "n_sweeps": I,
            "n_harmonics": K,
            "beta": float(beta),
            "lambda": penalties.lam.tolist(),
            "hop": hop,
            "n_bins": n_bins,
            "n_knots": n_knots,
            "delta_hz": delta_hz,
            "detect_surface": detect_surface,
            "peel_within_sweep": peel_within_sweep,
        },
    )
