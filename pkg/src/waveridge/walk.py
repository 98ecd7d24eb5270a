"""Walking-activity detection from accelerometer magnitude signals.

Four per-sample indices quantify how strongly the signal oscillates like
gait: two read harmonic structure off a squeezed transform along detected
ridges (band-energy ratio and masked-entropy ratio), two are fixed-band
energy ratios.  Thresholding an index and evaluating with
leave-one-subject-out cross-validation turns any of them into a detector.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import median_filter
from scipy.signal import butter, hilbert, sosfiltfilt

from . import ridge as ridge_mod
from . import tfa
from .defaults import DEFAULTS
from .errors import InvalidParameterError
from .ridge import PenaltyConfig, Ridge, RidgeSet, SegmentPlan
from .tfa import Signal, Tfr
from .tuning import lambda_schedule, renyi_entropy

__all__ = [
    "TriaxialRecording",
    "IndexSeries",
    "EvalReport",
    "magnitude",
    "gait_ridges",
    "sst_wsi",
    "entropy_ratio_index",
    "hilbert_wsi",
    "fog_wsi",
    "compute_index",
    "losocv_threshold",
    "make_synthetic_corpus",
]

WALKING = "walking"
NON_WALKING = "non-walking"
OTHER = "other"

INDEX_NAMES = ("sst-wsi", "entropy-ratio", "hilbert", "fog")


@dataclass(eq=False)
class TriaxialRecording:
    """Three-axis accelerometer record with per-sample activity labels."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    fs: float
    subject_id: str
    labels: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        z = np.asarray(self.z, dtype=np.float64)
        if not (x.shape == y.shape == z.shape) or x.ndim != 1 or x.size == 0:
            raise InvalidParameterError("axes must be equal-length nonempty 1-d arrays")
        if not self.fs > 0:
            raise InvalidParameterError("sampling rate must be positive")
        if self.labels is None:
            labels = np.full(x.size, OTHER, dtype=object)
        else:
            labels = np.asarray(self.labels, dtype=object)
            if labels.shape != x.shape:
                raise InvalidParameterError("labels must align with the samples")
        self.x, self.y, self.z = x, y, z
        self.labels = labels

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(eq=False)
class IndexSeries:
    """Per-sample detection index.

    ``larger_is_walking`` records which tail of the index indicates
    walking, so thresholding code never has to special-case index names.
    """

    values: np.ndarray
    name: str
    larger_is_walking: bool

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise InvalidParameterError("index values must be a nonempty 1-d array")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("index values must be finite")
        self.values = values


@dataclass(eq=False)
class EvalReport:
    """Leave-one-subject-out results: one row per evaluated subject."""

    subjects: list
    accuracy: np.ndarray
    f1: np.ndarray
    thresholds: np.ndarray
    confusion: list
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "subjects": [
                {
                    "subject": s,
                    "accuracy": float(a),
                    "f1": float(f),
                    "threshold": float(t),
                    "confusion": c,
                }
                for s, a, f, t, c in zip(
                    self.subjects, self.accuracy, self.f1, self.thresholds, self.confusion
                )
            ],
            "skipped": list(self.skipped),
            "mean_accuracy": float(self.accuracy.mean()) if len(self.accuracy) else None,
            "mean_f1": float(self.f1.mean()) if len(self.f1) else None,
        }


def magnitude(rec: TriaxialRecording) -> Signal:
    """Pointwise Euclidean norm of the three axes (the physical-activity
    signal); invariant to axis permutations and sign flips."""
    return Signal(np.sqrt(rec.x**2 + rec.y**2 + rec.z**2), rec.fs)


def gait_ridges(
    sig: Signal,
    n_rows: int | None = None,
    detect_harmonics: int | None = None,
    hop: int | None = None,
    n_bins: int | None = None,
    beta: float | None = None,
    lambda1: float | None = None,
    fundamental_range_hz: tuple[float, float] | None = None,
) -> tuple[Tfr, RidgeSet, np.ndarray]:
    """Squeezed transform of a magnitude signal plus a stack of gait ridges.

    The mean is removed first (the gravity offset otherwise dominates the
    low bins).  A small joint detection fixes the cadence track inside the
    usual step-frequency range, then the stack is extended to ``n_rows``
    harmonics around it; the fundamental is clipped so even the top
    harmonic stays on the grid.  Returns the squeezed transform, the ridge
    stack, and the frame sample positions.
    """
    n_rows = n_rows or DEFAULTS["sst_wsi_harmonics"]
    detect_harmonics = detect_harmonics or DEFAULTS["harmonics"]
    hop = hop or max(1, int(round(sig.fs * 0.1)))
    n_bins = n_bins or max(8, int(round(sig.fs / (2.0 * DEFAULTS["walk_dxi_hz"]))))
    beta = DEFAULTS["beta"] if beta is None else beta
    lambda1 = DEFAULTS["walk_lambda1"] if lambda1 is None else lambda1
    if fundamental_range_hz is None:
        fundamental_range_hz = DEFAULTS["walk_cadence_hz"]

    centred = Signal(sig.samples - sig.samples.mean(), sig.fs, sig.t0)
    window = tfa.design_window(sig.fs, fundamental_hz=2.0)
    S = tfa.sst2(centred, window, n_bins, hop=hop)
    V = tfa.stft(centred, window, n_bins, hop=hop)

    penalties = PenaltyConfig(
        lam=lambda_schedule(lambda1, DEFAULTS["delta_lambda"], detect_harmonics)
    )
    # walking comes and goes, so the track must reacquire the cadence after
    # every quiet stretch: longer segments with a wide band and a light
    # penalty keep the pinned-boundary trellis from sticking on noise
    plan = SegmentPlan.default(
        V.n_times, V.dt, V.dxi,
        seconds=DEFAULTS["walk_segment_seconds"],
        band_hz=fundamental_range_hz[1] - fundamental_range_hz[0],
    )
    base = ridge_mod.mhrd(
        V, detect_harmonics, penalties, beta, plan,
        delta_max=5, fundamental_range_hz=fundamental_range_hz,
    )

    # clip so that row n_rows stays on the grid, then extend around it
    v_cap = int(np.floor(n_bins / (n_rows + beta)))
    fund = Ridge(
        bins=np.minimum(base.rows[0], max(1, v_cap)), dt=V.dt, dxi=V.dxi
    )
    ext_pen = PenaltyConfig(lam=np.full(n_rows, penalties.lam[-1]))
    rset = ridge_mod.mhrd_conditioned(S, fund, n_rows, ext_pen, beta)
    frame_pos = np.arange(0, sig.n, hop)
    return S, rset, frame_pos


def sst_wsi(
    S: Tfr,
    ridges: RidgeSet,
    band_hz: float | None = None,
    harmonics: int | None = None,
) -> IndexSeries:
    """Fraction of squeezed row mass captured in bands around the ridges.

    Per frame: ``sum_k |sum_{q in band_k} S| / sum_q |S|`` with band k a
    ``band_hz`` half-width around ridge row k, clipped to the grid.  Close
    to 1 when the rows trace real harmonic structure, near 0 on noise;
    frames with an all-zero row map to 0.
    """
    band_hz = DEFAULTS["sst_wsi_band_hz"] if band_hz is None else band_hz
    harmonics = DEFAULTS["sst_wsi_harmonics"] if harmonics is None else harmonics
    if band_hz <= 0:
        raise InvalidParameterError("band half-width must be positive")
    if harmonics < 1 or harmonics > ridges.n_harmonics:
        raise InvalidParameterError("harmonics must not exceed the ridge rows")
    T, M = S.values.shape
    if ridges.n_times != T:
        raise InvalidParameterError("ridge length must match the TFR time axis")
    b = int(round(band_hz / S.dxi))
    cols = np.arange(1, M + 1)
    total = np.abs(S.values).sum(axis=1)
    num = np.zeros(T)
    for k in range(harmonics):
        c = ridges.rows[k]
        inband = np.abs(cols[None, :] - c[:, None]) <= b
        num += np.abs((S.values * inband).sum(axis=1))
    with np.errstate(invalid="ignore", divide="ignore"):
        vals = np.where(total > 0, num / total, 0.0)
    return IndexSeries(values=vals, name="sst-wsi", larger_is_walking=True)


def entropy_ratio_index(
    S: Tfr,
    ridges: RidgeSet,
    alpha: float | None = None,
    mask_band_hz: float | None = None,
    median_seconds: float | None = None,
) -> IndexSeries:
    """Running-median ratio of row entropy to ridge-masked row entropy.

    Masking real harmonic structure flattens the row, so the ratio drops
    well below 1 during walking and hovers near 1 on noise; smaller values
    mean walking.  Frames whose masked row is all zero map to 0 (maximally
    walking-like: the ridges carried the entire row).
    """
    alpha = DEFAULTS["renyi_alpha"] if alpha is None else alpha
    mask_band_hz = (
        DEFAULTS["entropy_mask_band_hz"] if mask_band_hz is None else mask_band_hz
    )
    median_seconds = (
        DEFAULTS["entropy_median_seconds"] if median_seconds is None else median_seconds
    )
    if mask_band_hz < 0:
        raise InvalidParameterError("mask band must be nonnegative")
    T = S.n_times
    if ridges.n_times != T:
        raise InvalidParameterError("ridge length must match the TFR time axis")
    masked = S
    if mask_band_hz > 0:
        # a positive band always removes at least the ridge bin itself;
        # a zero-width band removes nothing, leaving p = q
        half = int(round(mask_band_hz / S.dxi))
        for k in range(1, ridges.n_harmonics + 1):
            masked = ridge_mod.mask_tfr(masked, ridges.row(k), half, half)
    mags = np.abs(S.values)
    masked_mags = np.abs(masked.values)
    ratio = np.empty(T)
    for i in range(T):
        if not masked_mags[i].any() or not mags[i].any():
            ratio[i] = 0.0
            continue
        p = renyi_entropy(mags[i], alpha)
        q = renyi_entropy(masked_mags[i], alpha)
        ratio[i] = 0.0 if q == 0 else p / q
    win = max(1, int(round(median_seconds / S.dt)))
    if win % 2 == 0:
        win += 1
    vals = median_filter(ratio, size=win, mode="nearest")
    return IndexSeries(values=vals, name="entropy-ratio", larger_is_walking=False)


def _band_energies(samples: np.ndarray, fs: float, lo: float, hi: float) -> np.ndarray:
    nyq = fs / 2.0
    sos = butter(4, [lo / nyq, hi / nyq], btype="band", output="sos")
    filtered = sosfiltfilt(sos, samples)
    return np.abs(hilbert(filtered)) ** 2


def _window_ratio(
    num_energy: np.ndarray,
    den_energy: np.ndarray,
    fs: float,
    win_s: float,
    n: int,
    den_floor: float = 0.0,
    cap: float | None = None,
) -> np.ndarray:
    win = max(1, int(round(win_s * fs)))
    hop = max(1, win // 2)
    centers, ratios = [], []
    for start in range(0, max(1, n - win + 1), hop):
        stop = min(n, start + win)
        num = num_energy[start:stop].mean()
        den = den_energy[start:stop].mean()
        den = max(den, den_floor)
        r = 0.0 if den == 0 else num / den
        if cap is not None:
            r = min(r, cap)
        centers.append(0.5 * (start + stop - 1))
        ratios.append(r)
    return np.interp(np.arange(n), centers, ratios)


def hilbert_wsi(sig: Signal, win_s: float | None = None) -> IndexSeries:
    """Windowed ratio of gait-band envelope energy (0.5-3 Hz) to broadband
    envelope energy (0.3-8 Hz); larger means walking."""
    win_s = DEFAULTS["index_window_seconds"] if win_s is None else win_s
    if sig.fs <= 16:
        raise InvalidParameterError("sampling rate must exceed 16 Hz")
    num = _band_energies(sig.samples, sig.fs, 0.5, 3.0)
    den = _band_energies(sig.samples, sig.fs, 0.3, 8.0)
    vals = _window_ratio(num, den, sig.fs, win_s, sig.n)
    return IndexSeries(values=vals, name="hilbert", larger_is_walking=True)


def fog_wsi(sig: Signal, win_s: float | None = None) -> IndexSeries:
    """Windowed ratio of gait-band energy (0.5-3 Hz) to high-band energy
    (3-8 Hz); larger means walking.

    The denominator is floored at a minute fraction of the total energy
    and the ratio capped, since a pure low-band signal would otherwise
    divide by zero.
    """
    win_s = DEFAULTS["index_window_seconds"] if win_s is None else win_s
    if sig.fs <= 16:
        raise InvalidParameterError("sampling rate must exceed 16 Hz")
    num = _band_energies(sig.samples, sig.fs, 0.5, 3.0)
    den = _band_energies(sig.samples, sig.fs, 3.0, 8.0)
    floor = 1e-12 * float(np.mean(sig.samples**2))
    vals = _window_ratio(num, den, sig.fs, win_s, sig.n, den_floor=floor, cap=1e6)
    return IndexSeries(values=vals, name="fog", larger_is_walking=True)


def compute_index(rec: TriaxialRecording, index: str = "sst-wsi", **kwargs) -> IndexSeries:
    """Per-sample walking index of a recording, on the signal's grid.

    Transform-based indices are computed on a thinned frame grid and
    linearly interpolated back to the samples.
    """
    if index not in INDEX_NAMES:
        raise InvalidParameterError(f"index must be one of {INDEX_NAMES}")
    sig = magnitude(rec)
    if index == "hilbert":
        return hilbert_wsi(sig, **kwargs)
    if index == "fog":
        return fog_wsi(sig, **kwargs)
    S, ridges, frame_pos = gait_ridges(sig)
    series = (
        sst_wsi(S, ridges, **kwargs)
        if index == "sst-wsi"
        else entropy_ratio_index(S, ridges, **kwargs)
    )
    full = np.interp(np.arange(sig.n), frame_pos, series.values)
    return IndexSeries(values=full, name=series.name,
                       larger_is_walking=series.larger_is_walking)


def _f1(tp: int, fp: int, fn: int) -> float:
    if tp == 0:
        return 0.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def _best_threshold(values: np.ndarray, truth: np.ndarray, larger: bool, n_q: int):
    """Threshold maximising F1 over a quantile sweep.

    Candidate cuts sit midway between consecutive sweep quantiles, so a
    clean gap between the classes yields a boundary in the middle of that
    gap; when several candidates tie for the best F1 the middle one wins.
    Both choices are deterministic.
    """
    qs = np.quantile(values, np.linspace(0.0, 1.0, n_q))
    cand = np.unique(np.concatenate([[qs[0]], 0.5 * (qs[1:] + qs[:-1]), [qs[-1]]]))
    scores = np.empty(cand.size)
    for i, thr in enumerate(cand):
        pred = values >= thr if larger else values <= thr
        tp = int(np.sum(pred & truth))
        fp = int(np.sum(pred & ~truth))
        fn = int(np.sum(~pred & truth))
        scores[i] = _f1(tp, fp, fn)
    best = np.flatnonzero(scores == scores.max())
    return cand[best[len(best) // 2]]


def losocv_threshold(
    recordings: list[TriaxialRecording],
    index: str = "sst-wsi",
    n_quantiles: int | None = None,
    index_kwargs: dict | None = None,
) -> EvalReport:
    """Leave-one-subject-out threshold evaluation of a walking index.

    For each held-out subject the threshold maximising F1 on the pooled
    training samples (respecting the index direction) is applied to the
    test subject; samples labelled neither walking nor non-walking are
    ignored.  Subjects whose training pool is single-class are skipped
    with a warning.  The test subject's labels are never read before its
    predictions are fixed.
    """
    if len(recordings) < 2:
        raise InvalidParameterError("need at least two subjects")
    n_quantiles = n_quantiles or DEFAULTS["threshold_quantiles"]
    index_kwargs = index_kwargs or {}

    per_subject = {}
    larger = None
    for rec in recordings:
        series = compute_index(rec, index, **index_kwargs)
        larger = series.larger_is_walking
        keep = (rec.labels == WALKING) | (rec.labels == NON_WALKING)
        per_subject.setdefault(rec.subject_id, []).append(
            (series.values[keep], rec.labels[keep] == WALKING)
        )

    subjects = sorted(per_subject)
    out_subj, accs, f1s, thrs, confs, skipped = [], [], [], [], [], []
    for held in subjects:
        train_vals = np.concatenate(
            [v for s in subjects if s != held for v, t in per_subject[s]]
        )
        train_truth = np.concatenate(
            [t for s in subjects if s != held for v, t in per_subject[s]]
        )
        if train_truth.all() or not train_truth.any():
            warnings.warn(f"training fold for {held!r} is single-class; skipping")
            skipped.append(held)
            continue
        thr = _best_threshold(train_vals, train_truth, larger, n_quantiles)
        test_vals = np.concatenate([v for v, t in per_subject[held]])
        test_truth = np.concatenate([t for v, t in per_subject[held]])
        pred = test_vals >= thr if larger else test_vals <= thr
        tp = int(np.sum(pred & test_truth))
        fp = int(np.sum(pred & ~test_truth))
        tn = int(np.sum(~pred & ~test_truth))
        fn = int(np.sum(~pred & test_truth))
        out_subj.append(held)
        accs.append((tp + tn) / max(1, tp + tn + fp + fn))
        f1s.append(_f1(tp, fp, fn))
        thrs.append(thr)
        confs.append({"tp": tp, "fp": fp, "tn": tn, "fn": fn})
    return EvalReport(
        subjects=out_subj,
        accuracy=np.asarray(accs),
        f1=np.asarray(f1s),
        thresholds=np.asarray(thrs),
        confusion=confs,
        skipped=skipped,
    )


def make_synthetic_corpus(
    n_subjects: int = 3,
    fs: float = 50.0,
    duration_s: float = 150.0,
    seed: int = 0,
    min_walk_s: float = 10.0,
    noise_std: float = 0.05,
) -> list[TriaxialRecording]:
    """Synthetic gait corpus: harmonic walking bursts amid sensor noise.

    Each subject alternates non-walking stretches (gravity plus white
    noise) with walking bouts of at least ``min_walk_s`` seconds built
    from a three-harmonic cadence near 2 Hz shared across axes.  One
    second around each transition is labelled ``other`` so evaluation
    exercises the label-exclusion path.
    """
    recordings = []
    n = int(round(duration_s * fs))
    for s in range(n_subjects):
        rng = np.random.default_rng([seed, s])
        cadence = 1.85 + 0.15 * s
        gravity = np.array([0.20, 0.15, 0.95])
        axes = rng.normal(0.0, noise_std, size=(3, n)) + gravity[:, None]
        labels = np.full(n, NON_WALKING, dtype=object)

        t = np.arange(n) / fs
        pos = 0.0
        walking = False
        bounds = []
        while pos < duration_s:
            span = (
                float(rng.uniform(min_walk_s, min_walk_s + 15.0))
                if walking
                else float(rng.uniform(12.0, 25.0))
            )
            if walking:
                a = int(pos * fs)
                b = min(n, int((pos + span) * fs))
                if b - a >= int(min_walk_s * fs):
                    bounds.append((a, b))
            pos += span
            walking = not walking

        for a, b in bounds:
            seg_t = t[a:b]
            wobble = 0.05 * np.sin(2 * np.pi * 0.05 * seg_t + rng.uniform(0, 2 * np.pi))
            phase = np.cumsum((cadence + wobble)) / fs
            amps = rng.uniform(0.8, 1.2, size=(3, 3)) * np.array(
                [[0.35, 0.18, 0.08], [0.30, 0.15, 0.07], [0.25, 0.20, 0.10]]
            )
            # one wave shape per bout: harmonic phases shared across axes
            # (plus a small per-axis lag) so the magnitude keeps the comb
            shape_phase = rng.uniform(0, 2 * np.pi, size=3)
            axis_lag = rng.normal(0.0, 0.2, size=3)
            for ax in range(3):
                for h in range(3):
                    axes[ax, a:b] += amps[ax, h] * np.cos(
                        2 * np.pi * (h + 1) * phase + shape_phase[h] + axis_lag[ax]
                    )
            labels[a:b] = WALKING
            guard = int(fs)
            labels[max(0, a - guard) : min(n, a + guard)] = OTHER
            labels[max(0, b - guard) : min(n, b + guard)] = OTHER

        recordings.append(
            TriaxialRecording(
                x=axes[0], y=axes[1], z=axes[2], fs=fs,
                subject_id=f"subj{s:02d}", labels=labels,
            )
        )
    return recordings
