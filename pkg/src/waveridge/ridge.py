"""Ridge extraction on time-frequency matrices.

The solvers maximise a path reward of the form

    sum_t score(t, c(t)) - lam * sum_t |c(t+1) - c(t)|^2  (- similarity pulls)

over integer bin paths, exactly, by dynamic programming.  ``score`` is the
log-normalised TFR magnitude from :func:`normalize_tfr`.  The joint detector
ties K harmonic rows to a fundamental row through a relative band
(``|row_k - k * row_1| <= beta * row_1``) and solves all rows together; the
conditioned variants re-detect harmonics around a known fundamental.

Bins are 1-based throughout (bin m sits at ``m * dxi`` Hz), matching the
harmonic relation ``row_k ~ k * row_1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _trellis
from .defaults import DEFAULTS
from .errors import DegenerateInputError, InfeasibleRidgeError, InvalidParameterError
from .tfa import Tfr

__all__ = [
    "Ridge",
    "RidgeSet",
    "SegmentPlan",
    "PenaltyConfig",
    "normalize_tfr",
    "single_rd",
    "mask_tfr",
    "mhrd",
    "modified_single_rd",
    "mhrd_conditioned",
    "path_objective",
    "ridgeset_objective",
]

_LOG_FLOOR = float(np.log(np.finfo(np.float64).eps))


@dataclass(eq=False)
class Ridge:
    """Integer frequency-bin path over time (1-based bins)."""

    bins: np.ndarray
    dt: float
    dxi: float

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.int64)
        if bins.ndim != 1 or bins.size == 0:
            raise InvalidParameterError("ridge must be a nonempty 1-d bin sequence")
        if bins.min() < 1:
            raise InvalidParameterError("ridge bins are 1-based and must be >= 1")
        self.bins = bins

    @property
    def n_times(self) -> int:
        return self.bins.size

    @property
    def freqs_hz(self) -> np.ndarray:
        return self.bins * self.dxi

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.bins.size) * self.dt


@dataclass(eq=False)
class RidgeSet:
    """Stacked harmonic ridges: row k estimates the IF path of harmonic k+1.

    Every row satisfies the similarity band against the fundamental row:
    ``|rows[k] - (k+1) * rows[0]| <= beta * rows[0]`` entrywise.
    """

    rows: np.ndarray
    beta: float
    dt: float
    dxi: float
    objective: float | None = None

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        if rows.ndim != 2 or rows.size == 0:
            raise InvalidParameterError("ridge set must be a (K, T) bin matrix")
        if rows.min() < 1:
            raise InvalidParameterError("ridge bins are 1-based and must be >= 1")
        fund = rows[0]
        for k in range(rows.shape[0]):
            dev = np.abs(rows[k] - (k + 1) * fund)
            bad = dev > self.beta * fund
            if np.any(bad):
                ell = int(np.argmax(bad))
                raise InvalidParameterError(
                    f"row {k + 1} violates the harmonic band at time sample "
                    f"{ell + 1}: |{rows[k, ell]} - {k + 1}*{fund[ell]}| > "
                    f"beta*{fund[ell]}"
                )
        self.rows = rows

    @property
    def n_harmonics(self) -> int:
        return self.rows.shape[0]

    @property
    def n_times(self) -> int:
        return self.rows.shape[1]

    @property
    def fundamental(self) -> Ridge:
        return Ridge(bins=self.rows[0].copy(), dt=self.dt, dxi=self.dxi)

    def row(self, k: int) -> Ridge:
        """Ridge of harmonic ``k`` (1-based)."""
        return Ridge(bins=self.rows[k - 1].copy(), dt=self.dt, dxi=self.dxi)


@dataclass(frozen=True, eq=False)
class SegmentPlan:
    """Time segmentation used by the segmented joint detector.

    ``breakpoints`` are frame indices ``0 = t_0 < t_1 < ... < t_Q = T``;
    segment q covers frames ``[t_{q-1}, t_q)``.  ``band_halfwidths[q-1]`` is
    the fundamental search half-width (bins) of segment q; the first entry
    is unused because segment 1 searches the whole frequency axis.
    """

    breakpoints: np.ndarray
    band_halfwidths: np.ndarray

    def __post_init__(self):
        bps = np.asarray(self.breakpoints, dtype=np.int64)
        bw = np.asarray(self.band_halfwidths, dtype=np.int64)
        if bps.ndim != 1 or bps.size < 2:
            raise InvalidParameterError("plan needs at least two breakpoints")
        if bps[0] != 0:
            raise InvalidParameterError("first breakpoint must be 0")
        if np.any(np.diff(bps) <= 0):
            raise InvalidParameterError("breakpoints must be strictly increasing")
        if bw.shape != (bps.size - 1,):
            raise InvalidParameterError("need one band half-width per segment")
        if np.any(bw < 1):
            raise InvalidParameterError("band half-widths must be at least 1 bin")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "band_halfwidths", bw)

    @property
    def n_segments(self) -> int:
        return self.breakpoints.size - 1

    @classmethod
    def default(
        cls,
        n_times: int,
        dt: float,
        dxi: float,
        seconds: float | None = None,
        band_hz: float | None = None,
    ) -> "SegmentPlan":
        """One segment per ``seconds`` of frames, band of ``band_hz`` in bins."""
        if seconds is None:
            seconds = DEFAULTS["segment_seconds"]
        if band_hz is None:
            band_hz = DEFAULTS["segment_band_hz"]
        step = max(1, int(round(seconds / dt)))
        bps = list(range(0, n_times, step))
        if bps[-1] != n_times:
            bps.append(n_times)
        # fold a short tail into the previous segment
        if len(bps) > 2 and bps[-1] - bps[-2] < max(2, step // 4):
            del bps[-2]
        band = max(1, math.ceil(band_hz / dxi))
        return cls(
            breakpoints=np.asarray(bps, dtype=np.int64),
            band_halfwidths=np.full(len(bps) - 1, band, dtype=np.int64),
        )


@dataclass(frozen=True, eq=False)
class PenaltyConfig:
    """Per-harmonic smoothness penalties and similarity penalties."""

    lam: np.ndarray
    mu: np.ndarray | None = None

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=np.float64))
        mu = (
            np.zeros_like(lam)
            if self.mu is None
            else np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        )
        if lam.ndim != 1 or mu.shape != lam.shape:
            raise InvalidParameterError("lam and mu must be 1-d and the same length")
        if np.any(lam < 0) or np.any(mu < 0):
            raise InvalidParameterError("penalties must be nonnegative")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    @property
    def n_harmonics(self) -> int:
        return self.lam.size


def normalize_tfr(tfr: Tfr | np.ndarray, power: int = 1) -> np.ndarray:
    """Log-normalised magnitude surface used as the ridge objective.

    Returns ``log(|R|**power / sum |R|**power)`` entrywise; exact zeros are
    floored at ``log(machine eps)`` so the trellis stays finite.  The output
    is invariant to rescaling the input by any positive constant.
    """
    values = tfr.values if isinstance(tfr, Tfr) else np.asarray(tfr)
    if power not in (1, 2):
        raise InvalidParameterError("magnitude power must be 1 or 2")
    mags = np.abs(values).astype(np.float64)
    if not mags.any():
        raise DegenerateInputError("cannot normalise an all-zero TFR")
    w = mags if power == 1 else mags * mags
    total = w.sum()
    with np.errstate(divide="ignore"):
        out = np.log(w / total)
    out[mags == 0.0] = _LOG_FLOOR
    return out


def path_objective(
    node: np.ndarray, path: np.ndarray, lam: float
) -> float:
    """Path value under the solver's fold order (see ``_trellis``).

    ``node`` holds per-bin rewards with any similarity pull already folded
    in; ``path`` is 0-based columns.
    """
    v = node[0, path[0]]
    for t in range(1, path.size):
        d = int(path[t]) - int(path[t - 1])
        v = (v - lam * d * d) + node[t, path[t]]
    return float(v)


def ridgeset_objective(
    node: np.ndarray, rows: np.ndarray, lam: np.ndarray
) -> float:
    """Joint tuple-path value under the solver's fold order.

    ``rows`` holds 0-based columns, one row per harmonic (fundamental
    first); ``lam`` one smoothness weight per row.
    """
    K, T = rows.shape
    s = node[0, rows[0, 0]]
    for k in range(1, K):
        s += node[0, rows[k, 0]]
    v = s
    for t in range(1, T):
        for k in range(K):
            d = int(rows[k, t]) - int(rows[k, t - 1])
            v = v - lam[k] * d * d
        s = node[t, rows[0, t]]
        for k in range(1, K):
            s += node[t, rows[k, t]]
        v = v + s
    return float(v)


def single_rd(
    tfr: Tfr,
    lambda1: float,
    magnitude_power: int = 1,
    delta_max: int | None = None,
) -> Ridge:
    """Single-ridge extraction: exact maximiser of the penalised path reward.

    Ties break toward the lower bin at every decision, so with
    ``lambda1 = 0`` the result is the per-frame argmax (lowest bin on ties).
    """
    if lambda1 < 0:
        raise InvalidParameterError("lambda1 must be nonnegative")
    node = normalize_tfr(tfr, magnitude_power)
    T, M = node.shape
    dmax = M if delta_max is None else int(delta_max)
    lo = np.zeros(T, dtype=np.int64)
    hi = np.full(T, M - 1, dtype=np.int64)
    path, _ = _trellis.solve_single(node, float(lambda1), lo, hi, dmax, -1)
    return Ridge(bins=path + 1, dt=tfr.dt, dxi=tfr.dxi)


def mask_tfr(
    tfr: Tfr,
    ridge: Ridge,
    eta_minus: np.ndarray | int,
    eta_plus: np.ndarray | int,
) -> Tfr:
    """Zero a band around a ridge, leaving everything else untouched.

    At each frame, bins in ``[c - eta_minus, c + eta_plus]`` (clipped to the
    grid) are zeroed.  Masking twice with the same ridge is a no-op the
    second time.
    """
    T, M = tfr.values.shape
    if ridge.bins.size != T:
        raise InvalidParameterError("ridge length must match the TFR time axis")
    em = np.broadcast_to(np.asarray(eta_minus, dtype=np.int64), (T,))
    ep = np.broadcast_to(np.asarray(eta_plus, dtype=np.int64), (T,))
    if np.any(em < 0) or np.any(ep < 0):
        raise InvalidParameterError("mask bandwidths must be nonnegative")
    lo = np.clip(ridge.bins - em, 1, M)
    hi = np.clip(ridge.bins + ep, 1, M)
    cols = np.arange(1, M + 1)
    keep = (cols[None, :] < lo[:, None]) | (cols[None, :] > hi[:, None])
    return Tfr(
        values=tfr.values * keep,
        dt=tfr.dt,
        dxi=tfr.dxi,
        kind=tfr.kind,
        win_half_length=tfr.win_half_length,
    )


def _harmonic_band(k: int, v: np.ndarray, beta: float, n_bins: int):
    """Inclusive 1-based bin band of harmonic k given fundamental bins v."""
    lo = np.maximum(np.ceil(k * v - beta * v).astype(np.int64), 1)
    hi = np.minimum(np.floor(k * v + beta * v).astype(np.int64), n_bins)
    return lo, hi


def _segment_states(v_candidates: np.ndarray, n_harmonics: int, beta: float, n_bins: int):
    """Feasible fundamentals and the mixed-radix harmonic-band layout.

    Returns None if no candidate fundamental admits all harmonic bands.
    """
    kh = n_harmonics - 1
    lo = np.empty((kh, v_candidates.size), dtype=np.int64)
    hi = np.empty((kh, v_candidates.size), dtype=np.int64)
    feas = np.ones(v_candidates.size, dtype=bool)
    for j in range(kh):
        l, h = _harmonic_band(j + 2, v_candidates, beta, n_bins)
        lo[j] = l
        hi[j] = h
        feas &= l <= h
    v = v_candidates[feas]
    if v.size == 0:
        # name the smallest harmonic that kills every candidate
        for j in range(kh):
            if np.all(lo[j] > hi[j]):
                return None, j + 2
        return None, 2
    lo = lo[:, feas]
    hi = hi[:, feas]
    widths = hi - lo + 1
    counts = widths.prod(axis=0) if kh else np.ones(v.size, dtype=np.int64)
    strides = np.ones((kh, v.size), dtype=np.int64)
    for j in range(kh - 2, -1, -1):
        strides[j] = strides[j + 1] * widths[j + 1]
    base = np.concatenate(([0], np.cumsum(counts)[:-1]))
    return (v, lo, hi, strides, base.astype(np.int64), counts.astype(np.int64)), None


def mhrd(
    tfr: Tfr,
    n_harmonics: int,
    penalties: PenaltyConfig,
    beta: float,
    plan: SegmentPlan | None = None,
    magnitude_power: int = 2,
    delta_max: int | None = None,
    fundamental_range_hz: tuple[float, float] | None = None,
) -> RidgeSet:
    """Joint multi-harmonic ridge detection over time segments.

    Within each segment the solver maximises, exactly, the summed per-row
    path rewards over all bin tuples satisfying the similarity band.  The
    first segment searches the full frequency axis; each later segment
    restricts the fundamental to ``band_halfwidths`` bins around the
    previous segment's endpoint and pins its first frame to that endpoint,
    which makes the assembled rows continuous across boundaries.

    ``fundamental_range_hz`` optionally confines the fundamental row to a
    frequency interval (harmonic rows still roam the whole grid); by
    default the search is unrestricted.

    Raises :class:`InfeasibleRidgeError` when some segment admits no
    feasible fundamental (for instance, a harmonic band pushed entirely
    above the grid).
    """
    if n_harmonics < 1:
        raise InvalidParameterError("harmonic count must be at least 1")
    if not 0 <= beta < 0.5:
        raise InvalidParameterError("beta must lie in [0, 1/2)")
    if penalties.n_harmonics != n_harmonics:
        raise InvalidParameterError("need one smoothness penalty per harmonic")
    node = normalize_tfr(tfr, magnitude_power)
    T, M = node.shape
    if plan is None:
        plan = SegmentPlan.default(T, tfr.dt, tfr.dxi)
    if plan.breakpoints[-1] != T:
        raise InvalidParameterError("plan must end at the TFR frame count")
    dmax = M if delta_max is None else int(delta_max)
    lam = penalties.lam.astype(np.float64)
    K = n_harmonics

    v_min, v_max = 1, M
    if fundamental_range_hz is not None:
        lo_hz, hi_hz = fundamental_range_hz
        if not 0 <= lo_hz < hi_hz:
            raise InvalidParameterError("fundamental range must satisfy 0 <= lo < hi")
        v_min = max(1, int(math.ceil(lo_hz / tfr.dxi)))
        v_max = min(M, int(math.floor(hi_hz / tfr.dxi)))
        if v_min > v_max:
            raise InvalidParameterError("fundamental range contains no bins")
    all_v = np.arange(v_min, v_max + 1, dtype=np.int64)
    rows = np.empty((K, T), dtype=np.int64)
    total = 0.0
    prev_tuple = None

    for q in range(plan.n_segments):
        f0, f1 = int(plan.breakpoints[q]), int(plan.breakpoints[q + 1])
        if q == 0:
            candidates = all_v
            pinned = np.full(K, -1, dtype=np.int64)
        else:
            b = int(plan.band_halfwidths[q])
            anchor = prev_tuple[0]
            candidates = np.arange(
                max(v_min, anchor - b), min(v_max, anchor + b) + 1, dtype=np.int64
            )
            pinned = np.asarray(prev_tuple, dtype=np.int64) - 1  # 0-based
        layout, bad_k = _segment_states(candidates, K, beta, M)
        if layout is None:
            raise InfeasibleRidgeError(f0 + 1, bad_k)
        v, lo, hi, strides, base, counts = layout
        paths, obj = _trellis.solve_joint(
            np.ascontiguousarray(node[f0:f1]),
            lam,
            v - 1,  # 0-based columns
            lo - 1,
            hi - 1,
            strides,
            base,
            counts,
            dmax,
            pinned,
        )
        rows[:, f0:f1] = paths.T + 1
        total += obj
        prev_tuple = rows[:, f1 - 1]

    return RidgeSet(
        rows=rows, beta=float(beta), dt=tfr.dt, dxi=tfr.dxi, objective=total
    )


def modified_single_rd(
    tfr: Tfr,
    c1: Ridge,
    k: int,
    lambda_k: float,
    mu_k: float,
    magnitude_power: int = 1,
    delta_max: int | None = None,
) -> Ridge:
    """Single-ridge extraction pulled toward harmonic k of a known fundamental.

    Exact maximiser of the path reward minus ``mu_k * |h - k*c1|^2``; with a
    huge ``mu_k`` the result clips ``k * c1`` to the grid, with ``mu_k = 0``
    it coincides with :func:`single_rd` at the same penalty.
    """
    if k < 2:
        raise InvalidParameterError("harmonic index must be at least 2")
    if lambda_k < 0 or mu_k < 0:
        raise InvalidParameterError("penalties must be nonnegative")
    node = normalize_tfr(tfr, magnitude_power)
    T, M = node.shape
    if c1.bins.size != T:
        raise InvalidParameterError("fundamental length must match the TFR time axis")
    bins_row = np.arange(1, M + 1, dtype=np.float64)
    target = (k * c1.bins).astype(np.float64)
    node = node - mu_k * (bins_row[None, :] - target[:, None]) ** 2
    dmax = M if delta_max is None else int(delta_max)
    lo = np.zeros(T, dtype=np.int64)
    hi = np.full(T, M - 1, dtype=np.int64)
    path, _ = _trellis.solve_single(node, float(lambda_k), lo, hi, dmax, -1)
    return Ridge(bins=path + 1, dt=tfr.dt, dxi=tfr.dxi)


def mhrd_conditioned(
    tfr: Tfr,
    c1_star: Ridge,
    n_harmonics: int,
    penalties: PenaltyConfig,
    beta: float,
    magnitude_power: int = 1,
    delta_max: int | None = None,
) -> RidgeSet:
    """Harmonic re-detection around a known fundamental.

    Row 1 is ``c1_star`` verbatim; each row k >= 2 independently maximises
    its own pulled path reward restricted to ``|h - k*c1| <= beta*c1``.
    The stored objective is the sum of those per-harmonic optima (row 1
    contributes nothing, being fixed).
    """
    if n_harmonics < 1:
        raise InvalidParameterError("harmonic count must be at least 1")
    if not 0 <= beta < 0.5:
        raise InvalidParameterError("beta must lie in [0, 1/2)")
    if penalties.n_harmonics != n_harmonics:
        raise InvalidParameterError("need one smoothness penalty per harmonic")
    node = normalize_tfr(tfr, magnitude_power)
    T, M = node.shape
    if c1_star.bins.size != T:
        raise InvalidParameterError("fundamental length must match the TFR time axis")
    dmax = M if delta_max is None else int(delta_max)
    rows = np.empty((n_harmonics, T), dtype=np.int64)
    rows[0] = c1_star.bins
    bins_row = np.arange(1, M + 1, dtype=np.float64)
    total = 0.0
    for k in range(2, n_harmonics + 1):
        lo, hi = _harmonic_band(k, c1_star.bins, beta, M)
        if np.any(lo > hi):
            ell = int(np.argmax(lo > hi))
            raise InfeasibleRidgeError(ell + 1, k)
        target = (k * c1_star.bins).astype(np.float64)
        node_k = node - penalties.mu[k - 1] * (bins_row[None, :] - target[:, None]) ** 2
        path, obj = _trellis.solve_single(
            node_k, float(penalties.lam[k - 1]), lo - 1, hi - 1, dmax, -1
        )
        rows[k - 1] = path + 1
        total += obj
    return RidgeSet(
        rows=rows, beta=float(beta), dt=tfr.dt, dxi=tfr.dxi, objective=total
    )
