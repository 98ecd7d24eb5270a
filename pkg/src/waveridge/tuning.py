"""Entropy-based selection of the smoothness penalty and similarity band.

The selection rule scores each candidate pair by how flat the TFR rows
become once the detected ridges are masked out: removing genuine structure
leaves a flatter (higher-entropy) residual, so the grid argmax of the mean
masked row entropy picks the candidates whose ridges captured the most.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import ridge as ridge_mod
from .decompose import default_recon_bandwidth
from .defaults import DEFAULTS
from .errors import DegenerateInputError, InfeasibleRidgeError, InvalidParameterError
from .ridge import PenaltyConfig, SegmentPlan
from .tfa import Tfr

__all__ = [
    "ParamGrid",
    "renyi_entropy",
    "lambda_schedule",
    "grid_scores",
    "select_params",
]


def renyi_entropy(weights: np.ndarray, alpha: float) -> float:
    """Order-``alpha`` entropy of a nonnegative weight vector (natural log).

    The vector is normalised to a distribution first, so the result is
    scale invariant and bounded by ``log(len(weights))``.
    """
    if not (alpha > 0) or alpha == 1:
        raise InvalidParameterError("alpha must be positive and different from 1")
    v = np.asarray(weights, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidParameterError("weights must form a nonempty 1-d vector")
    if np.any(v < 0):
        raise InvalidParameterError("weights must be nonnegative")
    total = v.sum()
    if total == 0:
        raise DegenerateInputError("all-zero weight vector has no entropy")
    p = v / total
    return float(np.log((p**alpha).sum()) / (1.0 - alpha))


def lambda_schedule(lambda1: float, delta_lambda: float, n_harmonics: int) -> np.ndarray:
    """Linearly decaying per-harmonic smoothness penalties.

    ``lam_k = (1 - (k-1) * delta_lambda) * lambda1``; the decay must leave
    every factor positive.
    """
    if n_harmonics < 1:
        raise InvalidParameterError("harmonic count must be at least 1")
    if delta_lambda < 0:
        raise InvalidParameterError("decay step must be nonnegative")
    if 1.0 - (n_harmonics - 1) * delta_lambda <= 0:
        raise InvalidParameterError(
            "decay step too large: 1 - (K-1)*delta_lambda must stay positive"
        )
    k = np.arange(n_harmonics)
    return (1.0 - k * delta_lambda) * float(lambda1)


@dataclass(frozen=True, eq=False)
class ParamGrid:
    """Candidate grid for the penalty / band search.

    ``mask_delta_hz`` is the masking half-width applied around each detected
    ridge before the entropy is taken; ``None`` reuses the reconstruction
    bandwidth rule of the decomposition module.
    """

    lambda1_candidates: np.ndarray
    beta_candidates: np.ndarray
    delta_lambda: float
    n_harmonics: int
    alpha: float
    mask_delta_hz: float | None = None

    def __post_init__(self):
        lams = np.asarray(self.lambda1_candidates, dtype=np.float64)
        betas = np.asarray(self.beta_candidates, dtype=np.float64)
        if lams.size == 0 or np.any(lams <= 0):
            raise InvalidParameterError("lambda candidates must be positive")
        if betas.size == 0 or np.any(betas <= 0) or np.any(betas >= 0.5):
            raise InvalidParameterError("beta candidates must lie in (0, 1/2)")
        if 1.0 - (self.n_harmonics - 1) * self.delta_lambda <= 0:
            raise InvalidParameterError(
                "decay step too large for the harmonic count"
            )
        if not (self.alpha > 0) or self.alpha == 1:
            raise InvalidParameterError("alpha must be positive and different from 1")
        object.__setattr__(self, "lambda1_candidates", lams)
        object.__setattr__(self, "beta_candidates", betas)

    @classmethod
    def default(
        cls,
        n_harmonics: int | None = None,
        mask_delta_hz: float | None = None,
    ) -> "ParamGrid":
        lo, hi, n_lam = DEFAULTS["lambda_grid"]
        blo, bhi, n_beta = DEFAULTS["beta_grid"]
        return cls(
            lambda1_candidates=np.geomspace(lo, hi, n_lam),
            # upper endpoint excluded: the similarity band must stay below 1/2
            beta_candidates=np.geomspace(blo, bhi, n_beta + 1)[:-1],
            delta_lambda=DEFAULTS["delta_lambda"],
            n_harmonics=n_harmonics or DEFAULTS["harmonics"],
            alpha=DEFAULTS["renyi_alpha"],
            mask_delta_hz=mask_delta_hz,
        )


def _masked_mean_entropy(
    tfr: Tfr, rset: ridge_mod.RidgeSet, alpha: float, mask_delta_hz: float | None
) -> float:
    delta = (
        mask_delta_hz
        if mask_delta_hz is not None
        else default_recon_bandwidth(rset.fundamental)
    )
    half = max(0, int(round(delta / tfr.dxi)))
    masked = tfr
    for k in range(1, rset.n_harmonics + 1):
        masked = ridge_mod.mask_tfr(masked, rset.row(k), half, half)
    mags = np.abs(masked.values)
    scores = np.empty(mags.shape[0])
    for i, row in enumerate(mags):
        scores[i] = 0.0 if not row.any() else renyi_entropy(row, alpha)
    return float(scores.mean())


def grid_scores(
    tfr: Tfr,
    grid: ParamGrid,
    plan: SegmentPlan | None = None,
    delta_max: int | None = None,
) -> list[dict]:
    """Masked-entropy score of every grid point, in sweep order.

    Grid points whose detection is infeasible get ``score = None`` and are
    skipped by :func:`select_params`.
    """
    records = []
    for lam1 in grid.lambda1_candidates:
        lam = lambda_schedule(lam1, grid.delta_lambda, grid.n_harmonics)
        penalties = PenaltyConfig(lam=lam)
        for beta in grid.beta_candidates:
            try:
                rset = ridge_mod.mhrd(
                    tfr, grid.n_harmonics, penalties, float(beta), plan,
                    delta_max=delta_max,
                )
                score = _masked_mean_entropy(tfr, rset, grid.alpha, grid.mask_delta_hz)
            except InfeasibleRidgeError:
                score = None
            records.append(
                {"lambda1": float(lam1), "beta": float(beta), "score": score}
            )
    return records


def select_params(
    tfr: Tfr,
    grid: ParamGrid,
    plan: SegmentPlan | None = None,
    delta_max: int | None = None,
) -> tuple[float, float]:
    """Grid argmax of the mean masked row entropy.

    Ties break toward the smaller penalty, then the smaller band; if every
    grid point is infeasible an error is raised.
    """
    records = grid_scores(tfr, grid, plan, delta_max)
    ordered = sorted(
        (r for r in records if r["score"] is not None),
        key=lambda r: (r["lambda1"], r["beta"]),
    )
    if not ordered:
        raise InfeasibleRidgeError(1, 2, "every grid point was infeasible")
    best = ordered[0]
    for r in ordered[1:]:
        if r["score"] > best["score"]:
            best = r
    return best["lambda1"], best["beta"]
