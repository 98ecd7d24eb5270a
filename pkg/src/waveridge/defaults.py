"""Central table of defaults shared by the library and the CLI.

Every tunable that appears in more than one place lives here so that
``waveridge --show-defaults`` prints the single authoritative set.
"""

DEFAULTS = {
    # analysis window
    "window_cycles": 10.0,        # window span, in cycles of the nominal fundamental
    "window_sigma": 0.15,         # Gaussian shape parameter on the unit-length grid
    "nominal_fundamental_hz": 2.0,
    # frequency grid
    "dxi_hz": 0.1,                # frequency bin step for the pipeline / benchmark
    # ridge detection
    "beta": 2.0 ** -4,            # harmonic similarity bandwidth
    "harmonics": 3,               # ridge rows detected jointly
    "lambda1": 1.0,               # fundamental smoothness penalty
    "delta_lambda": 0.05,         # per-harmonic decay of the smoothness penalty
    "segment_seconds": 1.0,       # time-segment length of the segmented solver
    "segment_band_hz": 1.0,       # fundamental search half-width per segment
    # reconstruction
    "recon_band_factor": 0.2,     # bandwidth = factor x mean fundamental IF ...
    "recon_band_min_bins": 3,     # ... clipped to at least this many bins
    # parameter tuning
    "renyi_alpha": 2.4,
    "lambda_grid": (0.1, 10.0, 7),      # log-uniform (lo, hi, count)
    "beta_grid": (2.0 ** -6, 2.0 ** -1, 6),  # log-uniform, upper end exclusive
    # walking indices
    "sst_wsi_harmonics": 8,
    "sst_wsi_band_hz": 0.08,
    "entropy_mask_band_hz": 0.04,
    "entropy_median_seconds": 10.0,
    "walk_dxi_hz": 0.05,
    "walk_lambda1": 0.1,
    "walk_segment_seconds": 4.0,
    "walk_cadence_hz": (1.2, 3.5),
    "index_window_seconds": 10.0,
    "threshold_quantiles": 200,
    # synthetic benchmark
    "sim_fs_hz": 200.0,
    "sim_duration_s": 50.0,
    "arma_ar": 0.5,
    "arma_ma": 0.3,
    "bench_hop": 20,
    "bench_delta_max": 2,
    "bench_beta": 2.0 ** -3,
    "bench_lambda1": 0.3,
    "bench_fundamental_hz": (0.4, 12.0),
    "bench_anchor_seconds": 24.0,
    "bench_segment_seconds": 4.0,
    "bench_band_hz": 2.0,
    "detect_surface": "stft",
}


def format_defaults() -> str:
    width = max(len(k) for k in DEFAULTS)
    lines = [f"{k.ljust(width)}  {v!r}" for k, v in DEFAULTS.items()]
    return "\n".join(lines)
