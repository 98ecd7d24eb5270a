"""Command-line surface: transforms, the decomposition pipeline, synthetic
signals and benchmark tables, and the walking indices.

Every command writes a JSON manifest recording the parameters, seeds and
input hashes needed to reproduce its outputs byte for byte.  Exit codes:
0 success, 2 usage, 3 unreadable or malformed data, 4 infeasible ridge
constraints.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, decompose, io, simgen, tfa, tuning, walk
from . import ridge as ridge_mod
from .defaults import DEFAULTS, format_defaults
from .errors import (
    DataFormatError,
    DegenerateInputError,
    DegeneratePhaseError,
    EmptyRidgeError,
    InfeasibleRidgeError,
    InvalidParameterError,
)

USAGE_EXIT = 2
DATA_EXIT = 3
INFEASIBLE_EXIT = 4


def _manifest(command: str, args: dict, outputs: list, inputs: dict | None = None) -> dict:
    return {
        "tool": "waveridge",
        "version": __version__,
        "command": command,
        "parameters": args,
        "inputs": inputs or {},
        "outputs": outputs,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }


def _out_dir(ns) -> Path:
    out = Path(ns.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_signal(ns) -> tuple[tfa.Signal, dict]:
    sig = io.read_signal_csv(ns.infile, fs=ns.fs)
    return sig, {str(ns.infile): io.file_sha256(ns.infile)}


def _window_for(ns, fs: float) -> tfa.WindowPair:
    return tfa.design_window(
        fs,
        fundamental_hz=ns.nominal_hz,
        cycles=ns.window_cycles,
        sigma=ns.sigma,
        half_length=ns.window_half_length,
    )


def _bins_for(ns, fs: float) -> int:
    if ns.bins is not None:
        return ns.bins
    return max(8, int(round(fs / (2.0 * ns.dxi))))


def cmd_tfr(ns) -> int:
    sig, inputs = _load_signal(ns)
    window = _window_for(ns, sig.fs)
    n_bins = _bins_for(ns, sig.fs)
    tfr = tfa.transform(sig, window, n_bins, kind=ns.kind, hop=ns.hop)
    out = _out_dir(ns)
    stem = Path(ns.infile).stem
    raw = out / f"{stem}.{ns.kind}.bin"
    csvf = out / f"{stem}.{ns.kind}.csv"
    io.write_tfr_raw(raw, tfr)
    io.write_tfr_csv(csvf, tfr)
    io.write_manifest(
        out / f"{stem}.{ns.kind}.manifest.json",
        _manifest(
            "tfr",
            {
                "kind": ns.kind,
                "bins": n_bins,
                "hop": ns.hop,
                "window_half_length": window.half_length,
                "sigma": window.sigma,
                "fs": sig.fs,
            },
            [str(raw), str(csvf)],
            inputs,
        ),
    )
    print(f"wrote {raw} and {csvf}")
    return 0


def cmd_pipeline(ns) -> int:
    sig, inputs = _load_signal(ns)
    window = _window_for(ns, sig.fs)
    n_bins = _bins_for(ns, sig.fs)
    out = _out_dir(ns)
    stem = Path(ns.infile).stem
    outputs = []

    lambda1, beta = ns.lambda1, ns.beta
    if ns.auto_tune:
        R = tfa.transform(sig, window, n_bins, kind="sst2", hop=ns.hop)
        grid = tuning.ParamGrid.default(n_harmonics=ns.harmonics)
        records = tuning.grid_scores(R, grid, delta_max=ns.delta_max)
        lambda1, beta = tuning.select_params(R, grid, delta_max=ns.delta_max)
        grid_csv = out / f"{stem}.tuning.csv"
        with open(grid_csv, "w") as fh:
            fh.write("lambda1,beta,score\n")
            for r in records:
                score = "" if r["score"] is None else repr(r["score"])
                fh.write(f"{r['lambda1']!r},{r['beta']!r},{score}\n")
        outputs.append(str(grid_csv))
        print(f"auto-tune selected lambda1={lambda1:g} beta={beta:g}")

    penalties = ridge_mod.PenaltyConfig(
        lam=tuning.lambda_schedule(lambda1, ns.delta_lambda, ns.harmonics)
    )
    result = decompose.samd_mhrd(
        sig,
        n_components=ns.components,
        n_sweeps=ns.sweeps,
        n_harmonics=ns.harmonics,
        penalties=penalties,
        beta=beta,
        delta_hz=ns.delta,
        n_bins=n_bins,
        window=window,
        hop=ns.hop,
        delta_max=ns.delta_max,
        fundamental_range_hz=(
            tuple(ns.fundamental_range) if ns.fundamental_range else None
        ),
    )

    for j in range(result.n_components):
        est = result.estimates[j][-1]
        imt_csv = out / f"{stem}.imt{j + 1}.csv"
        io.write_imt_csv(imt_csv, est, sig.times)
        ridge_csv = out / f"{stem}.ridges{j + 1}.csv"
        io.write_ridges_csv(ridge_csv, result.ridges[j])
        outputs += [str(imt_csv), str(ridge_csv)]
    residual_csv = out / f"{stem}.residual.csv"
    io.write_signal_csv(residual_csv, tfa.Signal(result.residual, sig.fs, sig.t0))
    outputs.append(str(residual_csv))

    io.write_manifest(
        out / f"{stem}.pipeline.manifest.json",
        _manifest(
            "pipeline",
            {**result.params, "lambda1": lambda1, "beta": beta,
             "auto_tune": ns.auto_tune, "seed": ns.seed},
            outputs,
            inputs,
        ),
    )
    print(f"wrote {len(outputs)} files to {out}")
    return 0


def cmd_simulate(ns) -> int:
    out = _out_dir(ns)
    snr = None if ns.snr in (None, "none") else float(ns.snr)
    if ns.model == "y1":
        y, truth = simgen.gen_y1(ns.d1, snr, seed=ns.seed)
        truths = [truth]
    else:
        y, truths = simgen.gen_y2(ns.d1, ns.d2, snr, seed=ns.seed)
        truths = list(truths)
    stem = f"{ns.model}_seed{ns.seed}"
    outputs = []
    sig_csv = out / f"{stem}.csv"
    io.write_signal_csv(sig_csv, y)
    outputs.append(str(sig_csv))
    for j, tr in enumerate(truths):
        clean_csv = out / f"{stem}.clean{j + 1}.csv"
        io.write_signal_csv(clean_csv, tr.clean)
        if_csv = out / f"{stem}.if{j + 1}.csv"
        np.savetxt(
            if_csv,
            np.column_stack([tr.clean.times, tr.if_fundamental]),
            delimiter=",", header="time_s,f1_hz", comments="",
        )
        outputs += [str(clean_csv), str(if_csv)]
    io.write_manifest(
        out / f"{stem}.manifest.json",
        _manifest(
            "simulate",
            {"model": ns.model, "d1": ns.d1, "d2": ns.d2, "snr": snr, "seed": ns.seed},
            outputs,
        ),
    )
    print(f"wrote {len(outputs)} files to {out}")
    return 0


def cmd_bench(ns) -> int:
    out = _out_dir(ns)
    snrs = [None if s.strip().lower() == "none" else float(s) for s in ns.snr.split(",")]
    d1s = [float(s) for s in ns.d1.split(",")]
    table = out / f"bench_{ns.detector}.csv"
    simgen.run_benchmark(
        ns.detector, d1s, snrs, ns.n, seed=ns.seed, out_csv=str(table)
    )
    io.write_manifest(
        out / f"bench_{ns.detector}.manifest.json",
        _manifest(
            "bench",
            {"detector": ns.detector, "d1": d1s, "snr": snrs, "n": ns.n, "seed": ns.seed},
            [str(table)],
        ),
    )
    print(f"wrote {table}")
    return 0


def cmd_walk_index(ns) -> int:
    rec = io.read_recording_csv(ns.infile)
    series = walk.compute_index(rec, ns.index)
    out = Path(ns.out)
    io.write_index_csv(out, np.arange(rec.n) / rec.fs, series.values, series.name)
    io.write_manifest(
        out.with_suffix(".manifest.json"),
        _manifest(
            "walk-index",
            {"index": ns.index, "larger_is_walking": series.larger_is_walking},
            [str(out)],
            {str(ns.infile): io.file_sha256(ns.infile)},
        ),
    )
    print(f"wrote {out}")
    return 0


def cmd_walk_losocv(ns) -> int:
    corpus_dir = Path(ns.dir)
    files = sorted(corpus_dir.glob("*.csv"))
    if not files:
        raise DataFormatError(f"no recordings found under {corpus_dir}")
    recordings = [io.read_recording_csv(f) for f in files]
    report = walk.losocv_threshold(recordings, ns.index)
    out = Path(ns.out)
    with open(out, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    io.write_manifest(
        out.with_suffix(".manifest.json"),
        _manifest(
            "walk-losocv",
            {"index": ns.index, "n_recordings": len(recordings)},
            [str(out)],
            {str(f): io.file_sha256(f) for f in files},
        ),
    )
    print(f"wrote {out}")
    return 0


def cmd_walk_synth(ns) -> int:
    out = _out_dir(ns)
    recs = walk.make_synthetic_corpus(
        n_subjects=ns.subjects, seed=ns.seed, duration_s=ns.duration
    )
    outputs = []
    for rec in recs:
        p = out / f"{rec.subject_id}.csv"
        io.write_recording_csv(p, rec)
        outputs.append(str(p))
    io.write_manifest(
        out / "corpus.manifest.json",
        _manifest(
            "walk-synth",
            {"subjects": ns.subjects, "seed": ns.seed, "duration": ns.duration},
            outputs,
        ),
    )
    print(f"wrote {len(outputs)} recordings to {out}")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="seed for stochastic steps")
    p.add_argument("--threads", type=int, default=0,
                   help="worker cap (recorded; current operations are single-process)")
    p.add_argument("--out-dir", default=".", help="output directory")


def _add_window_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--window-cycles", type=float, default=DEFAULTS["window_cycles"])
    p.add_argument("--nominal-hz", type=float, default=DEFAULTS["nominal_fundamental_hz"],
                   help="nominal fundamental the window cycle count refers to")
    p.add_argument("--sigma", type=float, default=DEFAULTS["window_sigma"])
    p.add_argument("--window-half-length", type=int, default=None,
                   help="override the cycle rule with an explicit half length")
    p.add_argument("--dxi", type=float, default=DEFAULTS["dxi_hz"],
                   help="frequency bin step in Hz")
    p.add_argument("--bins", type=int, default=None, help="explicit bin count")
    p.add_argument("--hop", type=int, default=1, help="frame step in samples")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waveridge",
        description="Ridge detection and harmonic mode decomposition toolkit",
    )
    parser.add_argument("--show-defaults", action="store_true",
                        help="print the defaults table and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("tfr", help="write a transform of a signal")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--fs", type=float, default=None,
                   help="sampling rate for headerless input")
    p.add_argument("--kind", choices=["stft", "sst1", "sst2"], default="sst2")
    _add_window_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_tfr)

    p = sub.add_parser("pipeline", help="run the full decomposition")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--fs", type=float, default=None)
    p.add_argument("--L", dest="components", type=int, required=True,
                   help="number of components")
    p.add_argument("--I", dest="sweeps", type=int, default=1,
                   help="refinement sweeps")
    p.add_argument("--K", dest="harmonics", type=int, default=DEFAULTS["harmonics"],
                   help="harmonics per component")
    p.add_argument("--beta", type=float, default=DEFAULTS["beta"])
    p.add_argument("--lambda1", type=float, default=DEFAULTS["lambda1"])
    p.add_argument("--delta-lambda", type=float, default=DEFAULTS["delta_lambda"])
    p.add_argument("--delta", type=float, default=None,
                   help="reconstruction bandwidth in Hz (default: adaptive)")
    p.add_argument("--delta-max", type=int, default=None,
                   help="per-step trellis jump cap (default: unlimited)")
    p.add_argument("--fundamental-range", type=float, nargs=2, default=None,
                   metavar=("LO_HZ", "HI_HZ"))
    p.add_argument("--auto-tune", action="store_true",
                   help="select lambda1 and beta by the entropy grid search")
    _add_window_args(p)
    _add_common(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("simulate", help="write a synthetic benchmark signal")
    p.add_argument("model", choices=["y1", "y2"])
    p.add_argument("--D1", dest="d1", type=float, default=0.5)
    p.add_argument("--D2", dest="d2", type=float, default=0.5)
    p.add_argument("--snr", default="none", help="SNR in dB, or 'none'")
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="run the detector benchmark grid")
    p.add_argument("--detector", choices=["single_rd", "mhrd", "samd_mhrd"],
                   default="mhrd")
    p.add_argument("--D1", dest="d1", default="0.5", help="comma list")
    p.add_argument("--snr", default="none", help="comma list, 'none' allowed")
    p.add_argument("--n", type=int, default=1, help="realisations per cell")
    _add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("walk", help="walking-detection indices")
    wsub = p.add_subparsers(dest="walk_command")

    w = wsub.add_parser("index", help="write an index series for one recording")
    w.add_argument("--in", dest="infile", required=True)
    w.add_argument("--index", choices=list(walk.INDEX_NAMES), default="sst-wsi")
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_walk_index)

    w = wsub.add_parser("losocv", help="leave-one-subject-out evaluation")
    w.add_argument("--dir", required=True, help="directory of recording CSVs")
    w.add_argument("--index", choices=list(walk.INDEX_NAMES), default="sst-wsi")
    w.add_argument("--out", required=True)
    w.set_defaults(func=cmd_walk_losocv)

    w = wsub.add_parser("synth", help="write a synthetic labelled corpus")
    w.add_argument("--subjects", type=int, default=3)
    w.add_argument("--duration", type=float, default=150.0)
    _add_common(w)
    w.set_defaults(func=cmd_walk_synth)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.show_defaults:
        print(format_defaults())
        return 0
    if not getattr(ns, "func", None):
        parser.print_help()
        return USAGE_EXIT
    try:
        return ns.func(ns)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except (DataFormatError, DegenerateInputError, DegeneratePhaseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except (InfeasibleRidgeError, EmptyRidgeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INFEASIBLE_EXIT


if __name__ == "__main__":
    sys.exit(main())
