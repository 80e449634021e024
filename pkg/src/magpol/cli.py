"""Command-line entry point: configs in, CSV/JSON artifacts out.

Every run writes a ``manifest.json`` next to its outputs: the fully
resolved configuration (defaults materialized, resolution applied,
seed state recorded). Re-running ``magpol <cmd> --config manifest.json
--out <dir>`` reproduces the data files byte for byte; thread count
and output location are deliberately excluded from the manifest since
they must not affect results.

Exit codes: 0 success (including sweeps that hit a divergence, which
is an annotated physics outcome), 1 numeric failure (fit failure,
conditioning, internal consistency, I/O), 2 invalid input (bad config,
bad CSV, bad command line).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__, config
from .calib import (fit_kittel, fit_s11, load_field_points_csv,
                    load_spectrum_csv)
from .dynamics import run_sweep
from .errors import (ConditioningError, ConfigError, DivergenceError,
                     FitError, InternalConsistencyError)
from .phasemap import onset_monotonicity_flags, scan
from .spectral import build_spectrogram
from .stability import MARGIN_RTOL, classify
from .steady import active_fixed_points, passive_fixed_points

TWO_PI = 2.0 * math.pi


def _mhz(rad_per_us) -> float:
    """rad/us -> ordinary MHz, the reporting unit for offsets."""
    return float(rad_per_us) / TWO_PI


def _write_json(path: str, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_matrix_csv(path: str, matrix: np.ndarray) -> None:
    """One CSV row per grid row; repr keeps floats round-trippable."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([repr(v) if isinstance(v, float) else int(v)
                             for v in row.tolist()])


def _complex_pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _fp_record(fp, report) -> dict:
    if report.is_marginal:
        label = "marginal"
    elif report.is_stable:
        label = "stable"
    else:
        label = "unstable"
    return {
        "kind": fp.kind,
        "omega_mhz_over_2pi": _mhz(fp.omega),
        "n_a": fp.n_a,
        "n_m": fp.n_m,
        "a0": _complex_pair(fp.a0),
        "m0": _complex_pair(fp.m0),
        "net_gain_per_us": fp.net_gain,
        "residual_per_us": fp.residual,
        "classification": label,
        "margin_per_us": report.margin,
        "eigenvalues_per_us": [_complex_pair(e) for e in report.eigenvalues],
        "discarded_per_us": (_complex_pair(report.discarded)
                             if report.discarded is not None else None),
        "neutral_suspect": report.neutral_suspect,
    }


def cmd_fixed_points(run: config.RunConfig, out_dir: str) -> int:
    params = run.system
    if run.kind == "passive":
        fps = passive_fixed_points(params, run.drive)
    else:
        fps = active_fixed_points(params)
    records = []
    n_stable = n_unstable = n_marginal = 0
    for fp in fps:
        report = classify(fp, params)
        rec = _fp_record(fp, report)
        records.append(rec)
        if rec["classification"] == "stable":
            n_stable += 1
        elif rec["classification"] == "unstable":
            n_unstable += 1
        else:
            n_marginal += 1
    phase = f"{n_stable}S+{n_unstable}U"
    if n_marginal:
        phase += f"+{n_marginal}M"
    payload = {
        "phase": phase,
        "counts": {"stable": n_stable, "unstable": n_unstable,
                   "marginal": n_marginal},
        "fixed_points": records,
        "margin_rtol": MARGIN_RTOL,
        "version": __version__,
    }
    if run.kind == "active":
        payload["counting"] = "admissible coupled solutions only (n_m > 0)"
    _write_json(os.path.join(out_dir, "fixed_points.json"), payload)
    config.dump_manifest(run, os.path.join(out_dir, "manifest.json"))
    print(f"{len(records)} fixed point(s), phase {phase}")
    for rec in records:
        print(f"  omega/2pi = {rec['omega_mhz_over_2pi']:+10.4f} MHz   "
              f"n_a = {rec['n_a']:.4e}   n_m = {rec['n_m']:.4e}   "
              f"{rec['classification']} (margin {rec['margin_per_us']:+.3e}"
              f" /us)")
    return 0


def cmd_phase_diagram(run: config.RunConfig, out_dir: str,
                      threads: int) -> int:
    diagram = scan(run.grid, workers=threads)
    _write_matrix_csv(os.path.join(out_dir, "stable_count.csv"),
                      diagram.stable)
    _write_matrix_csv(os.path.join(out_dir, "unstable_count.csv"),
                      diagram.unstable)
    _write_matrix_csv(os.path.join(out_dir, "marginal_count.csv"),
                      diagram.marginal)
    _write_matrix_csv(os.path.join(out_dir, "blank.csv"),
                      diagram.blank.astype(np.int16))
    _write_matrix_csv(os.path.join(out_dir, "errors.csv"),
                      diagram.errors.astype(np.int16))

    grid = run.grid
    x = grid.x_values()
    sidecar = {
        "delta_m_mhz_over_2pi": [_mhz(v) for v in grid.delta_m_values()],
        "x_axis": grid.x_axis,
        "rows_are": "delta_m",
        "region_summary": diagram.region_summary(),
        "onset_review_rows": onset_monotonicity_flags(diagram),
        "margin_rtol": MARGIN_RTOL,
        "version": __version__,
    }
    if grid.x_axis == "n0":
        sidecar["x_values"] = [float(v) for v in x]
    else:
        sidecar["x_values_mhz_over_2pi"] = [_mhz(v) for v in x]
    if grid.system == "active":
        sidecar["counting"] = "admissible coupled solutions only (n_m > 0)"
    if diagram.error_messages:
        sidecar["error_messages"] = {
            f"{iy},{ix}": msg
            for (iy, ix), msg in sorted(diagram.error_messages.items())}
    _write_json(os.path.join(out_dir, "phase_diagram.json"), sidecar)
    config.dump_manifest(run, os.path.join(out_dir, "manifest.json"))

    total = grid.x_count * grid.delta_m_count
    print(f"{grid.delta_m_count} x {grid.x_count} cells "
          f"({grid.system}, x axis {grid.x_axis}):")
    for label, count in diagram.region_summary().items():
        print(f"  {label:>10s}  {count:7d}  ({100.0 * count / total:5.1f}%)")
    flags = sidecar["onset_review_rows"]
    if flags:
        print(f"  note: onset not monotonic in {len(flags)} row(s); "
              f"see phase_diagram.json")
    return 0


def cmd_sweep(run: config.RunConfig, out_dir: str) -> int:
    result = run_sweep(run.protocol, run.system, drive=run.drive,
                       initial_state=run.initial_state)
    rows_path = os.path.join(out_dir, "sweep.csv")
    with open(rows_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "delta_m0_mhz_over_2pi",
                         "delta_eff_mhz_over_2pi", "omega_mhz_over_2pi",
                         "confidence", "low_confidence", "diverged"])
        for k in range(len(run.protocol.detunings)):
            diverged = (result.diverged_at is not None
                        and k == result.diverged_at)
            writer.writerow([
                k,
                repr(_mhz(result.detunings_nominal[k])),
                repr(_mhz(result.detunings_effective[k])),
                repr(_mhz(result.omegas[k])),
                repr(float(result.confidences[k])),
                str(bool(result.low_confidence[k])).lower(),
                str(diverged).lower(),
            ])

    if run.spectrogram is not None and result.segments:
        spec = build_spectrogram(
            result.segments,
            result.detunings_nominal[:len(result.segments)],
            t_drop=run.protocol.t_drop,
            f_min=run.spectrogram["f_min_mhz"],
            f_max=run.spectrogram["f_max_mhz"],
            floor=run.spectrogram["floor"])
        _write_matrix_csv(os.path.join(out_dir, "spectrogram.csv"),
                          spec.magnitudes.astype(float))
        _write_json(os.path.join(out_dir, "spectrogram_axes.json"), {
            "freqs_mhz": [float(f) for f in spec.freqs],
            "detunings_mhz_over_2pi": [_mhz(d) for d in spec.detunings],
            "floor": spec.floor,
            "t_drop_us": run.protocol.t_drop,
            "rows_are": "frequency",
        })
    config.dump_manifest(run, os.path.join(out_dir, "manifest.json"))

    n_done = len(result.segments)
    n_low = int(result.low_confidence[:n_done].sum())
    print(f"{n_done}/{len(run.protocol.detunings)} steps integrated; "
          f"{n_low} low-confidence fit(s)")
    if n_done:
        omegas = result.omegas[:n_done]
        print(f"  omega/2pi range [{_mhz(np.nanmin(omegas)):+.3f}, "
              f"{_mhz(np.nanmax(omegas)):+.3f}] MHz")
    if result.diverged_at is not None:
        print(f"  diverged at step {result.diverged_at}: {result.error}")
    return 0


def cmd_fit_s11(run: config.RunConfig, out_dir: str) -> int:
    fit = fit_s11(load_spectrum_csv(run.data_csv))
    payload = {
        "omega_m_ghz_over_2pi": fit.omega_m / (TWO_PI * 1e9),
        "kappa_a_mhz_over_2pi": fit.kappa_a / (TWO_PI * 1e6),
        "gamma_mhz_over_2pi": fit.gamma / (TWO_PI * 1e6),
        "kappa_load_mhz_over_2pi": fit.kappa_load / (TWO_PI * 1e6),
        "goodness": fit.goodness,
        "baseline": fit.baseline,
        "version": __version__,
    }
    _write_json(os.path.join(out_dir, "fit_s11.json"), payload)
    config.dump_manifest(run, os.path.join(out_dir, "manifest.json"))
    print(f"omega_m/2pi = {payload['omega_m_ghz_over_2pi']:.6f} GHz   "
          f"kappa_a/2pi = {payload['kappa_a_mhz_over_2pi']:.4f} MHz   "
          f"gamma/2pi = {payload['gamma_mhz_over_2pi']:.4f} MHz   "
          f"rms {fit.goodness:.2e}")
    return 0


def cmd_fit_kittel(run: config.RunConfig, out_dir: str) -> int:
    fit = fit_kittel(load_field_points_csv(run.data_csv))
    payload = {
        "gamma_e_mhz_per_mt": fit.gamma_e_hz_per_t * 1e-9,
        "anisotropy_mt": fit.anisotropy_t * 1e3,
        "residual_rms_mhz_over_2pi": fit.residual_rms / (TWO_PI * 1e6),
        "version": __version__,
    }
    _write_json(os.path.join(out_dir, "fit_kittel.json"), payload)
    config.dump_manifest(run, os.path.join(out_dir, "manifest.json"))
    print(f"gamma_e/2pi = {payload['gamma_e_mhz_per_mt']:.4f} MHz/mT   "
          f"mu0 H_A = {payload['anisotropy_mt']:+.4f} mT   "
          f"rms {payload['residual_rms_mhz_over_2pi']:.3e} MHz")
    return 0


def _apply_resolution(doc: dict, resolution: str) -> None:
    try:
        nx, ny = resolution.lower().split("x")
        nx, ny = int(nx), int(ny)
    except ValueError:
        raise ConfigError(f"--resolution must be NxM (x count x detuning "
                          f"count), got {resolution!r}") from None
    grid = doc.get("grid")
    if not isinstance(grid, dict):
        raise ConfigError("--resolution needs a config with a grid block")
    grid["x_count"] = nx
    grid["delta_m_count"] = ny


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magpol",
        description="Coupled photon-magnon fixed points, phase diagrams, "
                    "sweeps, and calibration fits.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("fixed-points", "solve and classify steady states"),
            ("phase-diagram", "scan stability counts over a grid"),
            ("sweep", "hysteretic detuning sweep with emission fits"),
            ("fit-s11", "fit a reflection dip CSV"),
            ("fit-kittel", "fit a field-frequency line CSV")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="JSON run configuration")
        p.add_argument("--out", default=None,
                       help="output directory (default: config 'out' "
                            "field, else current directory)")
        if name == "phase-diagram":
            p.add_argument("--threads", type=int, default=1,
                           help="worker processes for the scan")
            p.add_argument("--resolution", default=None, metavar="NxM",
                           help="override grid size (x count x detuning "
                                "count)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = config.load_config(args.config)
        if args.command == "phase-diagram" and args.resolution:
            _apply_resolution(doc, args.resolution)
        run = config.parse_run(doc, args.command)
        out_dir = args.out or run.out or "."
        os.makedirs(out_dir, exist_ok=True)
        if args.command == "fixed-points":
            return cmd_fixed_points(run, out_dir)
        if args.command == "phase-diagram":
            return cmd_phase_diagram(run, out_dir, max(1, args.threads))
        if args.command == "sweep":
            return cmd_sweep(run, out_dir)
        if args.command == "fit-s11":
            return cmd_fit_s11(run, out_dir)
        return cmd_fit_kittel(run, out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FitError, ConditioningError, InternalConsistencyError,
            DivergenceError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
