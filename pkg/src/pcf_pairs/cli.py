"""Command-line interface: ``pcf-pairs <subcommand> ...``.

Exit codes: 0 success, 2 input or parse error, 3 numerical failure.
Every subcommand writes ``<subcommand>_provenance.json`` into ``--out``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, dispersion, export, interferometer, mcsim, phasematch, spectrum
from .kernels import BACKEND

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


def _model(args):
    if getattr(args, "gvd", None):
        return dispersion.build_from_gvd(dispersion.GvdTable.from_csv(args.gvd)), str(args.gvd)
    return dispersion.default_model(), "default-fiber"


def _fwm(args):
    return phasematch.FwmConfig(
        gamma=args.gamma_per_w_km * 1e-3,
        P=args.power_mw * 1e-3,
        L=args.length_m,
        lambda_p=args.pump_nm,
        loss_db_per_km=args.loss_db_km,
    )


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _provenance(args, extra=None):
    cfg = {k: v for k, v in vars(args).items() if k != "func"}
    doc = {"command": args.command, "version": __version__, "kernel_backend": BACKEND,
           "arguments": cfg}
    if extra:
        doc.update(extra)
    return doc


def _write_provenance(args, doc):
    path = _outdir(args) / f"{args.command}_provenance.json"
    mcsim.dump_json(doc, path)
    return path


def _emit(args, payload, text):
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True, default=mcsim._jsonable))
    else:
        print(text)


def cmd_zdw(args):
    model, source = _model(args)
    roots = dispersion.zero_dispersion_wavelengths(model)
    if not roots:
        raise dispersion.NoZeroDispersionError("beta2 does not change sign in the valid range")
    payload = {"source": source, "zero_dispersion_wavelength_nm": roots[0] if len(roots) == 1 else None,
               "all_roots_nm": roots}
    _write_provenance(args, _provenance(args, {"result": payload}))
    _emit(args, payload, "\n".join(f"{r:.4f}" for r in roots))


def cmd_map(args):
    model, source = _model(args)
    cfg = _fwm(args)
    smap = phasematch.spectral_map(model, cfg, tuple(args.pump_range), tuple(args.lambda_range),
                                   args.grid[0], args.grid[1], workers=args.threads,
                                   oversample=args.oversample)
    out = _outdir(args)
    scale = args.d_omega * args.dt
    export.write_map_csv(smap, out / "map.csv", scale=scale)
    rows = []
    for lp in smap.lambda_p_axis:
        c = cfg.with_(lambda_p=float(lp))
        pts = phasematch.branch_solutions(model, c)
        if c.P > 0:
            pts = phasematch.trunk_solutions(model, c) + pts
        rows.extend((float(lp), p) for p in pts)
    export.write_solutions_csv(rows, out / "solutions.csv")
    ridge = phasematch.branch_ridge(smap, model, cfg)
    export.write_ridge_csv(smap.lambda_p_axis, ridge, out / "ridge.csv")
    overlay = [(lp, p.lambda_s) for lp, p in rows] + [(lp, p.lambda_i) for lp, p in rows]
    export.map_svg(smap, out / "map.svg", title=f"Pair density, P = {args.power_mw:g} mW",
                   overlay=overlay)
    summary = {"source": source, "grid": list(smap.values.shape), "max_N": float(smap.values.max() * scale),
               "n_solutions": len(rows), "ridge_rows": int(np.count_nonzero(~np.isnan(ridge))),
               "files": ["map.csv", "map.svg", "solutions.csv", "ridge.csv"]}
    _write_provenance(args, _provenance(args, {"result": summary, "normalization":
                      "N_density per (dOmega * dt), dOmega taken as signal-side bandwidth [rad/s]"}))
    _emit(args, summary, f"wrote {out / 'map.csv'}, {out / 'map.svg'}, {out / 'solutions.csv'}")


def cmd_solutions(args):
    model, source = _model(args)
    cfg = _fwm(args)
    pts = phasematch.branch_solutions(model, cfg)
    if cfg.P > 0:
        pts = phasematch.trunk_solutions(model, cfg) + pts
    out = _outdir(args)
    export.write_solutions_csv([(cfg.lambda_p, p) for p in pts], out / "solutions.csv")
    payload = [asdict(p) for p in pts]
    _write_provenance(args, _provenance(args, {"result": payload}))
    _emit(args, payload, "\n".join(f"{p.kind:6s} signal {p.lambda_s:9.3f} nm  idler {p.lambda_i:9.3f} nm"
                                   for p in pts) or "no solutions")


def cmd_decompose(args):
    specs = [spectrum.MeasuredSpectrum.from_csv(p) for p in args.spectra]
    dec = spectrum.decompose(*specs)
    out = _outdir(args)
    dec.to_csv(out / "decomposition.csv")
    payload = {"reference_power_W": dec.reference_power, "bins": len(dec.lambda_axis),
               "clamped_bins": int(dec.clamped.sum())}
    if args.band:
        center, fwhm = args.band
        pair = spectrum.band_integrate((dec.lambda_axis, dec.pair_component), center, fwhm,
                                       stop_band=dec.stop_band)
        lin = spectrum.band_integrate((dec.lambda_axis, dec.linear_component), center, fwhm,
                                      stop_band=dec.stop_band)
        payload["band"] = {"center_nm": center, "fwhm_nm": fwhm, "pair_rate": pair, "linear_rate": lin}
    _write_provenance(args, _provenance(args, {"result": payload}))
    _emit(args, payload, f"wrote {out / 'decomposition.csv'} ({payload['clamped_bins']} clamped bins)")


def cmd_fringe(args):
    k_p = 2 * math.pi / (args.pump_nm * 1e-9)
    dx_nm = np.linspace(0.0, args.span_nm, args.points, endpoint=False)
    delta_L = args.delta_l_cm * 1e-2
    if args.mode == "full":
        y = interferometer.coincidence_full(k_p, delta_L + dx_nm * 1e-9, args.mu)
    elif args.mode == "postselected":
        y = interferometer.coincidence_postselected(k_p, delta_L + dx_nm * 1e-9, args.mu)
    else:
        geo = interferometer.InterferometerGeometry.from_delta_L(delta_L)
        sp = interferometer.FilteredBiphotonSpectrum.for_pump(args.pump_nm, args.signal_nm,
                                                              args.fwhm_nm, args.filter_shape)
        y = interferometer.coincidence_oracle(geo, sp, args.mu, dx_nm * 1e-9)
    out = _outdir(args)
    export.write_fringe_csv(dx_nm, y, out / f"fringe_{args.mode}.csv")
    fit = interferometer.fit_visibility(dx_nm, y, args.pump_nm / 2, weights=None).as_dict()
    mcsim.dump_json(fit, out / f"fringe_{args.mode}_fit.json")
    _write_provenance(args, _provenance(args, {"result": fit}))
    _emit(args, fit, f"{args.mode}: visibility {fit['visibility']:.4f}")


def _source_params(args):
    base = {}
    if args.params:
        try:
            base = json.loads(Path(args.params).read_text())
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.params}: {exc}") from exc
    overrides = {
        "mu": args.mu, "eta_s": args.eta_s, "eta_i": args.eta_i, "pair_rate": args.pair_rate,
        "dark_s": args.dark, "dark_i": args.dark,
        "jitter_sigma": None if args.jitter_ps is None else args.jitter_ps * 1e-12,
        "tau": None if args.delta_l_cm is None else args.delta_l_cm * 1e-2 / dispersion.C_LIGHT,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    base.setdefault("pair_rate", mcsim.EXPERIMENT_PAIR_RATE)
    base.setdefault("eta_s", mcsim.EXPERIMENT_ETA_S)
    base.setdefault("eta_i", mcsim.EXPERIMENT_ETA_I)
    base.setdefault("mu", 0.83)
    try:
        return mcsim.SourceParams(**base)
    except TypeError as exc:
        raise InputError(f"bad source parameters: {exc}") from exc


def cmd_simulate(args):
    params = _source_params(args)
    dx = np.linspace(0.0, args.span_nm, args.points, endpoint=False)
    duration = args.duration if args.duration else args.pairs_per_point / params.pair_rate
    out = _outdir(args)
    results = {}
    counts_by_gate = {}
    for T_ns in args.gate_ns:
        gate = mcsim.GateConfig(T_ns * 1e-9, tac_bin=args.tac_bin_ps * 1e-12)
        scan = mcsim.scan_fringe(params, gate, dx, duration, seed=args.seed, pump_nm=args.pump_nm,
                                 workers=args.threads)
        tag = f"T{T_ns:g}ns"
        scan.to_csv(out / f"scan_{tag}.csv")
        scan.tac_to_csv(out / f"tac_{tag}.csv")
        fit = interferometer.fit_visibility(dx, scan.counts, args.pump_nm / 2).as_dict()
        mcsim.dump_json(fit, out / f"fit_{tag}.json")
        results[tag] = {"fit": fit, "total_coincidences": int(scan.counts.sum()),
                        "scan": scan.provenance()}
        counts_by_gate[T_ns] = scan.counts
    _write_provenance(args, _provenance(args, {"source_params": asdict(params), "results": results}))
    lines = [f"{tag}: visibility {r['fit']['visibility']:.4f} +/- {r['fit']['visibility_stderr']:.4f}"
             for tag, r in results.items()]
    _emit(args, results, "\n".join(lines))


def cmd_fit(args):
    x, y = export.read_fringe_csv(args.scan)
    period = args.period_nm if args.period_nm else args.pump_nm / 2
    fit = interferometer.fit_visibility(x, y, period, free_period=args.free_period).as_dict()
    out = _outdir(args)
    mcsim.dump_json(fit, out / "fit.json")
    _write_provenance(args, _provenance(args, {"result": fit}))
    _emit(args, fit, f"visibility {fit['visibility']:.4f} +/- {fit['visibility_stderr']:.4f}, "
                     f"period {fit['period_nm']:.3f} nm")


def cmd_rate(args):
    est = mcsim.rate_provenance(args.source_rate, args.throughput, args.eta_s, args.eta_i)
    model = dispersion.default_model()
    cfg = phasematch.FwmConfig(args.gamma_per_w_km * 1e-3, args.power_mw * 1e-3, args.length_m,
                               args.pump_nm)
    est["fwm_density_integrated_over_filter_per_s"] = phasematch.integrated_pair_rate(
        model, cfg, args.signal_nm, args.fwhm_nm)
    _write_provenance(args, _provenance(args, {"result": est}))
    _emit(args, est, f"detected coincidences ~ {est['detected_rate_per_s']:.4g} /s")


def _add_fiber(p, power_mw):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--gvd", help="GVD CSV (wavelength_nm,D_ps_nm_km)")
    g.add_argument("--default-fiber", action="store_true", help="calibrated default fiber (default)")
    p.add_argument("--pump-nm", type=float, default=760.4)
    p.add_argument("--power-mw", type=float, default=power_mw)
    p.add_argument("--length-m", type=float, default=1.93)
    p.add_argument("--gamma-per-w-km", type=float, default=102.0)
    p.add_argument("--loss-db-km", type=float, default=50.0)


def _common(p):
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--json", action="store_true", help="machine-readable output on stdout")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="pcf-pairs",
        description="Four-wave-mixing photon pairs in a PCF and their two-photon interference.",
        epilog="exit codes: 0 success, 2 input or parse error, 3 numerical failure")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("zdw", help="zero-dispersion wavelength")
    p.add_argument("gvd_csv", nargs="?", help="GVD CSV; omit for the default fiber")
    p.add_argument("--default-fiber", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_zdw)

    p = sub.add_parser("map", help="spectral pair-density map, CSV + SVG")
    _add_fiber(p, 100.0)
    p.add_argument("--pump-range", type=float, nargs=2, default=[755.0, 770.0])
    p.add_argument("--lambda-range", type=float, nargs=2, default=[540.0, 1000.0])
    p.add_argument("--grid", type=int, nargs=2, default=[200, 200], metavar=("N_PUMP", "N_LAMBDA"))
    p.add_argument("--oversample", type=int, default=16,
                   help="sub-samples per cell; cells hold their peak value")
    p.add_argument("--d-omega", type=float, default=1.0, help="bandwidth dOmega [rad/s]")
    p.add_argument("--dt", type=float, default=1.0, help="time interval [s]")
    p.add_argument("--threads", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("solutions", help="trunk and branch phase-matching solutions")
    _add_fiber(p, 100.0)
    _common(p)
    p.set_defaults(func=cmd_solutions)

    p = sub.add_parser("decompose", help="split spectra into P and P^2 parts")
    p.add_argument("spectra", nargs="+", help="spectrum CSVs at two or more pump powers")
    p.add_argument("--band", type=float, nargs=2, metavar=("CENTER_NM", "FWHM_NM"))
    _common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("fringe", help="analytic or spectrally averaged coincidence fringe")
    p.add_argument("--mode", choices=["full", "postselected", "oracle"], default="full")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--pump-nm", type=float, default=760.4)
    p.add_argument("--signal-nm", type=float, default=660.0)
    p.add_argument("--fwhm-nm", type=float, default=10.0)
    p.add_argument("--filter-shape", choices=["rect", "gaussian"], default="rect")
    p.add_argument("--delta-l-cm", type=float, default=60.0)
    p.add_argument("--span-nm", type=float, default=760.4)
    p.add_argument("--points", type=int, default=48)
    _common(p)
    p.set_defaults(func=cmd_fringe)

    p = sub.add_parser("simulate", help="Monte Carlo coincidence scan")
    p.add_argument("--params", help="JSON file with SourceParams fields")
    p.add_argument("--mu", type=float)
    p.add_argument("--eta-s", type=float)
    p.add_argument("--eta-i", type=float)
    p.add_argument("--pair-rate", type=float)
    p.add_argument("--dark", type=float, help="dark count rate per detector [1/s]")
    p.add_argument("--jitter-ps", type=float)
    p.add_argument("--delta-l-cm", type=float)
    p.add_argument("--gate-ns", type=float, nargs="+", default=[6.0, 1.5])
    p.add_argument("--tac-bin-ps", type=float, default=50.0)
    p.add_argument("--pump-nm", type=float, default=760.4)
    p.add_argument("--span-nm", type=float, default=760.4)
    p.add_argument("--points", type=int, default=24)
    p.add_argument("--pairs-per-point", type=float, default=1e5)
    p.add_argument("--duration", type=float, help="seconds per point (overrides --pairs-per-point)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit visibility to a fringe CSV")
    p.add_argument("scan")
    p.add_argument("--pump-nm", type=float, default=760.4)
    p.add_argument("--period-nm", type=float)
    p.add_argument("--free-period", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("rate", help="detected coincidence rate estimate")
    p.add_argument("--source-rate", type=float, default=2e4)
    p.add_argument("--throughput", type=float, default=0.5)
    p.add_argument("--eta-s", type=float, default=mcsim.EXPERIMENT_ETA_S)
    p.add_argument("--eta-i", type=float, default=mcsim.EXPERIMENT_ETA_I)
    p.add_argument("--pump-nm", type=float, default=760.4)
    p.add_argument("--power-mw", type=float, default=4.0)
    p.add_argument("--length-m", type=float, default=1.93)
    p.add_argument("--gamma-per-w-km", type=float, default=102.0)
    p.add_argument("--signal-nm", type=float, default=660.0)
    p.add_argument("--fwhm-nm", type=float, default=10.0)
    _common(p)
    p.set_defaults(func=cmd_rate)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.command == "zdw" and args.gvd_csv:
        args.gvd = args.gvd_csv
    try:
        args.func(args)
    except (interferometer.FitError, interferometer.QuadratureError,
            dispersion.NoZeroDispersionError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
