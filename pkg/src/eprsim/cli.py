"""Command-line interface: reproducible sweep, tomography, fit and design runs.

Every run that writes files also writes a ``*_manifest.json`` recording the
tool version, the fully resolved parameters, the seed and the canonical
argument vector, so the run can be repeated byte-for-byte.

Exit codes: 0 success, 2 usage error, 3 data-format error, 4 numerical
failure, 1 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    DataFormatError,
    IllConditionedDatumError,
    IllPosedFitError,
    UnsupportedStateError,
)
from .fitting import fit_epr, fit_single, squeezing_db
from .fock import fidelity, loss_fock, mean_photon, tmsv_fock
from .gaussian import PipelineConfig, epr_pipeline, epr_variance, loss, squeeze, vacuum
from .homodyne import PhaseSchedule, QuadratureDataset, SweepConfig, VarianceTrace, binned_variance, sample
from .optics import (
    WALKOFF_PRESETS,
    beam_radius,
    compensation_length,
    parse_length,
    rayleigh_range,
    walkoff_path,
)
from .tomography import TomographyConfig, reconstruct

OUTDIR_ENV = "EPRSIM_OUTDIR"


def _nonneg_float(text: str) -> float:
    value = float(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return value


def _unit_interval(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _length(text: str) -> float:
    try:
        return parse_length(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _resolve_outdir(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    env = os.environ.get(OUTDIR_ENV)
    return Path(env) if env else Path(".")


def _write_json(path: Path, payload: dict) -> None:
    path.write_bytes((json.dumps(payload, indent=2) + "\n").encode("ascii"))


def _write_manifest(
    outdir: Path, prefix: str, subcommand: str, parameters: dict, seed, outputs: list[str], argv: list[str]
) -> Path:
    path = outdir / f"{prefix}_manifest.json"
    _write_json(
        path,
        {
            "tool": "eprsim",
            "version": __version__,
            "subcommand": subcommand,
            "parameters": parameters,
            "seed": seed,
            "outputs": outputs,
            "argv": argv,
        },
    )
    return path


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _cmd_single_sweep(args) -> int:
    outdir = _resolve_outdir(args)
    rate = args.rate if args.rate is not None else 4.0 * math.pi / args.samples
    config = SweepConfig(
        phases=(PhaseSchedule(args.theta0, rate),), n_samples=args.samples, seed=args.seed
    )
    state = loss(squeeze(vacuum(1), 0, args.zeta), 0, args.eta)

    outdir.mkdir(parents=True, exist_ok=True)
    dataset = sample(state, config)
    trace = binned_variance(dataset, args.window, "mode1")
    fit = fit_single(trace)

    outputs = []
    if args.write_dataset:
        name = f"{args.prefix}_data.csv"
        dataset.to_csv(outdir / name)
        outputs.append(name)
    trace_name = f"{args.prefix}_trace.csv"
    trace.to_csv(outdir / trace_name)
    outputs.append(trace_name)
    fit_name = f"{args.prefix}_fit.json"
    _write_json(outdir / fit_name, fit.to_json_dict())
    outputs.append(fit_name)

    parameters = {
        "zeta": args.zeta,
        "eta": args.eta,
        "samples": args.samples,
        "theta0": args.theta0,
        "rate": rate,
        "window": args.window,
        "write_dataset": bool(args.write_dataset),
        "prefix": args.prefix,
    }
    argv = [
        "single-sweep",
        "--zeta", _fmt(args.zeta),
        "--eta", _fmt(args.eta),
        "--samples", str(args.samples),
        "--theta0", _fmt(args.theta0),
        "--rate", _fmt(rate),
        "--window", str(args.window),
        "--seed", str(args.seed),
        "--prefix", args.prefix,
        "--out", str(outdir),
    ] + (["--write-dataset"] if args.write_dataset else [])
    _write_manifest(outdir, args.prefix, "single-sweep", parameters, args.seed, outputs, argv)
    print(f"single-sweep: fitted zeta={fit.zeta:.4f} eta={fit.eta:.4f} -> {outdir}")
    return 0


def _cmd_epr_sweep(args) -> int:
    outdir = _resolve_outdir(args)
    rate = args.rate if args.rate is not None else 4.0 * math.pi / args.samples
    pipeline = PipelineConfig(
        zeta=args.zeta,
        relative_phase=args.relative_phase,
        eta=args.eta,
        mismatch=args.mismatch,
    )
    config = SweepConfig(
        phases=(PhaseSchedule(args.theta0, rate), PhaseSchedule(args.theta2, 0.0)),
        n_samples=args.samples,
        seed=args.seed,
    )
    state = epr_pipeline(pipeline)

    outdir.mkdir(parents=True, exist_ok=True)
    dataset = sample(state, config)
    traces = {
        target: binned_variance(dataset, args.window, target)
        for target in ("mode1", "mode2", "sum", "difference")
    }
    fit = fit_epr(traces["sum"], traces["difference"])

    outputs = []
    if args.write_dataset:
        name = f"{args.prefix}_data.csv"
        dataset.to_csv(outdir / name)
        outputs.append(name)
    for target, trace in traces.items():
        name = f"{args.prefix}_{target}_trace.csv"
        trace.to_csv(outdir / name)
        outputs.append(name)

    trace_min = float(traces["difference"].variance.min())
    model_min = float(epr_variance(fit.zeta, fit.eta, 0.0, "minus"))
    fit_payload = fit.to_json_dict()
    fit_payload["trace_min_difference_variance"] = trace_min
    fit_payload["squeezing_db_at_trace_min"] = squeezing_db(trace_min)
    fit_payload["model_min_difference_variance"] = model_min
    fit_payload["squeezing_db_at_model_min"] = squeezing_db(model_min)
    fit_name = f"{args.prefix}_fit.json"
    _write_json(outdir / fit_name, fit_payload)
    outputs.append(fit_name)

    parameters = {
        "zeta": args.zeta,
        "eta": args.eta,
        "relative_phase": args.relative_phase,
        "mismatch": args.mismatch,
        "samples": args.samples,
        "theta0": args.theta0,
        "theta2": args.theta2,
        "rate": rate,
        "window": args.window,
        "write_dataset": bool(args.write_dataset),
        "prefix": args.prefix,
    }
    argv = [
        "epr-sweep",
        "--zeta", _fmt(args.zeta),
        "--eta", _fmt(args.eta),
        "--relative-phase", _fmt(args.relative_phase),
        "--mismatch", _fmt(args.mismatch),
        "--samples", str(args.samples),
        "--theta0", _fmt(args.theta0),
        "--theta2", _fmt(args.theta2),
        "--rate", _fmt(rate),
        "--window", str(args.window),
        "--seed", str(args.seed),
        "--prefix", args.prefix,
        "--out", str(outdir),
    ] + (["--write-dataset"] if args.write_dataset else [])
    _write_manifest(outdir, args.prefix, "epr-sweep", parameters, args.seed, outputs, argv)
    print(
        f"epr-sweep: fitted zeta={fit.zeta:.4f} eta={fit.eta:.4f}, "
        f"difference-trace min {trace_min:.4f} "
        f"({squeezing_db(trace_min):.2f} dB) -> {outdir}"
    )
    return 0


def _cmd_tomography(args) -> int:
    outdir = _resolve_outdir(args)
    config = TomographyConfig(
        cutoff=args.cutoff,
        max_iterations=args.max_iterations,
        stop_tol=args.stop_tol,
        dilution=args.dilution,
    )
    if (args.ref_zeta is None) != (args.ref_eta is None):
        print("eprsim: --ref-zeta and --ref-eta must be given together", file=sys.stderr)
        return 2
    dataset = QuadratureDataset.from_csv(args.input)

    state, diagnostics = reconstruct(dataset, config)

    outdir.mkdir(parents=True, exist_ok=True)
    outputs = []
    state_name = f"{args.prefix}_state.json"
    _write_json(outdir / state_name, state.to_json_dict())
    outputs.append(state_name)
    diag_name = f"{args.prefix}_diagnostics.json"
    _write_json(outdir / diag_name, diagnostics.to_json_dict())
    outputs.append(diag_name)

    summary = {
        "mean_photon": [mean_photon(state, m) for m in range(state.n_modes)],
        "reference": None,
    }
    if args.ref_zeta is not None:
        reference = tmsv_fock(args.ref_zeta, args.cutoff)
        for m in range(2):
            reference = loss_fock(reference, m, args.ref_eta)
        if state.n_modes != 2:
            raise UnsupportedStateError("reference comparison needs a 2-mode dataset")
        summary["reference"] = {
            "zeta": args.ref_zeta,
            "eta": args.ref_eta,
            "fidelity": fidelity(state, reference),
            "mean_photon": [mean_photon(reference, m) for m in range(2)],
        }
    summary_name = f"{args.prefix}_summary.json"
    _write_json(outdir / summary_name, summary)
    outputs.append(summary_name)

    parameters = {
        "input": str(args.input),
        "cutoff": args.cutoff,
        "max_iterations": args.max_iterations,
        "stop_tol": args.stop_tol,
        "dilution": args.dilution,
        "ref_zeta": args.ref_zeta,
        "ref_eta": args.ref_eta,
        "prefix": args.prefix,
    }
    argv = [
        "tomography",
        "--input", str(args.input),
        "--cutoff", str(args.cutoff),
        "--max-iterations", str(args.max_iterations),
        "--stop-tol", _fmt(args.stop_tol),
        "--dilution", _fmt(args.dilution),
        "--prefix", args.prefix,
        "--out", str(outdir),
    ]
    if args.ref_zeta is not None:
        argv += ["--ref-zeta", _fmt(args.ref_zeta), "--ref-eta", _fmt(args.ref_eta)]
    _write_manifest(outdir, args.prefix, "tomography", parameters, None, outputs, argv)
    print(
        f"tomography: {diagnostics.iterations} iterations, "
        f"loglik {diagnostics.loglik:.2f}, mean photon "
        + "/".join(f"{v:.4f}" for v in summary["mean_photon"])
        + f" -> {outdir}"
    )
    return 0


def _cmd_fit(args) -> int:
    outdir = _resolve_outdir(args)
    if args.kind == "single":
        if args.trace is None:
            print("eprsim: fit --kind single needs --trace", file=sys.stderr)
            return 2
        result = fit_single(VarianceTrace.from_csv(args.trace))
        inputs = {"trace": str(args.trace)}
        argv_tail = ["--trace", str(args.trace)]
    else:
        if args.trace_sum is None or args.trace_diff is None:
            print("eprsim: fit --kind epr needs --trace-sum and --trace-diff", file=sys.stderr)
            return 2
        result = fit_epr(
            VarianceTrace.from_csv(args.trace_sum), VarianceTrace.from_csv(args.trace_diff)
        )
        inputs = {"trace_sum": str(args.trace_sum), "trace_diff": str(args.trace_diff)}
        argv_tail = ["--trace-sum", str(args.trace_sum), "--trace-diff", str(args.trace_diff)]

    outdir.mkdir(parents=True, exist_ok=True)
    fit_name = f"{args.prefix}_fit.json"
    _write_json(outdir / fit_name, result.to_json_dict())
    parameters = {"kind": args.kind, **inputs, "prefix": args.prefix}
    argv = ["fit", "--kind", args.kind, "--prefix", args.prefix, "--out", str(outdir)] + argv_tail
    _write_manifest(outdir, args.prefix, "fit", parameters, None, [fit_name], argv)
    print(f"fit: zeta={result.zeta:.4f} eta={result.eta:.4f} -> {outdir / fit_name}")
    return 0


def _design_rows(args) -> tuple[list[dict], dict, list[str]]:
    quantity = args.quantity
    if quantity == "rayleigh":
        value = rayleigh_range(args.w0, args.wavelength)
        rows = [{"quantity": "rayleigh_range", "value": value, "unit": "m"}]
        params = {"w0": args.w0, "wavelength": args.wavelength}
        tail = ["--w0", _fmt(args.w0), "--wavelength", _fmt(args.wavelength)]
    elif quantity == "radius":
        value = beam_radius(args.z, args.w0, args.wavelength)
        rows = [
            {"quantity": "beam_radius", "value": value, "unit": "m"},
            {"quantity": "beam_radius_over_waist", "value": value / args.w0, "unit": "dimensionless"},
        ]
        params = {"z": args.z, "w0": args.w0, "wavelength": args.wavelength}
        tail = ["--z", _fmt(args.z), "--w0", _fmt(args.w0), "--wavelength", _fmt(args.wavelength)]
    elif quantity == "walkoff":
        if args.preset is not None:
            v_pump, v_signal = WALKOFF_PRESETS[args.preset]
        elif args.v_pump is not None and args.v_signal is not None:
            v_pump, v_signal = args.v_pump, args.v_signal
        else:
            raise ValueError("walkoff needs --preset or both --v-pump and --v-signal")
        value = walkoff_path(args.length, v_pump, v_signal)
        rows = [{"quantity": "walkoff_path", "value": value, "unit": "m"}]
        params = {"length": args.length, "v_pump": v_pump, "v_signal": v_signal}
        tail = [
            "--length", _fmt(args.length),
            "--v-pump", _fmt(v_pump),
            "--v-signal", _fmt(v_signal),
        ]
    else:  # compensation
        value = compensation_length(args.delay, args.dn_group)
        rows = [{"quantity": "compensation_length", "value": value, "unit": "m"}]
        params = {"delay": args.delay, "dn_group": args.dn_group}
        tail = ["--delay", _fmt(args.delay), "--dn-group", _fmt(args.dn_group)]
    return rows, params, tail


def _cmd_design(args) -> int:
    rows, params, argv_tail = _design_rows(args)
    text = json.dumps(rows, indent=2)
    print(text)
    if args.out is not None or os.environ.get(OUTDIR_ENV):
        outdir = _resolve_outdir(args)
        outdir.mkdir(parents=True, exist_ok=True)
        name = f"{args.prefix}_design.json"
        (outdir / name).write_bytes((text + "\n").encode("ascii"))
        argv = ["design", args.quantity, "--prefix", args.prefix, "--out", str(outdir)] + argv_tail
        _write_manifest(outdir, args.prefix, "design", {"quantity": args.quantity, **params}, None, [name], argv)
    return 0


def _add_common_output_options(parser, default_prefix: str) -> None:
    parser.add_argument("--out", help=f"output directory (default: ${OUTDIR_ENV} or '.')")
    parser.add_argument("--prefix", default=default_prefix, help="output file prefix")
    parser.add_argument(
        "--serial",
        action="store_true",
        help="force the serial reference mode (this implementation is always serial)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprsim",
        description="Simulate two-squeezer EPR-state synthesis, homodyne sweeps, "
        "maximum-likelihood tomography and source-design arithmetic.",
    )
    parser.add_argument("--version", action="version", version=f"eprsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("single-sweep", help="sample one squeezed mode under a swept LO phase")
    p.add_argument("--zeta", type=_nonneg_float, default=0.44, help="squeezing parameter")
    p.add_argument("--eta", type=_unit_interval, default=0.52, help="detection transmissivity")
    p.add_argument("--samples", type=_positive_int, default=200_000)
    p.add_argument("--theta0", type=float, default=0.0, help="LO phase at sample 0 (rad)")
    p.add_argument("--rate", type=float, default=None, help="LO phase rate (rad/sample); default spans 2 periods")
    p.add_argument("--window", type=_positive_int, default=2000, help="samples per variance bin")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--write-dataset", action="store_true", help="also write the raw samples CSV")
    _add_common_output_options(p, "single")
    p.set_defaults(handler=_cmd_single_sweep)

    p = sub.add_parser("epr-sweep", help="sample the entangled pipeline output under a swept LO phase")
    p.add_argument("--zeta", type=_nonneg_float, default=0.44)
    p.add_argument("--eta", type=_unit_interval, default=0.50)
    p.add_argument("--relative-phase", type=float, default=math.pi / 2, help="phase between the squeezed vacua (rad)")
    p.add_argument("--mismatch", type=_unit_interval, default=0.0, help="interference-imperfection admixture")
    p.add_argument("--samples", type=_positive_int, default=200_000)
    p.add_argument("--theta0", type=float, default=0.0, help="mode-1 LO phase at sample 0 (rad)")
    p.add_argument("--theta2", type=float, default=0.0, help="fixed mode-2 LO phase (rad)")
    p.add_argument("--rate", type=float, default=None, help="mode-1 LO phase rate (rad/sample)")
    p.add_argument("--window", type=_positive_int, default=2000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--write-dataset", action="store_true")
    _add_common_output_options(p, "epr")
    p.set_defaults(handler=_cmd_epr_sweep)

    p = sub.add_parser("tomography", help="maximum-likelihood reconstruction from a dataset CSV")
    p.add_argument("--input", required=True, help="dataset CSV (homodyne format)")
    p.add_argument("--cutoff", type=_positive_int, default=4, help="Fock cutoff per mode")
    p.add_argument("--max-iterations", type=_positive_int, default=2000)
    p.add_argument("--stop-tol", type=_positive_float, default=1e-8)
    p.add_argument("--dilution", type=_positive_float, default=1.0)
    p.add_argument("--ref-zeta", type=_nonneg_float, default=None, help="reference state squeezing")
    p.add_argument("--ref-eta", type=_unit_interval, default=None, help="reference state transmissivity")
    _add_common_output_options(p, "tomo")
    p.set_defaults(handler=_cmd_tomography)

    p = sub.add_parser("fit", help="fit a variance-trace CSV back to physical parameters")
    p.add_argument("--kind", choices=("single", "epr"), required=True)
    p.add_argument("--trace", help="trace CSV (kind=single)")
    p.add_argument("--trace-sum", help="sum-quadrature trace CSV (kind=epr)")
    p.add_argument("--trace-diff", help="difference-quadrature trace CSV (kind=epr)")
    _add_common_output_options(p, "fit")
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("design", help="beam-geometry and walk-off calculators")
    p.add_argument("quantity", choices=("rayleigh", "radius", "walkoff", "compensation"))
    p.add_argument("--w0", type=_length, help="waist radius (e.g. 12.4um)")
    p.add_argument("--wavelength", type=_length, help="wavelength (e.g. 390nm)")
    p.add_argument("--z", type=_length, help="distance from the waist (e.g. 0.72mm)")
    p.add_argument("--length", type=_length, help="crystal length (e.g. 1mm)")
    p.add_argument("--preset", choices=sorted(WALKOFF_PRESETS), help="built-in group-velocity pair")
    p.add_argument("--v-pump", type=_positive_float, help="pump group velocity (fraction of c)")
    p.add_argument("--v-signal", type=_positive_float, help="signal group velocity (fraction of c)")
    p.add_argument("--delay", type=_length, help="delay to compensate (e.g. 0.58mm)")
    p.add_argument("--dn-group", type=float, help="group-index difference of the compensator")
    _add_common_output_options(p, "design")
    p.set_defaults(handler=_cmd_design)

    return parser


def _check_design_args(args) -> str | None:
    needed = {
        "rayleigh": ("w0", "wavelength"),
        "radius": ("z", "w0", "wavelength"),
        "walkoff": ("length",),
        "compensation": ("delay", "dn_group"),
    }[args.quantity]
    missing = [name for name in needed if getattr(args, name) is None]
    if missing:
        flags = ", ".join("--" + name.replace("_", "-") for name in missing)
        return f"design {args.quantity} needs {flags}"
    return None


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    if args.command == "design":
        message = _check_design_args(args)
        if message:
            print(f"eprsim: {message}", file=sys.stderr)
            return 2
    try:
        return args.handler(args)
    except DataFormatError as exc:
        print(f"eprsim: data format error: {exc}", file=sys.stderr)
        return 3
    except (
        IllPosedFitError,
        IllConditionedDatumError,
        UnsupportedStateError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"eprsim: numerical failure: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"eprsim: invalid parameters: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"eprsim: I/O error: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    raise SystemExit(main(sys.argv[1:]))
