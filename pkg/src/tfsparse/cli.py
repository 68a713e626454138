"""Command-line interface.

Subcommands: ``gen`` (dataset), ``wvd``, ``af``, ``reconstruct``, ``eval``,
``render``.  All randomness is controlled by ``--seed``.  Errors exit
nonzero with a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import siggen, solver, tfcore
from .experiment import ExperimentSpec, rows_to_csv, run_experiment
from .measure import MaskSpec, MeasurementOp, apply_mask
from .render import render_pgm, render_png
from .threshnet import load_weights
from .uista import UistaModel, uista_reconstruct


def _parse_mask(text: str) -> MaskSpec:
    try:
        d_nu, d_tau = (int(part) for part in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"mask must look like 29x29, got {text!r}") from exc
    return MaskSpec(d_nu, d_tau)


def _mixture_from_args(args) -> siggen.MixtureSpec:
    if args.spec_json:
        spec = siggen.spec_from_json(json.loads(Path(args.spec_json).read_text()))
        if args.snr is not None:
            spec = siggen.MixtureSpec(spec.components, spec.n, spec.t0, args.snr)
        return spec
    if args.case is None:
        raise ValueError("provide --case or --spec-json")
    return siggen.case_spec(args.case, snr_db=args.snr)


def _add_signal_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--case", type=int, choices=range(1, 6), help="built-in mixture 1..5")
    p.add_argument("--spec-json", help="path to a mixture spec JSON file")
    p.add_argument("--snr", type=float, default=None, help="SNR in dB (omit for clean)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tfsparse", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate an observation dataset")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--snr-min", type=float, default=5.0)
    p.add_argument("--snr-max", type=float, default=25.0)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--t0", type=float, default=None, help="time offset in samples (default N/2)")
    p.add_argument("--mask", type=_parse_mask, default=MaskSpec(29, 29))

    p = sub.add_parser("wvd", help="Wigner-Ville distribution of a signal")
    _add_signal_args(p)
    p.add_argument("--out", required=True, help="output path for the raw matrix (+ .json sidecar)")
    p.add_argument("--render", help="also write a PGM image here")

    p = sub.add_parser("af", help="ambiguity function of a signal")
    _add_signal_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--render", help="also write a PGM image of |AF| here")

    p = sub.add_parser("reconstruct", help="reconstruct a TFD estimate")
    _add_signal_args(p)
    p.add_argument("--method", required=True, choices=["wvd", "l1app", "ista", "uista"])
    p.add_argument("--weights", help="weight bundle (.uwb), required for uista")
    p.add_argument("--mask", type=_parse_mask, default=None,
                   help="AF sampling rectangle, e.g. 29x29 (defaults: l1app 13x13, others 29x29)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="absolute regularization weight (default 0.01*||adjoint(a')||_inf)")
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.add_argument("--render", help="also write a PGM image here")
    p.add_argument("--trace-csv", help="write the objective trace CSV here (l1app/ista)")

    p = sub.add_parser("eval", help="Monte-Carlo NMSE sweep")
    p.add_argument("--exp-json", help="experiment spec as a JSON file")
    p.add_argument("--case", type=str, default=None, help="comma-separated cases, e.g. 1,2,3")
    p.add_argument("--snr", type=str, default=None, help="comma-separated SNR grid in dB")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--methods", type=str, default=None, help="comma-separated subset of wvd,l1app,ista,uista")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--weights", help="weight bundle for uista")
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("render", help="render a saved matrix to PGM/PNG")
    p.add_argument("--input", required=True, help="matrix file written by wvd/af/reconstruct")
    p.add_argument("--out", required=True, help="output PGM path")
    p.add_argument("--png", help="optional PNG output path")
    p.add_argument("--dynamic-range-db", type=float, default=20.0)

    return parser


def _cmd_gen(args) -> int:
    t0 = args.t0 if args.t0 is not None else args.n / 2
    manifest = siggen.make_dataset(args.count, (args.snr_min, args.snr_max), args.out,
                                   seed=args.seed, n=args.n, t0=t0, mask=args.mask)
    print(f"wrote {manifest['count']} samples to {args.out}")
    return 0


def _cmd_wvd(args) -> int:
    z = siggen.synthesize(_mixture_from_args(args), seed=args.seed)
    w = tfcore.wvd(z)
    tfcore.save_matrix(args.out, w, kind="tfd")
    if args.render:
        render_pgm(w, args.render)
    print(f"wrote WVD to {args.out}")
    return 0


def _cmd_af(args) -> int:
    z = siggen.synthesize(_mixture_from_args(args), seed=args.seed)
    a = tfcore.af_direct(z)
    tfcore.save_matrix(args.out, a, kind="af")
    if args.render:
        render_pgm(np.abs(a), args.render)
    print(f"wrote AF to {args.out}")
    return 0


def _cmd_reconstruct(args) -> int:
    spec = _mixture_from_args(args)
    z = siggen.synthesize(spec, seed=args.seed)
    n = spec.n
    trace = None
    if args.method == "wvd":
        est = tfcore.wvd(z)
    elif args.method == "uista":
        if not args.weights:
            raise ValueError("--method uista requires --weights")
        bundle = load_weights(args.weights)
        model = UistaModel.from_bundle(bundle, mask=args.mask or MaskSpec(29, 29))
        a_prime = apply_mask(tfcore.af_direct(z), model.op.mask)
        est = uista_reconstruct(model, a_prime)
    else:
        mask = args.mask or (solver.L1APP_MASK if args.method == "l1app" else MaskSpec(29, 29))
        op = MeasurementOp(n, mask)
        a_prime = apply_mask(tfcore.af_direct(z), mask)
        lam = args.lam if args.lam is not None else solver.default_lambda(op, a_prime)
        cfg = solver.SolverConfig(
            max_iters=args.max_iters, tol=args.tol,
            acceleration="fista" if args.method == "l1app" else "ista",
            trace=bool(args.trace_csv),
        )
        omega, trace = solver.ista_solve(solver.LassoProblem(op, a_prime, lam), cfg)
        est = omega.reshape((n, n), order="F")
    tfcore.save_matrix(args.out, est, kind="tfd")
    if args.trace_csv and trace is not None:
        solver.write_trace_csv(trace, args.trace_csv)
    if args.render:
        render_pgm(est, args.render)
    print(f"wrote {args.method} reconstruction to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    if args.exp_json:
        payload = json.loads(Path(args.exp_json).read_text())
        cases = payload.get("cases", [payload.get("case", 1)])
        snr_grid = [float(v) for v in payload["snr_grid"]]
        runs = int(payload["runs"])
        methods = list(payload["methods"])
        seed = int(payload.get("seed", 0))
        weights = payload.get("weights", args.weights)
    else:
        if not (args.case and args.snr and args.runs and args.methods):
            raise ValueError("provide --exp-json or all of --case/--snr/--runs/--methods")
        cases = [int(c) for c in args.case.split(",")]
        snr_grid = [float(v) for v in args.snr.split(",")]
        runs = args.runs
        methods = args.methods.split(",")
        seed = args.seed
        weights = args.weights

    all_rows = []
    for case in cases:
        spec = ExperimentSpec(case=case, snr_grid=snr_grid, runs=runs, methods=methods, seed=seed)
        all_rows.extend(run_experiment(spec, weights=weights))
    Path(args.out).write_text(rows_to_csv(all_rows))
    print(f"wrote {len(all_rows)} rows to {args.out}")
    return 0


def _cmd_render(args) -> int:
    mat, sidecar = tfcore.load_matrix(args.input)
    data = np.abs(mat) if sidecar.get("complex", False) else mat
    render_pgm(data, args.out, args.dynamic_range_db)
    if args.png:
        render_png(data, args.png, args.dynamic_range_db)
    print(f"rendered {args.input} to {args.out}")
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "wvd": _cmd_wvd,
    "af": _cmd_af,
    "reconstruct": _cmd_reconstruct,
    "eval": _cmd_eval,
    "render": _cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
