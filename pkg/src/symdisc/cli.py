"""Command-line interface: ``symdisc <command> [options]``.

Exit status is 0 on success and 2 on configuration or domain errors.
"""

import argparse
import json
import os
import sys

import numpy as np

from ._rng import derive_seed
from ._validation import ConfigError, DomainError
from .campaign import (MODES, CampaignConfig, aggregate, emit_reports, load_reports,
                       reference_campaign_config, run_campaign, run_set)
from .me_measure import optimality_certificate, outcome_table, p_correct
from .optics import (IntensityPattern, NoiseModel, OpticalGeometry, capture_pattern,
                     detector_positions, state_transmissions)
from .qudit_core import (CascadeParams, SymmetricSetSpec, cascade_coeffs,
                         hyperspherical_coeffs, make_symmetric_set, random_coeffs)
from .tomography import (fidelity, intensities_to_probabilities, mle_refine,
                         mub_linear_inversion, phase_retrieval)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _dump(obj, out=None, filename=None):
    text = json.dumps(obj, indent=1, sort_keys=True) + "\n"
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, filename), "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _matrix_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in np.atleast_2d(m)]


def _spec_from_args(args):
    if args.config:
        doc = _load_json(args.config)
        D, N = int(doc["D"]), int(doc["N"])
        if "coefficients" in doc:
            return SymmetricSetSpec.normalized(D, N, [float(v) for v in doc["coefficients"]])
        param = doc.get("parametrization", {})
        kind = param.get("kind")
        args = argparse.Namespace(
            D=D, N=N, coeffs=None,
            angles=param.get("angles") if kind == "hyperspherical" else None,
            cascade=(param["j0"], param["alpha"]) if kind == "cascade" else None,
            random=param.get("seed", 0) if kind == "random" else None,
        )
    if args.D is None or args.N is None:
        raise ConfigError("give --D and --N (or --config)")
    if args.coeffs:
        c = args.coeffs
    elif args.angles:
        c = hyperspherical_coeffs(args.angles)
    elif args.cascade:
        c = cascade_coeffs(args.D, CascadeParams(int(args.cascade[0]), float(args.cascade[1])))
    elif args.random is not None:
        c = random_coeffs(args.D, args.random)
    else:
        raise ConfigError("choose one of --coeffs, --angles, --cascade, --random")
    if len(c) != args.D:
        raise ConfigError(f"parametrization gives {len(c)} coefficients for D={args.D}")
    return SymmetricSetSpec.normalized(args.D, args.N, c)


def cmd_states(args):
    spec = _spec_from_args(args)
    _dump({"D": spec.D, "N": spec.N,
           "coefficients": [format(v, ".17g") for v in spec.c],
           "states": _matrix_json(make_symmetric_set(spec))}, args.out, "states.json")


def cmd_measure(args):
    spec = _spec_from_args(args)
    pc = p_correct(spec)
    cert = optimality_certificate(spec)
    table = outcome_table(spec)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "table.csv"), "w") as fh:
            fh.write(table.to_csv())
    _dump({"D": spec.D, "N": spec.N,
           "p_corr_trace": pc.trace_form, "p_corr_closed": pc.closed_form, "p_err": pc.p_err,
           "certificate": {"min_eigenvalue": cert.min_eigenvalue, "passed": cert.passed,
                           "tol": cert.tol}}, args.out, "measure.json")


def _geometry(args):
    return OpticalGeometry.from_dict(_load_json(args.geometry)) if args.geometry else OpticalGeometry()


def _noise(args):
    if args.noise:
        return NoiseModel.from_dict(_load_json(args.noise))
    if args.calibrated_noise:
        return NoiseModel.calibrated()
    return NoiseModel()


def cmd_simulate(args):
    spec = _spec_from_args(args)
    mode = args.mode or "optical-pixel"
    g, noise = _geometry(args), _noise(args)
    report = run_set(spec, mode, g, noise, args.seed, tomography=args.tomography)
    if args.out and mode != "ideal":
        os.makedirs(args.out, exist_ok=True)
        readout = "point" if mode == "optical-point" else "pixel"
        include = detector_positions(spec.N, g) if readout == "point" else None
        for j in range(spec.N):
            pattern = capture_pattern(state_transmissions(spec, j), g,
                                      noise.with_seed(derive_seed(args.seed, j)),
                                      readout=readout, include=include)
            with open(os.path.join(args.out, f"pattern_{j:02d}.csv"), "w") as fh:
                fh.write(pattern.to_csv())
    _dump(report.to_dict(), args.out, "report.json")


def cmd_tomo(args):
    if args.mub:
        p = intensities_to_probabilities(np.asarray(args.mub, dtype=float).reshape(3, 2))
        linear = mub_linear_inversion(p)
        mle = mle_refine(p, linear)
        result = {"probabilities": p.tolist(), "linear": _matrix_json(linear),
                  "mle": _matrix_json(mle.rho), "converged": mle.converged,
                  "log_likelihood": mle.log_likelihood}
        if args.target:
            target = np.asarray(args.target, dtype=float).reshape(-1, 2) @ np.array([1, 1j])
            result["fidelity"] = fidelity(mle.rho, target)
    elif args.pattern and args.image:
        with open(args.pattern) as fh:
            pattern = IntensityPattern.from_csv(fh.read())
        res = phase_retrieval(args.image, pattern, _geometry(args), n_restarts=args.restarts,
                              seed=args.seed)
        result = {"estimate": _matrix_json(res.estimate)[0], "phases": res.phases.tolist(),
                  "residual": res.residual, "scale": res.scale,
                  "restarts_used": res.restarts_used, "underdetermined": res.underdetermined,
                  "candidates": [c.tolist() for c in res.candidates]}
    else:
        raise ConfigError("tomo needs --mub, or --pattern with --image")
    _dump(result, args.out, "tomo.json")


def _campaign_config(args):
    if args.preset == "reference":
        cfg = reference_campaign_config(mode=args.mode or "ideal")
    elif args.config:
        cfg = CampaignConfig.from_dict(_load_json(args.config))
        if args.mode:
            for e in cfg.entries:
                e.mode = args.mode
    else:
        raise ConfigError("campaign needs --config or --preset reference")
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.out:
        cfg.output_dir = args.out
    return cfg


def cmd_campaign(args):
    cfg = _campaign_config(args)
    reports = run_campaign(cfg, workers=args.workers)
    summary = aggregate(reports, bin_width=args.bin_width)
    emit_reports(summary, reports, cfg.output_dir)
    sys.stdout.write(json.dumps({"n_sets": summary["n_sets"], "n_states": summary["n_states"],
                                 "rmsd": summary["rmsd"], "output_dir": cfg.output_dir},
                                sort_keys=True) + "\n")


def cmd_report(args):
    if not args.input:
        raise ConfigError("report needs --in <campaign output dir>")
    reports = load_reports(args.input)
    summary = aggregate(reports, bin_width=args.bin_width)
    emit_reports(summary, [] if args.out is None else reports, args.out or args.input)
    sys.stdout.write(json.dumps({"n_sets": summary["n_sets"], "rmsd": summary["rmsd"]},
                                sort_keys=True) + "\n")


def _add_common(p):
    p.add_argument("--config", help="JSON document for this command")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed")
    p.add_argument("--mode", choices=MODES)


def _add_spec(p):
    p.add_argument("--D", type=int)
    p.add_argument("--N", type=int)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--coeffs", type=float, nargs="+")
    grp.add_argument("--angles", type=float, nargs="+", help="hyperspherical angles (rad)")
    grp.add_argument("--cascade", nargs=2, metavar=("J0", "ALPHA"))
    grp.add_argument("--random", type=int, metavar="SEED")


def _add_optics(p):
    p.add_argument("--geometry", help="geometry JSON (lambda, f, d, a, L, pixel_pitch, window)")
    p.add_argument("--noise", help="noise model JSON")
    p.add_argument("--calibrated-noise", action="store_true", help="use the calibrated noise defaults")


def build_parser():
    parser = argparse.ArgumentParser(prog="symdisc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("states", help="emit coefficients and state vectors")
    _add_common(p)
    _add_spec(p)
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("measure", help="theory table, success probability, certificate")
    _add_common(p)
    _add_spec(p)
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("simulate", help="optical pipeline for one set")
    _add_common(p)
    _add_spec(p)
    _add_optics(p)
    p.add_argument("--tomography", choices=("truth", "retrieval"))
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("tomo", help="state characterization")
    _add_common(p)
    p.add_argument("--mub", type=float, nargs=6, metavar="I",
                   help="intensities I00 I01 I10 I11 I20 I21")
    p.add_argument("--target", type=float, nargs="+",
                   help="target qubit as re0 im0 re1 im1")
    p.add_argument("--pattern", help="focal-plane pattern CSV (x_meters,intensity)")
    p.add_argument("--image", type=float, nargs="+", help="image-plane slit intensities")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--geometry")
    p.set_defaults(func=cmd_tomo)

    p = sub.add_parser("campaign", help="run a campaign config")
    _add_common(p)
    p.add_argument("--preset", choices=("reference",))
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--bin-width", type=float, default=0.0025)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("report", help="aggregate stored per-set reports")
    _add_common(p)
    p.add_argument("--in", dest="input")
    p.add_argument("--bin-width", type=float, default=0.0025)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", None) is None and args.command not in ("campaign",):
        args.seed = 0
    try:
        args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"symdisc: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
