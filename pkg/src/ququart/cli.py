"""Command-line front end.

    ququart [--seed N] [--config FILE] [--output FILE] [--figure FILE] COMMAND ...

Commands: ``state``, ``tomo simulate``, ``tomo reconstruct``, ``scan``, ``qkd``.
Angles are given in degrees. A config file is a JSON object whose keys are
option names of the chosen command (``thickness_mm`` or ``thickness-mm``);
options given on the command line win over the file. Unknown keys are
rejected.

Exit status: 0 success, 1 usage error, 2 bad data or violated contract.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import qkd as qkd_mod
from .core import (PHI_MINUS, PHI_PLUS, PSI_MINUS, PSI_PLUS, QuquartState, coherence_matrix,
                   polarization_degree_p4, random_pure_state, separability_defect, state_from_json, stokes)
from .errors import QuquartError
from .optics import WavePlate, prepare_psi_I, prepare_psi_II
from .reconstruct import DEFAULT_STARTS, GRAD_TOL, MAX_ITER, reconstruct
from .tomography import (DEFAULT_LAMBDAS_P1, DEFAULT_LAMBDAS_P2, DEFAULT_P2_THETAS, protocol2_grid,
                         read_records, records_to_dict, run_experiment, write_records)

EXIT_USAGE = 1
EXIT_DATA = 2

_BELL = {"phi+": PHI_PLUS, "phi-": PHI_MINUS, "psi+": PSI_PLUS, "psi-": PSI_MINUS}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).replace(" ", "").split(",") if x != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    v = _floats(text)
    if len(v) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return (v[0], v[1])


def _add_state_source(p, lambdas_help):
    g = p.add_argument_group("state")
    g.add_argument("--amps", type=_floats, help="8 reals: Re c1, Im c1, ..., Re c4, Im c4")
    g.add_argument("--normalize", action="store_true", help="rescale --amps to unit norm")
    g.add_argument("--state-file", help="JSON state record")
    g.add_argument("--bell", choices=sorted(_BELL))
    g.add_argument("--random-state", action="store_true", help="Haar-random state from --seed")
    g.add_argument("--psi1", action="store_true", help="image of |V1V2> under one plate")
    g.add_argument("--thickness-mm", type=float, default=0.315)
    g.add_argument("--alpha-deg", type=float, default=0.0, help="plate axis angle from the vertical")
    g.add_argument("--axis-sense", choices=("normal", "crossed"), default="normal")
    g.add_argument("--psi2", action="store_true", help="two-crystal state (|c1|, 0, 0, |c4| e^{-i phi})")
    g.add_argument("--amp-ratio", type=float, default=float(np.sqrt(0.5)), help="|c1| for --psi2")
    g.add_argument("--phi14-deg", type=float, default=0.0)
    g.add_argument("--lambdas", type=_pair, default=None, help=lambdas_help)


def build_parser(suppress: bool = False) -> argparse.ArgumentParser:
    kw = {"argument_default": argparse.SUPPRESS} if suppress else {}
    top = _Parser(prog="ququart", description="Polarization ququart toolkit.", **kw)
    top.add_argument("--seed", type=int, default=0)
    top.add_argument("--config", help="JSON file with option values")
    top.add_argument("--output", help="write the main result to this file")
    top.add_argument("--figure", help="also render a PNG figure to this file")
    sub = top.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("state", help="prepare a state and print its invariants", **kw)
    _add_state_source(p, "two wavelengths in nm (default 702,605)")

    p = sub.add_parser("tomo", help="simulate or reconstruct tomography records", **kw)
    tsub = p.add_subparsers(dest="tomo_command", parser_class=_Parser)
    tsub.required = True
    s = tsub.add_parser("simulate", help="write a records file", **kw)
    _add_state_source(s, "wavelengths in nm (default 702,605 for P1, 667,635 for P2)")
    s.add_argument("--protocol", choices=("P1", "P2"), default="P1")
    s.add_argument("--brightness", type=float, default=1e4, help="coincidences per second at unit rate")
    s.add_argument("--exposure", type=float, default=1.0, help="seconds per setting")
    s.add_argument("--expected-total", type=float, default=None,
                   help="set the brightness so that the expected counts sum to this")
    s.add_argument("--visibility", type=float, default=1.0)
    s.add_argument("--noiseless", action="store_true", help="exact expected counts, no Poisson draw")
    s.add_argument("--thetas", type=_floats, default=list(DEFAULT_P2_THETAS), help="P2 first-plate angles")
    s.add_argument("--phi-count", type=int, default=36, help="P2 second-plate angles over [0, 180)")
    s.add_argument("--plates-mm", type=_pair, default=(0.821, 0.715), help="P2 plate thicknesses")
    r = tsub.add_parser("reconstruct", help="estimate the state from a records file", **kw)
    r.add_argument("--records", required=not suppress)
    r.add_argument("--reference-amps", type=_floats, help="8 reals of a reference state")
    r.add_argument("--reference-file", help="JSON state record of a reference state")
    r.add_argument("--starts", type=int, default=DEFAULT_STARTS)
    r.add_argument("--tol", type=float, default=GRAD_TOL)
    r.add_argument("--max-iter", type=int, default=MAX_ITER)
    r.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("scan", help="tilt scan of a crossed dichroic plate pair", **kw)
    p.add_argument("--thick-mm", type=float, default=3.716)
    p.add_argument("--thin-mm", type=float, default=0.315)
    p.add_argument("--lambdas", type=_pair, default=(702.0, 605.0))
    p.add_argument("--theta-min", type=float, default=0.0)
    p.add_argument("--theta-max", type=float, default=15.0)
    p.add_argument("--step", type=float, default=0.05)

    p = sub.add_parser("qkd", help="simulate a key-distribution session", **kw)
    p.add_argument("--n", type=int, default=10000)
    p.add_argument("--bases", default="I,II,III")
    p.add_argument("--depolarize", type=float, default=0.0)
    p.add_argument("--dark-rate", type=float, default=0.0)
    p.add_argument("--eve", action="store_true", help="intercept-resend eavesdropper")
    p.add_argument("--transcript", help="per-round JSON lines file")
    return top


# Config handling -----------------------------------------------------------

def _suppress_defaults(parser):
    # explicit defaults beat argument_default, so clear them to see only what was typed
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for child in action.choices.values():
                _suppress_defaults(child)
        elif action.dest != "help":
            action.default = argparse.SUPPRESS
    return parser


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    explicit = vars(_suppress_defaults(build_parser(suppress=True)).parse_args(argv))
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        known = set(vars(args)) - {"command", "tomo_command", "config"}
        for key, value in cfg.items():
            dest = key.replace("-", "_")
            if dest not in known:
                raise UsageError(f"unknown config key {key!r} for this command")
            if dest not in explicit:
                if dest in ("lambdas", "plates_mm") and value is not None:
                    value = tuple(float(x) for x in value)
                setattr(args, dest, value)
    return args


# Helpers -------------------------------------------------------------------

def _state_from_args(args, default_lambdas) -> QuquartState:
    lambdas = tuple(args.lambdas) if args.lambdas else default_lambdas
    chosen = [name for name in ("amps", "state_file", "bell") if getattr(args, name, None)]
    chosen += [name for name in ("random_state", "psi1", "psi2") if getattr(args, name, False)]
    if len(chosen) != 1:
        raise UsageError("give exactly one of --amps, --state-file, --bell, --random-state, --psi1, --psi2")
    how = chosen[0]
    if how == "amps":
        if len(args.amps) != 8:
            raise UsageError(f"--amps needs 8 numbers, got {len(args.amps)}")
        return QuquartState.from_reals(args.amps, normalize=args.normalize)
    if how == "state_file":
        with open(args.state_file) as fh:
            return state_from_json(fh.read())
    if how == "bell":
        return _BELL[args.bell]
    if how == "random_state":
        return random_pure_state(args.seed)
    if how == "psi1":
        plate = WavePlate(args.thickness_mm, np.radians(args.alpha_deg), axis_sense=args.axis_sense)
        return prepare_psi_I(plate, *lambdas)
    return prepare_psi_II(args.amp_ratio, np.radians(args.phi14_deg))


def _fmt(z: complex) -> str:
    return f"{z.real:+.6f}{z.imag:+.6f}i"


def _emit(text: str, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# Commands ------------------------------------------------------------------

def cmd_state(args) -> int:
    st = _state_from_args(args, DEFAULT_LAMBDAS_P1)
    s = stokes(st)
    k = coherence_matrix(st).matrix
    lines = ["quantity\tvalue"]
    for i, z in enumerate(st.c, 1):
        lines.append(f"c{i}\t{_fmt(z)}")
    lines.append("stokes\t" + ",".join(f"{x:.6f}" for x in s))
    lines.append(f"P4\t{polarization_degree_p4(st):.6f}")
    lines.append(f"separability_defect\t{separability_defect(st):.6f}")
    for i in range(4):
        lines.append(f"K4_row{i + 1}\t" + ",".join(_fmt(z) for z in k[i]))
    print("\n".join(lines))
    if args.output:
        doc = {"amplitudes": st.to_reals(), "stokes": list(s), "p4": polarization_degree_p4(st),
               "separability_defect": separability_defect(st),
               "coherence_matrix": [[[z.real, z.imag] for z in row] for row in k]}
        _emit(json.dumps(doc, indent=1) + "\n", args.output)
    return 0


def cmd_simulate(args) -> int:
    default = DEFAULT_LAMBDAS_P1 if args.protocol == "P1" else DEFAULT_LAMBDAS_P2
    lambdas = tuple(args.lambdas) if args.lambdas else default
    st = _state_from_args(args, lambdas)
    settings = None
    if args.protocol == "P2":
        plates = (WavePlate(args.plates_mm[0]), WavePlate(args.plates_mm[1]))
        settings = protocol2_grid(args.thetas, args.phi_count, plates)
    rs = run_experiment(st, args.protocol, brightness=args.brightness, exposure=args.exposure, seed=args.seed,
                        noiseless=args.noiseless, settings=settings, lambdas=lambdas,
                        visibility=args.visibility, expected_total=args.expected_total)
    rs.meta = {"true_state": st.to_reals()}
    if args.output:
        write_records(rs, args.output)
    else:
        print(json.dumps(records_to_dict(rs), indent=1))
    print(f"protocol\trecords\ttotal_counts\n{rs.protocol}\t{len(rs)}\t{rs.counts.sum():.6g}",
          file=sys.stdout if args.output else sys.stderr)
    if args.figure and rs.protocol == "P2":
        from .plotting import plot_protocol2
        plot_protocol2(rs, args.figure)
    return 0


def cmd_reconstruct(args) -> int:
    rs = read_records(args.records)
    ref = None
    if args.reference_amps:
        ref = QuquartState.from_reals(args.reference_amps)
    elif args.reference_file:
        with open(args.reference_file) as fh:
            ref = state_from_json(fh.read())
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = reconstruct(rs, reference=ref, starts=args.starts, seed=args.seed, gtol=args.tol,
                          maxiter=args.max_iter, workers=args.workers)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    lines = ["quantity\tvalue", f"protocol\t{rs.protocol}", f"records\t{len(rs)}"]
    for i, z in enumerate(res.estimate.c, 1):
        lines.append(f"c{i}\t{_fmt(z)}")
    if res.fidelity is not None:
        lines.append(f"fidelity\t{res.fidelity:.9f}")
    lines += [f"scale\t{res.scale:.6g}", f"log_likelihood\t{res.log_likelihood:.6f}",
              f"residual\t{res.residual:.6f}", f"iterations\t{res.iterations}",
              f"converged\t{str(res.converged).lower()}", f"method\t{res.method}"]
    print("\n".join(lines))
    if args.output:
        _emit(res.to_json() + "\n", args.output)
    if args.figure and rs.protocol == "P2":
        from .plotting import plot_protocol2
        model = res.scale * np.abs(rs.vectors() @ res.estimate.c) ** 2
        plot_protocol2(rs, args.figure, model=model)
    return 0


def cmd_scan(args) -> int:
    if args.step <= 0 or args.theta_max < args.theta_min:
        raise UsageError("need --step > 0 and --theta-max >= --theta-min")
    plates = qkd_mod.dichroic_pair(args.thick_mm, args.thin_mm)
    n = int(round((args.theta_max - args.theta_min) / args.step)) + 1
    theta = args.theta_min + args.step * np.arange(n)
    scan = qkd_mod.tilt_scan(plates, *args.lambdas, theta)
    t_star, c_star = qkd_mod.best_tilt(plates, *args.lambdas, args.theta_min, args.theta_max, args.step)
    rows = ["theta_deg,singles,coincidence"]
    rows += [f"{t:.6f},{s:.9f},{c:.9f}" for t, s, c in zip(theta, scan.singles, scan.coincidence)]
    csv = "\n".join(rows) + "\n"
    maxima = ",".join(f"{t:.2f}" for t in scan.theta_deg[scan.coincidence_maxima()])
    summary = f"# theta_star_deg={t_star:.6f} coincidence={c_star:.6f} local_maxima_deg={maxima or 'none'}\n"
    if args.output:
        _emit(csv, args.output)
        sys.stdout.write(summary)
    else:
        sys.stdout.write(summary + csv)
    if args.figure:
        from .plotting import plot_tilt_scan
        plot_tilt_scan(scan, args.figure, theta_star=t_star)
    return 0


def cmd_qkd(args) -> int:
    bases = [b.strip().upper() for b in str(args.bases).split(",") if b.strip()]
    bad = [b for b in bases if b not in qkd_mod.OPERATIONAL_BASES]
    if not bases or bad or len(set(bases)) != len(bases):
        raise UsageError(f"--bases must be a nonempty subset of I,II,III without repeats, got {args.bases!r}")
    eve = qkd_mod.intercept_resend(bases) if args.eve else None
    res = qkd_mod.run_session(args.n, bases, p=args.depolarize, dark_rate=args.dark_rate, seed=args.seed,
                              eve=eve, transcript=bool(args.transcript))
    lines = ["sent\tsifted\tqber", f"{res.sent}\t{res.sifted}\t{res.qber:.4f}", "",
             "basis\tsent\tsifted\terrors\t" + "\t".join(qkd_mod.DETECTOR_PAIRS)]
    for b, row in res.per_basis.items():
        lines.append(f"{b}\t{row['sent']}\t{row['sifted']}\t{row['errors']}\t"
                     + "\t".join(str(x) for x in row["outcomes"]))
    print("\n".join(lines))
    if args.output:
        _emit(json.dumps(res.to_dict(), indent=1) + "\n", args.output)
    if args.transcript:
        qkd_mod.write_transcript(res, args.transcript)
    return 0


def main(argv=None) -> int:
    try:
        args = _parse(argv)
        if args.command == "state":
            return cmd_state(args)
        if args.command == "tomo":
            return cmd_simulate(args) if args.tomo_command == "simulate" else cmd_reconstruct(args)
        if args.command == "scan":
            return cmd_scan(args)
        return cmd_qkd(args)
    except UsageError as exc:
        print(f"ququart: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuquartError, OSError) as exc:
        print(f"ququart: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    raise SystemExit(main())
