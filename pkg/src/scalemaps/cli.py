"""Command-line frontend: phase-diagram scans, single-channel certification,
Choi analysis, the two-Planck-constant overlap, and K-matrix reduction.

Exit codes: 0 success / verdicts consistent, 2 analytic-numeric mismatch,
64 usage error.  All numerics delegate to the library modules; the frontend
only parses, formats, and writes files.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .certify import choi, planck_overlap
from .channels import (
    ChannelParseError,
    collapse,
    format_channel,
    parse_channel,
    reduce_scaling_matrix,
)
from .fock import load_state, make_state
from .phasediagram import (
    SweepConfig,
    SweepMismatchError,
    classify_general,
    numeric_noisy_verdict,
    numeric_scaling_verdict,
    sweep,
    write_records_csv,
    write_result_json,
)
from .certify import Witness, positivity_probe, standard_probes
from .quasiprob import DivergentReconstruction, QuadratureUnderresolved

EXIT_OK = 0
EXIT_MISMATCH = 2
EXIT_USAGE = 64

_RANGE_RE = re.compile(r"^-?\d+(\.\d+)?(e-?\d+)?:-?\d+(\.\d+)?(e-?\d+)?:\d+$")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits with the scriptable usage code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parse_range(text: str):
    """Range grammar lo:hi:count, endpoints included."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:count, got {text!r}")
    try:
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if count < 2:
        raise argparse.ArgumentTypeError("range needs count >= 2")
    return (lo, hi, count)


def _glue_negative_values(argv, flags):
    """Join '--s -1:1:21' into '--s=-1:1:21' so argparse does not read the
    leading minus as an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in flags and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            nxt = argv[i + 1]
            if _RANGE_RE.match(nxt) or re.match(r"^-\d+(\.\d+)?(e-?\d+)?$", nxt):
                out.append(f"{tok}={nxt}")
                i += 2
                continue
        out.append(tok)
        i += 1
    return out


def _build_parser() -> _Parser:
    parser = _Parser(prog="scalemaps", description=__doc__)
    parser.add_argument("--version", action="version", version=f"scalemaps {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=40, help="Fock truncation dimension")
    common.add_argument("--choi-dim", type=int, default=12, help="Choi probe dimension")
    common.add_argument("--radial-nodes", type=int, default=None, help="radial quadrature base nodes")
    common.add_argument("--cutoff", type=float, default=None, help="radial cutoff override")
    common.add_argument("--tol", type=float, default=None, help="witness tolerance override")
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--out", type=str, default=None, help="output file path")
    common.add_argument("--format", choices=("csv", "json"), default="csv")

    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", parents=[common], help="phase-diagram sweeps")
    scan.add_argument("family", choices=("scaling", "att", "amp"))
    scan.add_argument("--s", type=_parse_range, help="ordering range lo:hi:count")
    scan.add_argument("--a", type=_parse_range, help="scale range lo:hi:count")
    scan.add_argument("--kappa", type=_parse_range, help="kappa range lo:hi:count")
    scan.add_argument("--b", type=_parse_range, help="noise range lo:hi:count")
    scan.add_argument("--band", type=float, default=0.02, help="boundary band width")
    scan.add_argument("--subsample", type=int, default=4, help="full certification stride")

    cert = sub.add_parser("certify", parents=[common], help="classify one channel")
    cert.add_argument("--channel", required=True, help="channel grammar, e.g. scale:0:0.5")
    cert.add_argument("--state", default="vacuum", help="probe state descriptor")
    cert.add_argument("--state-file", default=None, help="JSON state file (overrides --state)")

    choi_p = sub.add_parser("choi", parents=[common], help="Choi spectrum of a channel")
    choi_p.add_argument("--channel", required=True)

    planck = sub.add_parser("planck", parents=[common], help="two-convention overlap value")
    planck.add_argument("--a2", type=float, required=True, help="ratio of the two scale conventions")

    reduce_p = sub.add_parser("reduce-k", parents=[common], help="symplectic reduction of a 2x2 matrix")
    reduce_p.add_argument("--matrix", required=True, help="k00,k01,k10,k11")
    return parser


def _cmd_scan(args) -> int:
    if args.family == "scaling":
        if args.s is None or args.a is None:
            print("scan scaling requires --s and --a ranges", file=sys.stderr)
            return EXIT_USAGE
        axis1, axis2 = args.s, args.a
    else:
        if args.kappa is None or args.b is None:
            print(f"scan {args.family} requires --kappa and --b ranges", file=sys.stderr)
            return EXIT_USAGE
        axis1, axis2 = args.kappa, args.b
    config = SweepConfig(
        kind=args.family,
        axis1=axis1,
        axis2=axis2,
        band_width=args.band,
        dim=args.dim,
        choi_dim=args.choi_dim,
        subsample=args.subsample,
        seed=args.seed,
        jobs=args.jobs,
    )
    try:
        result = sweep(config)
    except SweepMismatchError as exc:
        print(f"MISMATCH {json.dumps(exc.descriptor, sort_keys=True)}")
        return EXIT_MISMATCH
    if args.out:
        if args.format == "csv":
            write_records_csv(result.records, args.out)
        else:
            write_result_json(result, args.out)
    print(json.dumps(result.summary, sort_keys=True))
    return EXIT_OK


def _cmd_certify(args) -> int:
    try:
        spec = parse_channel(args.channel)
    except ChannelParseError as exc:
        print(f"channel parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        state = load_state(args.state_file) if args.state_file else make_state(args.state, args.dim)
    except (ValueError, OSError) as exc:
        print(f"state error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    analytic = classify_general(spec)
    action = collapse(spec)
    tol = args.tol if args.tol is not None else 1e-7
    witness = positivity_probe(spec, [(state.label, state)], tol_pos=tol)
    if witness is None:
        # widen the hunt with the standard battery so CP claims mean something
        witness = positivity_probe(spec, standard_probes(args.dim, seed=args.seed), tol_pos=tol)
    if witness is not None:
        numeric = "NP"
    elif abs(action.scale) <= 1e-12:
        width = action.noise
        if abs(width - 1.0) <= 1e-9:
            numeric = "pinch_vacuum"
        elif width > 1.0:
            numeric = "CP"
        else:
            numeric = "pinch_NP"
    else:
        family = "att" if abs(action.scale) <= 1.0 else "amp"
        numeric, _, _, _ = numeric_noisy_verdict(family, action.scale, action.noise,
                                                 dim=args.dim, choi_dim=args.choi_dim,
                                                 seed=args.seed)
        if (numeric == "CP" and abs(abs(action.scale) - 1.0) <= 1e-12
                and abs(action.noise) <= 1e-9):
            numeric = "CP_unitary"
    line = (
        f"{format_channel(spec)} on {state.label}: analytic={analytic} numeric={numeric}"
    )
    if witness is not None:
        line += f" witness={witness.kind} value={witness.value:.6g}"
    print(line)
    payload = {
        "channel": format_channel(spec),
        "state": state.label,
        "scale": action.scale,
        "noise": action.noise,
        "analytic": analytic,
        "numeric": numeric,
        "witness": None if witness is None else asdict(witness),
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, sort_keys=True)
    else:
        print(json.dumps(payload, sort_keys=True))
    return EXIT_OK if numeric == analytic else EXIT_MISMATCH


def _cmd_choi(args) -> int:
    try:
        spec = parse_channel(args.channel)
    except ChannelParseError as exc:
        print(f"channel parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cm = choi(spec, args.choi_dim if args.choi_dim else 12)
    except DivergentReconstruction as exc:
        print(f"divergent: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    summary = cm.summary()
    print(
        f"{summary['channel']}: choi min eigenvalue {summary['min_eigenvalue']:.6g} "
        f"(probe dim {summary['probe_dim']}, trace {summary['trace']:.6g})"
    )
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(summary, fh, sort_keys=True)
    else:
        print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def _cmd_planck(args) -> int:
    value = planck_overlap(args.a2, dim=max(8, args.dim // 4))
    print(f"{value:.6f}")
    if args.out:
        with open(args.out, "w") as fh:
            json.dump({"a2": args.a2, "overlap": value}, fh)
    return EXIT_OK


def _cmd_reduce_k(args) -> int:
    try:
        entries = [float(x) for x in args.matrix.split(",")]
    except ValueError:
        print(f"bad matrix {args.matrix!r}", file=sys.stderr)
        return EXIT_USAGE
    if len(entries) != 4:
        print("matrix needs 4 comma-separated entries", file=sys.stderr)
        return EXIT_USAGE
    try:
        red = reduce_scaling_matrix(np.array(entries).reshape(2, 2))
    except ValueError as exc:
        print(f"reduction error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    target = "a*I" if red.sign > 0 else "a*sigma3"
    print(f"a={red.a:.12g} sign={red.sign:+d} target={target} residual={red.residual:.3g}")
    print(f"S1={red.s1.tolist()}")
    print(f"S2={red.s2.tolist()}")
    payload = {
        "a": red.a,
        "sign": red.sign,
        "s1": red.s1.tolist(),
        "s2": red.s2.tolist(),
        "residual": red.residual,
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(payload, fh, sort_keys=True)
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    argv = _glue_negative_values(argv, {"--s", "--a", "--kappa", "--b", "--cutoff", "--tol"})
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "scan":
            return _cmd_scan(args)
        if args.command == "certify":
            return _cmd_certify(args)
        if args.command == "choi":
            return _cmd_choi(args)
        if args.command == "planck":
            return _cmd_planck(args)
        if args.command == "reduce-k":
            return _cmd_reduce_k(args)
    except (DivergentReconstruction, QuadratureUnderresolved) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    parser.print_usage(sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
