"""Command-line interface.

Exit codes: 0 success, 1 domain violation (invalid POVM, dimension mismatch,
non-Hadamard input), 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import asdict

from . import __version__, general_bound, mub, optimizer, qubit
from .instruments import error_disturbance, induced_joint_povm
from .measurement import BasisPair, PovmError, povm_violations
from .metrics import Metric, joint_errors
from .operators import OperatorError
from .serialization import (
    FormatError,
    instrument_from_json,
    load_json,
    matrix_from_json,
    pair_from_json,
    povm_elements_from_json,
    povm_from_json,
    povm_to_json,
)

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def default_seed() -> int:
    try:
        return int(os.environ.get("EDR_SEED", "0"))
    except ValueError as exc:
        raise UsageError("EDR_SEED must be an integer") from exc


def _manifest(args: argparse.Namespace, started: float, inputs: list[str], config: dict) -> dict:
    return {
        "command": args.command,
        "inputs": inputs,
        "config": config,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "wall_time": time.time() - started,
    }


def _emit(doc: dict) -> None:
    print(json.dumps(doc, indent=2, allow_nan=False))


def _load(path: str):
    try:
        return load_json(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed JSON in {path}: {exc}") from exc


def _permutation(text: str | None, n: int) -> list[int] | None:
    if text is None:
        return None
    try:
        perm = [int(x) - 1 for x in text.split(",")]
    except ValueError as exc:
        raise UsageError(f"bad permutation {text!r}") from exc
    if sorted(perm) != list(range(n)):
        raise UsageError(f"{text!r} is not a permutation of 1..{n}")
    return perm


def cmd_validate(args) -> int:
    started = time.time()
    try:
        elements = povm_elements_from_json(_load(args.povm))
    except FormatError as exc:
        raise UsageError(str(exc)) from exc
    bad = povm_violations(elements, args.tol)
    for v in bad:
        print(json.dumps({"kind": v.kind, "index": v.index, "deficit": v.deficit, "message": v.message}))
    summary = {"valid": not bad, "violations": len(bad),
               "manifest": _manifest(args, started, [args.povm], {"tol": args.tol})}
    print(json.dumps(summary))
    return EXIT_OK if not bad else EXIT_DOMAIN


def cmd_errors(args) -> int:
    started = time.time()
    povm = povm_from_json(_load(args.povm))
    pair = pair_from_json(_load(args.pair))
    if povm.dim != pair.dim:
        raise OperatorError(f"POVM has dimension {povm.dim} but the pair has {pair.dim}")
    p1 = _permutation(args.permute_unbarred, pair.dim)
    p2 = _permutation(args.permute_barred, pair.dim)
    if p1 is not None or p2 is not None:
        pair = BasisPair(pair.unbarred.permuted(p1 or range(pair.dim)), pair.barred.permuted(p2 or range(pair.dim)))
    report = joint_errors(povm, pair, args.metric)
    doc = report.to_json()
    doc["manifest"] = _manifest(args, started, [args.povm, args.pair],
                                {"metric": args.metric, "permute_unbarred": args.permute_unbarred,
                                 "permute_barred": args.permute_barred})
    _emit(doc)
    return EXIT_OK


def cmd_bound(args) -> int:
    started = time.time()
    selectors = [args.pair is not None, args.qubit_theta is not None, args.mub is not None]
    if sum(selectors) != 1:
        raise UsageError("give exactly one of PAIR, --qubit-theta or --mub")
    config = {"metric": args.metric, "variant": args.variant, "resolution": args.resolution}
    inputs = []
    if args.qubit_theta is not None:
        try:
            value = qubit.bound(args.qubit_theta, args.metric)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        doc = {"bound": value, "method": "qubit-analytic", "theta": args.qubit_theta}
    elif args.mub is not None:
        n = args.mub
        if not 2 <= n <= 16:
            raise UsageError("--mub needs 2 <= N <= 16")
        scan = general_bound.scan_infimum(mub.fourier_pair(n), args.variant, args.resolution)
        if n in general_bound.MUB_CLOSED_FORMS:
            mb = general_bound.mub_bound(n)
            doc = {"bound": mb.closed_form, "method": "mub-closed-form", "closed_form": mb.closed_form,
                   "numeric_root": mb.numeric_root}
        else:
            doc = {"bound": scan.certificate, "method": "appendix-c-grid", "closed_form": None,
                   "numeric_root": None}
        doc.update({"grid_infimum": scan.certificate, "variant": args.variant})
    else:
        inputs = [args.pair]
        pair = pair_from_json(_load(args.pair))
        if pair.dim == 2:
            theta = qubit.canonicalize(pair).theta
            doc = {"bound": qubit.bound(theta, args.metric), "method": "qubit-analytic", "theta": theta}
        else:
            scan = general_bound.scan_infimum(pair, args.variant, args.resolution)
            doc = {"bound": scan.certificate, "method": "appendix-c-grid", "grid_infimum": scan.certificate,
                   "grid_estimate": scan.estimate, "variant": args.variant}
    doc["metric"] = args.metric
    doc["manifest"] = _manifest(args, started, inputs, config)
    _emit(doc)
    return EXIT_OK


def _optimizer_config(args) -> optimizer.OptimizerConfig:
    base = {}
    if args.config:
        base = _load(args.config)
        if not isinstance(base, dict):
            raise UsageError("config file must hold a JSON object")
    for key in ("restarts", "max_iters"):
        if getattr(args, key) is not None:
            base[key] = getattr(args, key)
    base["seed"] = args.seed
    if getattr(args, "symmetrize", False):
        base["symmetrize_each_iter"] = True
    try:
        return optimizer.OptimizerConfig(**base)
    except TypeError as exc:
        raise UsageError(f"bad optimizer config: {exc}") from exc


def cmd_optimize(args) -> int:
    started = time.time()
    selectors = [args.pair is not None, args.qubit_theta is not None, args.fourier is not None]
    if sum(selectors) != 1:
        raise UsageError("give exactly one of PAIR, --qubit-theta or --fourier")
    if args.pair is not None:
        pair = pair_from_json(_load(args.pair))
    elif args.qubit_theta is not None:
        pair = qubit.canonical_pair(args.qubit_theta)
    else:
        pair = mub.fourier_pair(args.fourier)
    cfg = _optimizer_config(args)
    result = optimizer.minimize_total_error(pair, args.metric, cfg)
    doc = result.to_json()
    doc["metric"] = args.metric
    doc["povm"] = povm_to_json(result.best_povm)
    doc["manifest"] = _manifest(args, started, [args.pair] if args.pair else [], asdict(cfg))
    _emit(doc)
    return EXIT_OK


def cmd_sweep(args) -> int:
    started = time.time()
    if args.grid < 2:
        raise UsageError("--grid needs at least 2 points")
    cfg = _optimizer_config(args)
    rows = optimizer.certify_qubit_sweep(args.metric, args.grid, cfg, optimize=args.optimize)
    manifest = _manifest(args, started, [], {"metric": args.metric, "grid": args.grid,
                                             "optimize": args.optimize, **asdict(cfg)})
    out = open(args.output, "w", newline="", encoding="utf-8") if args.output else sys.stdout
    try:
        out.write("# manifest: " + json.dumps(manifest) + "\n")
        writer = csv.writer(out, lineterminator="\n")
        header = ["theta", "metric", "bound"] + (["achieved", "gap"] if args.optimize else [])
        writer.writerow(header)
        for r in rows:
            line = [repr(r.theta), r.metric, repr(r.bound)]
            if args.optimize:
                line += [repr(r.achieved), repr(r.gap)]
            writer.writerow(line)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_instrument(args) -> int:
    started = time.time()
    instr = instrument_from_json(_load(args.instrument))
    pair = pair_from_json(_load(args.pair))
    if instr.dim != pair.dim:
        raise OperatorError(f"instrument has dimension {instr.dim} but the pair has {pair.dim}")
    report = error_disturbance(instr, pair, args.metric)
    doc = {"metric": report.metric.value, "epsilon": report.epsilon, "eta_bar": report.epsilon_bar,
           "witness": report.witness}
    if args.show_povm:
        doc["induced_povm"] = povm_to_json(induced_joint_povm(instr, pair.barred))
    doc["manifest"] = _manifest(args, started, [args.instrument, args.pair], {"metric": args.metric})
    _emit(doc)
    return EXIT_OK


def cmd_hadamard(args) -> int:
    started = time.time()
    try:
        h = matrix_from_json(_load(args.matrix))
    except FormatError as exc:
        raise UsageError(str(exc)) from exc
    if h.ndim != 2 or h.shape[0] > mub.MAX_SEARCH_DIM:
        raise UsageError(f"expected an N x N matrix with N <= {mub.MAX_SEARCH_DIM}")
    eq = mub.fourier_equivalence(h)
    doc = {"equivalent": eq is not None, "witness": eq.to_json() if eq is not None else None,
           "manifest": _manifest(args, started, [args.matrix], {})}
    _emit(doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"edr {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    metric = {"choices": [m.value for m in Metric], "default": Metric.CALIBRATION.value}

    p = sub.add_parser("validate", help="check a joint POVM file")
    p.add_argument("povm")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("errors", help="errors of a joint POVM against a basis pair")
    p.add_argument("povm")
    p.add_argument("pair")
    p.add_argument("--metric", **metric)
    p.add_argument("--permute-unbarred", help="relabel unbarred basis, e.g. 2,1,3")
    p.add_argument("--permute-barred", help="relabel barred basis")
    p.set_defaults(func=cmd_errors)

    p = sub.add_parser("bound", help="lower bound on the total error")
    p.add_argument("pair", nargs="?")
    p.add_argument("--qubit-theta", type=float)
    p.add_argument("--mub", type=int)
    p.add_argument("--metric", **metric)
    p.add_argument("--variant", choices=[v.value for v in general_bound.Variant],
                   default=general_bound.Variant.MUB_IMPROVED.value)
    p.add_argument("--resolution", type=int, default=general_bound.DEFAULT_RESOLUTION)
    p.set_defaults(func=cmd_bound)

    def add_optimizer_flags(p):
        p.add_argument("--restarts", type=int)
        p.add_argument("--max-iters", dest="max_iters", type=int)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", help="JSON file with optimizer settings")

    p = sub.add_parser("optimize", help="numerically minimize the total error")
    p.add_argument("pair", nargs="?")
    p.add_argument("--qubit-theta", type=float)
    p.add_argument("--fourier", type=int)
    p.add_argument("--metric", **metric)
    p.add_argument("--symmetrize", action="store_true")
    add_optimizer_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="qubit bounds over theta as CSV")
    p.add_argument("--metric", **metric)
    p.add_argument("--grid", type=int, default=20)
    p.add_argument("--optimize", action="store_true")
    p.add_argument("--output", "-o")
    add_optimizer_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("instrument", help="error and disturbance of an instrument")
    p.add_argument("instrument")
    p.add_argument("pair")
    p.add_argument("--metric", **metric)
    p.add_argument("--show-povm", action="store_true")
    p.set_defaults(func=cmd_instrument)

    p = sub.add_parser("hadamard", help="search a Fourier equivalence for a Hadamard matrix")
    p.add_argument("matrix")
    p.set_defaults(func=cmd_hadamard)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "seed", "absent") is None:
            args.seed = default_seed()
        return args.func(args)
    except UsageError as exc:
        print(f"edr {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"edr {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PovmError, OperatorError, ValueError) as exc:
        print(f"edr {args.command}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
