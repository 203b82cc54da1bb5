"""Command-line interface: ``clobs {spectrum,solve,trace,branch,verify}``.

Exit codes: 0 success, 1 failed check or numerical failure, 2 usage or
input error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import classicality, gevp, ladders, svg, verify
from .errors import ClobsError, IllConditionedBasis, InvalidArgument, ReportWriteError
from .qstate import DensityEvolution, basis_to_dense, make_P, make_X, project_state
from .spectrum import (Spectrum, large_window, make_degenerate, make_generic,
                       make_harmonic, make_two_ladders)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    Path(out).write_text(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _load(path: str) -> Spectrum:
    try:
        return Spectrum.from_json(path)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _note(args, msg: str) -> None:
    if not args.quiet:
        print(msg, file=sys.stderr)


# -- commands -----------------------------------------------------------------

def cmd_spectrum(args) -> int:
    kind = args.kind
    if kind == "harmonic":
        s = make_harmonic(args.levels, args.omega, args.offset)
    elif kind == "two-ladders":
        s = make_two_ladders(args.levels_each, args.omega1, args.omega2, args.first_rung)
    elif kind == "degenerate":
        s = make_degenerate(args.distinct, args.g, args.omega)
    else:
        s = make_generic(args.levels, args.seed, args.min_gap)
    _emit(_dump(s.to_dict()), args.out)
    _note(args, f"{kind} spectrum with {s.n_levels} levels")
    return EXIT_OK


def _window(s: Spectrum, T: Optional[float]) -> float:
    if T is None:
        return large_window(s)
    if not T > 0:
        raise InvalidArgument("T must be positive")
    return T


def cmd_solve(args) -> int:
    s = _load(args.spectrum)
    T = _window(s, args.T)
    ev = DensityEvolution(s)
    result = gevp.solve(gevp.build(ev, T, args.mode), args.method)
    out = result.to_dict(args.top_k)
    out["blocks"] = ladders.blocks_to_json(
        ladders.predict_classicality(s, ladders.cluster_transitions(s, T)))
    _emit(_dump(out), args.out)
    top = ", ".join(f"{v:.6g}" for v in out["eigenvalues"][:4])
    _note(args, f"T={T:.6g}: leading classicalities {top}")
    return EXIT_OK


def _observables(s: Spectrum, name: str, T: Optional[float], keep):
    """Dense observables (restricted to ``keep``) and the pair for C_sym."""
    if name in ("X", "P", "XP-sym"):
        sub = s if keep is None else s.subset(keep)
        X = basis_to_dense(sub, make_X(sub))
        P = basis_to_dense(sub, make_P(sub))
        if name == "X":
            return {"X": X}, None
        if name == "P":
            return {"P": P}, None
        return {"X": X, "P": P}, [("X", "P")]
    if name.startswith("eigvec:"):
        try:
            k = int(name.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad eigen-operator index in {name!r}") from None
        res = gevp.solve(gevp.build(DensityEvolution(s), _window(s, T)))
        if not 0 <= k < len(res):
            raise UsageError(f"eigen-operator index {k} out of range [0, {len(res)})")
        A = res.operator(k)
        if keep is not None:
            A = A[np.ix_(keep, keep)]
        return {f"eig{k}": A}, None
    raise UsageError(f"unknown observable {name!r}; use X, P, XP-sym or eigvec:k")


def cmd_trace(args) -> int:
    s = _load(args.spectrum)
    keep = None
    ev = DensityEvolution(s)
    if args.project is not None:
        if s.labels is None or args.project not in s.labels:
            raise UsageError(f"spectrum has no levels labelled {args.project!r}")
        keep = s.levels_with_label(args.project)
        ev = project_state(ev, keep)
    obs, pairs = _observables(s, args.observable, args.T, keep)
    table = classicality.trace_series(ev, obs, args.t_max, args.dt, pairs)
    buf = io.StringIO()
    buf.write(",".join(table.columns) + "\n")
    for row in table.data:
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    _emit(buf.getvalue(), args.out)
    if args.svg:
        if args.out is None:
            raise UsageError("--svg needs --out to name the chart file")
        series = [(c, table.column(c)) for c in table.columns[1:]]
        Path(args.out).with_suffix(".svg").write_text(
            svg.line_chart(table.t, series, "t", "classicality"))
    _note(args, f"{len(table.t)} samples, columns {', '.join(table.columns[1:])}")
    return EXIT_OK


def _parse_windows(text: str) -> list[float]:
    try:
        windows = [float(w) for w in text.split(",") if w.strip()]
    except ValueError:
        raise UsageError(f"windows must be comma-separated numbers, got {text!r}") from None
    if not windows or any(b <= a for a, b in zip(windows, windows[1:])):
        raise UsageError("windows must be strictly ascending")
    return windows


def cmd_branch(args) -> int:
    s = _load(args.spectrum)
    tree = ladders.branching_tree(s, _parse_windows(args.windows))
    _emit(_dump(tree.to_dict()), args.out)
    _note(args, f"{len(tree.leaves())} leaf subspace(s)")
    return EXIT_OK


def cmd_verify(args) -> int:
    out = args.out or "verify_report.json"
    results = verify.run_checks(args.only, args.perturb)
    try:
        verify.write_report(results, out)
    finally:
        if not args.quiet:
            width = max(len(r.check) for r in results)
            for r in results:
                print(f"{r.check:<{width}}  {'PASS' if r.passed else 'FAIL'}")
    failed = [r for r in results if not r.passed]
    if not args.quiet:
        if failed:
            print(f"{len(failed)} of {len(results)} checks failed; report in {out}")
        else:
            print(f"all {len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


# -- parser ---------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output path (stdout when omitted)")
    common.add_argument("--quiet", action="store_true", help="suppress summaries")

    parser = argparse.ArgumentParser(prog="clobs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common], help="generate a spectrum file")
    p.add_argument("--kind", required=True,
                   choices=["harmonic", "two-ladders", "degenerate", "generic"])
    p.add_argument("--levels", type=int, default=16)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--offset", type=float, default=0.0)
    p.add_argument("--levels-each", type=int, default=8)
    p.add_argument("--omega1", type=float, default=1.0)
    p.add_argument("--omega2", type=float, default=1.05)
    p.add_argument("--first-rung", type=int, default=1)
    p.add_argument("--distinct", type=int, default=8)
    p.add_argument("--g", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-gap", type=float, default=0.01)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("solve", parents=[common], help="solve for classical observables")
    p.add_argument("spectrum")
    p.add_argument("--T", type=float, help="window length (default: 1e4 slowest periods)")
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--mode", choices=["closed-form", "quadrature"], default="closed-form")
    p.add_argument("--method", choices=["lapack", "jacobi"], default="lapack")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("trace", parents=[common], help="instantaneous classicality trace")
    p.add_argument("spectrum")
    p.add_argument("--observable", default="XP-sym", help="X, P, XP-sym or eigvec:k")
    p.add_argument("--t-max", type=float, default=300.0)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--project", help="restrict the state to levels with this label")
    p.add_argument("--T", type=float, help="window for eigvec:k observables")
    p.add_argument("--svg", action="store_true", help="also write a chart next to --out")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("branch", parents=[common], help="branching tree of ladder subspaces")
    p.add_argument("spectrum")
    p.add_argument("--windows", required=True, help="ascending comma-separated windows")
    p.set_defaults(func=cmd_branch)

    p = sub.add_parser("verify", parents=[common], help="run the reproduction checks")
    p.add_argument("--only", help="run checks whose name contains this string")
    p.add_argument("--perturb", type=float, default=0.0,
                   help="jitter ladder spectra by this fraction of their gap")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidArgument) as exc:
        print(f"clobs {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ReportWriteError, OSError) as exc:
        print(f"clobs {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except IllConditionedBasis as exc:
        print(f"clobs {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ClobsError as exc:
        print(f"clobs {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
