"""Command-line front end.

Every subcommand reads a JSON charge specification (``--input``) and writes
JSON or CSV, either to standard output or to ``<output>.json`` /
``<output>.csv``.  Errors are reported as a JSON object
``{"error": ..., "message": ...}`` on standard output with a nonzero exit
status.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings

import numpy as np

from . import __version__
from .charges import in_P_less, kernels_from_spec
from .limits import (asymptotic_constants, gibbs_vectors, limit_kernel,
                     limits_report)
from .partition import partition_table
from .spectral import DELOCALIZED, LOCALIZED, free_energy

DEFAULT_SEED = 0

EXIT_USAGE = 2
EXIT_FAILED = 1


class CLIError(Exception):
    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


def _clean(obj):
    """Make numpy values JSON-serializable; non-finite floats become None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _emit(text: str, output: str | None, ext: str) -> None:
    if output:
        with open(f"{output}.{ext}", "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_spec(path: str | None, required=("omega_plus", "omega_minus",
                                           "omega_zero", "omega_zero_tilde",
                                           "p")) -> dict:
    if not path:
        raise CLIError("usage", "--input is required")
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except OSError as exc:
        raise CLIError("io", str(exc)) from None
    except json.JSONDecodeError as exc:
        raise CLIError("invalid_spec", f"not valid JSON: {exc}") from None
    if not isinstance(spec, dict):
        raise CLIError("invalid_spec", "specification must be a JSON object")
    missing = [k for k in required if k not in spec]
    if missing:
        raise CLIError("invalid_spec", f"missing fields: {', '.join(missing)}")
    return spec


def _kernels(args, spec, N: int | None = None):
    n_max = args.n_max or spec.get("n_max") or 2 ** 16
    if N is not None and N > n_max:
        n_max = N
    try:
        return kernels_from_spec(spec, int(n_max))
    except (ValueError, TypeError) as exc:
        raise CLIError("invalid_spec", str(exc)) from None


def _need_N(args, default=None):
    N = args.N if args.N is not None else default
    if N is None:
        raise CLIError("usage", "--N is required")
    if N < 1:
        raise CLIError("out_of_range", "--N must be >= 1")
    return int(N)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_free_energy(args):
    spec = _load_spec(args.input)
    ks = _kernels(args, spec)
    rep = free_energy(ks, tol=args.tol)
    doc = rep.to_dict()
    doc.update(T=ks.T, h=ks.charges.h, flipped=ks.charges.flipped,
               ZatF=rep.ZatF)
    _emit(_dumps(doc), args.output, "json")
    return 0


def cmd_classify(args):
    spec = _load_spec(args.input)
    ks = _kernels(args, spec)
    rep = free_energy(ks, tol=args.tol)
    doc = {"regime": rep.regime, "delta": rep.delta,
           "P_less": in_P_less(ks.charges, rep.delta, args.tol)}
    _emit(_dumps(doc), args.output, "json")
    return 0


def cmd_partition(args):
    spec = _load_spec(args.input)
    N = _need_N(args)
    ks = _kernels(args, spec, N)
    tab = partition_table(ks, N)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=["N", "logZc", "logZf", "logZplus",
                                        "logZminus"], lineterminator="\n")
    w.writeheader()
    for rec in tab.rows(0):
        w.writerow({k: (repr(v) if isinstance(v, float) else v)
                    for k, v in rec.items()})
    _emit(buf.getvalue(), args.output, "csv")
    return 0


def cmd_asymptotics(args):
    spec = _load_spec(args.input)
    N = _need_N(args, 5000)
    ks = _kernels(args, spec, N)
    rep = free_energy(ks, tol=args.tol)
    tab = partition_table(ks, N)
    lzc = tab.logZc[0]
    lzf = tab.logZf[0]
    checks = []
    half = N // 2
    if rep.regime == DELOCALIZED:
        ac = asymptotic_constants(ks, tol=args.tol)
        eta = N % ks.T
        for name, lz, power, target in (
                ("Zc*N^(3/2)", lzc, 1.5, ac.LambdaC[0, eta]),
                ("Zf*N^(1/2)", lzf, 0.5, ac.LambdaF[0, eta])):
            v = math.exp(lz[N] + power * math.log(N))
            checks.append({"name": name, "value": v, "target": target,
                           "rel_error": abs(v / target - 1)})
    else:
        if rep.regime == LOCALIZED:
            scale = [("Zc*exp(-F N)", 0.0), ("Zf*exp(-F N)", 0.0)]
        else:
            scale = [("Zc*N^(1/2)", 0.5), ("Zf*N^(1/2)", 0.5)]
        for (name, power), lz in zip(scale, (lzc, lzf)):
            # along the class of N, compare N with the nearest M of the
            # same class below N/2 (a Cauchy-type convergence check)
            M = half - ((half - N) % ks.T)
            f = (lambda n: math.exp(lz[n] - rep.F * n + power * math.log(n)))
            v, vm = f(N), f(M)
            checks.append({"name": name, "value": v, "target": vm,
                           "rel_error": abs(v / vm - 1)})
    doc = {"regime": rep.regime, "delta": rep.delta, "F": rep.F, "N": N,
           "checks": checks}
    _emit(_dumps(doc), args.output, "json")
    return 0


def cmd_limits(args):
    spec = _load_spec(args.input)
    ks = _kernels(args, spec)
    rep = free_energy(ks, tol=args.tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        doc = limits_report(ks, rep)
    if rep.regime != DELOCALIZED:
        kern = limit_kernel(ks, rep, n_cut=args.n_cut)
        doc["kernel"] = {"row_sums": kern.row_sums(),
                         "truncation": kern.truncation_ledger()}
    _emit(_dumps(doc), args.output, "json")
    return 0


def cmd_sample(args):
    from .sampler import sample_finite, sample_infinite

    spec = _load_spec(args.input)
    if args.samples < 1:
        raise CLIError("out_of_range", "--samples must be >= 1")
    if args.infinite:
        H = int(args.horizon or args.N or 1000)
        if H > args.n_cut:
            raise CLIError("out_of_range", "--horizon exceeds --n-cut")
        ks = _kernels(args, spec, max(H, args.n_cut))
        rep = free_energy(ks, tol=args.tol)
        kern = limit_kernel(ks, rep, eta=args.eta, a=args.boundary,
                            n_cut=args.n_cut)
        gd = None
        if kern.defective:
            gd = gibbs_vectors(ks, asymptotic_constants(ks, tol=args.tol))
        batch = sample_infinite(ks, kern, gd, horizon=H,
                                n_samples=args.samples, seed=args.seed)
    else:
        N = _need_N(args)
        ks = _kernels(args, spec, N)
        tab = partition_table(ks, N)
        batch = sample_finite(ks, tab, args.boundary, n_samples=args.samples,
                              seed=args.seed)
    summary = batch.summary()
    summary.update(boundary=args.boundary, infinite=bool(args.infinite))
    buf = io.StringIO()
    buf.write("n,S_n\n")
    for n, s in enumerate(batch.paths[0]):
        buf.write(f"{n},{int(s)}\n")
    if args.output:
        _emit(buf.getvalue(), args.output, "csv")
        _emit(_dumps(summary), args.output, "json")
    else:
        sys.stdout.write(_dumps(summary))
    return 0


def cmd_phase_diagram(args):
    from .phasediag import beta_c, grid, scan, write_csv

    spec = _load_spec(args.input, required=("omega", "p"))
    try:
        bg = grid(args.beta_grid or spec.get("beta_grid") or "0:2:0.05")
        hg = grid(args.h_grid or spec.get("h_grid") or "-0.5:0.5:0.025")
        n_max = int(args.n_max or spec.get("n_max") or 2 ** 16)
        pts = scan(spec["omega"], bg, hg, p=float(spec["p"]), n_max=n_max,
                   workers=args.workers, tol=args.tol, mc=args.mc,
                   mc_N=args.mc_N, mc_samples=args.samples, seed=args.seed)
        bc = beta_c(spec["omega"], float(spec["p"]), n_max)
    except ValueError as exc:
        raise CLIError("invalid_spec", str(exc)) from None
    if args.output:
        write_csv(pts, f"{args.output}.csv")
        _emit(_dumps({"beta_c": bc, "n_beta": len(bg), "n_h": len(hg)}),
              args.output, "json")
    else:
        write_csv(pts, sys.stdout)
    return 0


def cmd_verify(args):
    from .verify import format_table, run_suite

    checks = run_suite(seed=args.seed, n_instances=args.instances)
    passed = all(c["passed"] for c in checks)
    doc = {"passed": passed, "checks": checks}
    if args.output:
        _emit(_dumps(doc), args.output, "json")
    print(format_table(checks), file=sys.stderr if not args.output
          else sys.stdout)
    if not args.output:
        sys.stdout.write(_dumps(doc))
    if not passed:
        raise CLIError("verification_failed",
                       "; ".join(c["name"] for c in checks if not c["passed"]))
    return 0


COMMANDS = {
    "free-energy": cmd_free_energy,
    "classify": cmd_classify,
    "partition": cmd_partition,
    "asymptotics": cmd_asymptotics,
    "sample": cmd_sample,
    "limits": cmd_limits,
    "phase-diagram": cmd_phase_diagram,
    "verify": cmd_verify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIError("usage", message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="percop", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--input", help="JSON specification")
        sp.add_argument("--output", help="output path prefix")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help="random seed (default 0)")
        sp.add_argument("--N", type=int, help="system size")
        sp.add_argument("--n-max", type=int, dest="n_max",
                        help="kernel truncation horizon (default 2^16)")
        sp.add_argument("--n-cut", type=int, dest="n_cut", default=2 ** 14,
                        help="limit-kernel table length")
        sp.add_argument("--eta", type=int, default=0,
                        help="class of N for delocalized limits")
        sp.add_argument("--boundary", choices=["free", "constrained"],
                        default="free")
        sp.add_argument("--tol", type=float, default=1e-9,
                        help="regime classification tolerance on delta")
        sp.add_argument("--samples", type=int, default=1000)
        sp.add_argument("--horizon", type=int)
        sp.add_argument("--infinite", action="store_true",
                        help="sample the infinite-volume measure")
        sp.add_argument("--beta-grid", dest="beta_grid")
        sp.add_argument("--h-grid", dest="h_grid")
        sp.add_argument("--workers", type=int, default=1)
        sp.add_argument("--mc", action="store_true",
                        help="add Monte Carlo order-parameter estimates")
        sp.add_argument("--mc-N", type=int, dest="mc_N", default=4000)
        sp.add_argument("--instances", type=int, default=10,
                        help="random instances for verify")
    return parser


def _join_grid_flags(argv):
    # grids such as "-0.5:0.5:0.1" start with a dash; bind them explicitly
    out = []
    it = iter(argv)
    for tok in it:
        if tok in ("--beta-grid", "--h-grid"):
            out.append(f"{tok}={next(it, '')}")
        else:
            out.append(tok)
    return out


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = build_parser().parse_args(_join_grid_flags(list(argv)))
        if not args.command:
            raise CLIError("usage", "a subcommand is required")
        return COMMANDS[args.command](args)
    except CLIError as exc:
        sys.stdout.write(_dumps({"error": exc.kind, "message": str(exc)}))
        return EXIT_FAILED if exc.kind == "verification_failed" else EXIT_USAGE
    except (ValueError, RuntimeError) as exc:
        sys.stdout.write(_dumps({"error": type(exc).__name__,
                                 "message": str(exc)}))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
