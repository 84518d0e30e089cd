"""
Command-line front end.

    freemotzkin verify-algebra --n 4 --seed 7
    freemotzkin omega-table --n 10 --output csv
    freemotzkin solve --n 3
    freemotzkin crosscheck --n 3 --eta 1
    freemotzkin xxx-reference --n 3

Exit status: 0 success, 1 a tolerance or completeness check failed, 2 usage.
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from .bethe import solve_all_sectors, xxx_reference_solve
from .chain_operators import ChainConfig
from .config import COMPLEX_ED_SITE_CAP, DEFAULT_TOL, ENUMERATION_SITE_CAP, MotzkinError, Tolerances
from .omega import eigenvalue_multiset, table_census, table_csv
from .verifier import algebra_suite, match_spectra, random_generic_thetas

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2

JOBS_ENV = "FREEMOTZKIN_JOBS"


class UsageError(Exception):
    pass


def _complex(text):
    try:
        z = complex(text.replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    return z.real if z.imag == 0 else z


def _pair(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def _default_jobs():
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=None, help="number of sites")
    common.add_argument("--eta", type=_complex, default=1.0, help="crossing parameter, e.g. 1 or 0.5+0.2j")
    common.add_argument("--theta-mode", choices=["zero", "random"], default="zero")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n-starts", type=int, default=64, help="Newton starts per degree")
    common.add_argument("--atol", type=float, default=None)
    common.add_argument("--rtol", type=float, default=None)
    common.add_argument("--output", choices=["json", "csv", "pretty"], default=None)
    common.add_argument("--output-path", default=None)
    common.add_argument("--jobs", type=int, default=None, help=f"worker threads (default ${JOBS_ENV} or 1)")

    parser = argparse.ArgumentParser(prog="freemotzkin", description="Free Motzkin chain toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("verify-algebra", "R-matrix and chain identity residuals"),
        ("omega-table", "k-th-root distribution of Omega eigenvalues"),
        ("solve", "Bethe/T-Q solutions in every Omega sector"),
        ("crosscheck", "match Bethe solutions against exact diagonalisation"),
        ("xxx-reference", "spin-1/2 XXX reference solver"),
    ]:
        sub.add_parser(name, parents=[common], help=text, description=text)
    return parser


DEFAULT_N = {"verify-algebra": 3, "omega-table": 10, "solve": 3, "crosscheck": 3, "xxx-reference": 3}
MAX_N = {"verify-algebra": 5, "omega-table": 64, "solve": COMPLEX_ED_SITE_CAP, "crosscheck": COMPLEX_ED_SITE_CAP, "xxx-reference": 6}


def validate(args):
    """Fill defaults and reject invalid combinations."""
    cmd = args.command
    if args.n is None:
        args.n = DEFAULT_N[cmd]
    if not 1 <= args.n <= MAX_N[cmd]:
        raise UsageError(f"{cmd} supports 1 <= n <= {MAX_N[cmd]}")
    if args.eta == 0:
        raise UsageError("eta must be non-zero")
    if args.n_starts < 1:
        raise UsageError("--n-starts must be positive")
    if args.output is None:
        args.output = "csv" if cmd == "omega-table" else "json"
    if args.output == "csv" and cmd != "omega-table":
        raise UsageError("csv output is only available for omega-table")
    if cmd == "omega-table" and args.theta_mode != "zero":
        raise UsageError("omega-table does not depend on inhomogeneities")
    if cmd == "crosscheck" and args.theta_mode != "zero":
        raise UsageError("crosscheck compares with the homogeneous chain; use --theta-mode zero")
    if cmd in ("crosscheck", "xxx-reference") and args.n < 2:
        raise UsageError(f"{cmd} needs n >= 2")
    for flag in ("atol", "rtol"):
        v = getattr(args, flag)
        if v is not None and not v > 0:
            raise UsageError(f"--{flag} must be positive")
    if args.jobs is None:
        args.jobs = _default_jobs()
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")
    return args


def _tolerances(args):
    return Tolerances(
        atol=DEFAULT_TOL.atol if args.atol is None else args.atol,
        rtol=DEFAULT_TOL.rtol if args.rtol is None else args.rtol,
    )


def _thetas(args):
    if args.theta_mode == "random":
        return random_generic_thetas(args.n, args.seed, args.eta)
    return None


def cmd_verify_algebra(args):
    suite = algebra_suite(args.n, args.eta, args.seed, tol=_tolerances(args))
    checks = {k: {"residual": v, "threshold": th, "ok": bool(v <= th)} for k, (v, th) in suite.items()}
    ok = all(c["ok"] for c in checks.values())
    payload = {"command": args.command, "n_sites": args.n, "eta": _pair(args.eta), "seed": args.seed,
               "checks": checks, "ok": ok}
    lines = [f"{k:24s} {c['residual']:.3e}  <= {c['threshold']:.0e}  {'ok' if c['ok'] else 'FAIL'}"
             for k, c in checks.items()]
    return payload, lines, ok


def cmd_omega_table(args):
    rows = table_census(args.n, check_cap=min(ENUMERATION_SITE_CAP, 9))
    ok = all(r.census_agrees is not False for r in rows)
    csv_text = table_csv(rows)
    payload = {
        "command": args.command,
        "rows": [
            {"n_sites": r.n_sites, "per_order": {str(k): v for k, v in r.per_order.items()},
             "diag_special": r.diag_special, "census_agrees": r.census_agrees}
            for r in rows
        ],
        "ok": ok,
    }
    return payload, csv_text, ok


def cmd_solve(args):
    cfg = ChainConfig(args.n, args.eta, _thetas(args))
    sectors = solve_all_sectors(cfg, n_starts=args.n_starts, seed=args.seed, jobs=args.jobs)
    dims = eigenvalue_multiset(args.n)
    payload = {
        "command": args.command,
        "n_sites": args.n,
        "eta": _pair(args.eta),
        "thetas": [_pair(t) for t in cfg.thetas],
        "seed": args.seed,
        "n_starts": args.n_starts,
        "sectors": [
            {"omega": om.to_json(), "dimension": dims[om], "solutions": [s.to_json() for s in sols]}
            for om, sols in sectors.items()
        ],
    }
    lines = []
    for om, sols in sectors.items():
        lines.append(f"omega = {om}  (dim {dims[om]}, {len(sols)} solutions)")
        for s in sols:
            e = f"{s.energy.real:+.10f}{s.energy.imag:+.2e}j" if np.isfinite(s.energy) else "n/a"
            lines.append(f"    M={len(s.roots)}  E={e}")
    ok = all(sols for sols in sectors.values())
    return payload, lines, ok


def cmd_crosscheck(args):
    cfg = ChainConfig(args.n, args.eta)
    sectors = solve_all_sectors(cfg, n_starts=args.n_starts, seed=args.seed, jobs=args.jobs)
    report = match_spectra(args.n, args.eta, sectors)
    payload = {"command": args.command, "seed": args.seed, "n_starts": args.n_starts, **report.to_json()}
    lines = [f"matched {report.matched} / {len(report.ed_energies)}"]
    for om, st in sorted(report.per_omega.items()):
        lines.append(f"    omega = {str(om):10s} dim {st['dimension']:4d}  matched {st['matched']:4d}"
                     f"  reduced-degree {st['reduced_degree_matches']}")
    for u in report.unmatched_ed:
        lines.append(f"    UNMATCHED E={u['energy']:.10f} omega={u['omega']}")
    return payload, lines, report.complete


def cmd_xxx_reference(args):
    tol = 1e-8 if args.rtol is None else args.rtol
    ref = xxx_reference_solve(args.n, args.eta, _thetas(args), n_starts=args.n_starts, seed=args.seed, tol=tol)
    ok = (not ref.unmatched and ref.multiplet_count == 2**args.n
          and ref.operator_identity < tol and ref.functional < tol and ref.leading < tol)
    payload = {"command": args.command, "seed": args.seed, **ref.to_json(), "ok": ok}
    lines = [
        f"matched {ref.matched} / {len(ref.ed_eigenvalues)}",
        f"multiplet count {ref.multiplet_count} (2^N = {2**args.n})",
        f"operator identity {ref.operator_identity:.3e}",
        f"functional {ref.functional:.3e}  leading {ref.leading:.3e}",
    ]
    return payload, lines, ok


COMMANDS = {
    "verify-algebra": cmd_verify_algebra,
    "omega-table": cmd_omega_table,
    "solve": cmd_solve,
    "crosscheck": cmd_crosscheck,
    "xxx-reference": cmd_xxx_reference,
}


def render(args, payload, text):
    if args.output == "json":
        return json.dumps(payload, sort_keys=True, indent=2, allow_nan=False) + "\n"
    if args.output == "csv":
        return text
    if isinstance(text, str):
        return text
    return "\n".join(text) + "\n"


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        validate(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"freemotzkin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    t0 = time.perf_counter()
    try:
        payload, text, ok = COMMANDS[args.command](args)
    except MotzkinError as exc:
        print(f"freemotzkin: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = render(args, payload, text)
    if args.output_path:
        with open(args.output_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)
    print(f"[{args.command}] {'ok' if ok else 'FAILED'} in {time.perf_counter() - t0:.2f}s", file=sys.stderr)
    return EXIT_OK if ok else EXIT_TOLERANCE


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
