"""Command-line driver.

    maslovsf analyze FILE [options]
    maslovsf list-builtins
    maslovsf run-builtin NAME [options]
    maslovsf witness SURFACE [--delta0 D] [--count K] [--steps S] [--out DIR]
    maslovsf selftest [--out DIR]

Exit codes: 0 identity verified and no uncertain instants, 1 input error,
2 identity failure, 3 identity not checkable or uncertain instants.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import geodesics, selftest
from .bilinear import DEFAULT_TOL
from .focal import DegenerateSubmanifoldError
from .index_form import DEFAULT_GRID, DEFAULT_SIZE, GalerkinError
from .maslov import EndpointConjugateError
from .morse_sturm import MorseSturmError
from .pipeline import EXIT_IDENTITY, EXIT_INPUT, EXIT_OK, RunOptions, _write_atomic, emit, report_text, run
from .scenario_file import AnalysisOptions, ScenarioFileError, load
from .scenarios import BUILTINS, builtin

OUT_ENV = "MASLOVSF_OUT"
DEFAULT_OUT = "maslovsf-out"

log = logging.getLogger("maslovsf")


def _out_dir(args, name: str) -> Path:
    base = args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT
    return Path(base) / name


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", type=int, help=f"s-grid points (default {DEFAULT_GRID})")
    p.add_argument("--basis", choices=["sine", "fem"], help="Galerkin basis (default sine)")
    p.add_argument("--basis-size", type=int, help=f"basis functions per direction (default {DEFAULT_SIZE})")
    p.add_argument("--tol-rank", type=float, help=f"relative rank/inertia tolerance (default {DEFAULT_TOL})")
    p.add_argument("--steps", type=int, default=2048, help="RK4 steps for the flow (default 2048)")
    p.add_argument("--causal", action="store_true", help="declare the geodesic causal (Lorentzian upgrade)")
    p.add_argument("--format", choices=["text", "json"], default="text", help="report format")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")


def _options(args, file_opts: AnalysisOptions | None = None) -> RunOptions:
    base = file_opts or AnalysisOptions()
    return RunOptions(
        grid=args.grid if args.grid is not None else base.grid,
        basis=args.basis or base.basis,
        basis_size=args.basis_size if args.basis_size is not None else base.basis_size,
        tol_rank=args.tol_rank if args.tol_rank is not None else base.tol_rank,
        steps=args.steps,
        causal=args.causal,
    )


def _analyze(scenario, options: RunOptions, args) -> int:
    report = run(scenario, options)
    out = _out_dir(args, scenario.name)
    emit(report, out, args.format)
    sys.stdout.write(report_text(report))
    print(f"written to {out}")
    return report.exit_code


def cmd_analyze(args) -> int:
    scenario, file_opts = load(args.file)
    return _analyze(scenario, _options(args, file_opts), args)


def cmd_run_builtin(args) -> int:
    return _analyze(builtin(args.name), _options(args), args)


def cmd_list(args) -> int:
    for name, make in BUILTINS.items():
        sc = make()
        print(f"{name:22s} n={sc.system.n}  {sc.description}")
    return EXIT_OK


def cmd_witness(args) -> int:
    search = geodesics.witness_run(args.surface, args.delta0, args.count, args.steps)
    t0 = "none" if search.t0 is None else f"{search.t0:.12f}"
    print(f"surface: {args.surface}   oracle t0 (arc length): {t0}")
    lines = ["delta,t_intersect,residual,gap"]
    for w, gap in zip(search.witnesses, search.gaps if search.t0 is not None else [float("nan")] * 99):
        print(f"  delta {w.delta:.6g}  t {w.t_intersect:.12f}  residual {w.residual:.2e}  gap {gap:.3e}")
        lines.append(f"{w.delta:.17g},{w.t_intersect:.17g},{w.residual:.17g},{gap:.17g}")
    for d in search.failed:
        print(f"  delta {d:.6g}  no re-intersection")
    if args.out:
        _write_atomic(Path(args.out) / f"witness_{args.surface}.csv", "\n".join(lines) + "\n")
    if search.witnesses and search.t0 is not None:
        print(f"monotone after first: {search.monotone()}   final gap: {search.gaps[-1]:.3e}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    out = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT) / "selftest"
    results = selftest.run_all(out)
    for r in results:
        status = "ok" if r.ok else "FAIL"
        print(f"{r.name:22s} {r.instances:6d} instances  {r.failures} failures  {r.skipped} skipped  {status}")
    print(f"artifacts in {out}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_IDENTITY


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maslovsf", description="Conjugate points, Maslov index and spectral flow")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze a scenario file")
    p.add_argument("file")
    _add_run_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("list-builtins", help="list builtin scenarios")
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("run-builtin", help="analyze a builtin scenario")
    p.add_argument("name", choices=list(BUILTINS))
    _add_run_flags(p)
    p.set_defaults(func=cmd_run_builtin)

    p = sub.add_parser("witness", help="nonlinear bifurcation witnesses on a surface of revolution")
    p.add_argument("surface", choices=sorted(geodesics.BASES))
    p.add_argument("--delta0", type=float, default=0.2)
    p.add_argument("--count", type=int, default=7)
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--out")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("selftest", help="run the property suites and builtin scenarios")
    p.add_argument("--out")
    p.set_defaults(func=cmd_selftest)
    return parser


INPUT_ERRORS = (
    ScenarioFileError,
    MorseSturmError,
    DegenerateSubmanifoldError,
    GalerkinError,
    EndpointConjugateError,
    OSError,
    KeyError,
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except ArithmeticError as exc:
        print(f"identity failure: {exc}", file=sys.stderr)
        return EXIT_IDENTITY


if __name__ == "__main__":
    sys.exit(main())
