"""Command-line front end.

    ephs flatten MODEL             canonical flat pattern on stdout
    ephs check MODEL [--trials N] [--seed S]
    ephs run MODEL [--t-end T] [--dt H] [--integrator rk4|midpoint] [--out DIR]
    ephs models                    list bundled model files

MODEL is a path or the name of a bundled model.  Exit codes are stable:
0 ok, 1 I/O, 2 validation, 3 parse, 4 check failure, 5 runtime abort.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import __version__
from .assembly import INTEGRATORS, RunAborted, run
from .dsl import load, serialize
from .errors import (BindError, DslError, EphsError, InadmissibleState, NonConvergence,
                     ParameterError, PatternError)
from .model import build_model, bundled_models, bundled_path, flatten_document
from .pattern import validate_pattern
from .verify import check_model

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_PARSE, EXIT_CHECK, EXIT_RUNTIME = range(6)

DIAGNOSTIC_COLUMNS = ("t", "E", "S", "N", "H", "Q_residual", "boundary_power")


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _resolve(name: str) -> Path:
    path = Path(name)
    if path.exists():
        return path
    if path.suffix in ("", ".ephs") and path.parent == Path("."):
        try:
            return bundled_path(name)
        except FileNotFoundError:
            pass
    raise CliError(EXIT_IO, f"cannot open {name}: no such file or bundled model")


def _load(name: str):
    path = _resolve(name)
    try:
        return load(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {path}: {exc}") from exc


def _num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return repr(v) if math.isfinite(v) else str(v)


# ---------------------------------------------------------------------------
# commands


def cmd_flatten(args) -> int:
    doc = _load(args.model)
    issues = doc.validate()
    if issues:
        for issue, span in issues:
            where = f"{span.line}:{span.column}: " if span else ""
            print(f"{where}{issue.code}: {issue.message}", file=sys.stderr)
        return EXIT_VALIDATION
    flat = flatten_document(doc)
    report = validate_pattern(flat)
    if report.issues:
        for issue in report.issues:
            print(f"{issue.code}: {issue.message}", file=sys.stderr)
        return EXIT_VALIDATION
    sys.stdout.write(serialize(flat))
    return EXIT_OK


def cmd_check(args) -> int:
    model = build_model(_load(args.model))
    dt = float(model.settings["dt"])
    steps = max(1, min(args.steps, int(math.ceil(float(model.settings["t_end"]) / dt))))
    print(f"# seed={args.seed} trials={args.trials} steps={steps}", file=sys.stderr)
    rows = check_model(model.system, model.initial_state(), dt, steps=steps,
                       trials=args.trials, seed=args.seed,
                       integrator=str(model.settings["integrator"]))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("check", "target", "residual", "tolerance", "pass"))
    for r in rows:
        w.writerow(r.csv())
    failed = [r for r in rows if not r.passed]
    for r in failed:
        print(f"FAIL {r.check} [{r.target}]: {r.residual:.3e} > {r.tolerance:.1e}",
              file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


def _field_rows(system, x):
    """Rows (z, value per layout entry) with node and cell points interleaved."""
    grid = system.grid
    names = [e.name for e in system.layout]
    points = []
    for e in system.layout:
        if e.placement not in ("node", "cell"):
            continue
        z = grid.coordinates(e.placement)
        vals = x[e.slice]
        for zi, vi in zip(z, vals):
            points.append((float(zi), e.placement, e.name, float(vi)))
    by_z: dict[tuple[float, str], dict[str, float]] = {}
    for z, placement, name, v in points:
        by_z.setdefault((z, placement), {})[name] = v
    for (z, _), vals in sorted(by_z.items()):
        yield [_num(z)] + [_num(vals[n]) if n in vals else "" for n in names]


def cmd_run(args) -> int:
    model = build_model(_load(args.model))
    s = model.settings
    t_end = float(args.t_end if args.t_end is not None else s["t_end"])
    dt = float(args.dt if args.dt is not None else s["dt"])
    every = int(args.output_every if args.output_every is not None else s["output_every"])
    integrator = args.integrator or str(s["integrator"])
    if integrator not in INTEGRATORS:
        raise ParameterError(f"unknown integrator {integrator!r}")
    if t_end < 0 or (dt <= 0 and t_end > 0) or every < 1:
        raise ParameterError("need t_end >= 0, dt > 0 and output_every >= 1")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot create {out}: {exc}") from exc

    system = model.system
    header = ["z"] + [e.name for e in system.layout]
    diag_rows = []

    def snapshot(i, t, x, d):
        diag_rows.append([_num(getattr(d, c)) for c in DIAGNOSTIC_COLUMNS])
        with open(out / f"fields_{i:04d}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows(_field_rows(system, x))

    def write_diagnostics():
        with open(out / "diagnostics.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(DIAGNOSTIC_COLUMNS)
            w.writerows(diag_rows)

    try:
        run(system, model.initial_state(), t_end, dt, integrator=integrator,
            output_every=every, on_output=snapshot)
    except RunAborted as exc:
        write_diagnostics()
        print(f"error: {exc}", file=sys.stderr)
        print(f"last good time: {exc.t_last!r}", file=sys.stderr)
        return EXIT_RUNTIME
    write_diagnostics()
    print(f"wrote {len(diag_rows)} outputs to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_models(args) -> int:
    for name, path in sorted(bundled_models().items()):
        print(f"{name}\t{path}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ephs", description="Exergetic port-Hamiltonian models "
                                 "on a staggered 1D grid.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flatten", help="print the canonical flat pattern")
    p.add_argument("model")
    p.set_defaults(func=cmd_flatten)

    p = sub.add_parser("check", help="run the verification suite")
    p.add_argument("model")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=200,
                   help="steps of the trajectory check (capped by t_end / dt)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("run", help="simulate and write CSV output")
    p.add_argument("model")
    p.add_argument("--t-end", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--integrator", choices=sorted(INTEGRATORS))
    p.add_argument("--output-every", type=int)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("models", help="list bundled models")
    p.set_defaults(func=cmd_models)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DslError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PatternError, BindError, ParameterError) as exc:
        print(f"invalid model: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InadmissibleState, NonConvergence) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except EphsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
