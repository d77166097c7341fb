"""Command-line interface: ``pct-pdm {profiles,solve,verify,sample}``.

Exit codes: 0 success, 1 verification mismatch (report still written),
2 invalid configuration or unknown profile, 3 empty domain or solver failure.
JSON documents carry ``"schema": "pct-pdm/1"``; CSV headers are fixed (see CSV_HEADERS).
"""
from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
import io
import json
import math
import sys

import numpy as np

from . import eigensolver as es
from . import mass_catalog as mc
from . import pct_maps as pm
from . import radial3d as r3
from .errors import EmptyDomain, InvalidParams, NonNormalizable, ParseError, PctError
from .fixtures import atomic_write

EXIT_OK, EXIT_MISMATCH, EXIT_INVALID, EXIT_FAILURE = 0, 1, 2, 3


class UnknownProfile(LookupError):
    pass


CLASSES_1D = ("osc1", "osc2", "cou1", "cou2", "morse")
CLASSES_RADIAL = ("radial-a", "radial-b", "radial-log")
CLASSES = CLASSES_1D + CLASSES_RADIAL

# parameters without a default that each class needs
REQUIRED = {
    "osc1": ("alpha",),
    "osc2": (),
    "cou1": ("alpha",),
    "cou2": (),
    "morse": ("lam", "xi"),
    "radial-a": ("gamma", "C"),
    "radial-b": ("gamma", "C"),
    "radial-log": ("C",),
}
FLAG_NAMES = {"alpha": "--alpha", "lam": "--lambda", "xi": "--xi", "gamma": "--gamma", "C": "--C", "tau": "--tau"}

CSV_HEADERS = {
    "solve": ("record", "n", "x", "value"),
    "sample": ("x", "m", "mu", "V", "phi"),
    "verify": ("n", "E_analytic", "E_numeric", "abs_err", "rel_err", "overlap", "residual"),
}

SAMPLE_POINTS = 201


@dataclass
class RunConfig:
    command: str
    profile_id: str | None = None
    profile_file: str | None = None
    class_tag: str | None = None
    params: dict = field(default_factory=dict)
    variant: str | None = None
    grid: es.Grid | None = None
    n_max_check: int = 5
    n: int = 0
    tol: float = 1e-6
    extrapolate: str | None = "richardson"
    output_path: str | None = None
    format: str = "json"
    timestamp: bool = True
    wavefunctions: bool = False


# ------------------------------------------------------------------ parsing


def parse_grid(text, log=False) -> es.Grid:
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidParams(f"grid must look like a:b:N, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidParams(f"grid must look like a:b:N, got {text!r}") from None
    return es.Grid(a, b, n, es.Coordinate.LOG if log else es.Coordinate.LINEAR)


def _add_system_args(p):
    p.add_argument("--class", dest="class_tag", required=True, choices=CLASSES)
    p.add_argument("--profile", help="catalog profile id (1D classes)")
    p.add_argument("--profile-file", help="JSON profile definition (overrides --profile)")
    p.add_argument("--variant", help="printed (default) or a corrected variant where available")
    for flag in ("--alpha", "--tau", "--lambda", "--xi", "--gamma", "--C"):
        p.add_argument(flag, type=float)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", help="output file (atomic write)")
    p.add_argument("--no-timestamp", action="store_true", help="omit generated_at for byte-identical output")


def build_parser():
    ap = argparse.ArgumentParser(prog="pct-pdm", description="exactly solvable position-dependent-mass systems")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profiles", help="list catalog mass profiles")
    p.add_argument("--id", help="show one profile")
    p.add_argument("--format", choices=("text", "json"), default="text")

    p = sub.add_parser("solve", help="analytic levels and potential samples")
    _add_system_args(p)
    p.add_argument("--nmax", type=int, default=5)
    p.add_argument("--grid", help="sample window a:b:N")
    p.add_argument("--log-grid", action="store_true")
    p.add_argument("--wavefunctions", action="store_true", help="include normalized wavefunction samples")

    p = sub.add_parser("verify", help="compare analytic levels with the finite-difference oracle")
    _add_system_args(p)
    p.add_argument("--ncheck", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--grid", help="a:b:N (u = ln r with --log-grid)")
    p.add_argument("--log-grid", action="store_true")
    p.add_argument("--extrapolate", choices=("none", "richardson", "aitken"), default="richardson")

    p = sub.add_parser("sample", help="x, m, mu, V and normalized phi_n columns")
    _add_system_args(p)
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--grid", help="sample window a:b:N")
    p.add_argument("--log-grid", action="store_true")
    return ap


def config_from_args(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    if args.command == "profiles":
        cfg.profile_id = args.id
        cfg.format = args.format
        return cfg
    cfg.class_tag = args.class_tag
    cfg.profile_id = args.profile
    cfg.profile_file = args.profile_file
    cfg.variant = args.variant
    cfg.format = args.format
    cfg.output_path = args.output
    cfg.timestamp = not args.no_timestamp
    raw = {"alpha": args.alpha, "tau": args.tau, "lam": args.__dict__["lambda"], "xi": args.xi,
           "gamma": args.gamma, "C": args.C}
    cfg.params = {k: v for k, v in raw.items() if v is not None}
    cfg.params["ell"] = args.ell
    if args.grid:
        cfg.grid = parse_grid(args.grid, args.log_grid)
    if args.command == "solve":
        cfg.n_max_check = args.nmax
        cfg.wavefunctions = args.wavefunctions
    elif args.command == "verify":
        cfg.n_max_check = args.ncheck
        cfg.tol = args.tol
        cfg.extrapolate = None if args.extrapolate == "none" else args.extrapolate
    else:
        cfg.n = args.n
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    """Presence and range checks that do not need any computation."""
    tag = cfg.class_tag
    missing = [FLAG_NAMES[k] for k in REQUIRED[tag] if k not in cfg.params]
    if missing:
        raise InvalidParams(f"class {tag} needs {', '.join(missing)}")
    if tag in CLASSES_1D and not (cfg.profile_id or cfg.profile_file):
        raise InvalidParams(f"class {tag} needs --profile or --profile-file")
    if tag in CLASSES_RADIAL and (cfg.profile_id or cfg.profile_file):
        raise InvalidParams("radial classes use the built-in power-law mass; drop --profile")
    for k, v in cfg.params.items():
        if not math.isfinite(v):
            raise InvalidParams(f"{FLAG_NAMES.get(k, k)} must be finite")
    for k in ("tau", "lam", "xi", "C"):
        if k in cfg.params and not cfg.params[k] > 0:
            raise InvalidParams(f"{FLAG_NAMES[k]} must be positive")
    if cfg.params["ell"] < 0:
        raise InvalidParams("--ell must be nonnegative")
    if cfg.n_max_check < 0 or cfg.n < 0:
        raise InvalidParams("level indices must be nonnegative")
    if not cfg.tol > 0:
        raise InvalidParams("--tol must be positive")


# ----------------------------------------------------------- construction


def build_profile(cfg: RunConfig) -> mc.MassProfile:
    if cfg.profile_file:
        try:
            return mc.load_profile(cfg.profile_file)
        except KeyError as exc:
            raise UnknownProfile(exc.args[0]) from None
        except OSError as exc:
            raise InvalidParams(f"cannot read profile file: {exc}") from None
    pid = cfg.profile_id
    if pid not in mc.catalog_ids():
        raise UnknownProfile(pid)
    names = {"example1": ("gamma",), "example2": ("gamma",), "example3": ("gamma",),
             "example4": ("lam",), "powerlaw": ("alpha", "gamma")}.get(pid, ())
    kwargs = {("lambda" if k == "lam" else k): cfg.params[k] for k in names if k in cfg.params}
    return mc.build(pid, **kwargs)


def build_system(cfg: RunConfig):
    p = cfg.params
    tag = cfg.class_tag
    if tag in CLASSES_RADIAL:
        case = tag.split("-", 1)[1]
        return r3.build(case, alpha_m=p.get("alpha", 1.0), gamma=p.get("gamma", 2.0), C=p["C"], ell=p["ell"],
                        variant=cfg.variant)
    profile = build_profile(cfg)
    kwargs = {k: p[k] for k in ("alpha", "tau", "lam", "xi") if k in p}
    return pm.build(tag, profile, variant=cfg.variant, **kwargs)


# ------------------------------------------------------------------ output


def _num(v):
    if v is None:
        return None
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _fmt(v):
    """CSV cell: repr-exact floats, empty for missing."""
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_json(doc, cfg: RunConfig):
    out = {"schema": es.SCHEMA, **doc}
    if cfg.timestamp:
        out["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return json.dumps(es._clean(out), indent=2, sort_keys=True, allow_nan=False) + "\n"


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def emit(text, cfg: RunConfig, stdout):
    if cfg.output_path:
        atomic_write(cfg.output_path, text)
    else:
        stdout.write(text)


def fallback_window(system, width=10.0):
    """Sampling window for systems whose analytic states do not decay."""
    a, b = system.operative_domain
    lo = a if math.isfinite(a) else (b if math.isfinite(b) else 0.0) - width
    hi = b if math.isfinite(b) else max(lo, 0.0) + width
    return lo, hi


def sample_points(system, cfg: RunConfig, ns):
    """Physical sample positions strictly inside the operative domain."""
    if cfg.grid is not None:
        g = cfg.grid
        u = np.linspace(g.a, g.b, g.N)
        xs = np.exp(u) if g.coordinate is es.Coordinate.LOG else u
    else:
        try:
            lo, hi = pm.truncation_box(system, ns)
        except NonNormalizable:
            lo, hi = fallback_window(system)
        if system.log_grid and lo > 0:
            xs = np.geomspace(lo, hi, SAMPLE_POINTS)
        else:
            xs = np.linspace(lo, hi, SAMPLE_POINTS)
    a, b = system.operative_domain
    xs = xs[(xs > a) & (xs < b)]
    for s in system.singular_points:
        xs = xs[xs != s]
    if xs.size == 0:
        raise EmptyDomain("no sample point falls inside the operative domain")
    return xs


# ---------------------------------------------------------------- commands


def cmd_profiles(cfg: RunConfig, stdout):
    if cfg.profile_id is not None and cfg.profile_id not in mc.catalog_ids():
        raise UnknownProfile(cfg.profile_id)
    rows = [mc.build(cfg.profile_id).describe()] if cfg.profile_id else [p.describe() for p in mc.catalog()]
    if cfg.format == "json":
        stdout.write(json.dumps({"schema": es.SCHEMA, "profiles": rows}, indent=2, sort_keys=True) + "\n")
        return EXIT_OK
    lines = []
    for r in rows:
        params = ", ".join(f"{k}={v:g}" for k, v in sorted(r["params"].items())) or "-"
        lines.append(
            f"{r['id']:<10} m(x) = {r['m']}\n"
            f"{'':<10} mu(x) = {r['mu']}{'' if r['closed_mu'] else ' (numeric)'}\n"
            f"{'':<10} params: {params}; domain: ({r['domain'][0]}, {r['domain'][1]}); anchor: {r['anchor']}"
        )
    stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_solve(cfg: RunConfig, stdout):
    system = build_system(cfg)
    levels = system.levels(cfg.n_max_check)
    ns = [n for n, _ in levels]
    xs = sample_points(system, cfg, ns)
    V = np.asarray(system.V(xs), dtype=float)
    doc = {
        "class": system.class_tag.value,
        "profile": system.profile_id,
        "params": {k: v for k, v in cfg.params.items()},
        "metadata": system.metadata(),
        "levels": [{"n": n, "E": _num(E)} for n, E in levels],
        "potential_samples": [{"x": float(x), "V": _num(v)} for x, v in zip(xs, V)],
    }
    waves = {}
    if cfg.wavefunctions:
        waves = {n: np.asarray(system.normalized_phi(n, xs), dtype=float) for n in ns}
        doc["wavefunction_samples"] = [
            {"n": n, "x": [float(x) for x in xs], "phi": [_num(v) for v in waves[n]]} for n in ns
        ]
    if cfg.format == "json":
        emit(to_json(doc, cfg), cfg, stdout)
    else:
        rows = [("level", n, None, float(E)) for n, E in levels]
        rows += [("potential", None, float(x), float(v)) for x, v in zip(xs, V)]
        for n, vals in waves.items():
            rows += [("phi", n, float(x), float(v)) for x, v in zip(xs, vals)]
        emit(to_csv(CSV_HEADERS["solve"], rows), cfg, stdout)
    return EXIT_OK


def _table(report: es.SpectrumReport):
    head = f"{'n':>3} {'E_analytic':>20} {'E_numeric':>20} {'rel_err':>10} {'overlap':>14}"
    lines = [head]
    for p in report.pairs:
        lines.append(f"{p.n:>3} {p.E_analytic:>20.12g} {p.E_numeric:>20.12g} {p.rel_err:>10.3e} {p.overlap:>14.10f}")
    for n in report.unmatched_analytic:
        lines.append(f"{n:>3} {'(unmatched)':>20}")
    chosen = report.adjudication.get("chosen")
    lines.append("numeric: " + ", ".join(f"{e:.10g}" for e in report.numeric))
    for name, off in sorted(report.offsets.items()):
        if off.get("mean") is not None:
            lines.append(f"offset numeric - {name}: mean {off['mean']:.10g}, spread {off['spread']:.3e}")
    lines.append(f"candidate: {report.candidate}; supported: {chosen}; passed: {report.passed}")
    return "\n".join(lines) + "\n"


def cmd_verify(cfg: RunConfig, stdout):
    system = build_system(cfg)
    report = es.verify(system, cfg.grid, cfg.n_max_check, cfg.tol, cfg.extrapolate)
    if cfg.format == "json":
        text = to_json({"command": "verify", "params": dict(cfg.params), **report.to_dict()}, cfg)
    else:
        rows = [(p.n, p.E_analytic, p.E_numeric, p.abs_err, p.rel_err, p.overlap, p.residual) for p in report.pairs]
        rows += [(n, float(system.energy_candidates[report.candidate](n)), None, None, None, None, None)
                 for n in report.unmatched_analytic]
        rows.sort(key=lambda r: r[0])
        text = to_csv(CSV_HEADERS["verify"], rows)
    if cfg.output_path:
        atomic_write(cfg.output_path, text)
    stdout.write(_table(report))
    return EXIT_OK if report.passed else EXIT_MISMATCH


def cmd_sample(cfg: RunConfig, stdout):
    system = build_system(cfg)
    system.check_n(cfg.n)
    xs = sample_points(system, cfg, [cfg.n])
    prof = system.profile
    cols = {
        "x": xs,
        "m": np.asarray(prof.m(xs), dtype=float),
        "mu": np.asarray(mc.mu(prof, system.params.tau, xs), dtype=float),
        "V": np.asarray(system.V(xs), dtype=float),
        "phi": np.asarray(system.normalized_phi(cfg.n, xs), dtype=float),
    }
    if cfg.format == "json":
        doc = {
            "class": system.class_tag.value,
            "profile": system.profile_id,
            "n": cfg.n,
            "params": dict(cfg.params),
            "A": system.A(cfg.n),
            "columns": {k: [_num(v) for v in col] for k, col in cols.items()},
        }
        emit(to_json(doc, cfg), cfg, stdout)
    else:
        rows = zip(*(cols[k].tolist() for k in CSV_HEADERS["sample"]))
        emit(to_csv(CSV_HEADERS["sample"], rows), cfg, stdout)
    return EXIT_OK


COMMANDS = {"profiles": cmd_profiles, "solve": cmd_solve, "verify": cmd_verify, "sample": cmd_sample}


def _join_grid(argv):
    """Let ``--grid -12:12:4000`` through argparse, which would read the value as an option."""
    out, it = [], iter(argv)
    for tok in it:
        if tok == "--grid":
            nxt = next(it, None)
            out.append(tok if nxt is None else f"--grid={nxt}")
        else:
            out.append(tok)
    return out


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    argv = _join_grid(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg, stdout)
    except UnknownProfile as exc:
        print(f"pct-pdm: error: unknown profile {exc.args[0]!r}", file=stderr)
        return EXIT_INVALID
    except EmptyDomain as exc:
        print(f"pct-pdm: error: empty domain: {exc}", file=stderr)
        return EXIT_FAILURE
    except (InvalidParams, ParseError, ValueError) as exc:
        print(f"pct-pdm: error: {exc}", file=stderr)
        return EXIT_INVALID
    except (PctError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"pct-pdm: error: solver failure: {exc}", file=stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(json.dumps(es._clean(diag), sort_keys=True), file=stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
