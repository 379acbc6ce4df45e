"""Command-line entry point.

Exit codes: 0 all checked properties hold, 1 a checked property fails,
2 usage or input error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
from itertools import product
from pathlib import Path

from . import __version__
from .conjecture_explorer import DEFAULT_STARTS, FamilyHandle, chebyshev_grid, explore
from .distributions import dist_from_dict
from .errors import DomainError, NStableError, SamplerTruncationError
from .extremes import PASS_THRESHOLD, check_max_stability, check_min_stability
from .functional_checks import (
    IDENTITY_THRESHOLD,
    default_s_grid,
    involution_residual,
    inverse_closure_fit,
    self_inverse_residual,
    semigroup_residual,
)
from .montecarlo import SimConfig, run_simulation
from .pgf_core import Family, PgfSpec, geometric_family, harris_family, shaked_family, validate_pgf

SCHEMA_VERSION = 1
OUT_ENV = "NSTABLE_OUT_DIR"
CHECKS = ("involution", "self_inverse", "inverse_closure", "semigroup", "validity")


class InputError(Exception):
    pass


def _load_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if not text.strip():
        raise InputError(f"{path} is empty")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV, "nstable-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict) -> str:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return str(path)


def _write_manifest(out: Path, command: str, inputs: dict, seed, outputs: list[str]):
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "seed": seed,
        "tool_version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": outputs,
    }
    _write_json(out / "manifest.json", manifest)


def _family_of(spec: PgfSpec):
    """(member builder, own parameter, default parameter values) for closed families."""
    if spec.family is Family.GEOMETRIC:
        return geometric_family(), spec.params[0], (0.3, 0.5, 0.7)
    if spec.family is Family.HARRIS:
        return harris_family(spec.params[1], spec.explorer), spec.params[0], (1.5, 2.0, 3.0)
    if spec.family is Family.SHAKED:
        return shaked_family(explorer=True), spec.params[0], (2.0, 3.0)
    return None


# -- commands ---------------------------------------------------------------

def cmd_check_pgf(args) -> int:
    spec = PgfSpec.from_dict(_load_json(args.spec))
    wanted = args.checks or list(CHECKS)
    s = default_s_grid(args.grid_density)
    threshold = args.threshold if args.threshold is not None else IDENTITY_THRESHOLD
    out = _out_dir(args)
    results, outputs = {}, []
    fam = _family_of(spec)

    def record(name, report, passed, **extra):
        results[name] = {**report.to_dict(), "passed": bool(passed), **extra}
        csv_path = out / f"{name}.csv"
        csv_path.write_text(report.to_csv())
        outputs.append(str(csv_path))

    for name in wanted:
        if name == "involution":
            rep = involution_residual(spec, s)
            record(name, rep, rep.passes(threshold))
        elif name == "self_inverse":
            rep = self_inverse_residual(spec, s)
            record(name, rep, rep.passes(threshold))
        elif name == "inverse_closure":
            if fam is None:
                results[name] = {"skipped": f"{spec.family.value} has no one-parameter family"}
                continue
            member, u, _ = fam
            lam, rep = inverse_closure_fit(member, u, s)
            record(name, rep, rep.passes(threshold), lambda_best=lam)
        elif name == "semigroup":
            if fam is None:
                results[name] = {"skipped": f"{spec.family.value} has no one-parameter family"}
                continue
            member, u, defaults = fam
            values = sorted({u, *defaults})
            rep = semigroup_residual(member, list(product(values, values)), s)
            record(name, rep, rep.passes(threshold))
        elif name == "validity":
            val = validate_pgf(spec)
            results[name] = {**val.to_dict(), "passed": val.valid}
    passed = all(r.get("passed", True) for r in results.values())
    report = {"schema_version": SCHEMA_VERSION, "spec": spec.to_dict(),
              "threshold": threshold, "checks": results, "passed": passed}
    outputs.insert(0, _write_json(out / "check_pgf.json", report))
    _write_manifest(out, "check-pgf", {"spec": spec.to_dict(), "checks": wanted,
                                       "grid_density": args.grid_density}, None, outputs)
    _say(args, f"check-pgf {spec!r}: " + ", ".join(
        f"{k}={'pass' if v.get('passed', True) else 'FAIL'}" for k, v in results.items()))
    return 0 if passed else 1


def cmd_check_stability(args) -> int:
    pgf = PgfSpec.from_dict(_load_json(args.pgf))
    dist = dist_from_dict(_load_json(args.dist), Path(args.dist).parent)
    threshold = args.threshold if args.threshold is not None else PASS_THRESHOLD
    check = check_max_stability if args.kind == "max" else check_min_stability
    rep = check(pgf, dist, threshold)
    out = _out_dir(args)
    payload = {"schema_version": SCHEMA_VERSION, "pgf": pgf.to_dict(),
               "dist": dist.to_dict(), **rep.to_dict()}
    path = _write_json(out / "stability.json", payload)
    _write_manifest(out, "check-stability", {"pgf": pgf.to_dict(), "dist": dist.to_dict(),
                                             "kind": args.kind}, None, [path])
    _say(args, f"check-stability {args.kind} {pgf!r} x {dist!r}: "
               f"{'pass' if rep.passed else 'FAIL'} (residual {rep.max_residual:.3e})")
    return 0 if rep.passed else 1


def cmd_simulate(args) -> int:
    raw = _load_json(args.config)
    if not isinstance(raw, dict):
        raise InputError("simulation config must be a JSON object")
    if args.trials is not None:
        raw["trials"] = args.trials
    if args.seed is not None:
        raw["seed"] = args.seed
    config = SimConfig.from_dict(raw, Path(args.config).parent)
    out = _out_dir(args)
    try:
        result = run_simulation(config, workers=args.workers)
    except SamplerTruncationError as exc:
        print(f"simulate: {exc}", file=sys.stderr)
        return 1
    outputs = result.write(out)
    _write_manifest(out, "simulate", {"config": config.to_dict()}, config.seed,
                    list(outputs.values()))
    _say(args, f"simulate {config.kind} {config.pgf!r} x {config.dist!r}: KS {result.ks:.5f} "
               f"(tolerance {config.ks_tolerance}) {'pass' if result.passed else 'FAIL'}")
    return 0 if result.passed else 1


def _parse_box(raw) -> dict:
    if not isinstance(raw, dict):
        raise InputError("box must be a JSON object mapping parameter names to [lo, hi]")
    box = {}
    for key, iv in raw.items():
        if isinstance(iv, (int, float)) and not isinstance(iv, bool):
            box[key] = float(iv)
            continue
        if (not isinstance(iv, list) or len(iv) != 2
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in iv)):
            raise InputError(f"box entry {key!r} must be [lo, hi] or a number")
        box[key] = (float(iv[0]), float(iv[1]))
    return box


def cmd_explore(args) -> int:
    box = _parse_box(_load_json(args.box)) if args.box else {}
    family = FamilyHandle.builtin(args.family, **box)
    seed = args.seed if args.seed is not None else 0
    res = explore(family, n_starts=args.starts, seed=seed,
                  s_grid=chebyshev_grid(args.grid_density))
    out = _out_dir(args)
    stem = family.name.lower()
    json_path = _write_json(out / f"explore_{stem}.json",
                            {"schema_version": SCHEMA_VERSION, **res.to_dict()})
    csv_path = out / f"explore_{stem}_trace.csv"
    csv_path.write_text(res.trace_csv())
    _write_manifest(out, "explore", {"family": family.to_dict(), "starts": args.starts,
                                     "grid_density": args.grid_density}, seed,
                    [json_path, str(csv_path)])
    best = ", ".join(f"{k}={v:.6g}" for k, v in res.best.items())
    _say(args, f"explore {family.name}: best {best}, joint residual {res.joint_residual:.3e}, "
               f"locus distance {res.locus_distance:.3g}")
    _say(args, res.label)
    return 0 if res.converged else 1


def _say(args, msg):
    if not getattr(args, "quiet", False):
        print(msg)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nstable", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./nstable-out)")
        sp.add_argument("-q", "--quiet", action="store_true")

    sp = sub.add_parser("check-pgf", help="functional-equation residuals of a PGF spec")
    sp.add_argument("spec", help="PGF spec JSON file")
    sp.add_argument("--checks", nargs="+", choices=CHECKS)
    sp.add_argument("--grid-density", type=int, default=99)
    sp.add_argument("--threshold", type=float)
    common(sp)
    sp.set_defaults(func=cmd_check_pgf)

    sp = sub.add_parser("check-stability", help="N-max / N-min stability of a distribution")
    sp.add_argument("pgf", help="PGF spec JSON file")
    sp.add_argument("dist", help="distribution spec JSON file")
    sp.add_argument("--kind", choices=("max", "min"), required=True)
    sp.add_argument("--threshold", type=float)
    common(sp)
    sp.set_defaults(func=cmd_check_stability)

    sp = sub.add_parser("simulate", help="Monte Carlo check of an N-extreme transform")
    sp.add_argument("config", help="simulation config JSON file")
    sp.add_argument("--trials", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("explore", help="search a PGF family for joint solutions")
    sp.add_argument("family", help="harris-continuous, geo-shaked-mixture or mobius-perturbed")
    sp.add_argument("--box", help="JSON file mapping parameter names to [lo, hi]")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--starts", type=int, default=DEFAULT_STARTS)
    sp.add_argument("--grid-density", type=int, default=33)
    common(sp)
    sp.set_defaults(func=cmd_explore)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, DomainError) as exc:
        print(f"{args.command}: input error: {exc}", file=sys.stderr)
        return 2
    except NStableError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"{args.command}: input error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
