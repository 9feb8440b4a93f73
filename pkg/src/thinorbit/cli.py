"""Command-line entry point: ``thinorbit <command> [options]``.

Every command builds a set of named outputs (CSV tables plus a JSON report).
With ``--out DIR`` they are written there; otherwise the primary output is
printed. Errors produce a JSON error report on stderr and exit status 2.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from pathlib import Path

from . import region
from .ball import (
    ball_csv,
    build_sectors,
    check_free_desk,
    check_no_parabolics,
    enumerate_ball,
    validate_pruning,
)
from .circle import (
    ArcParams,
    arc_report_json,
    arcs_csv,
    main_and_error,
    window_sweep,
)
from .errors import ConfigurationError, InputError, ResourceError, ThinOrbitError
from .gl2 import ThinGroup, resolve_group
from .growth import dyadic_counts, fit_growth
from .local import AdmissibilityOracle, bad_primes, singular_series
from .orbit import (
    OrbitConfig,
    exceptional_csv,
    exceptional_set,
    histogram_simple,
    histogram_triple,
    multiplicity_profile,
)

COMMANDS = ("enumerate", "histogram", "admissible", "exceptional", "singular", "arcs",
            "dimension", "region")


@dataclass
class RunConfig:
    group: str = "sanov:2"
    v0: str = "0,1"
    w0: str = "0,1"
    N: str | None = None
    sigma: float | None = None
    alpha0: float = 0.1
    kappa0: float = 0.1
    qmax: int = 64
    pmax: int = 31
    grid: str | None = None
    n: str | None = None
    delta: str | None = None
    mode: str = "pruned"
    max_length: int | None = None
    validate_N: float = 10.0
    format: str = "csv"

    def report(self) -> dict:
        return {k: v for k, v in asdict(self).items()}


# --- parsing helpers ---------------------------------------------------------------

_POW = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*\^\s*(\d+(?:\.\d+)?)\s*$")


def parse_radius(text: str) -> float:
    m = _POW.match(text)
    if m:
        return float(m.group(1)) ** float(m.group(2))
    try:
        return float(text)
    except ValueError:
        raise InputError(f"cannot read radius {text!r}") from None


def parse_dyadic_range(text: str) -> tuple[int, int]:
    """``2^a..2^b`` -> (a, b); a single ``2^a`` gives (a, a)."""
    parts = text.split("..")
    exps = []
    for p in parts:
        m = _POW.match(p)
        if not m or float(m.group(1)) != 2:
            raise InputError(f"expected dyadic radii like 2^8..2^12, got {text!r}")
        exps.append(int(float(m.group(2))))
    if len(exps) == 1:
        exps.append(exps[0])
    a, b = exps
    if len(parts) > 2 or a > b:
        raise InputError(f"bad dyadic range {text!r}")
    return a, b


def parse_vector(text: str) -> tuple[int, int]:
    try:
        x, y = (int(t) for t in text.replace("(", "").replace(")", "").split(","))
    except ValueError:
        raise InputError(f"expected a vector 'x,y', got {text!r}") from None
    return x, y


def parse_int_range(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..")
        return list(range(int(a), int(b) + 1))
    return [int(t) for t in text.split(",")]


def read_config_file(path: str) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        k, v = (t.strip() for t in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = RunConfig()
    types = {f.name: f for f in fields(RunConfig)}
    merged = read_config_file(args.config) if args.config else {}
    for k, v in vars(args).items():
        if k in types and v is not None:
            merged[k] = v
    for k, v in merged.items():
        if k not in types:
            raise InputError(f"unknown configuration key {k!r}")
        default = getattr(RunConfig, k)
        if isinstance(v, str) and k in ("sigma", "alpha0", "kappa0", "validate_N"):
            v = float(v)
        elif isinstance(v, str) and k in ("qmax", "pmax", "max_length"):
            v = int(v)
        setattr(cfg, k, v if v is not None else default)
    if cfg.format not in ("csv", "json"):
        raise InputError(f"format must be csv or json, got {cfg.format!r}")
    return cfg


# --- shared pipeline pieces ----------------------------------------------------------------


def _group(cfg: RunConfig) -> ThinGroup:
    return resolve_group(cfg.group)


def _orbit(cfg: RunConfig, group: ThinGroup) -> OrbitConfig:
    return OrbitConfig(group, parse_vector(cfg.v0), parse_vector(cfg.w0))


def _single_N(cfg: RunConfig) -> float:
    if cfg.N is None:
        raise InputError("--N is required for this command", bound="N")
    if ".." in cfg.N:
        raise InputError("this command takes a single radius, not a range")
    return parse_radius(cfg.N)


def _validated(cfg: RunConfig, group: ThinGroup) -> tuple[ThinGroup, dict]:
    """Pruned enumeration is only trusted after agreeing with the exhaustive oracle."""
    if cfg.mode != "pruned":
        return group, {"mode": cfg.mode}
    group, rep = validate_pruning(group, cfg.validate_N, cfg.max_length)
    if "pruning_validated" not in group.stamps:
        raise ConfigurationError("pruned enumeration disagrees with the exhaustive oracle",
                                 bound="pruning validation")
    return group, dict(rep, mode="pruned")


def _ball(cfg: RunConfig, group: ThinGroup, N: float, threads: int):
    return enumerate_ball(group, N, cfg.mode, max_length=cfg.max_length, workers=threads)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- commands --------------------------------------------------------------------------------


def cmd_enumerate(cfg: RunConfig, threads: int) -> dict[str, str]:
    N = _single_N(cfg)
    group, validation = _validated(cfg, _group(cfg))
    ball = _ball(cfg, group, N, threads)
    parab, free = check_no_parabolics(ball), check_free_desk(ball)
    rep = {
        "command": "enumerate", "config": cfg.report(), "group": group.spec(), "size": len(ball),
        "validation": validation, "enumeration": ball.report,
        "no_parabolics": {"passed": parab.passed, "offenders": parab.offenders[:20],
                          "offender_count": len(parab.offenders)},
        "free": {"passed": free.passed, "collisions": free.offenders[:20], **free.detail},
    }
    return {"ball.csv": ball_csv(ball), "report.json": _dumps(rep)}


def cmd_histogram(cfg: RunConfig, threads: int) -> dict[str, str]:
    N = _single_N(cfg)
    group, validation = _validated(cfg, _group(cfg))
    orbit = _orbit(cfg, group)
    ball = _ball(cfg, group, N, threads)
    hist = histogram_simple(ball, orbit)
    prof = multiplicity_profile(hist, N)
    rep = {"command": "histogram", "config": cfg.report(), "validation": validation,
           "simple": dict(hist.report(), mean_multiplicity=prof.mean, max_multiplicity=prof.max)}
    out = {"histogram.csv": hist.to_csv()}
    if cfg.sigma is not None:
        sectors = build_sectors(ball.restrict(math.sqrt(N)), cfg.sigma, N)
        small = ball.restrict(N**cfg.sigma)
        triple = histogram_triple(sectors, small, orbit)
        out["triple.csv"] = triple.to_csv()
        rep["triple"] = dict(triple.report(), sectors=sectors.summary())
    out["report.json"] = _dumps(rep)
    return out


def cmd_admissible(cfg: RunConfig, threads: int) -> dict[str, str]:
    if cfg.n is None:
        raise InputError("--n is required (an integer, a list a,b,c or a range a..b)", bound="n")
    orbit = _orbit(cfg, _group(cfg))
    oracle = AdmissibilityOracle(orbit, cfg.qmax)
    certs = [oracle.certificate(n).to_json() for n in parse_int_range(cfg.n)]
    lines = "n,verdict\n" + "".join(f"{c['n']},{c['verdict']}\n" for c in certs)
    rep = {"command": "admissible", "config": cfg.report(), "stabilized": oracle.stabilized,
           "certificates": certs}
    return {"admissible.csv": lines, "report.json": _dumps(rep)}


def cmd_exceptional(cfg: RunConfig, threads: int) -> dict[str, str]:
    if cfg.N is None:
        raise InputError("--N is required, e.g. 2^8..2^12", bound="N")
    a, b = parse_dyadic_range(cfg.N)
    group, validation = _validated(cfg, _group(cfg))
    orbit = _orbit(cfg, group)
    oracle = AdmissibilityOracle(orbit, cfg.qmax)
    big = _ball(cfg, group, 2.0**b, threads)
    out = {"exceptional.csv": ""}
    table = "N,admissible,exceptional,fraction\n"
    rows = []
    for e in range(a, b + 1):
        N = 2**e
        hist = histogram_simple(big.restrict(float(N)), orbit)
        exc = exceptional_set(hist, oracle, N)
        n_adm = sum(1 for n in range(-N + 1, N) if oracle(n))
        frac = len(exc) / n_adm if n_adm else 0.0
        table += f"{N},{n_adm},{len(exc)},{frac:.12g}\n"
        rows.append({"N": N, "admissible": n_adm, "exceptional": len(exc), "fraction": frac})
        out[f"exceptional_{N}.csv"] = exceptional_csv(exc)
    out["exceptional.csv"] = table
    out["report.json"] = _dumps({"command": "exceptional", "config": cfg.report(),
                                 "validation": validation, "rows": rows})
    return out


def cmd_singular(cfg: RunConfig, threads: int) -> dict[str, str]:
    if cfg.n is None:
        raise InputError("--n is required", bound="n")
    orbit = _orbit(cfg, _group(cfg))
    reps, out = [], {}
    for n in parse_int_range(cfg.n):
        s = singular_series(n, orbit, cfg.pmax)
        out[f"factors_{n}.csv"] = s.to_csv()
        reps.append({"n": n, "value": s.value, "exact": str(s.exact),
                     "good_product": str(s.good_product), "bad_primes": s.bad_primes})
    first = next(iter(out))
    ordered = {first: out.pop(first)}
    ordered.update(out)
    ordered["report.json"] = _dumps({"command": "singular", "config": cfg.report(), "series": reps})
    return ordered


def cmd_arcs(cfg: RunConfig, threads: int) -> dict[str, str]:
    N = _single_N(cfg)
    group, validation = _validated(cfg, _group(cfg))
    hist = histogram_simple(_ball(cfg, group, N, threads), _orbit(cfg, group))
    arc = ArcParams.from_exponents(N, cfg.alpha0, cfg.kappa0)
    ext = int(math.ceil(N)) - 1
    M, E = main_and_error(hist, arc, -ext, ext)
    grid = int(cfg.grid) if cfg.grid is not None else None
    sweep = window_sweep(hist, N, grid, cfg.delta and float(cfg.delta), cfg.sigma)
    rep = {"command": "arcs", "config": cfg.report(), "validation": validation,
           "arc": json.loads(arc_report_json(arc)), "sum_error_sq": sum(v * v for v in E.values()),
           "window_partition_gap": sweep.partition_gap, "core_l2": sweep.core_l2,
           "total_l2": sweep.total_l2}
    return {"arcs.csv": arcs_csv(hist, M, E), "windows.csv": sweep.to_csv(),
            "report.json": _dumps(rep)}


def cmd_dimension(cfg: RunConfig, threads: int) -> dict[str, str]:
    if cfg.N is None:
        raise InputError("--N is required, e.g. 2^6..2^12", bound="N")
    a, b = parse_dyadic_range(cfg.N)
    group, validation = _validated(cfg, _group(cfg))
    if cfg.mode != "pruned":
        raise InputError("dimension fits use pruned enumeration")
    fit = fit_growth(dyadic_counts(group, a, b))
    rep = {"command": "dimension", "config": cfg.report(), "validation": validation,
           "fit": fit.report(), "bad_primes_upto_31": bad_primes(group, 31)}
    return {"counts.csv": fit.to_csv(), "report.json": _dumps(rep)}


def cmd_region(cfg: RunConfig, threads: int) -> dict[str, str]:
    d_min = region.minimal_delta(1e-12)
    s_crit = region.critical_sigma(1e-12)
    delta = Fraction(cfg.delta) if cfg.delta else Fraction(d_min) + Fraction(1, 10**7)
    sigma = Fraction(str(cfg.sigma)) if cfg.sigma is not None else Fraction(s_crit)
    cover = region.full_cover(delta, sigma)
    rep = region.region_report(delta, sigma, cover)
    derived = region.derive_critical_polynomial()
    rep.update({
        "command": "region", "config": cfg.report(),
        "minimal_delta": round(d_min, 10), "critical_sigma": round(s_crit, 12),
        "derived_cubic": list(derived.coefficients), "derived_matches": derived.matches_published,
    })
    if cfg.grid is not None:
        g = region.full_cover(delta, sigma, "grid", Fraction(cfg.grid))
        rep["grid_cover"] = {"h": cfg.grid, "covered": g.covered, "witness": g.witness_float()}
    summary = (f"minimal_delta {d_min:.10f}\ncritical_sigma {s_crit:.12f}\n"
               f"covered {str(cover.covered).lower()}\n")
    return {
        "summary.txt": summary,
        "region.json": region.region_json(rep),
        "feasibility.csv": region.feasibility_grid_data(),
        "cubic.csv": region.cubic_curve_data(),
        "polygons.csv": region.polygon_data(delta, sigma),
    }


HANDLERS = {
    "enumerate": cmd_enumerate, "histogram": cmd_histogram, "admissible": cmd_admissible,
    "exceptional": cmd_exceptional, "singular": cmd_singular, "arcs": cmd_arcs,
    "dimension": cmd_dimension, "region": cmd_region,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thinorbit", description="Orbit values of thin subgroups of SL(2, Z).")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value file; explicit flags take precedence")
    p.add_argument("--group", help="sanov:k, commutator:k or a generator file")
    p.add_argument("--v0")
    p.add_argument("--w0")
    p.add_argument("--N", help="radius, e.g. 1024 or 2^10; ranges 2^a..2^b where allowed")
    p.add_argument("--sigma", type=float)
    p.add_argument("--delta", help="exact decimal or fraction (region)")
    p.add_argument("--alpha0", type=float)
    p.add_argument("--kappa0", type=float)
    p.add_argument("--qmax", type=int)
    p.add_argument("--pmax", type=int)
    p.add_argument("--grid", help="theta-grid size (arcs) or lattice step (region)")
    p.add_argument("--n", help="integer, list a,b,c or range a..b")
    p.add_argument("--mode", choices=("pruned", "exhaustive_by_length"))
    p.add_argument("--max-length", dest="max_length", type=int)
    p.add_argument("--validate-N", dest="validate_N", type=float)
    p.add_argument("--out", help="output directory; omitted = print the primary output")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--threads", type=int, default=1)
    return p


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.threads < 1:
            raise InputError("--threads must be >= 1", bound="threads >= 1")
        outputs = HANDLERS[args.command](cfg, args.threads)
    except ResourceError as exc:
        _error(exc, {"partial_count": exc.partial_count})
        return 2
    except (ThinOrbitError, OSError, ValueError) as exc:
        _error(exc)
        return 2
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for name, text in outputs.items():
            (out / name).write_text(text)
    if args.command == "region":
        stdout.write(outputs["summary.txt"])
    elif not args.out:
        key = "report.json" if cfg.format == "json" else next(iter(outputs))
        stdout.write(outputs[key])
    return 0


def _error(exc: Exception, extra: dict | None = None) -> None:
    rep = {"error": type(exc).__name__, "message": str(exc)}
    bound = getattr(exc, "bound", None)
    if bound:
        rep["bound"] = bound
    rep.update(extra or {})
    sys.stderr.write(json.dumps(rep, sort_keys=True) + "\n")


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
