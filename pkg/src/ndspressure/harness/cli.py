"""Command-line entry point: ``ndspressure {estimate,sweep,verify,define}``.

Exit status: 0 when every check passes, 1 when a check fails, 2 for a
malformed config, 3 when an estimate is infeasible (no cover at the
requested depth / radius).
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from ..lp import InfeasibleCover
from ..measures import integrated_exponent
from ..pressure import BracketError, bowen_pressure, packing_pressure
from . import checks
from .config import (
    PRESETS,
    ConfigError,
    PotentialConfig,
    build_measure,
    build_potential,
    build_system,
    estimator_for,
    parse_measure,
    parse_potential,
    parse_system,
    write_config,
)

COLUMNS = ["instance", "quantity", "eps", "N", "n_max", "s_star", "value", "lower", "upper", "pass", "runtime_ms"]
QUANTITIES = ("bowen-entropy", "packing-entropy", "bowen-pressure", "packing-pressure",
              "measure-lower", "measure-upper")

log = logging.getLogger("ndspressure")


def _eps_list(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad eps list {text!r}") from exc
    if not vals or any(v <= 0 for v in vals):
        raise argparse.ArgumentTypeError("eps values must be positive")
    return vals


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _r(x) -> str:
    return repr(float(x))


def _write_csv(rows: list[dict], path: Path | None) -> None:
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=COLUMNS)
            w.writeheader()
            w.writerows(rows)
    w = csv.DictWriter(sys.stdout, fieldnames=COLUMNS)
    w.writeheader()
    w.writerows(rows)


def _load(args):
    sys_cfg = parse_system(Path(args.system).read_text())
    pot_cfg = parse_potential(Path(args.potential).read_text()) if args.potential else PotentialConfig()
    system = build_system(sys_cfg)
    est = estimator_for(sys_cfg, args.eps, args.nmax, args.nmin, args.tol)
    return sys_cfg, system, build_potential(pot_cfg), est


def _estimator(quantity: str):
    return bowen_pressure if quantity.startswith("bowen") else packing_pressure


def _measure_estimate(args, sys_cfg, system, f, est) -> int:
    if not args.measure:
        raise ConfigError("measure quantities need --measure")
    mu = build_measure(parse_measure(Path(args.measure).read_text()), system.shift)
    which = args.quantity.split("-")[1]
    t = time.perf_counter()
    res = integrated_exponent(mu, system, f, est.eps_schedule, est.n_max, which=which,
                              rng=np.random.default_rng(args.seed))
    ms = int(round(1000 * (time.perf_counter() - t)))
    row = {"instance": sys_cfg.label or system.label, "quantity": args.quantity, "eps": _r(res.eps),
           "N": "", "n_max": est.n_max, "s_star": _r(res.value), "value": _r(res.value),
           "lower": _r(res.value - 2 * res.stderr), "upper": _r(res.value + 2 * res.stderr), "pass": 1,
           "runtime_ms": ms}
    _write_csv([row], Path(args.out) / "estimate.csv" if args.out else None)
    return 0


def cmd_estimate(args) -> int:
    sys_cfg, system, f, est = _load(args)
    if args.quantity.startswith("measure"):
        return _measure_estimate(args, sys_cfg, system, f, est)
    if args.quantity.endswith("entropy"):
        f = None
    t = time.perf_counter()
    res = _estimator(args.quantity)(system, f, None, est)
    ms = int(round(1000 * (time.perf_counter() - t)))
    ok = True
    lower = upper = ""
    if args.expect is not None:
        ok = abs(res.value - args.expect) <= args.expect_tol
        lower, upper = _r(args.expect - args.expect_tol), _r(args.expect + args.expect_tol)
    row = {"instance": sys_cfg.label or system.label, "quantity": args.quantity, "eps": _r(res.per_eps[-1][0]),
           "N": res.depth_range[0], "n_max": res.depth_range[1], "s_star": _r(res.value),
           "value": _r(res.value), "lower": lower, "upper": upper, "pass": int(ok), "runtime_ms": ms}
    _write_csv([row], Path(args.out) / "estimate.csv" if args.out else None)
    for flag in res.flags:
        log.warning("%s", flag)
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    sys_cfg, system, f, est = _load(args)
    if args.quantity.endswith("entropy"):
        f = None
    rows = []
    fn = _estimator(args.quantity)
    n_values = args.nsweep or (est.n_min or est.n_max,)
    for n in n_values:
        cfg = estimator_for(sys_cfg, est.eps_schedule, est.n_max, n, args.tol)
        t = time.perf_counter()
        res = fn(system, f, None, cfg)
        ms = int(round(1000 * (time.perf_counter() - t)))
        for eps, s in res.per_eps:
            rows.append({"instance": sys_cfg.label or system.label, "quantity": args.quantity, "eps": _r(eps),
                         "N": res.depth_range[0], "n_max": res.depth_range[1], "s_star": _r(s), "value": _r(s),
                         "lower": "", "upper": "", "pass": 1, "runtime_ms": ms})
    _write_csv(rows, Path(args.out) / "sweep.csv" if args.out else None)
    return 0


def cmd_verify(args) -> int:
    names = list(checks.SUITES) if args.suite == "all" else [args.suite]
    out = Path(args.out) if args.out else None
    all_ok = True
    summary = []
    for name in names:
        reports = checks.SUITES[name](quick=args.quick, seed=args.seed)
        rows = [r.row() for r in reports]
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)
            with open(out / f"{name}.csv", "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=COLUMNS)
                w.writeheader()
                w.writerows(rows)
        for r in reports:
            tag = "PASS" if r.passed else "FAIL"
            if r.informative:
                tag += " (informative)"
            summary.append(f"{tag:20s} {name:12s} {r.instance:28s} {r.name:32s} lhs={r.lhs:.6g} rhs={r.rhs:.6g} tol={r.tol:g}")
            all_ok &= r.passed
    text = "\n".join(summary) + "\n"
    sys.stdout.write(text)
    if out is not None:
        (out / "summary.txt").write_text(text)
    return 0 if all_ok else 1


def cmd_define(args) -> int:
    if args.list:
        sys.stdout.write("\n".join(sorted(PRESETS)) + "\n")
        return 0
    if args.preset not in PRESETS:
        raise ConfigError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
    text = write_config(PRESETS[args.preset])
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ndspressure", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, need_system=True):
        sp.add_argument("--system", required=need_system)
        sp.add_argument("--potential")
        sp.add_argument("--measure")
        sp.add_argument("--eps", type=_eps_list)
        sp.add_argument("--nmax", type=int)
        sp.add_argument("--nmin", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out")
        sp.add_argument("--quantity", choices=QUANTITIES, default="bowen-entropy")

    e = sub.add_parser("estimate", help="one pressure or entropy estimate")
    common(e)
    e.add_argument("--expect", type=float, help="reference value; exit 1 if missed")
    e.add_argument("--expect-tol", type=float, default=0.07)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("sweep", help="per-eps critical exponents, optionally over several N")
    common(s)
    s.add_argument("--nsweep", type=_int_list)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run check suites")
    v.add_argument("--suite", choices=["all", *checks.SUITES], default="all")
    v.add_argument("--out")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--quick", action="store_true", help="skip the grid-backed instances")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("define", help="write a preset system config")
    d.add_argument("--preset", default="doubling_de")
    d.add_argument("--out")
    d.add_argument("--list", action="store_true")
    d.set_defaults(func=cmd_define)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("malformed config: %s", exc)
        return 2
    except (OSError,) as exc:
        log.error("%s", exc)
        return 2
    except (InfeasibleCover, BracketError) as exc:
        log.error("infeasible estimate: %s", exc)
        return 3


if __name__ == "__main__":
    sys.exit(main())
