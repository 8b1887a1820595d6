"""Command-line front end: ``boundary-reps <command> [flags]``.

Exit codes: 0 every verdict passed, 1 a verdict failed, 2 usage or
configuration error, 3 internal error.  Settings come from defaults, then
``--config FILE``, then ``BOUNDARY_REPS_<KEY>`` environment variables, then flags.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time

import numpy as np

from . import __version__
from .cache import GramCache
from .config import ENV_PREFIX, FORMATS, RunConfig, apply_overrides, env_overrides, parse_config, validate
from .cylinders import TreeTestFunction
from .errors import BudgetError, ConfigError, DivergenceError, PreconditionError
from .experiments import (
    bml_experiment, equi_experiment, pair_kernel_experiment, probe_function, rd_calibrate,
    rd_consistency, schur_experiment, weak_mixing_probe,
)
from .kernels import (
    besov_seminorm, gram_matrix, positivity_scan, self_energy, self_energy_monte_carlo,
    self_energy_series, sigma, sigma_series,
)
from .report import Report, error_json, to_csv, to_json, write_atomic
from .selftest import run_selftest
from .spherical import TABLE_COLUMNS, poisson_along_ray, spherical_table
from .words import GroupContext, hat_extension

log = logging.getLogger("boundary_reps")

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3
EXPERIMENT_COLUMNS = ["n", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_err", "rel_err"]
HCA_BAND = 4.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_range(text: str) -> list:
    """'1..4' -> [1, 2, 3, 4]; '1,3' -> [1, 3]."""
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad integer range {text!r}") from None


def parse_grid(text: str) -> list:
    """'0.05:0.05:0.9' -> start:step:stop inclusive; '0.1,0.2' -> list."""
    try:
        if ":" in text:
            a, s, b = (float(x) for x in text.split(":"))
            if s <= 0:
                raise ValueError
            count = int(math.floor((b - a) / s + 1e-9)) + 1
            return [round(a + i * s, 12) for i in range(count)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


# -- commands ---------------------------------------------------------------------


def _probes(ctx, cfg):
    k = cfg.level
    P = lambda lvl, ph: probe_function(ctx, lvl, ph)  # noqa: E731
    return {"v": P(k, 0.3), "w": P(k, 0.9), "v2": P(k, 1.1), "w2": P(k, 0.2),
            "f": TreeTestFunction(P(max(k - 1, 0), 1.7)), "g": TreeTestFunction(P(k, 2.5))}


def _from_experiment(rep, timings: bool) -> Report:
    cols = EXPERIMENT_COLUMNS + (["wall_time"] if timings else [])
    return Report(rep.id, cols, rep.rows, rep.params, rep.verdict, rep.extras)


def cmd_phi(ctx, cfg, args):
    table = spherical_table(ctx, cfg.t, cfg.n_max)
    ratios = table.ratios()
    band = max(ratios) / min(ratios)
    verdict = {"passed": bool(band <= HCA_BAND), "band": band, "limit": HCA_BAND}
    return Report("phi", list(TABLE_COLUMNS), table.rows, {"t": cfg.t, "n_max": cfg.n_max}, verdict)


def cmd_sigma(ctx, cfg, args):
    rows = []
    s, ss = sigma(ctx, cfg.t), sigma_series(ctx, cfg.t)
    rows.append({"quantity": "sigma", "closed": s, "oracle": ss, "rel_err": abs(s - ss) / ss})
    for k in range(1, max(cfg.level, 1) + 1):
        e, es = self_energy(ctx, cfg.t, k), self_energy_series(ctx, cfg.t, k)
        rows.append({"quantity": f"self_energy_{k}", "closed": e, "oracle": es,
                     "rel_err": abs(e - es) / es})
    mc, se = self_energy_monte_carlo(ctx, cfg.t, 1, samples=args.samples, seed=cfg.seed)
    e1 = self_energy(ctx, cfg.t, 1)
    z = abs(mc - e1) / se if se > 0 else 0.0
    exact_ok = all(r["rel_err"] < 1e-10 for r in rows)
    verdict = {"passed": bool(exact_ok and z < 3.0), "series_tol": 1e-10, "mc_sigmas": z}
    extras = {"monte_carlo": {"seed": cfg.seed, "samples": args.samples, "mean": mc, "stderr": se}}
    return Report("sigma", ["quantity", "closed", "oracle", "rel_err"], rows,
                  {"t": cfg.t, "level": cfg.level}, verdict, extras)


def _cache(cfg):
    return GramCache(cfg.cache_dir) if cfg.cache_dir else None


def cmd_gram(ctx, cfg, args):
    k = max(cfg.level, 1)
    G = gram_matrix(ctx, cfg.t, k, cache=_cache(cfg))
    w = np.sort(np.linalg.eigvalsh(G.l2_operator()))[::-1]
    scale = float(np.abs(w).max())
    rows = [{"index": i, "eigenvalue": float(x), "normalized": float(x) / scale}
            for i, x in enumerate(w)]
    total = math.fsum(G.entries.ravel().tolist())
    s = sigma(ctx, cfg.t)
    sum_ok = abs(total - s) / s < 1e-12
    pos_ok = True if cfg.t > 0.5 else bool(w.min() >= -1e-10)
    verdict = {"passed": bool(sum_ok and pos_ok), "sum": total, "sigma": s,
               "min_eig": float(w.min()), "positive_expected": cfg.t <= 0.5}
    return Report("gram", ["index", "eigenvalue", "normalized"], rows,
                  {"t": cfg.t, "level": k, "dim": G.dim}, verdict)


def cmd_scan(ctx, cfg, args):
    levels = parse_range(args.levels) if args.levels else list(range(1, max(cfg.level, 1) + 1))
    grid = parse_grid(args.t_grid) if args.t_grid else parse_grid("0.05:0.05:0.9")
    rows = positivity_scan(ctx, grid, levels, cache=_cache(cfg))
    for row in rows:
        row["positive"] = row["min_eig"] >= -1e-10
    low_ok = all(r["positive"] for r in rows if r["t"] <= 0.5)
    neg = [r for r in rows if r["t"] > 0.5 and r["min_eig_normalized"] < -1e-6]
    first_neg = min((r["t"] for r in neg), default=None)
    verdict = {"passed": bool(low_ok), "positive_up_to_half": low_ok, "first_negative_t": first_neg}
    return Report("scan-positivity", ["t", "k", "min_eig_normalized", "min_eig", "positive"], rows,
                  {"levels": levels, "t_grid": grid}, verdict)


def cmd_equi(ctx, cfg, args):
    p = _probes(ctx, cfg)
    rep = equi_experiment(ctx, TreeTestFunction(p["v"]), p["f"], cfg.n_max, threads=cfg.threads,
                          tol=cfg.tol)
    return _from_experiment(rep, args.timings)


def cmd_pairs(ctx, cfg, args):
    rep = pair_kernel_experiment(ctx, cfg.t, cfg.n_max, method=args.method, threads=cfg.threads,
                                 tol=cfg.tol)
    return _from_experiment(rep, args.timings)


def cmd_bml(ctx, cfg, args):
    p = _probes(ctx, cfg)
    rep = bml_experiment(ctx, cfg.t, p["v"], p["w"], p["f"], p["g"], cfg.n_max, i=cfg.i,
                         threads=cfg.threads, tol=cfg.tol)
    return _from_experiment(rep, args.timings)


def cmd_schur(ctx, cfg, args):
    p = _probes(ctx, cfg)
    t2 = cfg.t if cfg.t2 is None else cfg.t2
    rep = schur_experiment(ctx, cfg.t, t2, cfg.i, cfg.j, p["v"], p["w"], p["v2"], p["w2"],
                           p["f"], p["g"], cfg.n_max, tol=cfg.tol, threads=cfg.threads)
    return _from_experiment(rep, args.timings)


def cmd_rd(ctx, cfg, args):
    rows = [rd_consistency(ctx, cfg.t, n, probe_level=args.probe_level, threads=cfg.threads)
            for n in range(cfg.n_max + 1)]
    keys = [k for k in ("l2", "kt", "ht") if k in rows[0]]
    extras, passed = {}, True
    for key in keys:
        C, strict, ok, worst = rd_calibrate(rows, key)
        extras[key] = {"C": C, "calibration_max": strict, "validation_max": worst, "passed": ok}
        passed = passed and ok
        for row in rows:
            row[f"ratio_{key}"] = row[key] / row["shape"]
    cols = ["n", "shape"] + keys + [f"ratio_{k}" for k in keys]
    return Report("rd", cols, rows, {"t": cfg.t, "probe_level": args.probe_level, "n_max": cfg.n_max},
                  {"passed": passed}, extras)


def cmd_besov(ctx, cfg, args):
    from .cylinders import apply_pi

    v = probe_function(ctx, cfg.level, 0.3)
    base = besov_seminorm(cfg.t, v)
    rows = []
    for n in range(0, 3):
        for gamma in ctx.enumerate_sphere(n):
            val = besov_seminorm(cfg.t, apply_pi(cfg.t, gamma, v))
            rows.append({"gamma": ctx.format(gamma), "besov": val, "rel_change": abs(val - base) / base})
    # invariance is only expected for the unitary parameter t = -1/2
    invariant = cfg.t == -0.5
    worst = max(r["rel_change"] for r in rows)
    verdict = {"passed": bool(worst < 1e-12) if invariant else True, "invariance_expected": invariant,
               "max_rel_change": worst, "base": base}
    return Report("besov", ["gamma", "besov", "rel_change"], rows, {"t": cfg.t, "level": cfg.level},
                  verdict)


def cmd_poisson(ctx, cfg, args):
    f = probe_function(ctx, cfg.level, 0.3)
    ray = hat_extension(ctx, ctx.parse(args.ray) if args.ray else (0,))
    depths = list(range(0, args.depth + 1))
    rows = [{"depth": m, "error": e} for m, e in poisson_along_ray(cfg.t, f, ray, depths)]
    final = rows[-1]["error"]
    verdict = {"passed": bool(final < 1e-3), "depth": args.depth, "error": final, "tol": 1e-3}
    return Report("poisson", ["depth", "error"], rows, {"t": cfg.t, "level": cfg.level,
                                                        "ray": ctx.format(ray.ray_prefix(1))},
                  verdict)


def cmd_mixing(ctx, cfg, args):
    p = _probes(ctx, cfg)
    eps = args.eps if args.eps is not None else cfg.tol
    res = weak_mixing_probe(ctx, cfg.t, p["v"], p["w"], p["v2"], p["w2"], cfg.n_max, eps,
                            threads=cfg.threads)
    verdict = {"passed": res["witness"] is not None, "eps": eps}
    return Report("mixing", ["n", "min_abs", "argmin"], res["rows"], {"t": cfg.t, "n_max": cfg.n_max},
                  verdict, {"witness": res["witness"]})


def cmd_selftest(ctx, cfg, args):
    rows = run_selftest(ctx, seed=cfg.seed, timings=args.timings)
    cols = ["check", "passed", "detail"] + (["wall_time"] if args.timings else [])
    failed = [r["check"] for r in rows if not r["passed"]]
    return Report("selftest", cols, rows, {}, {"passed": not failed, "failed": failed})


COMMANDS = {
    "phi": cmd_phi, "sigma": cmd_sigma, "gram": cmd_gram, "scan-positivity": cmd_scan,
    "equi": cmd_equi, "pairs": cmd_pairs, "bml": cmd_bml, "schur": cmd_schur, "rd": cmd_rd,
    "besov": cmd_besov, "poisson": cmd_poisson, "mixing": cmd_mixing, "selftest": cmd_selftest,
}

FLAG_KEYS = ["rank", "epsilon", "t", "t2", "level", "n_max", "tol", "i", "j", "out", "format",
             "threads", "cache_dir", "seed"]


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="key=value configuration file")
    g.add_argument("--rank", type=int)
    g.add_argument("--epsilon", type=float)
    g.add_argument("--t", type=float)
    g.add_argument("--t2", type=float, help="second temperature (schur)")
    g.add_argument("--level", type=int)
    g.add_argument("--n-max", dest="n_max", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--i", type=int, help="pairing index 0 (L2), 1 (H_t), 2 (K_t)")
    g.add_argument("--j", type=int, help="second pairing index (schur)")
    g.add_argument("--format", choices=FORMATS)
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--cache-dir", dest="cache_dir")
    g.add_argument("--threads", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--timings", action="store_true", help="include wall times in rows")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="boundary-reps", description=__doc__.splitlines()[0],
                     epilog=f"environment overrides: {ENV_PREFIX}<KEY>, e.g. {ENV_PREFIX}RANK=3")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "scan-positivity":
            p.add_argument("--levels", help="e.g. 1..4")
            p.add_argument("--t-grid", dest="t_grid", help="start:step:stop or comma list")
        if name == "pairs":
            p.add_argument("--method", choices=["closed", "loop"], default="closed")
        if name == "rd":
            p.add_argument("--probe-level", dest="probe_level", type=int, default=2)
        if name == "poisson":
            p.add_argument("--depth", type=int, default=40)
            p.add_argument("--ray", help="word whose hat extension is followed (default a)")
        if name == "mixing":
            p.add_argument("--eps", type=float)
        if name == "sigma":
            p.add_argument("--samples", type=int, default=200000)
    return parser


def resolve_config(args, environ=None) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}", key="config") from None
        cfg = parse_config(text)
    cfg = apply_overrides(cfg, env_overrides(environ))
    flags = {k: getattr(args, k) for k in FLAG_KEYS if getattr(args, k, None) is not None}
    cfg = apply_overrides(cfg, flags)
    cfg.experiment = args.command
    return validate(cfg)


def run(argv=None, environ=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    fmt = "csv"
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        fmt = getattr(args, "format", None) or fmt
        if not args.command:
            raise UsageError("a command is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(args, environ)
        fmt = cfg.format
        ctx = GroupContext(cfg.rank, cfg.epsilon)
        t0 = time.perf_counter()
        report = COMMANDS[args.command](ctx, cfg, args)
        log.info("%s finished in %.3f s", args.command, time.perf_counter() - t0)
        if fmt == "json":
            text = to_json(report, cfg.resolved(), __version__, args.command)
        else:
            text = to_csv(report)
        if cfg.out:
            write_atomic(cfg.out, text)
        else:
            stdout.write(text)
        return EXIT_PASS if report.passed else EXIT_FAIL
    except (UsageError, ConfigError, PreconditionError, DivergenceError, BudgetError) as exc:
        return _fail(exc, EXIT_USAGE, fmt, stdout)
    except Exception as exc:
        log.debug("internal error", exc_info=True)
        return _fail(exc, EXIT_INTERNAL, fmt, stdout)


def _fail(exc, code, fmt, stdout) -> int:
    if fmt == "json":
        stdout.write(error_json(exc, code, __version__))
    else:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
