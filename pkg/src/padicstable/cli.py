"""Command-line entry point: ``padicstable <subcommand> [options]``.

Every report embeds a sha256 hash of the run configuration and the truncation
bounds that apply to it.  Outputs depend only on the configuration and seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analytic, driver, integral, occupation, sde
from .coefficients import Coefficient, LocallyConstant, NormPower, RadialPower, StepFunction
from .padic import Ball, PAdicNumber, Window, format_literal, is_prime, valuations
from .parallel import pmap
from .rng import stream

EXIT_BAD_PRIME = 3
EXIT_ALPHA = 4
EXIT_WINDOW = 5


class ConfigError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


# -- parsing helpers ------------------------------------------------------------

def parse_grid(s: str, kind=float) -> list:
    """``a:b`` (inclusive integer range) or a comma list."""
    if ":" in s:
        a, b = s.split(":")
        return list(range(int(a), int(b) + 1))
    return [kind(v) for v in s.split(",") if v.strip()]


def parse_number(s: str, w: Window) -> PAdicNumber:
    """A rational like ``3``, ``-1/4`` or a literal ``p^v * (d0.d1...)``."""
    if "^" in s:
        from .padic import parse_literal
        return parse_literal(s, w)
    return PAdicNumber.from_fraction(Fraction(s), window=w)


def parse_coefficient(s: str, w: Window) -> Coefficient:
    """b specs: ``const:C``, ``power:C:Y0:DELTA``, ``step:R@X=V;R@X=V;default=V``."""
    kind, _, rest = s.partition(":")
    if kind == "const":
        return LocallyConstant.constant(parse_number(rest, w))
    if kind == "power":
        c, y0, delta = rest.split(":")
        return RadialPower(parse_number(c, w), parse_number(y0, w), float(delta))
    if kind == "step":
        pieces, default = [], None
        for item in rest.split(";"):
            lhs, _, val = item.partition("=")
            if lhs == "default":
                default = parse_number(val, w)
                continue
            r, _, c = lhs.partition("@")
            pieces.append((Ball(parse_number(c, w), int(r)), parse_number(val, w)))
        if default is None:
            raise ValueError("step coefficient needs default=V")
        return LocallyConstant(tuple(pieces), default)
    raise ValueError(f"unknown coefficient spec {s!r}")


def parse_function(s: str, w: Window):
    """f specs: ``power:EXP[:CENTER]`` for ||y - c||^EXP, ``step:R@X=V;...;default=V``."""
    kind, _, rest = s.partition(":")
    if kind == "power":
        parts = rest.split(":")
        center = parse_number(parts[1], w) if len(parts) > 1 else PAdicNumber.zero(w.p, w)
        return NormPower(float(parts[0]), center)
    if kind == "step":
        pieces, default = [], 0.0
        for item in rest.split(";"):
            lhs, _, val = item.partition("=")
            if lhs == "default":
                default = float(val)
                continue
            r, _, c = lhs.partition("@")
            pieces.append((Ball(parse_number(c, w), int(r)), float(val)))
        return StepFunction(tuple(pieces), default)
    raise ValueError(f"unknown function spec {s!r}")


# -- configuration --------------------------------------------------------------

@dataclass
class RunConfig:
    args: argparse.Namespace

    @property
    def window(self) -> Window:
        return Window(self.args.p, self.args.window_lo, self.args.window_hi)

    @property
    def spec(self) -> analytic.RadialLevySpec:
        return analytic.RadialLevySpec.stable(self.args.p, self.args.alpha)

    def as_dict(self) -> dict:
        skip = {"out_dir", "workers", "func"}
        return {k: v for k, v in sorted(vars(self.args).items()) if k not in skip}

    @property
    def hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def out(self, name: str) -> Path:
        d = Path(self.args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        return d / name

    def report(self, name: str, body: dict, truncation: dict) -> Path:
        doc = {"config": self.as_dict(), "config_hash": self.hash, "truncation": truncation, **body}
        path = self.out(name)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")
        return path


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (Fraction, PAdicNumber)):
        return str(o)
    return str(o)


def validate(cfg: RunConfig, need_alpha_gt1: bool = False, M: int | None = None) -> None:
    a = cfg.args
    if not is_prime(a.p):
        raise ConfigError(EXIT_BAD_PRIME, f"p={a.p} is not prime")
    if need_alpha_gt1 and not a.alpha > 1:
        raise ConfigError(EXIT_ALPHA, f"this subcommand needs alpha > 1, got {a.alpha}")
    if a.alpha <= 0:
        raise ConfigError(EXIT_ALPHA, f"alpha must be positive, got {a.alpha}")
    if M is not None:
        try:
            driver.check_window(cfg.window, M)
        except (driver.WindowTooSmall, ValueError) as e:
            raise ConfigError(EXIT_WINDOW, str(e)) from e


def _trunc(cfg: RunConfig, T: float | None = None, M: int | None = None) -> dict:
    out = {"series_atol": analytic.SERIES_ATOL}
    if M is not None:
        out["resolution_bound"] = float(cfg.args.p) ** (-M)
    if T is not None:
        out["clamp_probability_bound"] = driver.clamp_probability_bound(cfg.spec, T, cfg.window)
    return out


def _write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_fmt(v) for v in r))
    path.write_text("\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, PAdicNumber):
        return format_literal(v)
    return str(v)


# -- subcommands ------------------------------------------------------------------

def cmd_analytic(cfg: RunConfig) -> int:
    validate(cfg)
    a = cfg.args
    spec = cfg.spec
    ms = parse_grid(a.m_grid, int)
    ts = parse_grid(a.t_grid)
    rows = []
    for t in ts:
        for m in ms:
            g = analytic.green_function(spec, a.lam, m) if a.alpha > 1 else ""
            h = analytic.h_function(spec, m) if a.alpha > 1 else ""
            rows.append((m, float(t), analytic.ball_probability(spec, m, t), analytic.shell_density(spec, m, t), g, h))
    _write_csv(cfg.out("analytic.csv"), ["m", "t", "P_m", "density", "green", "h"], rows)
    cfg.report("analytic.json", {"K": spec.K, "rows": len(rows)}, _trunc(cfg))
    return 0


@dataclass(frozen=True)
class _SampleJob:
    spec: analytic.RadialLevySpec
    T: float
    M: int
    seed: int
    window: Window

    def __call__(self, i: int) -> str:
        return driver.format_path(driver.sample_path(self.spec, self.T, self.M, (self.seed, i), self.window))


def cmd_sample(cfg: RunConfig) -> int:
    a = cfg.args
    validate(cfg, M=a.M)
    texts = pmap(_SampleJob(cfg.spec, a.T, a.M, a.seed, cfg.window), range(a.n_paths), a.workers)
    counts = []
    for i, text in enumerate(texts):
        cfg.out(f"path_{i:05d}.txt").write_text(text)
        counts.append(text.count("\n") - 1)
    inten = driver.jump_intensities(cfg.spec, a.M)
    cfg.report("sample.json", {"events": counts, "Lambda_M": inten.total}, _trunc(cfg, a.T, a.M))
    return 0


def cmd_increment_dist(cfg: RunConfig) -> int:
    a = cfg.args
    validate(cfg)
    spec, w = cfg.spec, cfg.window
    rng = stream(a.seed, 0)
    z = driver.sample_increments(spec, a.t, rng, a.n_paths, w)
    ne = -valuations(z, w)
    rows = []
    for m in parse_grid(a.m_grid, int):
        emp = float(np.mean(ne <= m))
        ana = analytic.ball_probability(spec, m, a.t)
        sig = math.sqrt(max(ana * (1 - ana), 1e-300) / a.n_paths)
        rows.append((m, emp, ana, sig))
    _write_csv(cfg.out("increment_dist.csv"), ["m", "empirical", "analytic", "sigma"], rows)
    tail = driver.increment_tail_bound(spec, a.t, w)
    cfg.report("increment_dist.json", {"n": a.n_paths}, {**_trunc(cfg), "window_tail_mass": tail})
    return 0


def cmd_integrate(cfg: RunConfig) -> int:
    a = cfg.args
    path = driver.read_path(a.path)
    w = path.window
    b = parse_coefficient(a.integrand, w)
    phi = integral.AdaptedIntegrand.from_coefficient(b, parse_number(a.x, w) if a.x else None)
    ts, vals = integral.integral_process(phi, path)
    _write_csv(cfg.out("integral.csv"), ["t", "value"], [(float(t), v) for t, v in zip(ts, vals)])
    cfg.report("integrate.json", {"events": len(ts), "path": str(a.path)},
               {"resolution_bound": path.resolution_bound})
    return 0


@dataclass(frozen=True)
class _HolderJob:
    spec: analytic.RadialLevySpec
    T: float
    M: int
    seed: int
    window: Window
    levels: tuple[int, ...]
    N: int
    kappa: float

    def __call__(self, i: int) -> tuple[float, ...]:
        path = driver.sample_path(self.spec, self.T, self.M, (self.seed, i), self.window)
        return tuple(occupation.holder_level_statistic(path, self.T, n, self.N, self.kappa) for n in self.levels)


def cmd_localtime(cfg: RunConfig) -> int:
    a = cfg.args
    levels = tuple(parse_grid(a.levels, int))
    M = max(a.M, max(levels), a.n)
    validate(cfg, need_alpha_gt1=True, M=M)
    if a.path:
        path = driver.read_path(a.path)
    else:
        path = driver.sample_path(cfg.spec, a.T, M, (a.seed, 0), cfg.window)
    grid = occupation.local_time_grid(path, a.T, a.n, a.N)
    _write_csv(cfg.out("localtime.csv"), ["cell_center", "L_hat"], grid.rows())
    stats = pmap(_HolderJob(cfg.spec, a.T, M, a.seed, cfg.window, levels, a.N, a.kappa),
                 range(a.n_paths), a.workers)
    reports = [occupation.HolderReport(levels, s, a.kappa) for s in stats]
    med = occupation.median_trend(reports)
    cfg.report("holder.json", {"levels": list(levels), "median_statistic": list(med.stats),
                               "ratios": list(med.ratios), "bounded": med.bounded(),
                               "kappa_range": [0.0, (a.alpha - 1) / 2]}, _trunc(cfg, a.T, M))
    return 0


def cmd_recurrence(cfg: RunConfig) -> int:
    a = cfg.args
    validate(cfg, M=a.M)
    if a.alpha < 1:
        raise ConfigError(EXIT_ALPHA, "recurrence needs alpha >= 1")
    w = cfg.window
    B = Ball(PAdicNumber.zero(a.p, w), a.radius_exp)
    table = occupation.recurrence_diagnostic(cfg.spec, B, parse_grid(a.t_grid), a.n_paths, a.seed, a.M, w)
    rows = zip(table.ts, table.minimum.tolist(), table.median.tolist(), table.fraction_above.tolist())
    _write_csv(cfg.out("recurrence.csv"), ["t", "min", "median", "fraction_above"], rows)
    inv = analytic.total_mass(cfg.spec, 1.0)
    cfg.report("recurrence.json", {"median_strictly_increasing": table.median_strictly_increasing(),
                                   "invariance_integral": inv}, _trunc(cfg, max(table.ts), a.M))
    return 0


def cmd_zero_one(cfg: RunConfig) -> int:
    a = cfg.args
    levels = tuple(parse_grid(a.levels, int))
    validate(cfg, M=max(levels))
    f = parse_function(a.f, cfg.window)
    rep = occupation.zero_one_diagnostic(f, cfg.spec, a.T, a.n_paths, a.seed, levels, cfg.window)
    cfg.report("zero_one.json", {"fraction_finite": rep.fraction_finite,
                                 "fraction_divergent": rep.fraction_divergent,
                                 "locally_integrable": rep.locally_integrable,
                                 "verdict_matches": rep.verdict_matches}, _trunc(cfg, a.T, max(levels)))
    return 0


def cmd_check_h(cfg: RunConfig) -> int:
    a = cfg.args
    validate(cfg)
    w = cfg.window
    b = parse_coefficient(a.b, w)
    x = parse_number(a.x, w)
    res = analytic.condition_h_check(cfg.spec, b, x, a.L, a.T)
    body = {"finite": res.finite, "value": res.value if math.isfinite(res.value) else "inf",
            "reason": res.reason, "witness": str(res.witness) if res.witness else None}
    if a.alpha >= 1:
        pr = analytic.prop3_sufficiency(cfg.spec, b, x, a.lam)
        body["prop3"] = {"applies": pr.applies, "implied": pr.implied, "lambda": a.lam}
    cfg.report("check_h.json", body, {**_trunc(cfg), "tail_bound": res.tail_bound})
    return 0


def cmd_sde(cfg: RunConfig) -> int:
    a = cfg.args
    validate(cfg, need_alpha_gt1=True, M=a.M)
    w = cfg.window
    b = parse_coefficient(a.b, w)
    x = parse_number(a.x, w)
    spec = cfg.spec
    body: dict = {}
    if a.method in ("direct", "both"):
        path = driver.sample_path(spec, a.T, a.M, (a.seed, 0, 0), w)
        sol = sde.solve_direct(b, x, path)
        cfg.out("solution_direct.txt").write_text(_solution_text(sol, path, a))
        body["direct_trivial"] = sde.triviality_check(sol)
    if a.method in ("time_change", "both"):
        sol, tc = sde.time_change_solution(b, x, spec, a.T, a.M, (a.seed, 1, 0), w)
        cfg.out("solution_time_change.txt").write_text(_solution_text(sol, tc.path, a))
        rec = sde.reconstruct_driver(b, sol, a.alpha)
        body["time_change_trivial"] = sde.triviality_check(sol)
        body["absorption_time"] = tc.absorption_time
        body["reconstruction_residual"] = rec.residual
    if a.method == "both":
        rep = sde.weak_equivalence_test(b, x, spec, a.T, a.M, a.n_paths, a.seed, window=w, workers=a.workers)
        body["law_comparison"] = rep.to_dict()
    cfg.report("sde.json", body, _trunc(cfg, a.T, a.M))
    return 0


def _solution_text(sol: sde.SolutionPath, base: driver.JumpPath, a) -> str:
    """Solution increments in the path-file format (times and jumps of X - x)."""
    w = sol.x.w
    jumps = [(v - u).n for u, v in zip(sol.left_values(), sol.values)]
    jarr = np.array(jumps, dtype=w.int_dtype) if jumps else np.empty(0, dtype=w.int_dtype)
    as_path = driver.JumpPath(base.spec, sol.T, a.M, w, np.asarray(sol.times, dtype=float), jarr, base.seed)
    return driver.format_path(as_path)


# -- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padicstable", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--out-dir", default=".")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, T=1.0, M=4, n_paths=100):
        p.add_argument("--p", type=int, default=2)
        p.add_argument("--alpha", type=float, default=2.0)
        p.add_argument("--T", type=float, default=T)
        p.add_argument("--M", type=int, default=M)
        p.add_argument("--window-lo", type=int, default=-20)
        p.add_argument("--window-hi", type=int, default=20)
        p.add_argument("--n-paths", type=int, default=n_paths)

    p = sub.add_parser("analytic", help="P_m(t), density, green function and h on a grid")
    common(p)
    p.add_argument("--m-grid", default="-3:3")
    p.add_argument("--t-grid", default="0.1,1")
    p.add_argument("--lam", type=float, default=1.0)
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("sample", help="write jump paths")
    common(p, n_paths=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("increment-dist", help="empirical vs exact law of ||Z(t)||")
    common(p, n_paths=100000)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--m-grid", default="-3:3")
    p.set_defaults(func=cmd_increment_dist)

    p = sub.add_parser("integrate", help="integral of b(x + Z(s-)) dZ(s) along a path file")
    common(p)
    p.add_argument("--path", required=True)
    p.add_argument("--integrand", default="const:1")
    p.add_argument("--x", default=None)
    p.set_defaults(func=cmd_integrate)

    p = sub.add_parser("localtime", help="local-time grid and Hoelder statistic")
    common(p, M=6)
    p.add_argument("--path", default=None)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--N", type=int, default=0)
    p.add_argument("--levels", default="2:6")
    p.add_argument("--kappa", type=float, default=0.4)
    p.set_defaults(func=cmd_localtime)

    p = sub.add_parser("recurrence", help="occupation of a ball along a t grid")
    common(p, M=0, n_paths=200)
    p.add_argument("--t-grid", default="1,2,4,8,16,32,64")
    p.add_argument("--radius-exp", type=int, default=0)
    p.set_defaults(func=cmd_recurrence)

    p = sub.add_parser("zero-one", help="finite/divergent verdicts for int f(Z(s)) ds")
    common(p, n_paths=1000)
    p.add_argument("--f", default="power:-0.5")
    p.add_argument("--levels", default="1:8")
    p.set_defaults(func=cmd_zero_one)

    p = sub.add_parser("check-h", help="integrability condition for b at x and its sufficient test")
    common(p)
    p.add_argument("--b", default="const:1")
    p.add_argument("--x", default="0")
    p.add_argument("--L", type=int, default=0)
    p.add_argument("--lam", type=float, default=7.0)
    p.set_defaults(func=cmd_check_h)

    p = sub.add_parser("sde", help="solve dX = b(X-) dZ")
    common(p, M=3, n_paths=1000)
    p.add_argument("--b", default="const:1")
    p.add_argument("--x", default="0")
    p.add_argument("--method", choices=["direct", "time_change", "both"], default="both")
    p.set_defaults(func=cmd_sde)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    cfg = RunConfig(args)
    try:
        return args.func(cfg)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
