"""invwave command-line front end.

Exit codes: 0 ok, 1 usage / malformed input, 2 gate or precondition refused,
3 numerical failure, 4 partial success in a sweep.
"""
from __future__ import annotations

import argparse
import csv
import io as _io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import io
from .analysis import (check_wave_rates, fit_tail_rate, minus_rates_agree, strict_monotonicity_audit,
                       theoretical_rates)
from .errors import (ConstructionFailure, InvwaveError, ParameterDomainError, PostconditionError,
                     PreconditionError, SolverFailure, StabilityError)
from .grid import Grid
from .kpp import KppProblem, kpp_rates, lower_problem, solve_kpp, upper_problem
from .model import (ModelParams, classify_origin, decay_ordering_g, is_critical, lambda_gate, min_speed,
                    require_wave_params)
from .pdesim import SimConfig, profile_mismatch, run
from .sandwich import build_sandwich
from .wave import (IterationConfig, WaveProfile, bracket_defects, default_grid, derivative_check,
                   iteration_bracket, recomputed_residuals, solve_wave)

EXIT_OK, EXIT_USAGE, EXIT_GATE, EXIT_NUMERIC, EXIT_PARTIAL = 0, 1, 2, 3, 4

COMMON_DEFAULTS = {"K": 1.0, "nu": 0.0, "tol": 1e-10}
CONFIG_ALIASES = {"lambda": "lam"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser, need_c: bool = False):
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--K", type=float, default=None)
    p.add_argument("--nu", type=float, default=None)
    p.add_argument("--c", type=float, default=None, required=False)
    p.add_argument("--l", type=float, default=None, help="lower sub-wave depression parameter")
    p.add_argument("--L", type=float, default=None, help="grid half-width")
    p.add_argument("--n", type=int, default=None, help="number of grid cells (even)")
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None, help="output directory (INVWAVE_OUT overrides)")
    p.add_argument("--config", default=None, help="flat key=value file; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="invwave", description="Traveling waves of the precursor/differentiated cell system.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("check-params", help="evaluate the parameter gates")
    _common(p)

    p = sub.add_parser("solve-kpp", help="solve one of the scalar KPP sub-waves")
    _common(p)
    p.add_argument("--which", choices=["upper", "lower"], default="upper")
    p.add_argument("--abar", type=float, default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--b1", type=float, default=None)

    p = sub.add_parser("build-sandwich", help="assemble and verify the upper/lower pair")
    _common(p)

    p = sub.add_parser("solve-wave", help="monotone iteration for the coupled wave")
    _common(p)
    p.add_argument("--bracket", choices=["sandwich", "trivial"], default=None)
    p.add_argument("--seed", choices=["lower", "upper"], default=None)
    p.add_argument("--scheme", choices=["newton", "penalized"], default=None)
    p.add_argument("--penalty", type=float, default=None)
    p.add_argument("--max-iter", type=int, default=None)

    p = sub.add_parser("simulate", help="time-integrate the PDE from compact data")
    _common(p)
    p.add_argument("--x-max", type=float, default=None)
    p.add_argument("--dx", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--t-end", type=float, default=None)
    p.add_argument("--ic", choices=["step", "gaussian", "zero"], default=None)
    p.add_argument("--amplitude", type=float, default=None)
    p.add_argument("--width", type=float, default=None)
    p.add_argument("--record-every", type=float, default=None)
    p.add_argument("--snapshot-every", type=float, default=None)
    p.add_argument("--window", type=float, default=None, help="fraction of samples used in the speed fit")
    p.add_argument("--tolerance", type=float, default=None)
    p.add_argument("--compare-wave", action="store_true", help="also compare the final profile with the c* wave")

    p = sub.add_parser("analyze", help="tail rates and monotonicity audit of a saved profile")
    _common(p)
    p.add_argument("--profile", default=None, help="CSV with columns xi,u,v")

    p = sub.add_parser("sweep", help="Cartesian sweep over lambda, K and c")
    _common(p)
    p.add_argument("--lambdas", default=None, help="comma list")
    p.add_argument("--Ks", default=None, help="comma list")
    p.add_argument("--cs", default=None, help="comma list; entries may be c* or <factor>c*")
    p.add_argument("--bracket", choices=["sandwich", "trivial"], default=None)
    p.add_argument("--jobs", type=int, default=None)
    return ap


SUB_DEFAULTS = {
    "solve-wave": {"bracket": "sandwich", "seed": "lower", "scheme": "newton", "max_iter": 400},
    "simulate": {"x_max": 400.0, "dx": 0.1, "dt": 0.002, "t_end": 150.0, "ic": "step", "amplitude": 0.5,
                 "width": 5.0, "record_every": 0.5, "snapshot_every": 25.0, "window": 0.5,
                 "tolerance": 0.1},
    "sweep": {"bracket": "sandwich", "jobs": 1},
}


def _action_types(parser: argparse.ArgumentParser, command: str) -> dict:
    subs = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return {a.dest: a.type for a in subs.choices[command]._actions if a.dest != "help"}


def resolve_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        raise UsageError("a subcommand is required")
    resolved = {}
    if args.config:
        types = _action_types(parser, args.command)
        try:
            raw = io.read_flat_config(args.config)
        except (OSError, ValueError) as exc:
            raise UsageError(str(exc)) from exc
        for k, v in raw.items():
            k = CONFIG_ALIASES.get(k, k)
            if k not in types:
                raise UsageError(f"unknown config key {k!r}")
            conv = types[k] or str
            try:
                resolved[k] = conv(v)
            except ValueError as exc:
                raise UsageError(f"bad value for {k}: {v!r}") from exc
    for k, v in {**COMMON_DEFAULTS, **SUB_DEFAULTS.get(args.command, {})}.items():
        resolved.setdefault(k, v)
    for k, v in vars(args).items():
        if v is not None and v is not False:
            resolved[k] = v
        else:
            resolved.setdefault(k, v)
    return argparse.Namespace(**resolved)


def _params(a) -> ModelParams:
    if a.lam is None:
        raise UsageError("--lambda is required")
    return ModelParams(a.lam, a.K, a.nu, a.l)


def _config_dict(a) -> dict:
    d = {k: v for k, v in vars(a).items() if k not in ("out", "config")}
    return d


def _grid(a, p: ModelParams, c: float) -> Grid:
    g = default_grid(p, c)
    return Grid(a.L if a.L is not None else g.L, a.n if a.n is not None else g.n)


def _emit(obj, out=None, name=None):
    text = io.dumps(obj)
    sys.stdout.write(text)
    if out is not None and name:
        (out / name).write_text(text)


def _maybe_out(a):
    import os
    if a.out is None and not os.environ.get("INVWAVE_OUT"):
        return None
    return io.resolve_out(a.out)


def cmd_check_params(a) -> int:
    p = _params(a)
    if not p.lam < 1:
        raise ParameterDomainError(f"lambda must be < 1, got {p.lam}")
    bound, ok = lambda_gate(p)
    cs = min_speed(p)
    rep = {"config": _config_dict(a), "c_star": cs, "lambda_bound": bound,
           "lambda_gate": {"pass": ok, "margin": bound - p.lam}}
    passed = ok
    if a.c is not None:
        cls = classify_origin(a.c, p)
        rep["origin"] = {"discriminant": cls.discriminant, "oscillatory": cls.oscillatory,
                         "roots": [complex(r) for r in cls.roots]}
        above = a.c >= cs * (1 - 1e-12)
        rep["speed_gate"] = {"pass": above, "margin": a.c - cs}
        if above:
            g = decay_ordering_g(a.c, p)
            dec_ok = g >= p.lam * p.K * (1 - 1e-12)
            rep["decay_ordering_gate"] = {"pass": dec_ok, "g": g, "margin": g - p.lam * p.K}
        else:
            dec_ok = False
            rep["decay_ordering_gate"] = {"pass": False, "reason": "c below c*"}
        passed = passed and above and dec_ok
    rep["pass"] = passed
    _emit(rep, _maybe_out(a), "check.json")
    return EXIT_OK if passed else EXIT_GATE


def cmd_solve_kpp(a) -> int:
    p = _params(a)
    if a.c is None:
        raise UsageError("--c is required")
    base = upper_problem(p, a.c) if a.which == "upper" else lower_problem(p, a.c)
    pb = KppProblem(abar=a.abar if a.abar is not None else base.abar,
                    b=a.b if a.b is not None else base.b, c=a.c,
                    b1=a.b1 if a.b1 is not None else base.b1)
    grid = _grid(a, p, a.c) if (a.L is None and a.n is None) else Grid(a.L or 60.0, a.n or 2400)
    w = solve_kpp(pb, grid, tol=min(a.tol, 1e-10))
    rates = kpp_rates(pb)
    out = io.resolve_out(a.out)
    io.write_csv(out / "kpp.csv", {"xi": grid.xi, "w": w.omega})
    ok = w.residual_sup <= 1e-8 and bool(np.all(np.diff(w.omega) >= 0))
    io.write_json(out / "kpp.json", {"config": _config_dict(a), "problem": asdict(pb),
                                     "rates": asdict(rates), "residual": w.residual_sup,
                                     "pin": [w.pin_index, w.pin_level], "pass": ok})
    io.write_gnuplot(out / "plot.gp", "kpp.csv", "xi", ["w"], ["xi", "w"], title=f"KPP front c={a.c}")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_build_sandwich(a) -> int:
    p = _params(a)
    if a.c is None:
        raise UsageError("--c is required")
    require_wave_params(p)
    grid = _grid(a, p, a.c)
    pair = build_sandwich(p, a.c, grid)
    out = io.resolve_out(a.out)
    io.write_csv(out / "sandwich.csv", pair.to_columns())
    io.write_json(out / "sandwich.json", {"config": _config_dict(a), "zeta_upper": pair.zeta_upper,
                                          "zeta_lower": pair.zeta_lower, "report": pair.report})
    io.write_gnuplot(out / "plot.gp", "sandwich.csv", "xi", ["u_upper", "u_lower", "v_upper", "v_lower"],
                     list(pair.to_columns()), title="upper/lower pair")
    return EXIT_OK if pair.report["PASS"] else EXIT_NUMERIC


def _wave_reports(w: WaveProfile, p: ModelParams) -> dict:
    rep = {"residual_u": w.residual_u, "residual_v": w.residual_v, "warnings": []}
    h = w.grid.h
    bound = 100 * h * h
    if w.residual_u > 1e-4 or w.residual_v > 1e-4:
        rep["warnings"].append(f"residuals exceed 1e-4 (grid spacing h = {h}; under-resolved)")
    if w.c * h >= 2.0:
        rep["warnings"].append("c h >= 2: the centred scheme is not monotone at this resolution")
    rep["residual_bound_100h2"] = bound
    try:
        rates = check_wave_rates(w, p)
        rel, agree = minus_rates_agree(rates)
        rep["rates"] = [r.to_dict() for r in rates]
        rep["minus_rate_agreement"] = {"rel": rel, "pass": agree}
        rates_ok = all(r.passed for r in rates) and agree
    except PreconditionError as exc:
        rep["rates"] = []
        rep["warnings"].append(f"rate fit unavailable: {exc}")
        rates_ok = False
    audit = strict_monotonicity_audit(w, p)
    rep["monotonicity"] = asdict(audit)
    d = derivative_check(w, p)
    rep["derivatives"] = {"min_w1": d.min_w1, "min_w2": d.min_w2, "degenerate": d.degenerate,
                          "linearized_residual": d.linearized_residual, "identity_gap": d.identity_gap}
    rep["theory"] = theoretical_rates(p, w.c)
    rep["PASS"] = bool(rates_ok and audit.strict and audit.identity_ok and d.positive
                       and not any("exceed" in s for s in rep["warnings"]))
    return rep


def cmd_solve_wave(a) -> int:
    p = _params(a)
    if a.c is None:
        raise UsageError("--c is required")
    require_wave_params(p)
    cs = min_speed(p)
    if a.c < cs * (1 - 1e-12):
        raise PreconditionError(f"c = {a.c} < c* = {cs:.12g}: no monotone traveling wave")
    grid = _grid(a, p, a.c)
    cfg = IterationConfig(scheme=a.scheme, penalty=a.penalty, tol=a.tol, max_iter=a.max_iter,
                          seed=a.seed, bracket=a.bracket)
    br = iteration_bracket(p, a.c, grid, cfg.bracket)
    out = io.resolve_out(a.out)
    conf = _config_dict(a)
    io.write_csv(out / "sandwich.csv", {"xi": grid.xi, "u_lower": br.u_lower, "v_lower": br.v_lower,
                                        "u_upper": br.u_upper, "v_upper": br.v_upper})
    try:
        w, trace = solve_wave(p, a.c, grid, cfg, br)
    except (SolverFailure, PostconditionError) as exc:
        tr = getattr(exc, "trace", None)
        io.write_json(out / "trace.json", {"config": conf, "error": str(exc),
                                           "trace": _trace_dict(tr) if tr else None})
        raise
    io.write_json(out / "trace.json", {"config": conf, "trace": _trace_dict(trace),
                                       "bracket": {"kind": br.kind, "zeta_upper": br.zeta_upper,
                                                   "zeta_lower": br.zeta_lower, "l_iter": br.l_iter,
                                                   "g_left": br.g_left, "alpha": br.alpha,
                                                   "defects": bracket_defects(br, p)}})
    io.write_csv(out / "profile.csv", {"xi": w.xi, "u": w.u, "v": w.v})
    rep = _wave_reports(w, p)
    rep["config"] = conf
    if br.kind == "sandwich":
        pair = build_sandwich(p, a.c, grid)
        rep["sandwich"] = pair.report
        rep["sandwich"]["zeta_upper"] = pair.zeta_upper
        rep["sandwich"]["zeta_lower"] = pair.zeta_lower
    io.write_json(out / "rates.json", rep)
    io.write_gnuplot(out / "plot.gp", "profile.csv", "xi", ["u", "v"], ["xi", "u", "v"],
                     title=f"wave lambda={p.lam} K={p.K} c={a.c}")
    return EXIT_OK if (trace.converged and rep["PASS"]) else EXIT_NUMERIC


def _trace_dict(tr) -> dict:
    d = tr.to_dict()
    d.pop("seconds", None)      # keep outputs byte-identical across runs
    return d


def cmd_simulate(a) -> int:
    p = _params(a)
    ic = "step" if a.ic == "zero" else a.ic
    amp = 0.0 if a.ic == "zero" else a.amplitude
    cfg = SimConfig(x_max=a.x_max, dx=a.dx, dt=a.dt, t_end=a.t_end, ic=ic, amplitude=amp, width=a.width,
                    record_every=a.record_every, snapshot_every=a.snapshot_every)
    tr, snaps = run(cfg, p, window=a.window)
    out = io.resolve_out(a.out)
    io.write_csv(out / "fronts.csv", {"t": tr.times, "x_front": tr.positions})
    for s in snaps:
        io.write_csv(out / f"snapshot_t{s.t:09.3f}.csv", {"x": cfg.x, "u": s.u, "v": s.v})
    cs = min_speed(p)
    summary = {"config": _config_dict(a), "c_star": cs, "c_emp": tr.c_emp, "flag": tr.flag,
               "fit_window": tr.fit_window, "fit_residual": tr.fit_residual,
               "rel_error": (tr.c_emp - cs) / cs if math.isfinite(tr.c_emp) else None}
    if a.compare_wave and not tr.flag:
        w, _ = solve_wave(p, cs, None, IterationConfig(bracket="trivial"))
        summary["profile_mismatch"] = profile_mismatch(snaps[-1], cfg, w)
    io.write_json(out / "summary.json", summary)
    io.write_gnuplot(out / "plot.gp", "fronts.csv", "t", ["x_front"], ["t", "x_front"], title="front position")
    if tr.flag:
        sys.stderr.write(f"invwave: no usable front ({tr.flag})\n")
        return EXIT_GATE
    return EXIT_OK if abs(summary["rel_error"]) <= a.tolerance else EXIT_NUMERIC


def cmd_analyze(a) -> int:
    p = _params(a)
    if a.profile is None or a.c is None:
        raise UsageError("--profile and --c are required")
    try:
        cols = io.read_csv(a.profile)
    except OSError as exc:
        raise UsageError(str(exc)) from exc
    xi = cols["xi"]
    n = xi.size - 1
    L = -float(xi[0])
    grid = Grid(L, n)
    if abs(grid.xi[-1] - xi[-1]) > 1e-9 * max(1.0, L):
        raise UsageError("profile must live on a symmetric uniform grid [-L, L]")
    u, v = cols["u"], cols["v"]
    ru, rv = recomputed_residuals(u, v, grid, a.c, p)
    w = WaveProfile(grid, u, v, a.c, ru, rv, (0, float(u[0])))
    rep = _wave_reports(w, p)
    rep["config"] = _config_dict(a)
    out = io.resolve_out(a.out)
    io.write_json(out / "analysis.json", rep)
    mask = u > 0
    io.write_csv(out / "fitdata.csv", {"xi": xi[mask], "log_u": np.log(u[mask]),
                                       "log_one_minus_u": np.log(np.maximum(1 - u[mask], 1e-300))})
    return EXIT_OK if rep["PASS"] else EXIT_NUMERIC


def _parse_list(text, name) -> list[str]:
    if text is None:
        raise UsageError(f"--{name} is required")
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    if not items:
        raise UsageError(f"--{name} is empty")
    return items


def _speed(token: str, p: ModelParams) -> float:
    t = token.replace(" ", "")
    if t.endswith("c*"):
        factor = t[:-2].rstrip("*") or "1"
        return float(factor) * min_speed(p)
    return float(t)


def sweep_cell(job) -> dict:
    lam, K, ctok, nu, l, L, n, tol, bracket = job
    row = {"lambda": lam, "K": K, "c_token": ctok, "c": math.nan, "status": "", "steps": 0,
           "residual_u": math.nan, "residual_v": math.nan, "u_minus_rate": math.nan, "u_plus_rate": math.nan}
    try:
        p = ModelParams(lam, K, nu, l)
        require_wave_params(p)
        c = _speed(ctok, p)
        row["c"] = c
        grid = default_grid(p, c)
        grid = Grid(L if L is not None else grid.L, n if n is not None else grid.n)
        w, tr = solve_wave(p, c, grid, IterationConfig(tol=tol, bracket=bracket))
        row.update(status="CONVERGED", steps=tr.steps, residual_u=w.residual_u, residual_v=w.residual_v)
        try:
            rates = check_wave_rates(w, p)
            row["u_minus_rate"] = rates[0].fitted_rate
            row["u_plus_rate"] = rates[1].fitted_rate
        except PreconditionError:
            pass
    except PreconditionError as exc:
        row["status"] = "SKIPPED-GATE"
        row["detail"] = str(exc)
    except ParameterDomainError as exc:
        row["status"] = "INVALID"
        row["detail"] = str(exc)
    except (SolverFailure, PostconditionError, ConstructionFailure) as exc:
        row["status"] = "FAILED"
        row["detail"] = str(exc)
    return row


def cmd_sweep(a) -> int:
    lams = [float(x) for x in _parse_list(a.lambdas, "lambdas")]
    Ks = [float(x) for x in _parse_list(a.Ks, "Ks")]
    cs = _parse_list(a.cs, "cs")
    jobs = [(lam, K, c, a.nu, a.l, a.L, a.n, a.tol, a.bracket) for lam in lams for K in Ks for c in cs]
    if a.jobs and a.jobs > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as ex:
            rows = list(ex.map(sweep_cell, jobs))
    else:
        rows = [sweep_cell(j) for j in jobs]
    out = io.resolve_out(a.out)
    fields = ["lambda", "K", "c_token", "c", "status", "steps", "residual_u", "residual_v",
              "u_minus_rate", "u_plus_rate"]
    buf = _io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(fields)
    for r in rows:
        wr.writerow([f"{r[k]:.17g}" if isinstance(r[k], float) else r[k] for k in fields])
    (out / "sweep.csv").write_text(buf.getvalue())
    io.write_json(out / "sweep.json", {"config": _config_dict(a), "rows": rows})
    ok = all(r["status"] == "CONVERGED" for r in rows)
    return EXIT_OK if ok else EXIT_PARTIAL


COMMANDS = {
    "check-params": cmd_check_params,
    "solve-kpp": cmd_solve_kpp,
    "build-sandwich": cmd_build_sandwich,
    "solve-wave": cmd_solve_wave,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    try:
        a = resolve_args(argv)
        return COMMANDS[a.command](a)
    except UsageError as exc:
        sys.stderr.write(f"invwave: usage error: {exc}\n")
        return EXIT_USAGE
    except ParameterDomainError as exc:
        sys.stderr.write(f"invwave: invalid parameter: {exc}\n")
        return EXIT_USAGE
    except PreconditionError as exc:
        sys.stderr.write(f"invwave: refused: {exc}\n")
        return EXIT_GATE
    except (SolverFailure, PostconditionError, ConstructionFailure, StabilityError) as exc:
        sys.stderr.write(f"invwave: numerical failure: {exc}\n")
        return EXIT_NUMERIC
    except InvwaveError as exc:
        sys.stderr.write(f"invwave: {exc}\n")
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
