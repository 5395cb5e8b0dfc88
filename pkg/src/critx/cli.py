"""``critx`` command line: sweeps, crossings, exponents, PRG, plots and entanglement scans."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import entanglement, fss, tfim_exact
from .ed import LanczosError, SectorError, gap
from .ed import LanczosOptions, build_sector_basis, ground_sector, lanczos_lowest, one_site_rdm, two_site_rdm
from .io import ConfigError, SeriesFileError, parse_config, read_series, series_from_records
from .models import Boundary, COUPLING_NAMES, Family, ModelError, ModelSpec

log = logging.getLogger("critx")

SMALL_L_WARNING = 50


class CLIError(Exception):
    """Error reported to the user with a nonzero exit status."""


# ------------------------------------------------------------ argument helpers


def _floats(text: str, n: int | None = None) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise argparse.ArgumentTypeError(f"expected {n} numbers, got {text!r}")
    return vals


def _bracket(text):
    lo, hi = _floats(text, 2)
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"bracket needs lo < hi, got {text!r}")
    return lo, hi


def _range(text):
    start, stop, step = _floats(text, 3)
    if not step > 0 or not start < stop:
        raise argparse.ArgumentTypeError(f"range needs start < stop and step > 0, got {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def _ints(text):
    try:
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from None


def _couplings(text):
    out = {}
    for item in filter(None, (x.strip() for x in text.split(","))):
        key, sep, val = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected name=value, got {item!r}")
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad value in {item!r}") from None
    return out


def _sectors(text):
    sectors = []
    for block in filter(None, (x.strip() for x in text.split(";"))):
        qn = {}
        for item in block.split(","):
            key, _, val = item.partition("=")
            qn[key.strip()] = int(val)
        sectors.append(qn)
    return sectors


def _add_model_args(p, need_param=True):
    p.add_argument("--model", required=True, choices=[f.value for f in Family])
    p.add_argument("--couplings", type=_couplings, default={},
                   help="fixed couplings, e.g. lambda=2.59,D=0")
    p.add_argument("--boundary", default="periodic", choices=[b.value for b in Boundary])
    if need_param:
        p.add_argument("--param", help="swept coupling (default: h for tfim, D for spin-1)")
        p.add_argument("--range", dest="grid", type=_range, required=True,
                       help="start,stop,step (inclusive)")


def _model_factory(args):
    family = Family(args.model)
    param = args.param or ("h" if family is Family.TFIM else "D")
    names = COUPLING_NAMES[family]
    if param not in names:
        raise CLIError(f"{param!r} is not a coupling of {family.value}")
    fixed = dict(args.couplings)
    unknown = set(fixed) - set(names)
    if unknown:
        raise CLIError(f"unknown couplings {sorted(unknown)} for {family.value}")
    missing = set(names) - set(fixed) - {param}
    if missing:
        raise CLIError(f"missing couplings {sorted(missing)}; pass them with --couplings")

    def make(L, value):
        c = dict(fixed)
        c[param] = float(value)
        return ModelSpec(family, L, Boundary(args.boundary), tuple(c.items()))

    return family, param, make


def _emit(args, payload: dict, lines: list[str]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


# ------------------------------------------------------------ commands


def cmd_sweep(args) -> int:
    from .sweep import run_sweep

    config = parse_config(args.config)
    result = run_sweep(config, args.out)
    if result.cached:
        print(f"{result.path}: up to date (config hash {config.config_hash()}), 0 new rows")
    else:
        print(f"{result.path}: wrote {result.n_computed} rows")
    return 0


def _load(path):
    try:
        return series_from_records(read_series(path))
    except FileNotFoundError:
        raise CLIError(f"input file {path} not found") from None


def cmd_cross(args) -> int:
    series = _load(args.input)
    if len(series) < 2:
        raise CLIError("crossings need at least two distinct L in the input")
    points, failures = [], []
    for a, b in zip(series[:-1], series[1:]):
        try:
            points.append(fss.crossing(a, b, args.bracket))
        except fss.FSSError as exc:
            failures.append({"L_pair": [a.L, b.L], "error": str(exc)})
    payload = {"crossings": [{"L_pair": [p.L_small, p.L_large], "g_star": p.g_star,
                              "value": p.value_at_crossing} for p in points],
               "errors": failures}
    lines = [f"{'L':>5} {'L2':>5} {'g*':>22} {'value':>22}"]
    lines += [f"{p.L_small:5d} {p.L_large:5d} {p.g_star:22.15g} {p.value_at_crossing:22.15g}"
              for p in points]
    lines += [f"{f['L_pair'][0]:5d} {f['L_pair'][1]:5d}  error: {f['error']}" for f in failures]
    if args.extrapolate:
        try:
            fit = fss.extrapolate_crossings(points, size=args.size)
        except fss.FSSError as exc:
            failures.append({"L_pair": None, "error": f"extrapolation: {exc}"})
            lines.append(f"extrapolation failed: {exc}")
        else:
            se = fit.stderr
            payload["fit"] = {"g_c": fit.g_c, "amplitude": fit.amplitude, "omega": fit.exponent,
                              "stderr": {"g_c": se[0], "amplitude": se[1], "omega": se[2]},
                              "residual_norm": fit.residual_norm}
            lines += ["g* = g_c + a L^-omega:",
                      f"  g_c   = {fit.g_c:.10g} +- {se[0]:.2g}",
                      f"  a     = {fit.amplitude:.10g} +- {se[1]:.2g}",
                      f"  omega = {fit.exponent:.10g} +- {se[2]:.2g}"]
    _emit(args, payload, lines)
    return 1 if failures else 0


def cmd_exponent(args) -> int:
    series = _load(args.input)
    derivs = []
    for s in series:
        try:
            derivs.append((s.L, fss.derivative(s, 1, args.gc)))
        except fss.FSSError as exc:
            raise CLIError(f"L={s.L}: {exc}") from None
    payload = {"g_c": args.gc, "mode": args.mode,
               "derivatives": [{"L": L, "dO_dg": d} for L, d in derivs]}
    lines = [f"{'L':>5} {'dO/dg at g_c':>22}"] + [f"{L:5d} {d:22.15g}" for L, d in derivs]
    if args.mode == "log":
        fit = fss.fit_log_slope(derivs)
        payload["fit"] = {"slope": fit.slope, "intercept": fit.intercept, "stderr": fit.stderr}
        lines.append(f"dO/dg = s ln L + c:  s = {fit.slope:.10g} +- {fit.stderr:.2g}, "
                     f"c = {fit.intercept:.10g}")
    else:
        fit = fss.fit_power_slope([(L, abs(d)) for L, d in derivs])
        K = fss.K_from_derivative_exponent(fit.slope)
        K_err = fit.stderr / 2.0
        payload["fit"] = {"b": fit.slope, "amplitude": fit.intercept, "stderr": fit.stderr,
                          "K": K, "K_stderr": K_err}
        lines.append(f"|dO/dg| = a L^b:  b = {fit.slope:.10g} +- {fit.stderr:.2g}")
        lines.append(f"K = (2 - b)/2 = {K:.10g} +- {K_err:.2g}")
        try:
            ex = fss.exponent_set_from_K(K)
        except fss.FSSError as exc:
            payload["exponents"] = None
            lines.append(f"no exponent set: {exc}")
        else:
            payload["exponents"] = {"nu": ex.nu, "rho": ex.rho, "rho_over_nu": ex.rho_over_nu,
                                    "near_bkt": ex.near_bkt}
            lines.append(f"nu = {ex.nu:.6g}, rho = {ex.rho:.6g}, rho/nu = {ex.rho_over_nu:.6g}")
            if ex.near_bkt:
                lines.append("note: K is close to the BKT value 2; crossings converge slowly there")
        if max(L for L, _ in derivs) < SMALL_L_WARNING:
            msg = (f"warning: largest L is {max(L for L, _ in derivs)}; "
                   "exponents from small chains carry large corrections")
            payload["warning"] = msg
            lines.append(msg)
    _emit(args, payload, lines)
    return 0


def cmd_prg(args) -> int:
    family, param, make = _model_factory(args)
    if args.sectors:
        sectors = _sectors(args.sectors)
    elif family is Family.TFIM:
        sectors = [{"parity": 1}, {"parity": -1}]
    else:
        sectors = [{"total_sz": 0}]
    opts = LanczosOptions(tol=args.tol)
    gaps = []
    for L in sorted(args.L):
        vals = [gap(make(L, g), sectors, opts) for g in args.grid]
        gaps.append(fss.ObservableSeries(L, param, args.grid, np.array(vals), family.value))
    rows, failures = [], []
    for a, b in zip(gaps[:-1], gaps[1:]):
        try:
            for p in fss.prg_crossing(a, b, args.bracket):
                rows.append({"L_pair": [a.L, b.L], "g_star": p.g_star, "scaled_gap": p.value_at_crossing})
        except fss.FSSError as exc:
            failures.append({"L_pair": [a.L, b.L], "error": str(exc)})
    lines = [f"{'L':>5} {'L2':>5} {'g*':>22} {'L*gap':>22}"]
    lines += [f"{r['L_pair'][0]:5d} {r['L_pair'][1]:5d} {r['g_star']:22.15g} {r['scaled_gap']:22.15g}"
              for r in rows]
    lines += [f"{f['L_pair'][0]:5d} {f['L_pair'][1]:5d}  error: {f['error']}" for f in failures]
    _emit(args, {"sectors": sectors, "crossings": rows, "errors": failures}, lines)
    return 1 if failures else 0


def cmd_plot(args) -> int:
    from .plot import write_svg

    try:
        data = read_series(args.input)
    except FileNotFoundError:
        raise CLIError(f"input file {args.input} not found") from None
    if not data.records:
        raise CLIError(f"{args.input} holds no data rows")
    write_svg(data, args.out, args.style)
    print(f"wrote {args.out}")
    return 0


def _entangle_value(args, family, make, L, g):
    if args.engine == "exact":
        if family is not Family.TFIM:
            raise CLIError("engine=exact is only available for the TFIM; use --engine ed")
        h = make(L or 2, g).coupling("h")
        if args.measure == "entropy1":
            return entanglement.tfim_entropy_1site(h, L, broken=args.broken)
        if L is None:
            raise CLIError("concurrence with the exact engine needs a finite --L")
        return entanglement.tfim_concurrence(args.r, h, L)
    if L is None:
        raise CLIError("engine=ed needs --L")
    model = make(L, g)
    basis = build_sector_basis(model, ground_sector(model))
    vec = lanczos_lowest(model, basis, LanczosOptions(tol=args.tol)).ground_vector
    if args.measure == "entropy1":
        return entanglement.von_neumann_entropy(one_site_rdm(vec, basis, 0))
    if family is not Family.TFIM:
        raise CLIError("concurrence is defined for spin-1/2 chains only")
    return entanglement.concurrence(two_site_rdm(vec, basis, 0, args.r))


def cmd_entangle(args) -> int:
    family, param, make = _model_factory(args)
    if args.measure == "concurrence" and args.r < 1:
        raise CLIError("concurrence needs --r >= 1")
    if args.broken and (args.engine != "exact" or args.measure != "entropy1"):
        raise CLIError("--broken applies to the exact single-site entropy only")
    unit = math.log(2.0) if args.bits else 1.0
    rows = []
    for g in args.grid:
        rows.append((float(g), _entangle_value(args, family, make, args.L, g) / unit))
    name = "S1" if args.measure == "entropy1" else f"C({args.r})"
    unit_name = "bits" if args.bits else ("nats" if args.measure == "entropy1" else "")
    payload = {"measure": args.measure, "r": args.r, "L": args.L, "unit": unit_name,
               "param": param, "values": [{"g": g, "value": v} for g, v in rows]}
    lines = [f"{param:>12} {name + (' [' + unit_name + ']' if unit_name else ''):>22}"]
    lines += [f"{g:12.8g} {v:22.15g}" for g, v in rows]
    _emit(args, payload, lines)
    return 0


# ------------------------------------------------------------ entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="critx", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="run (or reuse) a parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="override the output path of the config")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("cross", help="crossings of consecutive-L curves")
    p.add_argument("--input", required=True)
    p.add_argument("--bracket", type=_bracket, required=True)
    p.add_argument("--extrapolate", action="store_true")
    p.add_argument("--size", default="mean", choices=["mean", "small", "large"],
                   help="abscissa attached to an (L, L') pair in the fit")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cross)

    p = sub.add_parser("exponent", help="size dependence of dO/dg at g_c")
    p.add_argument("--input", required=True)
    p.add_argument("--gc", type=float, required=True)
    p.add_argument("--mode", choices=["log", "power"], required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_exponent)

    p = sub.add_parser("prg", help="crossings of scaled gaps L*gap(g) from ED")
    _add_model_args(p)
    p.add_argument("--L", type=_ints, required=True)
    p.add_argument("--bracket", type=_bracket, required=True)
    p.add_argument("--sectors", help="e.g. 'parity=1;parity=-1'")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_prg)

    p = sub.add_parser("plot", help="SVG figure of a sweep file")
    p.add_argument("--input", required=True)
    p.add_argument("--style", choices=["fig1", "fig2", "generic"], default="generic")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("entangle", help="single-site entropy or concurrence along a sweep")
    _add_model_args(p)
    p.add_argument("--measure", choices=["entropy1", "concurrence"], required=True)
    p.add_argument("--r", type=int, default=1)
    p.add_argument("--L", type=int, help="chain length (omit for the infinite TFIM entropy)")
    p.add_argument("--engine", choices=["exact", "ed"], default=None)
    p.add_argument("--broken", action="store_true",
                   help="use the symmetry-broken state (adds m_x below h=1)")
    p.add_argument("--bits", action="store_true", help="report entropies in bits")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_entangle)
    return parser


_USER_ERRORS = (CLIError, ConfigError, SeriesFileError, fss.FSSError, ModelError, SectorError,
                LanczosError, tfim_exact.QuadratureError, ValueError, OSError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "engine", "unset") is None:
        args.engine = "exact" if args.model == Family.TFIM.value else "ed"
    try:
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"critx {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
