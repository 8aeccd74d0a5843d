"""Command-line laboratory: estimator subcommands, grid scans and file
artifacts (PGM raster, CSV traces, JSON reports).

Exit codes: 0 success, 1 usage error, 2 numerical failure. Every artifact
embeds the resolved math configuration (execution details like thread
count and output paths are excluded so artifacts are byte-identical across
thread counts).
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import barycentric as bary
from . import butterfly as bfly
from .cocycles import (Barycentric, Constant, RandomProduct, Schrodinger,
                       ToralDerivative, barycentric_generators, driver_for)
from .config import (config_file_text, parallel_map, parse_config_file,
                     resolve_config, resolve_threads, write_report)
from .errors import NumericalError, UsageError
from .exponents import (furstenberg_check, spectrum_qr, top_exponent)
from .hyperbolicity import (CONE_GRID_DEFAULT, GRID_DEFAULT, N_MAX_DEFAULT,
                            SLICE_N_MAX, SLICE_THETA, THETA_DEFAULT,
                            cone_certify, slice_spectrum,
                            uniform_growth_test)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(sp):
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--threads", type=int, default=None)
    sp.add_argument("--out", type=str, default=None)
    sp.add_argument("--config", type=str, default=None)


def _add_spec_flags(sp):
    sp.add_argument("--spec", type=str, default=None,
                    choices=["constant", "random", "barycentric",
                             "schrodinger", "toral"])
    sp.add_argument("--energy", type=float, default=None)
    sp.add_argument("--coupling", type=float, default=None)
    sp.add_argument("--alpha", type=str, default=None)
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--matrix", type=str, default=None)
    sp.add_argument("--matrices", type=str, default=None)
    sp.add_argument("--start", type=str, default=None)


def build_parser() -> _Parser:
    p = _Parser(prog="cocycle-lab",
                description="Lyapunov exponents of matrix cocycles: "
                            "estimators, certificates, butterfly scans.")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("barycentric", parents=[], help="both exponent "
                        "estimators for random barycentric subdivision")
    _add_common(sp)
    sp.add_argument("--trace-out", type=str, default=None, dest="trace_out")
    sp.add_argument("--trace-every", type=int, default=None, dest="trace_every")

    for name in ("exponent", "spectrum"):
        sp = sub.add_parser(name, help=f"{name} estimation for any cocycle spec")
        _add_common(sp)
        _add_spec_flags(sp)
        if name == "exponent":
            sp.add_argument("--norm", type=str, default=None,
                            choices=["spectral", "frobenius"])

    sp = sub.add_parser("certify", help="uniform-hyperbolicity certificates")
    _add_common(sp)
    _add_spec_flags(sp)
    sp.add_argument("--method", type=str, default=None,
                    choices=["auto", "cone", "growth"])
    sp.add_argument("--grid", type=int, default=None)
    sp.add_argument("--nmax", type=int, default=None)
    sp.add_argument("--theta", type=float, default=None)

    sp = sub.add_parser("slice", help="one frequency row of the butterfly; "
                        "--resolutions switches to measure diagnostics")
    _add_common(sp)
    sp.add_argument("--alpha", type=str, default=None)
    sp.add_argument("--emin", type=float, default=None)
    sp.add_argument("--emax", type=float, default=None)
    sp.add_argument("--width", type=int, default=None)
    sp.add_argument("--method", type=str, default=None,
                    choices=["auto", "oracle", "growth"])
    sp.add_argument("--theta", type=float, default=None)
    sp.add_argument("--nmax", type=int, default=None)
    sp.add_argument("--coupling", type=float, default=None)
    sp.add_argument("--resolutions", type=str, default=None)

    sp = sub.add_parser("butterfly", help="full (E, alpha) raster to PGM")
    _add_common(sp)
    sp.add_argument("--qmax", type=int, default=None)
    sp.add_argument("--width", type=int, default=None)
    sp.add_argument("--height", type=int, default=None)
    sp.add_argument("--emin", type=float, default=None)
    sp.add_argument("--emax", type=float, default=None)
    sp.add_argument("--coupling", type=float, default=None)

    sp = sub.add_parser("furstenberg", help="random-product positivity check")
    _add_common(sp)
    sp.add_argument("--set", type=str, default=None, dest="matrix_set",
                    choices=["so2", "hyperbolic", "barycentric"])
    sp.add_argument("--matrices", type=str, default=None)
    sp.add_argument("--probs", type=str, default=None)
    sp.add_argument("--depth", type=int, default=None)
    return p


_DEFAULTS = {
    "barycentric": {"seed": 0, "steps": 1_000_000, "out": None,
                    "trace_out": None, "trace_every": None},
    "exponent": {"seed": 0, "steps": 1_000_000, "out": None,
                 "spec": "toral", "energy": 0.0, "coupling": 2.0,
                 "alpha": "golden", "epsilon": 0.0, "matrix": None,
                 "matrices": None, "start": None, "norm": "spectral"},
    "spectrum": {"seed": 0, "steps": 1_000_000, "out": None,
                 "spec": "toral", "energy": 0.0, "coupling": 2.0,
                 "alpha": "golden", "epsilon": 0.0, "matrix": None,
                 "matrices": None, "start": None},
    "certify": {"seed": 0, "steps": None, "out": None,
                "spec": "schrodinger",
                "energy": 0.0, "coupling": 2.0, "alpha": "golden",
                "epsilon": 0.0, "matrix": None, "matrices": None,
                "start": None, "method": "auto", "grid": None,
                "nmax": N_MAX_DEFAULT, "theta": THETA_DEFAULT},
    "slice": {"seed": 0, "steps": None, "out": None,
              "alpha": "golden", "emin": -4.0,
              "emax": 4.0, "width": 2000, "method": "auto",
              "theta": None, "nmax": None, "coupling": 2.0,
              "resolutions": None},
    "butterfly": {"seed": 0, "steps": None, "out": None,
                  "qmax": 30, "width": 512,
                  "height": 512, "emin": -4.0, "emax": 4.0, "coupling": 2.0},
    "furstenberg": {"seed": 0, "steps": 100_000, "out": None,
                    "matrix_set": "barycentric", "matrices": None,
                    "probs": None, "depth": 4},
}

_PARSERS = {
    "seed": int, "steps": int, "trace_every": int, "width": int,
    "height": int, "qmax": int, "depth": int, "grid": int, "nmax": int,
    "energy": float, "coupling": float, "epsilon": float, "emin": float,
    "emax": float, "theta": float,
}


def _resolve(args) -> tuple[dict, int]:
    command = args.command
    defaults = dict(_DEFAULTS[command])
    flag_values = {k: getattr(args, k, None) for k in defaults}
    file_values = parse_config_file(args.config) if args.config else {}
    cfg = resolve_config(flag_values, file_values, defaults, _PARSERS)
    cfg["command"] = command
    threads = resolve_threads(args.threads)
    return cfg, threads


def parse_alpha(text: str):
    """Frequency spec: 'golden', a float, or an exact rational 'p/q'."""
    if text == "golden":
        return GOLDEN
    if "/" in text:
        p, q = text.split("/", 1)
        try:
            return (int(p), int(q))
        except ValueError:
            raise UsageError(f"bad rational frequency {text!r}")
    try:
        return float(text)
    except ValueError:
        raise UsageError(f"bad frequency {text!r}")


def _alpha_float(alpha) -> float:
    return alpha[0] / alpha[1] if isinstance(alpha, tuple) else float(alpha)


def _json_matrix(text, what):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"bad {what} JSON: {exc}")


def build_spec(cfg: dict):
    kind = cfg["spec"]
    if kind == "constant":
        if not cfg.get("matrix"):
            raise UsageError("constant spec needs --matrix '[[a,b],[c,d]]'")
        return Constant(_json_matrix(cfg["matrix"], "matrix"))
    if kind == "random":
        if not cfg.get("matrices"):
            raise UsageError("random spec needs --matrices '[[[...]],[[...]]]'")
        return RandomProduct(tuple(_json_matrix(cfg["matrices"], "matrices")))
    if kind == "barycentric":
        return Barycentric()
    if kind == "schrodinger":
        return Schrodinger(cfg["energy"], cfg["coupling"],
                           _alpha_float(parse_alpha(cfg["alpha"])))
    if kind == "toral":
        return ToralDerivative(cfg["epsilon"])
    raise UsageError(f"unknown spec {kind!r}")


def _parse_start(text):
    if text is None:
        return None
    parts = [float(x) for x in text.split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _echo(cfg: dict) -> dict:
    """Math-relevant resolved config (no paths, no thread counts)."""
    drop = {"trace_out", "out"}
    return {k: v for k, v in cfg.items() if k not in drop}


def _cmd_barycentric(cfg, threads):
    n = cfg["steps"]
    seed = cfg["seed"]
    every = cfg["trace_every"] or max(1, n // 100)
    if cfg["trace_out"]:
        chi_g, trace = bary.chi_geometric(bary.Triangle.equilateral(), n, seed,
                                          record_every=every)
        bary.write_trace_csv(cfg["trace_out"], trace)
    else:
        chi_g = bary.chi_geometric(bary.Triangle.equilateral(), n, seed)
    chi_c = bary.chi_cocycle(n, seed)
    diff = abs(chi_g - chi_c)
    print(f"chi_geometric = {chi_g:.7f}")
    print(f"chi_cocycle   = {chi_c:.7f}")
    print(f"difference    = {diff:.3e}")
    if cfg["out"]:
        write_report(cfg["out"], "barycentric",
                     {"chi_geometric": chi_g, "chi_cocycle": chi_c,
                      "difference": diff}, _echo(cfg))
    return 0


def _spec_driver(cfg):
    spec = build_spec(cfg)
    return spec, driver_for(spec, cfg["seed"], _parse_start(cfg.get("start")))


def _cmd_exponent(cfg, threads):
    spec, driver = _spec_driver(cfg)
    rep = top_exponent(spec, driver, cfg["steps"], norm=cfg["norm"])
    print(f"chi_1 = {rep.top:.10f} +- {rep.stderr[0]:.2e}  (n = {rep.steps})")
    if cfg["out"]:
        write_report(cfg["out"], "exponent", rep.to_dict(), _echo(cfg))
    return 0


def _cmd_spectrum(cfg, threads):
    spec, driver = _spec_driver(cfg)
    rep = spectrum_qr(spec, driver, cfg["steps"])
    for chi, mult, err in zip(rep.exponents, rep.multiplicities, rep.stderr):
        print(f"chi = {chi:+.8f}  multiplicity {mult}  +- {err:.2e}")
    s = sum(c * m for c, m in zip(rep.exponents, rep.multiplicities))
    print(f"sum = {s:+.3e}  (n = {rep.steps})")
    if cfg["out"]:
        write_report(cfg["out"], "spectrum", rep.to_dict(), _echo(cfg))
    return 0


def _cmd_certify(cfg, threads):
    spec = build_spec(cfg)
    method = cfg["method"]
    if method == "auto":
        method = "growth" if isinstance(spec, Schrodinger) else "cone"
    if method == "growth":
        if not isinstance(spec, Schrodinger):
            raise UsageError("growth certification applies to schrodinger specs")
        cert = uniform_growth_test(spec, cfg["grid"] or GRID_DEFAULT,
                                   cfg["nmax"], cfg["theta"])
    else:
        cert = cone_certify(spec, cfg["grid"] or CONE_GRID_DEFAULT,
                            cfg["nmax"], cfg["theta"])
    print(f"verdict = {cert.verdict}  witness_n = {cert.witness_n}  "
          f"growth = {cert.growth_constant:.4f}")
    if cfg["out"]:
        write_report(cfg["out"], "certificate", cert.to_dict(), _echo(cfg))
    return 0


def _cmd_slice(cfg, threads):
    alpha = parse_alpha(cfg["alpha"])
    if cfg["resolutions"]:
        res = [int(x) for x in cfg["resolutions"].split(",")]
        rep = bfly.measure_slice(_alpha_float(alpha), res, cfg["emin"],
                                 cfg["emax"], cfg["width"],
                                 cfg["theta"] if cfg["theta"] is not None
                                 else THETA_DEFAULT,
                                 coupling=cfg["coupling"])
        for n, m in zip(rep.resolutions, rep.measures):
            print(f"n_max = {n:6d}  measure = {m:.4f}")
        print(f"nonincreasing = {rep.nonincreasing}")
        if cfg["out"]:
            write_report(cfg["out"], "measure", rep.to_dict(), _echo(cfg))
        return 0
    e_grid = np.linspace(cfg["emin"], cfg["emax"], cfg["width"])
    mask = slice_spectrum(alpha, e_grid, cfg["method"],
                          theta=cfg["theta"] if cfg["theta"] is not None
                          else SLICE_THETA,
                          n_max=cfg["nmax"] if cfg["nmax"] is not None
                          else SLICE_N_MAX,
                          coupling=cfg["coupling"])
    frac = float(np.mean(mask))
    print(f"in-spectrum fraction = {frac:.4f} of {len(e_grid)} energies")
    if cfg["out"]:
        _write_slice_csv(cfg["out"], e_grid, mask, _echo(cfg))
    return 0


def _write_slice_csv(path, e_grid, mask, echo) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("# config: " + json.dumps(echo, sort_keys=True) + "\n")
        fh.write("E,in_spectrum\n")
        for e, m in zip(e_grid, mask):
            fh.write(f"{float(e)!r},{int(m)}\n")


def _cmd_butterfly(cfg, threads):
    raster = bfly.scan_butterfly(cfg["qmax"], cfg["width"], cfg["height"],
                                 cfg["emin"], cfg["emax"], cfg["coupling"],
                                 threads=threads, parallel_map=parallel_map)
    e_def, a_def = bfly.symmetry_defect(raster)
    print(f"raster {raster.width}x{raster.height}, rows painted: "
          f"{len(raster.row_methods)}")
    print(f"symmetry defect: E-flip {e_def:.4f}, alpha-flip {a_def:.4f}")
    if cfg["out"]:
        bfly.render_pgm(raster, cfg["out"])
        with open(cfg["out"] + ".config", "w", encoding="ascii",
                  newline="\n") as fh:
            fh.write(config_file_text(_echo(cfg)))
        write_report(cfg["out"] + ".json", "butterfly",
                     {"e_flip_defect": e_def, "alpha_flip_defect": a_def,
                      "rows": [list(r) for r in raster.row_methods]},
                     _echo(cfg))
    return 0


_FURSTENBERG_SETS = {
    "so2": lambda: [
        [[math.cos(1.0), -math.sin(1.0)], [math.sin(1.0), math.cos(1.0)]],
        [[math.cos(math.sqrt(2)), -math.sin(math.sqrt(2))],
         [math.sin(math.sqrt(2)), math.cos(math.sqrt(2))]],
    ],
    "hyperbolic": lambda: [[[2.0, 1.0], [1.0, 1.0]]],
    "barycentric": lambda: [m.tolist() for m in barycentric_generators()],
}


def _cmd_furstenberg(cfg, threads):
    if cfg["matrices"]:
        mats = _json_matrix(cfg["matrices"], "matrices")
    else:
        mats = _FURSTENBERG_SETS[cfg["matrix_set"]]()
    probs = _json_matrix(cfg["probs"], "probs") if cfg["probs"] else None
    verdict = furstenberg_check(mats, probs, cfg["steps"], cfg["depth"],
                                seed=cfg["seed"])
    print(f"noncompact            = {verdict.noncompact}  "
          f"(max log-norm {verdict.norm_growth:.3f})")
    print(f"no_invariant_line_set = {verdict.no_invariant_line_set}  "
          f"(best residual {verdict.line_residual:.3e})")
    print(f"chi_plus              = {verdict.chi_plus:.6f} "
          f"+- {verdict.chi_stderr:.2e}")
    if cfg["out"]:
        write_report(cfg["out"], "furstenberg", verdict.to_dict(), _echo(cfg))
    return 0


_HANDLERS = {
    "barycentric": _cmd_barycentric,
    "exponent": _cmd_exponent,
    "spectrum": _cmd_spectrum,
    "certify": _cmd_certify,
    "slice": _cmd_slice,
    "butterfly": _cmd_butterfly,
    "furstenberg": _cmd_furstenberg,
}


def cli_dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg, threads = _resolve(args)
        return _HANDLERS[args.command](cfg, threads)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage(), file=sys.stderr, end="")
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse -h
        return int(exc.code or 0)


def main() -> None:
    sys.exit(cli_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
