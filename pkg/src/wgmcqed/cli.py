"""Command-line front end.

Subcommands ``derive``, ``spectrum``, ``map``, ``saturation``, ``selftest`` and
``echo-config``.  Exit codes: 0 success, 1 usage or configuration error,
2 solver failure, 3 self-test failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from importlib.metadata import PackageNotFoundError, version

import numpy as np

from .acceptance import run_acceptance
from .config import RunConfig, dump_config, load_config
from .errors import CQEDError, ConfigError, InvalidDimensionError, ParameterError
from .model import GHZ, DriveSpec, critical_numbers, photon_number_for_power
from .spectra import (
    anticrossing,
    fit_doublet,
    map_cavity_tuning,
    pm_to_ghz,
    power_sweep,
    rad_to_pm,
    scan_laser,
)

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_SELFTEST = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "dev"


# --- output helpers -----------------------------------------------------------

def _header(cfg: RunConfig, command: str) -> list[str]:
    p = cfg.params
    g1, g2 = p.g_standing
    lines = [f"wgm-cqed {_version()} {command}"]
    lines += [ln for ln in dump_config(cfg).splitlines() if ln.strip()]
    lines.append(f"resolved g_tw_ghz = {p.coupling / GHZ!r}")
    lines.append(f"resolved g_sw1_ghz = {abs(g1) / GHZ!r}, g_sw2_ghz = {abs(g2) / GHZ!r}")
    return ["# " + ln for ln in lines]


def _fmt(cfg: RunConfig):
    spec = cfg.output.float_format

    def f(x):
        if x is None or (isinstance(x, float) and not np.isfinite(x)):
            return "nan"
        if isinstance(x, (bool, np.bool_)):
            return "1" if x else "0"
        if isinstance(x, (int, np.integer)):
            return str(int(x))
        return format(float(x), spec)

    return f


def _write_csv(path: str, header: list[str], columns: list[str], rows, fmt, trailer=()):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for ln in header:
            fh.write(ln + "\n")
        fh.write(",".join(columns) + "\r\n")
        for row in rows:
            fh.write(",".join(fmt(v) if not isinstance(v, str) else v for v in row) + "\r\n")
        for ln in trailer:
            fh.write("# " + ln + "\n")


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.output.directory, exist_ok=True)
    return os.path.join(cfg.output.directory, f"{cfg.output.prefix}_{name}")


def _check_ceiling(cfg: RunConfig, powers, force: bool):
    if force or cfg.solver.allow_above_ceiling:
        return
    p = cfg.params
    for pw in np.atleast_1d(powers):
        n = photon_number_for_power(p, float(pw))
        if n > cfg.solver.max_n_cav * (1 + 1e-9):
            raise UsageError(
                f"drive gives n_cav = {n:.3g} above the validity ceiling {cfg.solver.max_n_cav:g} "
                f"for n_fock = {cfg.solver.n_fock}; raise solver.max_n_cav or pass --force")


def _join(values, fmt) -> str:
    return ";".join(fmt(v) for v in values)


# --- commands -----------------------------------------------------------------

def cmd_derive(cfg: RunConfig, args) -> int:
    p = cfg.params
    g1, g2 = p.g_standing
    n0, m0 = critical_numbers(p)
    lam = p.lambda0
    items = [
        ("g_tw_ghz", p.coupling / GHZ),
        ("g_sw1_ghz", abs(g1) / GHZ),
        ("g_sw2_ghz", abs(g2) / GHZ),
        ("g_ratio", abs(g1) / abs(g2) if abs(g2) > 0 else float("inf")),
        ("gamma_p_ghz", p.gamma_pure / GHZ),
        ("kappa_T_ghz", p.kappa_T / GHZ),
        ("Q", p.quality_factor),
        ("N0", n0),
        ("m0", m0),
        ("fwhm_ghz", 2 * p.kappa_T / GHZ),
        ("fwhm_pm", float(rad_to_pm(2 * p.kappa_T, lam))),
        ("doublet_splitting_ghz", 2 * p.gamma_beta / GHZ),
        ("doublet_splitting_pm", float(rad_to_pm(2 * p.gamma_beta, lam))),
    ]
    for pm in (1.0, 5.0, 10.0, 13.0, 20.0, 50.0, 100.0):
        items.append((f"pm_to_ghz[{pm:g}]", float(pm_to_ghz(pm, lam))))
    for k, v in items:
        print(f"{k}={v:.6g}")
    return EXIT_OK


def _spectrum_rows(res):
    R = res.R[0]
    norm = R.max() if R.max() > 0 else 1.0
    lam = res.params.lambda0
    for pt, r in zip(res.points, R):
        yield (float(rad_to_pm(pt.laser_detuning, lam)), pt.laser_detuning / GHZ,
               float(rad_to_pm(pt.cavity_exciton_detuning, lam)), pt.input_power,
               pt.n_intracavity, pt.T, pt.R, r / norm, pt.exciton_population,
               pt.truncation[0], pt.truncation[1])


SPECTRUM_COLUMNS = ["delta_laser_pm", "delta_laser_ghz", "delta_ca_pm", "power_w", "n_cav", "T", "R",
                    "delta_R", "pop_exciton", "trunc_cw", "trunc_ccw"]


def _spectrum(cfg: RunConfig, args, delta_ca: float, name: str) -> int:
    grid = cfg.laser_grid()
    if grid.size < 3:
        raise UsageError("spectrum needs a laser grid of at least 3 points")
    power = cfg.drive_power()
    _check_ceiling(cfg, power, args.force)
    res = scan_laser(cfg.params, DriveSpec.tuned(power, 0.0, delta_ca), grid,
                     n_fock=cfg.solver.n_fock, basis=cfg.solver.basis, threads=args.threads,
                     prominence=cfg.sweep.prominence)
    fmt = _fmt(cfg)
    trailer = []
    if res.lines:
        ln = res.lines[0]
        trailer.append(f"r_peaks_ghz = {_join(ln.r_peaks.positions / GHZ, fmt)}")
        trailer.append(f"t_dips_ghz = {_join(ln.t_dips.positions / GHZ, fmt)}")
        trailer.append(f"r_splitting_ghz = {fmt(ln.splitting_ghz())}")
        trailer.append(f"peak_delta_R = {fmt(ln.peak_delta_R)}")
        if cfg.params.coupling == 0:
            fit = fit_doublet(grid, res.T[0])
            trailer.append(f"doublet_fit_linewidth_ghz = {fmt(fit.linewidth / GHZ)}")
            trailer.append(f"doublet_fit_splitting_ghz = {fmt(fit.splitting / GHZ)}")
            trailer.append(f"doublet_fit_splitting_pm = {fmt(float(rad_to_pm(fit.splitting, cfg.params.lambda0)))}")
    path = _out_path(cfg, name)
    _write_csv(path, _header(cfg, "spectrum"), SPECTRUM_COLUMNS, _spectrum_rows(res), fmt, trailer)
    print(path)
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig, args) -> int:
    return _spectrum(cfg, args, cfg.delta_ca(), "spectrum.csv")


MAP_COLUMNS = ["delta_ca_pm", "delta_ca_ghz", "delta_la_pm", "delta_la_ghz", "T", "R", "T_norm", "R_norm",
               "n_cav", "pop_exciton", "trunc_cw", "trunc_ccw"]
FEATURE_COLUMNS = ["delta_ca_pm", "delta_ca_ghz", "r_peaks_ghz", "t_dips_ghz", "r_splitting_ghz",
                   "gap_t_ghz", "gap_t_pm", "gap_r_ghz", "peak_delta_R", "max_trunc"]


def _gnuplot(data: str) -> str:
    base = os.path.basename(data)
    return "\n".join([
        "# intensity maps of normalized transmission and reflection",
        "set datafile separator ','",
        "set datafile commentschars '#'",
        "set key autotitle columnhead",
        "set view map",
        "set xlabel 'laser-exciton detuning (pm)'",
        "set ylabel 'cavity-exciton detuning (pm)'",
        "set palette rgbformulae 33,13,10",
        "set multiplot layout 1,2",
        "set title 'transmission'",
        f"splot '{base}' using 3:1:7 with points pointtype 5 pointsize 0.6 palette notitle",
        "set title 'reflection'",
        f"splot '{base}' using 3:1:8 with points pointtype 5 pointsize 0.6 palette notitle",
        "unset multiplot",
        "",
    ])


def cmd_map(cfg: RunConfig, args) -> int:
    cav = cfg.cavity_grid()
    las = cfg.laser_grid()
    if cav.size < 1 or las.size < 3:
        raise UsageError("map needs a cavity grid and a laser grid of at least 3 points")
    if cav.size == 1:
        return _spectrum(cfg, args, float(cav[0]), "map.csv")
    power = cfg.drive_power()
    _check_ceiling(cfg, power, args.force)
    p = cfg.params
    lam = p.lambda0
    res = map_cavity_tuning(p, DriveSpec(power), cav, las, n_fock=cfg.solver.n_fock,
                            basis=cfg.solver.basis, threads=args.threads, prominence=cfg.sweep.prominence)
    fmt = _fmt(cfg)
    T, R = res.T, res.R
    Tn = (T - T.min(axis=1, keepdims=True)) / np.maximum(np.ptp(T, axis=1, keepdims=True), 1e-300)
    Rn = R / np.maximum(R.max(axis=1, keepdims=True), 1e-300)
    rows = []
    for i, dca in enumerate(cav):
        for j, pt in enumerate(res.line(i)):
            rows.append((float(rad_to_pm(dca, lam)), dca / GHZ, float(rad_to_pm(pt.exciton_detuning, lam)),
                         pt.exciton_detuning / GHZ, pt.T, pt.R, Tn[i, j], Rn[i, j], pt.n_intracavity,
                         pt.exciton_population, pt.truncation[0], pt.truncation[1]))
    header = _header(cfg, "map")
    path = _out_path(cfg, "map.csv")
    _write_csv(path, header, MAP_COLUMNS, rows, fmt)
    ac_t, ac_r = anticrossing(res, "T"), anticrossing(res, "R")
    feats = []
    for i, (dca, ln) in enumerate(zip(cav, res.lines)):
        feats.append((float(rad_to_pm(dca, lam)), dca / GHZ, _join(ln.r_peaks.positions / GHZ, fmt),
                      _join(ln.t_dips.positions / GHZ, fmt),
                      np.nan if ln.splitting is None else ln.splitting / GHZ,
                      ac_t.gaps[i] / GHZ, float(rad_to_pm(ac_t.gaps[i], lam)), ac_r.gaps[i] / GHZ,
                      ln.peak_delta_R, ln.max_truncation))
    trailer = [
        f"min_gap_t_ghz = {fmt(ac_t.min_gap / GHZ)}",
        f"min_gap_t_delta_ca_ghz = {fmt(ac_t.min_detuning / GHZ)}",
        f"bare_splitting_ghz = {fmt(ac_t.reference_splitting / GHZ)}",
        f"avoided_crossing = {'yes' if ac_t.avoided else 'no'}",
    ]
    fpath = _out_path(cfg, "map_features.csv")
    _write_csv(fpath, header, FEATURE_COLUMNS, feats, fmt, trailer)
    gpath = _out_path(cfg, "map.gp")
    with open(gpath, "w", encoding="utf-8") as fh:
        fh.write("\n".join(header) + "\n" + _gnuplot(path))
    for x in (path, fpath, gpath):
        print(x)
    return EXIT_OK


SATURATION_COLUMNS = ["power_w", "p_dropped_w", "n_cav_bare", "splitting_pm", "splitting_ghz",
                      "peak_delta_R", "trunc_flag"]


def cmd_saturation(cfg: RunConfig, args) -> int:
    powers = np.sort(np.atleast_1d(cfg.power_list()))
    las = cfg.laser_grid()
    if powers.size < 1 or las.size < 5:
        raise UsageError("saturation needs a power list and a laser grid of at least 5 points")
    _check_ceiling(cfg, powers, args.force)
    p = cfg.params
    res = power_sweep(p, powers, las, cavity_exciton_detuning=cfg.saturation_delta_ca(),
                      n_fock=cfg.solver.n_fock, basis=cfg.solver.basis, threads=args.threads,
                      prominence=cfg.sweep.prominence, gate=cfg.solver.truncation_gate)
    fmt = _fmt(cfg)
    rows = []
    for pw, ln in zip(powers, res.lines):
        s = ln.splitting
        rows.append((pw, ln.p_dropped, ln.n_cav_bare,
                     np.nan if s is None else float(rad_to_pm(s, p.lambda0)),
                     np.nan if s is None else s / GHZ, ln.peak_delta_R, bool(ln.truncation_flag)))
    path = _out_path(cfg, "saturation.csv")
    trailer = [f"delta_ca_ghz = {fmt(cfg.saturation_delta_ca() / GHZ)}"]
    _write_csv(path, _header(cfg, "saturation"), SATURATION_COLUMNS, rows, fmt, trailer)
    print(path)
    return EXIT_OK


def cmd_selftest(cfg: RunConfig, args) -> int:
    only = None
    if args.criteria:
        try:
            only = [int(x) for x in args.criteria.replace(",", " ").split()]
        except ValueError:
            raise UsageError(f"bad criteria list {args.criteria!r}") from None
    try:
        results = run_acceptance(cfg.params, n_fock=cfg.solver.n_fock, only=only, threads=args.threads,
                                 echo=lambda s: print(s, flush=True))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed"
          + (f"; failed: {', '.join(map(str, failed))}" if failed else ""))
    return EXIT_SELFTEST if failed else EXIT_OK


def cmd_echo_config(cfg: RunConfig, args) -> int:
    sys.stdout.write(dump_config(cfg))
    return EXIT_OK


COMMANDS = {
    "derive": cmd_derive,
    "spectrum": cmd_spectrum,
    "map": cmd_map,
    "saturation": cmd_saturation,
    "selftest": cmd_selftest,
    "echo-config": cmd_echo_config,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="INI configuration file (defaults: built-in parameter set)")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value; repeatable")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for sweeps (fallback: WGM_CQED_THREADS)")
    common.add_argument("-o", "--out", help="output directory (overrides output.directory)")
    common.add_argument("--force", action="store_true", help="allow drives above the n_cav ceiling")
    parser = _Parser(prog="wgm-cqed", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp_ = sub.add_parser(name, parents=[common])
        if name == "selftest":
            sp_.add_argument("--criteria", help="comma-separated criterion numbers to run")
    return parser


def _overrides(items) -> dict:
    out = {}
    for item in items:
        key, sep, val = item.partition("=")
        if not sep or "." not in key:
            raise ConfigError(f"override {item!r} is not of the form section.key=value")
        out[key.strip()] = val.strip()
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        overrides = _overrides(args.set)
        if args.out:
            overrides["output.directory"] = args.out
        cfg = load_config(args.config, overrides)
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, UsageError, ParameterError, InvalidDimensionError, OSError) as exc:
        print(f"wgm-cqed: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CQEDError as exc:
        print(f"wgm-cqed: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"wgm-cqed: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
