"""Command-line interface: ``alphaturb {force,spinup,residual,analyze,filters}``.

Every subcommand takes ``--config PATH`` plus ``--set key=value``
overrides.  ``$ALPHATURB_OUTPUT_DIR`` overrides ``output_dir``.

Exit codes: 0 success, 1 usage/configuration error, 2 numerical failure
(blow-up), 3 I/O or malformed input file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import plots
from .checkpoint import Checkpoint, CheckpointError, read_checkpoint, write_checkpoint
from .config import ConfigError, RunConfig, load_config
from .ensemble import (MemberRun, ResumePoint, is_stationary, reduce_members, run_residuals, spin_up,
                       step_count, synthesize_initial)
from .filters import FilterSpec, raw_symbol, symbol
from .solver import BlowUpError, ForcingField, absorbing_bound, force_norm, make_force
from .spectral import SpectralField
from .stats import eta, fit_growth, growth_exponent

log = logging.getLogger("alphaturb")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

FORCE_FILE = "force.ckpt"
LABEL_RE = re.compile(r"^a(?P<alpha0>[-+0-9.eE]+)_N(?P<order>\d+|inf)$")


class InputError(Exception):
    """Unreadable or malformed input file."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    return repr(float(x))


def member_file(out: Path, j: int) -> Path:
    return out / f"member_{j}.ckpt"


def residual_file(out: Path, j: int) -> Path:
    return out / f"residual_member_{j}.ckpt"


def spec_from_label(label: str) -> FilterSpec:
    m = LABEL_RE.match(label)
    if not m:
        raise ValueError(f"column {label!r} is not of the form a<alpha0>_N<order>")
    return FilterSpec(m["order"], float(m["alpha0"]))


# force -----------------------------------------------------------------

def save_force(cfg: RunConfig, force: ForcingField, path: Path) -> None:
    write_checkpoint(path, Checkpoint("force", cfg.grid_m, cfg.kmax, 0, cfg.nu, cfg.dt,
                                      {"g": force.g.coeffs}, force_seed=force.seed))


def load_force(cfg: RunConfig, path: Path) -> ForcingField:
    ck = _read(path)
    if ck.kind != "force":
        raise InputError(f"{path}: not a force file")
    if ck.kmax != cfg.kmax:
        raise InputError(f"{path}: force truncation {ck.kmax} does not match kmax={cfg.kmax}")
    g = SpectralField(ck.kmax, ck.fields["g"])
    fnorm = force_norm(g)
    return ForcingField(g, fnorm, fnorm / cfg.nu**2, cfg.nu, ck.force_seed)


def _read(path: Path) -> Checkpoint:
    try:
        return read_checkpoint(path)
    except FileNotFoundError:
        raise InputError(f"missing file: {path}") from None
    except CheckpointError as err:
        raise InputError(f"{path}: {err}") from None


def cmd_force(cfg: RunConfig, args) -> int:
    force = make_force(cfg.force_seed, cfg.grashof, cfg.nu, cfg.kmax)
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    save_force(cfg, force, out / FORCE_FILE)
    summary = (f"force_seed = {cfg.force_seed}\nfnorm = {fmt(force.fnorm)}\n"
               f"grashof = {fmt(force.grashof)}\nnu = {fmt(cfg.nu)}\n")
    (out / "force_summary.txt").write_text(summary)
    print(summary, end="")
    return EXIT_OK


# spinup ----------------------------------------------------------------

def _spinup_job(job):
    j, cfg, force = job
    initial = synthesize_initial(cfg.ensemble_seed, j, cfg.spectrum(), cfg.kmax)
    return spin_up(initial, force, cfg.params, cfg.spinup_time, cfg.sample_interval, member=j)


def _map(fn, jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(job) for job in jobs]


def cmd_spinup(cfg: RunConfig, args) -> int:
    out = cfg.out
    force = load_force(cfg, out / FORCE_FILE)
    results = _map(_spinup_job, [(j, cfg, force) for j in range(cfg.ensemble_size)], cfg.workers)
    points = []
    for j, spin in enumerate(results):
        state = spin.state
        write_checkpoint(member_file(out, j), Checkpoint(
            "state", cfg.grid_m, cfg.kmax, state.n, cfg.nu, cfg.dt, {"omega": state.omega.coeffs},
            force_seed=cfg.force_seed, ensemble_seed=cfg.ensemble_seed, member=j))
        with open(out / f"energy_member_{j}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "energy", "enstrophy"])
            for row in zip(spin.times, spin.energies, spin.enstrophies):
                w.writerow([fmt(x) for x in row])
        points.append((j, spin.energies[-1], spin.enstrophies[-1]))
        flag = "stationary" if is_stationary(spin.energies) else "NOT stationary"
        print(f"member {j}: energy {spin.energies[-1]:.6g}, enstrophy {spin.enstrophies[-1]:.6g} ({flag})")
    with open(out / "energy_enstrophy.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["member", "energy", "enstrophy"])
        for j, e, z in points:
            w.writerow([j, fmt(e), fmt(z)])
    (out / "energy.gp").write_text(plots.energy_script(cfg.ensemble_size))
    return EXIT_OK


# residual --------------------------------------------------------------

def _history(rp: ResumePoint) -> np.ndarray:
    rows = [[t, v, rp.cfl_max] + list(sq) for t, v, sq in zip(rp.times, rp.vorticity_norms, rp.sq_norms)]
    return np.array(rows, dtype=float)


def _resume_from(ck: Checkpoint, specs) -> ResumePoint:
    hist = ck.history
    rho = np.array([ck.fields[f"rho_{s.label}"] for s in specs])
    return ResumePoint(ck.n, ck.fields["omega"], rho, hist[:, 0].tolist(),
                       hist[:, 3:].tolist(), hist[:, 1].tolist(), float(hist[-1, 2]))


def _residual_job(job):
    j, cfg, force, resume, stop_after = job
    out = cfg.out
    start = _read(member_file(out, j))
    specs = cfg.specs
    omega0 = SpectralField(cfg.kmax, start.fields["omega"])

    def save(rp: ResumePoint):
        fields = {"omega": rp.omega}
        for s, r in zip(specs, rp.rho):
            fields[f"rho_{s.label}"] = r
        write_checkpoint(residual_file(out, j), Checkpoint(
            "residual", cfg.grid_m, cfg.kmax, rp.n, cfg.nu, cfg.dt, fields,
            force_seed=cfg.force_seed, ensemble_seed=cfg.ensemble_seed, member=j, history=_history(rp)))

    rp = None
    if resume and residual_file(out, j).exists():
        rp = _resume_from(_read(residual_file(out, j)), specs)
    return run_residuals(j, omega0, force, cfg.params, specs, cfg.run_time, cfg.sample_interval,
                         resume=rp, checkpoint_interval=cfg.checkpoint_interval, on_checkpoint=save,
                         stop_after=stop_after, cfl_interval=cfg.cfl_interval)


def cmd_residual(cfg: RunConfig, args) -> int:
    out = cfg.out
    specs = cfg.specs
    nrun = step_count(cfg.run_time, cfg.dt)
    if args.dry_run:
        nspin = step_count(cfg.spinup_time, cfg.dt)
        total = (nspin + nrun) * cfg.ensemble_size
        print(f"members = {cfg.ensemble_size}\nspinup_steps = {nspin}\nresidual_steps = {nrun}\n"
              f"filters = {len(specs)}\ntotal_steps = {total}\n"
              f"samples_per_member = {nrun // cfg.sample_interval + 1}")
        return EXIT_OK
    force = load_force(cfg, out / FORCE_FILE)
    for j in range(cfg.ensemble_size):
        if not member_file(out, j).exists():
            raise InputError(f"missing checkpoint for member {j}: {member_file(out, j)} (run spinup first)")
    jobs = [(j, cfg, force, args.resume, args.stop_after) for j in range(cfg.ensemble_size)]
    runs: list[MemberRun] = _map(_residual_job, jobs, cfg.workers)
    erms = reduce_members(runs)
    write_erms(out / "erms.csv", runs[0].times, specs, erms)
    (out / "erms.gp").write_text(plots.erms_script(specs))
    bound = absorbing_bound(force.fnorm, cfg.nu, cfg.c0)
    with open(out / "monitors.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["member", "max_vorticity_norm", "absorbing_bound", "inside", "cfl_max"])
        for r in runs:
            vmax = float(np.max(r.vorticity_norms))
            w.writerow([r.member, fmt(vmax), fmt(bound), int(vmax < bound), fmt(r.cfl_max)])
            if not vmax < bound:
                log.warning("member %d left the absorbing ball: %g >= %g", r.member, vmax, bound)
    print(f"wrote {out / 'erms.csv'} ({len(runs[0].times)} samples x {len(specs)} filters)")
    return EXIT_OK


def write_erms(path: Path, times, specs, erms) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [s.label for s in specs])
        for t, row in zip(times, erms):
            w.writerow([fmt(t)] + [fmt(x) for x in row])


def read_erms(path: Path) -> tuple[np.ndarray, list[FilterSpec], np.ndarray]:
    try:
        fh = open(path, newline="")
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from None
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "t":
            raise InputError(f"{path}:1: header must start with column 't'")
        try:
            specs = [spec_from_label(h) for h in header[1:]]
        except ValueError as err:
            raise InputError(f"{path}:1: {err}") from None
        times, rows = [], []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [float(x) for x in row]
            except ValueError:
                raise InputError(f"{path}:{lineno}: non-numeric field in {row}") from None
            times.append(vals[0])
            rows.append(vals[1:])
    if not rows:
        raise InputError(f"{path}: no data rows")
    return np.array(times), specs, np.array(rows)


# analyze ---------------------------------------------------------------

def _order_text(spec: FilterSpec) -> str:
    return spec.order_label


def cmd_analyze(cfg: RunConfig, args) -> int:
    out = Path(args.out) if args.out else cfg.out
    out.mkdir(parents=True, exist_ok=True)
    if args.fits:
        return _analyze_fits(Path(args.fits), out, args.horizon)
    path = Path(args.csv) if args.csv else cfg.out / "erms.csv"
    times, specs, erms = read_erms(path)
    T = args.horizon if args.horizon else float(times[-1])
    window = tuple(args.window) if args.window else (T / 2, float(times[-1]))
    with open(out / "fit.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha0", "N", "C1", "C2", "eta"])
        for i, s in enumerate(specs):
            if not np.any(erms[:, i] > 0):
                w.writerow([fmt(s.alpha0), _order_text(s), "0.0", "0.0", "nan"])
                continue
            fit = fit_growth(times, erms[:, i], T)
            w.writerow([fmt(s.alpha0), _order_text(s), fmt(fit.C1), fmt(fit.C2), fmt(fit.eta)])
            print(f"{s}: C1={fit.C1:.4g} C2={fit.C2:.4g} eta={fit.eta:.4g}")
    with open(out / "exponents.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha0", "N", "slope", "t_a", "t_b"])
        for i, s in enumerate(specs):
            col = erms[:, i]
            sel = (times >= window[0]) & (times <= window[1]) & (times > 0)
            slope = growth_exponent(times, col, window) if np.all(col[sel] > 0) else math.nan
            w.writerow([fmt(s.alpha0), _order_text(s), fmt(slope), fmt(window[0]), fmt(window[1])])
            print(f"{s}: slope={slope:.4f} on [{window[0]:g}, {window[1]:g}]")
    return EXIT_OK


def _analyze_fits(path: Path, out: Path, horizon: float | None) -> int:
    T = horizon or 1e5
    try:
        fh = open(path, newline="")
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from None
    rows = []
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"alpha0", "N", "C1", "C2"} <= set(reader.fieldnames):
            raise InputError(f"{path}:1: fit table needs columns alpha0,N,C1,C2")
        for lineno, row in enumerate(reader, 2):
            try:
                spec = FilterSpec(row["N"], float(row["alpha0"]))
                rows.append((spec, float(row["C1"]), float(row["C2"])))
            except (TypeError, ValueError):
                raise InputError(f"{path}:{lineno}: malformed row {row}") from None
    with open(out / "fit.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha0", "N", "C1", "C2", "eta"])
        for spec, c1, c2 in rows:
            w.writerow([fmt(spec.alpha0), _order_text(spec), fmt(c1), fmt(c2), fmt(eta(c1, c2, T))])
            print(f"{spec}: eta={eta(c1, c2, T):.2f}")
    return EXIT_OK


# filters ---------------------------------------------------------------

def cmd_filters(cfg: RunConfig, args) -> int:
    out = cfg.out
    out.mkdir(parents=True, exist_ok=True)
    k = np.arange(1, cfg.filter_kmax + 1, dtype=float)
    with open(out / "filters.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "N", "alpha", "alpha0", "k", "symbol"])
        for n, a in cfg.raw_filters:
            for kk, v in zip(k, raw_symbol(n, a, k * k)):
                w.writerow(["raw", n, fmt(a), fmt(a / math.sqrt(n + 1)), fmt(kk), fmt(v)])
        for a0 in cfg.alpha0_list:
            if a0 == 0:
                continue
            for n in cfg.n_list:
                spec = FilterSpec(n, a0)
                alpha = "" if spec.infinite else fmt(spec.alpha)
                for kk, v in zip(k, symbol(spec, k * k)):
                    w.writerow(["rescaled", spec.order_label, alpha, fmt(a0), fmt(kk), fmt(v)])
    with open(out / "filters_ref.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha0", "k_ref"])
        for a0 in cfg.alpha0_list:
            if a0 > 0:
                w.writerow([fmt(a0), fmt(1 / a0)])
    (out / "filters.gp").write_text(plots.filters_script(cfg))
    print(f"wrote {out / 'filters.csv'}")
    return EXIT_OK


# entry point -----------------------------------------------------------

COMMANDS = {"force": cmd_force, "spinup": cmd_spinup, "residual": cmd_residual,
            "analyze": cmd_analyze, "filters": cmd_filters}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="alphaturb", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value configuration file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
        if name == "residual":
            sp.add_argument("--dry-run", action="store_true", help="report the work without running")
            sp.add_argument("--resume", action="store_true", help="continue from residual checkpoints")
            sp.add_argument("--stop-after", type=int, default=None, help=argparse.SUPPRESS)
        if name == "analyze":
            sp.add_argument("--csv", help="E_rms CSV (default: <output_dir>/erms.csv)")
            sp.add_argument("--fits", help="table with alpha0,N,C1,C2 columns; recompute eta only")
            sp.add_argument("--horizon", type=float, default=None, help="T in eta = C2 T / C1")
            sp.add_argument("--window", type=float, nargs=2, metavar=("T_A", "T_B"))
            sp.add_argument("--out", help="directory for fit.csv and exponents.csv")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, args.set)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(f"alphaturb: configuration error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except BlowUpError as err:
        print(f"alphaturb: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, OSError) as err:
        print(f"alphaturb: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        print(f"alphaturb: invalid parameters: {err}", file=sys.stderr)
        return EXIT_USAGE


def run():
    sys.exit(main())
