"""Command line entry point ``besovns``.

Subcommands ``simulate``, ``decompose``, ``norms``, ``monitor`` and ``verify``
share ``--config PATH``, ``--out DIR`` and ``--seed N``.  Each stage reads the
artifacts the previous one wrote under the output directory.

Exit codes: 0 ok, 1 configuration error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import io
from .cascade import (cascade_kato_table, compute_cascade, energy_bound, remainder_residual,
                      stability_limit, top_layer_regularity, x_norm)
from .config import ConfigError, RunConfig, load_config
from .diagnostics import constant_ladder, monitor
from .littlewood_paley import build_partition
from .norms import BesovParams, NormReport, besov_norm, kato_norm, lp_norm, potential_norm
from .ns_solver import (InitialData, RunInfo, SolverConfig, SolverInstabilityError, energies,
                        integrate, make_initial_data)
from .verify import run_all

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("besovns")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig().validate()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        cfg = cfg.with_seed(args.seed)
    return cfg


def _out(args, cfg: RunConfig) -> Path:
    d = Path(args.out if args.out else cfg.outputs.directory)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_reports(out: Path, cfg: RunConfig, name: str, csv_obj=None, summary=None) -> None:
    if csv_obj is not None and "csv" in cfg.outputs.formats:
        io.export_csv(csv_obj, out / f"{name}.csv")
    if summary is not None and "json" in cfg.outputs.formats:
        io.write_json(summary, out / f"{name}.json")


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    grid = cfg.make_grid()
    ini = cfg.initial
    u0 = make_initial_data(InitialData(ini.kind, amplitude=ini.amplitude, M=ini.M,
                                       p=cfg.physics.p, seed=ini.seed), grid)
    scfg = SolverConfig(grid, cfg.solver.dt, cfg.solver.horizon, cfg.solver.scheme, cfg.solver.save_every)
    info = RunInfo()
    manifest = {"stage": "simulate", "config": cfg.to_dict()}
    try:
        traj = integrate(u0, scfg, info)
    except SolverInstabilityError as e:
        io.save_trajectory(e.partial, out / "trajectory")
        manifest.update(status="error", error=str(e), steps=info.steps, wall_time=info.wall_time)
        io.write_json(manifest, out / "simulate_manifest.json")
        raise
    io.save_trajectory(traj, out / "trajectory")
    manifest.update(status="ok", steps=info.steps, wall_time=info.wall_time, max_cfl=info.max_cfl,
                    samples=len(traj), warnings=info.warnings)
    io.write_json(manifest, out / "simulate_manifest.json")
    energy = NormReport(traj.times, energies(traj), "energy", s=0.0, p=2.0)
    _write_reports(out, cfg, "energy", energy)
    print(f"simulate: {len(traj)} samples, {info.steps} steps -> {out / 'trajectory'}")
    return EXIT_OK


def _load_traj(out: Path):
    return io.load_trajectory(out / "trajectory")


def cmd_decompose(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    traj = _load_traj(out)
    if traj.times[0] != 0.0:
        raise ValueError("decomposition needs a trajectory that starts at t = 0")
    dt = cfg.cascade.dt or stability_limit(traj.grid)
    layers = cfg.cascade.layers or None
    state = compute_cascade(traj[0], cfg.physics.p, float(traj.times[-1]), dt, times=traj.times,
                            layers=layers)
    v, residual = remainder_residual(traj, state)
    io.save_cascade(state, out / "cascade")
    part = build_partition(traj.grid)
    eb = energy_bound(v)
    kato = cascade_kato_table(state)
    summary = {
        "p": state.p, "m": state.m, "substeps": state.substeps, "dt": dt,
        "max_relative_residual": float(residual.values.max()) if len(residual) else None,
        "x_norm_sup": x_norm(v, part).sup,
        "top_layer_regularity_sup": top_layer_regularity(state, part).sup,
        "energy_sup_l2": eb.sup_l2, "energy_sup_grad": eb.sup_grad,
        "cascade_kato": [{"k": k, "q": q, "value": val} for (k, q), val in kato.items()],
    }
    _write_reports(out, cfg, "residual", residual, summary)
    print(f"decompose: m={state.m} layers -> {out / 'cascade'}")
    return EXIT_OK


def cmd_norms(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    traj = _load_traj(out)
    p = cfg.physics.p
    part = build_partition(traj.grid)
    bp = BesovParams.critical(p)
    reports = [
        NormReport(traj.times, [besov_norm(f, bp, part) for f in traj.fields], "besov_critical",
                   s=bp.s, p=p, q=bp.q),
        NormReport(traj.times, [potential_norm(f, p) for f in traj.fields], "riesz_magnitude", s=bp.s, p=p),
        NormReport(traj.times, [lp_norm(f, p) for f in traj.fields], "lebesgue", s=0.0, p=p),
        NormReport(traj.times, [lp_norm(f, 2.0) for f in traj.fields], "lebesgue", s=0.0, p=2.0),
    ]
    summary = {"kato_critical": kato_norm(traj, bp.s, p), "p": p}
    _write_reports(out, cfg, "norms", reports, summary)
    print(f"norms: {len(traj)} samples -> {out / 'norms.csv'}")
    return EXIT_OK


def cmd_monitor(args) -> int:
    cfg = _config(args)
    out = _out(args, cfg)
    traj = _load_traj(out)
    ph = cfg.physics
    part = build_partition(traj.grid)
    Ms = [besov_norm(f, BesovParams.critical(ph.p), part) for f in traj.fields]
    ladder = constant_ladder(max(2.0, max(Ms)), ph.c_p, ph.d_p)
    rep = monitor(traj, ph.p, ph.a, ladder, part, b=ph.b, n_dirs=cfg.monitor.n_dirs,
                  scan_events=cfg.monitor.scan_events)
    _write_reports(out, cfg, "monitor", rep, rep.summary())
    if not rep.all_finite():
        raise FloatingPointError("monitor produced non-finite values")
    print(f"monitor: {len(traj)} samples, lhs within rhs: {rep.lhs_within_rhs()}")
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = _config(args)
    results = run_all(cfg.initial.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC


COMMANDS = {"simulate": cmd_simulate, "decompose": cmd_decompose, "norms": cmd_norms,
            "monitor": cmd_monitor, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="besovns", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key=value or JSON config file")
        sp.add_argument("--out", help="output directory (overrides outputs.directory)")
        sp.add_argument("--seed", type=int, help="seed override for initial data")
        sp.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    start = time.perf_counter()
    try:
        code = COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return EXIT_IO
    except (SolverInstabilityError, ValueError, ArithmeticError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
