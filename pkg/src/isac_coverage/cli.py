"""
Command-line experiment runner.

    isac-coverage <subcommand> [--config FILE] [--out DIR] [--seed N] [--full]

Subcommands: ``single``, ``coverage``, ``benchmark``, ``cassini``,
``wavesim``, ``oracle`` and ``defaults`` (prints the default config).
Every run writes comma-separated data files plus ``manifest.json`` into
the output directory.  Data files depend only on the configuration and
seeds; timings and timestamps go to the manifest.

Exit codes: 0 success, 2 invalid configuration, 3 infeasible scenario,
4 solver failure.  ``ISAC_COVERAGE_THREADS`` caps BLAS threads (default 1,
which keeps floating-point results reproducible).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import platform
import sys
import tempfile
import time
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Callable, Dict, List, Sequence

import numpy as np

from .benchmark import BenchmarkInfeasible, BenchmarkSolverError, comm_only_beamforming
from .channels import scenario_channels
from .closed_form import InfeasibleError, optimal_single
from .config import ConfigError, ResolvedConfig, default_config_text, load_config, resolve
from .geometry import (
    ArrayGeometry,
    DirectionAngles,
    angles_from_positions,
    position_from_angles,
    upa_steering,
)
from .metrics import (
    BeamformerSet,
    all_sinrs,
    beampattern_gain,
    cassini_contours,
    isotropic_beamformer,
    snr_map,
)
from .oracle import CovarianceGridSpec, OracleInfeasible, covariance_grid_search
from .sca import InfeasibleScenario, ScaConfig, ScaError, initialize, run_sca
from .scenario import UserPlacement, lin2db
from .wavesim import generate_waveforms, matched_filter_snr

__all__ = ["main", "run_experiment", "EXIT_OK", "EXIT_CONFIG", "EXIT_INFEASIBLE", "EXIT_SOLVER"]

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4
THREADS_ENV = "ISAC_COVERAGE_THREADS"

SUBCOMMANDS = ("single", "coverage", "benchmark", "cassini", "wavesim", "oracle")


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.12e}"
    return str(x)


def write_atomic(path: Path, text: str) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Outputs:
    def __init__(self, root: Path):
        self.root = root
        self.files: List[str] = []

    def table(self, name: str, header: Sequence[str], rows) -> None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
        write_atomic(self.root / name, buf.getvalue())
        self.files.append(name)


# ---------------------------------------------------------------- helpers


def _phi_sweep(n: int) -> np.ndarray:
    return np.linspace(0.0, 180.0, n)


def _beampattern_rows(designs: Dict[str, np.ndarray], geom: ArrayGeometry, theta_deg: float, n: int):
    for phi in _phi_sweep(n):
        ang = DirectionAngles.from_degrees(theta_deg, phi)
        yield [theta_deg, phi] + [lin2db(max(beampattern_gain(W, ang, geom), 1e-300)) for W in designs.values()]


def _map_rows(m):
    for (x, y, z), v in zip(m.grid.positions, m.values):
        yield [x, y, z, v, lin2db(v)]


MAP_HEADER = ["x_m", "y_m", "z_m", "snr", "snr_db"]


def _w_rows(W):
    for i in range(W.shape[0]):
        for j in range(W.shape[1]):
            yield [i, j, W[i, j].real, W[i, j].imag]


# ---------------------------------------------------------------- subcommands


def cmd_single(cfg: ResolvedConfig, out: Outputs, info: dict) -> None:
    s = cfg["single"]
    base = cfg.scenario()
    rows = []
    for gdb in s["sinr_db"]:
        user = UserPlacement.from_degrees(s["user_theta_deg"], s["user_phi_deg"], s["user_distance_m"], gdb)
        sc = base.replace(users=(user,))
        ch = scenario_channels(sc)
        q0 = position_from_angles(sc.bs1, DirectionAngles.from_degrees(s["target_theta_deg"], s["target_phi_deg"]),
                                  s["target_distance_m"])
        grid = sc.points_grid([q0.as_array()])
        b0 = grid.tx_steering[0]
        sol = optimal_single(ch.h[0], b0, sc.tx_power, sc.noise_power, user.sinr_target)
        W_cf = np.zeros((sc.m_t, sc.m_t), dtype=complex)
        W_cf[:, 0] = sol.w1
        init = initialize(ch, grid, sc, config=cfg.sca_config(), strategy=s["sca_init"])
        trace = run_sca(init, ch, grid, sc, cfg.sca_config())
        info.setdefault("sca_wall_time_s", {})[f"{gdb:g}dB"] = float(np.sum(trace.wall_time))
        W_sca = trace.final.w
        cf_obj = sol.objective(b0) / grid.eta[0]
        rows.append([gdb, sol.regime, lin2db(sol.boundary_threshold), cf_obj, trace.zeta[-1],
                     trace.zeta[-1] / cf_obj - 1.0, lin2db(all_sinrs(BeamformerSet(W_cf, 1), ch, sc.noise_power)[0]),
                     trace.outer_iterations, trace.termination])
        header = ["theta_deg", "phi_deg", "closed_form_gain_db", "sca_gain_db"]
        sweep = []
        for theta in s["sweep_theta_deg"]:
            sweep.extend(_beampattern_rows({"cf": W_cf, "sca": W_sca}, sc.tx_array, theta, s["sweep_points"]))
        out.table(f"beampattern_gamma_{gdb:g}dB.csv", header, sweep)
    out.table("single_summary.csv",
              ["sinr_target_db", "regime", "boundary_threshold_db", "closed_form_objective", "sca_objective",
               "relative_difference", "achieved_sinr_db", "sca_outer_iterations", "sca_termination"], rows)


def _proposed_and_benchmark(cfg: ResolvedConfig, info: dict):
    sc = cfg.scenario()
    ch = scenario_channels(sc)
    grid = sc.coverage_grid()
    sca_cfg: ScaConfig = cfg.sca_config()
    bench = comm_only_beamforming(ch, sc.sinr_targets, sc.noise_power, tol=sca_cfg.tol,
                                  max_iter=sca_cfg.solver_max_iter, backend=sca_cfg.backend)
    if bench.power > sc.tx_power * (1 + 1e-9):
        raise InfeasibleScenario(f"benchmark needs {bench.power:.6g} W, budget is {sc.tx_power:.6g} W")
    init = initialize(ch, grid, sc, config=sca_cfg, strategy=cfg["sca"]["init"])
    trace = run_sca(init, ch, grid, sc, sca_cfg)
    info["sca_wall_time_s"] = [float(t) for t in trace.wall_time]
    return sc, ch, grid, trace, bench


def cmd_coverage(cfg: ResolvedConfig, out: Outputs, info: dict) -> None:
    sc, ch, grid, trace, bench = _proposed_and_benchmark(cfg, info)
    W = trace.final.w
    out.table("sca_trace.csv", ["iteration", "zeta", "worst_snr_db", "solver_iterations"],
              ([i, z, db, it] for i, z, db, it, _ in trace.rows()))
    m_p = snr_map(W, grid, sc)
    m_b = snr_map(bench.w, grid, sc)
    out.table("snr_map_proposed.csv", MAP_HEADER, _map_rows(m_p))
    out.table("snr_map_benchmark.csv", MAP_HEADER, _map_rows(m_b))
    c = cfg["coverage"]
    out.table("beampattern.csv", ["theta_deg", "phi_deg", "proposed_gain_db", "benchmark_gain_db"],
              _beampattern_rows({"p": W, "b": bench.w}, sc.tx_array, c["sweep_theta_deg"], c["sweep_points"]))
    out.table("beamformers_proposed.csv", ["row", "column", "re", "im"], _w_rows(W))
    sinr_p = all_sinrs(trace.final, ch, sc.noise_power)
    sinr_b = all_sinrs(bench, ch, sc.noise_power)
    rows = [["proposed", m_p.worst_case, lin2db(m_p.worst_case), m_p.spread_db, trace.final.power]
            + list(lin2db(sinr_p)),
            ["benchmark", m_b.worst_case, lin2db(m_b.worst_case), m_b.spread_db, bench.power]
            + list(lin2db(sinr_b))]
    out.table("coverage_summary.csv",
              ["design", "worst_snr", "worst_snr_db", "spread_db", "power_w"]
              + [f"sinr_ue{k + 1}_db" for k in range(len(ch))], rows)
    info["sca_termination"] = trace.termination


def cmd_benchmark(cfg: ResolvedConfig, out: Outputs, info: dict) -> None:
    sc = cfg.scenario()
    ch = scenario_channels(sc)
    c = cfg["sca"]
    bench = comm_only_beamforming(ch, sc.sinr_targets, sc.noise_power)
    if bench.power > sc.tx_power * (1 + 1e-9):
        raise InfeasibleScenario(f"benchmark needs {bench.power:.6g} W, budget is {sc.tx_power:.6g} W")
    grid = sc.coverage_grid()
    m = snr_map(bench.w, grid, sc)
    out.table("snr_map_benchmark.csv", MAP_HEADER, _map_rows(m))
    out.table("beamformers_benchmark.csv", ["row", "column", "re", "im"], _w_rows(bench.w))
    sinr = all_sinrs(bench, ch, sc.noise_power)
    out.table("benchmark_summary.csv", ["ue", "sinr_target_db", "sinr_db", "beam_power_w"],
              ([k + 1, lin2db(sc.sinr_targets[k]), lin2db(sinr[k]), float(np.linalg.norm(bench.w[:, k]) ** 2)]
               for k in range(len(ch))))
    info["benchmark_total_power_w"] = bench.power
    info["solver_backend"] = c["backend"]


def cmd_cassini(cfg: ResolvedConfig, out: Outputs, info: dict) -> None:
    sc = cfg.scenario()
    k = cfg["cassini"]
    grid = sc.coverage_grid((k["nx"], k["ny"]))
    m = snr_map(isotropic_beamformer(sc.m_t, sc.tx_power), grid, sc)
    out.table("cassini_map.csv", MAP_HEADER, _map_rows(m))
    if k["levels_db"]:
        levels = [float(x) for x in k["levels_db"]]
    else:
        v = m.values_db
        levels = list(np.linspace(v.min(), v.max(), k["num_levels"] + 2)[1:-1])
    contours = cassini_contours(sc, levels, grid)
    pos = grid.positions
    o, o2 = sc.bs1.as_array(), sc.bs2.as_array()
    rows = []
    for i, level in enumerate(levels):
        idx = contours[level]
        for j in idx:
            p = pos[j]
            rows.append([i, level, p[0], p[1], p[2],
                         float(np.linalg.norm(p - o) * np.linalg.norm(p - o2)), m.values_db[j]])
    out.table("cassini_contours.csv",
              ["level_index", "level_db", "x_m", "y_m", "z_m", "range_product_m2", "snr_db"], rows)


def cmd_wavesim(cfg: ResolvedConfig, out: Outputs, info: dict) -> None:
    sc = cfg.scenario()
    w = cfg["wavesim"]
    seeds = cfg["seeds"]
    K = sc.num_users
    ens = generate_waveforms(K, sc.m_t, int(w["n_samples"]), int(seeds["waveform"]))
    rows = []
    for q in w["targets"]:
        qv = np.asarray(q, dtype=float)
        b = upa_steering(angles_from_positions(sc.bs1, qv), sc.tx_array)
        single = np.zeros((sc.m_t, sc.m_t), dtype=complex)
        single[:, min(K, sc.m_t - 1)] = np.sqrt(sc.tx_power) * b / np.linalg.norm(b)
        for name, W in (("isotropic", isotropic_beamformer(sc.m_t, sc.tx_power).w), ("single_beam", single)):
            r = matched_filter_snr(W, qv, ens, sc, int(seeds["noise"]), int(w["trials"]))
            rows.append([name, qv[0], qv[1], qv[2], lin2db(r.analytic), lin2db(r.snr), r.gap_db])
    out.table("wavesim.csv", ["design", "x_m", "y_m", "z_m", "analytic_db", "empirical_db", "gap_db"], rows)


def cmd_oracle(cfg: ResolvedConfig, out: Outputs, info: dict) -> None:
    o = cfg["oracle"]
    geom = ArrayGeometry(int(o["mx"]), int(o["mz"]), float(cfg["array"]["spacing_wavelengths"]))
    user = UserPlacement.from_degrees(o["user"][0], o["user"][1], o["user"][2], o["sinr_db"])
    sc = cfg.scenario().replace(tx_array=geom, users=(user,))
    ch = scenario_channels(sc)
    pts = [position_from_angles(sc.bs1, DirectionAngles.from_degrees(t[0], t[1]), t[2]).as_array()
           for t in o["targets"]]
    grid = sc.points_grid(pts)
    spec = CovarianceGridSpec(sc.m_t, sc.tx_power, sc.tx_power * float(o["step_fraction"]))
    res = covariance_grid_search(spec, ch.h[0], grid.tx_steering, user.sinr_target, sc.noise_power, grid.eta)
    sca_cfg = cfg.sca_config()
    init = initialize(ch, grid, sc, config=sca_cfg, strategy=cfg["single"]["sca_init"])
    trace = run_sca(init, ch, grid, sc, sca_cfg)
    rows = [["oracle", res.objective, res.tolerance], ["sca", trace.zeta[-1], np.nan]]
    if len(pts) == 1:
        sol = optimal_single(ch.h[0], grid.tx_steering[0], sc.tx_power, sc.noise_power, user.sinr_target)
        rows.append(["closed_form", sol.objective(grid.tx_steering[0]) / grid.eta[0], np.nan])
    out.table("oracle.csv", ["method", "objective", "cell_tolerance"], rows)
    info["oracle_candidates"] = res.candidates


COMMANDS: Dict[str, Callable[[ResolvedConfig, Outputs, dict], None]] = {
    "single": cmd_single,
    "coverage": cmd_coverage,
    "benchmark": cmd_benchmark,
    "cassini": cmd_cassini,
    "wavesim": cmd_wavesim,
    "oracle": cmd_oracle,
}


# ---------------------------------------------------------------- driver


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _report(out_dir: Path, kind: str, exc: BaseException) -> None:
    payload = {"status": kind, "error": type(exc).__name__, "message": str(exc)}
    errors = getattr(exc, "errors", None)
    if errors:
        payload["errors"] = list(errors)
    rep = getattr(exc, "report", None)
    if rep is not None:
        payload["solver"] = {"status": rep.status, "iterations": rep.iterations, "message": rep.message,
                             "primal_residual": float(rep.primal_residual),
                             "dual_residual": float(rep.dual_residual)}
    trace = getattr(exc, "trace", None)
    if trace is not None:
        payload["trace_zeta"] = [float(z) for z in trace.zeta]
    write_atomic(out_dir / "report.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")


def run_experiment(subcommand: str, config_path=None, out_dir=".", *, seed=None, full=False) -> int:
    """Run one subcommand and return its exit code."""
    out_path = Path(out_dir)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    try:
        user = load_config(config_path) if config_path is not None else {}
        cfg = resolve(user, full=full, seed=seed, path=None if config_path is None else str(config_path))
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        _report(out_path, "invalid-config", exc)
        return EXIT_CONFIG

    out = Outputs(out_path)
    info: dict = {}
    code = EXIT_OK
    try:
        COMMANDS[subcommand](cfg, out, info)
    except (InfeasibleScenario, BenchmarkInfeasible, InfeasibleError, OracleInfeasible) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        _report(out_path, "infeasible", exc)
        code = EXIT_INFEASIBLE
    except (ScaError, BenchmarkSolverError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        _report(out_path, "solver-failure", exc)
        code = EXIT_SOLVER

    manifest = {
        "subcommand": subcommand,
        "exit_code": code,
        "config_file": cfg.path,
        "parameters": cfg.manifest_parameters(),
        "seeds": dict(cfg["seeds"]),
        "outputs": out.files,
        "library_version": _version(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "started_utc": started.isoformat(),
        "wall_time_s": time.perf_counter() - t0,
        "details": info,
    }
    write_atomic(out_path / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True, default=_json) + "\n")
    return code


def _json(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _limit_threads():
    n = os.environ.get(THREADS_ENV, "1")
    try:
        n = max(1, int(n))
    except ValueError:
        n = 1
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isac-coverage", description="Bi-static ISAC coverage beamforming experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="TOML configuration file")
        sp.add_argument("--out", default=f"runs/{name}", help="output directory")
        sp.add_argument("--seed", type=int, help="base seed (channel=N, waveform=N+1, noise=N+2)")
        sp.add_argument("--full", action="store_true", help="full scale: 8x8 arrays, 50x50 grid")
    sub.add_parser("defaults", help="print the default configuration as TOML")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "defaults":
        print(default_config_text())
        return EXIT_OK
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    with _limit_threads():
        return run_experiment(args.command, args.config, args.out, seed=args.seed, full=args.full)


if __name__ == "__main__":
    sys.exit(main())
