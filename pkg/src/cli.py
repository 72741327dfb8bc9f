"""Command-line interface: solve | sweep | audit | oracle | lemmas."""

import argparse
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Optional

# Project root for imports
PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

import numpy as np

from config import CONVERGENCE_FILE, DEFAULT_OUT_DIR, GRID_FILE, SANDWICH_TOL, TRUNCATION_MARGIN
from src.analysis import run_lemma_suites
from src.display import (
    format_lemma_table,
    format_oracle_table,
    format_report_table,
    series_rows,
    write_metadata,
    write_report,
    write_series,
)
from src.errors import ConegeoError, EntryFailure, NonConvexBoundary
from src.estimates import audit_instance, legendre_oracle, oracle_comparison, restrict_to, truncation_drift
from src.input_handler import RunConfig, parse_config
from src.load_data import load_f_field, load_grid, save_grid, write_jsonl
from src.solver import continuity_run, initial_guess, newton_solve, sandwich_check, subsolution, supersolution

logger = logging.getLogger(__name__)

COMMANDS = ("solve", "sweep", "audit", "oracle", "lemmas")
EXIT_ERROR = 1
EXIT_VERDICT_FAILED = 2


def parse_args(args=None):
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(
        description="Regularized conical-geodesic solver and estimate auditor.",
    )
    parser.add_argument("command", choices=COMMANDS, help="What to run.")
    parser.add_argument(
        "--config",
        action="append",
        default=[],
        help="Run configuration file. Repeat to run several configs concurrently.",
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=DEFAULT_OUT_DIR,
        help="Output directory (one subdirectory per config when several are given).",
    )
    parser.add_argument(
        "--refine",
        type=int,
        default=0,
        help="Halve both grid spacings this many times.",
    )
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging verbosity.",
    )
    parsed = parser.parse_args(args)
    if parsed.command != "lemmas" and not parsed.config:
        parser.error(f"{parsed.command} needs --config")
    if parsed.refine < 0:
        parser.error("--refine must be >= 0")
    return parsed


def _f_field(cfg: RunConfig, geo, n_t: int) -> Optional[np.ndarray]:
    return None if cfg.f_field is None else load_f_field(cfg.f_field, geo, n_t)


def cmd_solve(cfg: RunConfig, out_dir: Path) -> tuple[int, str]:
    """Solve the first schedule entry from the convexified initial guess."""
    geo = cfg.geometry()
    div = cfg.divisor(geo)
    entry = cfg.schedule().entries[0]
    b0, b1 = cfg.boundary().slices(div, entry.smoothing_k, geo.u)
    start = initial_guess(b0, b1, geo=geo, n_t=cfg.n_t, lateral=cfg.lateral)
    outcome = newton_solve(
        start,
        entry.eps,
        cfg.weight().with_eta(entry.eta),
        _f_field(cfg, geo, cfg.n_t),
        cfg.tol,
        cfg.max_iter,
        lateral=cfg.lateral,
    )
    save_grid(outcome.grid, out_dir / GRID_FILE.format(entry=0))
    record = {"entry": 0, "eps": entry.eps, "eta": entry.eta, "iters": outcome.iterations, "residual": outcome.final_residual}
    write_jsonl(out_dir / CONVERGENCE_FILE, [record])
    write_metadata(out_dir, "solve", cfg.to_dict())
    return 0, f"eps={entry.eps:g}: converged in {outcome.iterations} iterations, residual {outcome.final_residual:.3e}"


def _solve_schedule(cfg: RunConfig, out_dir: Optional[Path]):
    """Continuity run with artifacts; partial grids are still written when an entry fails."""
    geo = cfg.geometry()
    div = cfg.divisor(geo)
    sched = cfg.schedule()
    records: list[dict] = []
    try:
        outcomes = continuity_run(
            sched,
            div,
            cfg.weight(),
            _f_field(cfg, geo, cfg.n_t),
            geo=geo,
            n_t=cfg.n_t,
            boundary=cfg.boundary(),
            tol=cfg.tol,
            max_iter=cfg.max_iter,
            lateral=cfg.lateral,
            on_record=records.append,
        )
    except EntryFailure as failure:
        if out_dir is not None:
            for idx, outcome in enumerate(failure.outcomes):
                save_grid(outcome.grid, out_dir / GRID_FILE.format(entry=idx))
            write_jsonl(out_dir / CONVERGENCE_FILE, records)
        raise
    if out_dir is not None:
        for idx, outcome in enumerate(outcomes):
            save_grid(outcome.grid, out_dir / GRID_FILE.format(entry=idx))
        write_jsonl(out_dir / CONVERGENCE_FILE, records)
    slices = [cfg.boundary().slices(div, e.smoothing_k, geo.u) for e in sched.entries]
    return geo, div, sched, outcomes, slices


def _oracle_distance(grid, b0, b1, cfg: RunConfig) -> float:
    try:
        oracle = legendre_oracle(b0, b1, grid.geo, cfg.oracle_n_x, n_t=grid.n_t)
    except NonConvexBoundary as e:
        logger.warning("no oracle for this entry: %s", e)
        return float("nan")
    return oracle_comparison([grid], oracle)[0]


def _audit_schedule(cfg: RunConfig, geo, div, sched, outcomes, slices) -> list:
    f = _f_field(cfg, geo, cfg.n_t)
    reports = []
    for entry, outcome, (b0, b1) in zip(sched.entries, outcomes, slices):
        weight = cfg.weight().with_eta(entry.eta)
        report = audit_instance(
            outcome.grid,
            weight,
            entry.eps,
            f,
            beta=div.min_beta,
            mu=cfg.mu,
            deltas=(cfg.delta,),
            config=cfg.to_dict(),
        )
        sub = subsolution(b0, b1, geo=geo, n_t=cfg.n_t)
        sup = supersolution(b0, b1, geo=geo, n_t=cfg.n_t, lateral=cfg.lateral)
        report.verdicts["sandwich"] = sandwich_check(outcome, sub, sup, tol=SANDWICH_TOL).holds
        reports.append(report)
    return reports


def cmd_sweep(cfg: RunConfig, out_dir: Path) -> tuple[int, str]:
    """Continuity run, one audited report per entry, and the combined series."""
    geo, div, sched, outcomes, slices = _solve_schedule(cfg, out_dir)
    reports = _audit_schedule(cfg, geo, div, sched, outcomes, slices)
    distances = [_oracle_distance(o.grid, b0, b1, cfg) for o, (b0, b1) in zip(outcomes, slices)]

    if cfg.truncation:
        wide = replace(cfg.extended(TRUNCATION_MARGIN), c=div.c)
        _, _, w_sched, w_outcomes, _ = _solve_schedule(wide, None)
        for report, outcome, entry in zip(reports, w_outcomes, w_sched.entries):
            inner = restrict_to(outcome.grid, geo)
            wide_report = audit_instance(
                inner,
                cfg.weight().with_eta(entry.eta),
                entry.eps,
                beta=div.min_beta,
                mu=cfg.mu,
                deltas=(cfg.delta,),
            )
            report.truncation_drift = truncation_drift(report, wide_report)
            report.verdicts["truncation"] = report.truncation_drift < 0.05

    for idx, report in enumerate(reports):
        write_report(report, out_dir, idx)
    write_series(series_rows(reports, cfg.delta, distances), out_dir)
    write_metadata(out_dir, "sweep", cfg.to_dict())
    status = 0 if all(r.passed for r in reports) else EXIT_VERDICT_FAILED
    return status, format_report_table(reports)


def _entry_from_name(path: Path, count: int) -> int:
    match = re.search(r"(\d+)$", path.stem)
    if match and int(match.group(1)) < count:
        return int(match.group(1))
    return count - 1


def cmd_audit(cfg: RunConfig, out_dir: Path) -> tuple[int, str]:
    """Re-audit stored grids; grid_<k>.csv is audited with schedule entry k."""
    if not cfg.audit_grids:
        raise ValueError("audit needs audit.grids in the config")
    sched = cfg.schedule()
    reports = []
    for name in cfg.audit_grids:
        path = Path(name)
        grid = load_grid(path)
        entry = sched.entries[_entry_from_name(path, len(sched))]
        report = audit_instance(
            grid,
            cfg.weight().with_eta(entry.eta),
            entry.eps,
            _f_field(cfg, grid.geo, grid.n_t),
            beta=min(cfg.beta, cfg.beta_infinity or cfg.beta),
            mu=cfg.mu,
            deltas=(cfg.delta,),
            config=cfg.to_dict(),
        )
        write_report(report, out_dir, path.stem)
        reports.append(report)
    write_metadata(out_dir, "audit", cfg.to_dict())
    status = 0 if all(r.passed for r in reports) else EXIT_VERDICT_FAILED
    return status, format_report_table(reports)


def cmd_oracle(cfg: RunConfig, out_dir: Path) -> tuple[int, str]:
    """Compare the continuity family with the Legendre-transform geodesic."""
    geo, div, sched, outcomes, slices = _solve_schedule(cfg, out_dir)
    distances = [_oracle_distance(o.grid, b0, b1, cfg) for o, (b0, b1) in zip(outcomes, slices)]
    b0, b1 = slices[-1]
    save_grid(legendre_oracle(b0, b1, geo, cfg.oracle_n_x, n_t=cfg.n_t), out_dir / GRID_FILE.format(entry="oracle"))
    rows = [
        {"eps": e.eps, "eta": e.eta, "oracle_distance": d}
        for e, d in zip(sched.entries, distances)
    ]
    write_series(rows, out_dir)
    write_metadata(out_dir, "oracle", cfg.to_dict())
    decreasing = all(b <= a for a, b in zip(distances, distances[1:])) and not np.any(np.isnan(distances))
    status = 0 if decreasing else EXIT_VERDICT_FAILED
    return status, format_oracle_table([e.eps for e in sched.entries], distances)


def cmd_lemmas(cfg: Optional[RunConfig], out_dir: Path) -> tuple[int, str]:
    results = run_lemma_suites()
    write_metadata(out_dir, "lemmas", None if cfg is None else cfg.to_dict())
    status = 0 if all(r.passed for r in results) else EXIT_VERDICT_FAILED
    return status, format_lemma_table(results)


HANDLERS = {
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
    "oracle": cmd_oracle,
    "lemmas": cmd_lemmas,
}


def run_one(command: str, config_path: Optional[str], out_dir: Path, refine: int = 0) -> tuple[int, str]:
    """Run one command on one config; errors come back as (1, message)."""
    try:
        cfg = None
        if config_path is not None:
            cfg = parse_config(config_path).refined(refine)
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        return HANDLERS[command](cfg, out_dir)
    except (ConegeoError, ValueError, FileNotFoundError) as e:
        logger.debug("run failed", exc_info=True)
        return EXIT_ERROR, f"Error: {e}"


def main(args=None):
    """Run the CLI; exit 1 on errors and 2 when a verdict fails."""
    parsed = parse_args(args)
    logging.basicConfig(level=parsed.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)

    configs = parsed.config or [None]
    if len(configs) == 1:
        results = [run_one(parsed.command, configs[0], parsed.out, parsed.refine)]
    else:
        out_dirs = [parsed.out / Path(c).stem for c in configs]
        with ProcessPoolExecutor(max_workers=len(configs)) as pool:
            results = list(
                pool.map(
                    run_one,
                    [parsed.command] * len(configs),
                    configs,
                    out_dirs,
                    [parsed.refine] * len(configs),
                )
            )

    statuses = []
    for config_path, (status, text) in zip(configs, results):
        if len(configs) > 1:
            print(f"== {config_path}")
        print(text, file=sys.stderr if status == EXIT_ERROR else sys.stdout)
        statuses.append(status)
    if EXIT_ERROR in statuses:
        sys.exit(EXIT_ERROR)
    if EXIT_VERDICT_FAILED in statuses:
        sys.exit(EXIT_VERDICT_FAILED)
    return 0


if __name__ == "__main__":
    main()
