"""Verdict tables, JSON reports and the plot-data series CSV."""

import logging
import math
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd
from tabulate import tabulate

from config import CSV_FLOAT_FORMAT, METADATA_FILE, REPORT_FILE, SCHEMA_VERSION, SERIES_COLUMNS, SERIES_FILE
from src.estimates import EstimateReport
from src.load_data import atomic_write_text, write_json

logger = logging.getLogger(__name__)


def _mark(passed: bool) -> str:
    return "pass" if passed else "FAIL"


def format_report_table(reports: Sequence[EstimateReport]) -> str:
    """One row per schedule entry: the monitored suprema and the verdicts."""
    if not reports:
        return "No reports."
    rows = []
    for idx, report in enumerate(reports):
        holder = ", ".join(f"{k}: {v:.4g}" for k, v in report.holder_seminorm.items()) or "-"
        rows.append(
            [
                idx,
                "-" if report.eps is None else f"{report.eps:.3g}",
                f"{report.sup_dt_phi:.4g}",
                f"{report.sup_weighted_lap:.4g}",
                f"{report.boundary_weighted_lap:.4g}",
                f"{report.sup_weighted_grad:.4g}",
                holder,
                report.mp_branch,
                ", ".join(f"{name}={_mark(ok)}" for name, ok in report.verdicts.items()),
            ]
        )
    headers = ["Entry", "eps", "sup|dt phi|", "sup w-lap", "bdry w-lap", "sup w-grad", "Holder", "MP", "Verdicts"]
    return tabulate(rows, headers=headers, tablefmt="simple")


def format_lemma_table(results) -> str:
    rows = [[r.name, _mark(r.passed), r.detail] for r in results]
    return tabulate(rows, headers=["Suite", "Verdict", "Detail"], tablefmt="simple")


def format_oracle_table(eps_values: Sequence[float], distances: Sequence[float]) -> str:
    rows = [[f"{e:.3g}", f"{d:.4e}"] for e, d in zip(eps_values, distances)]
    return tabulate(rows, headers=["eps", "sup|phi - oracle|"], tablefmt="simple")


def write_report(report: EstimateReport, out_dir, entry) -> Path:
    """report_<entry>.json; key order and content depend only on the inputs."""
    return write_json(Path(out_dir) / REPORT_FILE.format(entry=entry), report.to_dict(), text=report.to_json())


def series_rows(
    reports: Sequence[EstimateReport],
    delta: float,
    oracle_distances: Optional[Sequence[float]] = None,
) -> list[dict]:
    rows = []
    for idx, report in enumerate(reports):
        rows.append(
            {
                "eps": report.eps,
                "eta": report.eta,
                "sup_dt_phi": report.sup_dt_phi,
                "sup_weighted_lap": report.sup_weighted_lap,
                "holder_seminorm": report.holder_seminorm.get(f"{delta:g}", math.nan),
                "oracle_distance": math.nan if oracle_distances is None else oracle_distances[idx],
            }
        )
    return rows


def write_series(rows: list[dict], out_dir) -> Path:
    """series.csv with the monitored quantities against ε."""
    df = pd.DataFrame(rows, columns=SERIES_COLUMNS)
    text = df.to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return atomic_write_text(Path(out_dir) / SERIES_FILE, text)


def write_metadata(out_dir, command: str, config: Optional[dict] = None) -> Path:
    """Timestamps and run context live here, never in the reports."""
    payload = {
        "command": command,
        "created": datetime.now(timezone.utc).isoformat(),
        "schema_version": SCHEMA_VERSION,
        "config": config or {},
    }
    return write_json(Path(out_dir) / METADATA_FILE, payload)
