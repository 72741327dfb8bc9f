"""Grid and f-field CSV I/O with atomic writes."""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
import pandas as pd

from config import COL_PHI, COL_T, COL_U, CSV_FLOAT_FORMAT
from src.field import PotentialGrid
from src.geometry import BackgroundGeometry

logger = logging.getLogger(__name__)

COL_F = "f"


def atomic_write_text(path, text: str) -> Path:
    """Write text to a temp file in the target directory, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
    return path


def grid_to_frame(grid: PotentialGrid) -> pd.DataFrame:
    """Long-format frame with columns u, t, phi in row-major (u outer) order."""
    U, T = np.meshgrid(grid.geo.u, grid.t, indexing="ij")
    return pd.DataFrame({COL_U: U.ravel(), COL_T: T.ravel(), COL_PHI: grid.values.ravel()})


def save_grid(grid: PotentialGrid, path) -> Path:
    """Write the grid as CSV with header u,t,phi and 17 significant digits."""
    text = grid_to_frame(grid).to_csv(index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return atomic_write_text(path, text)


def _uniform_nodes(values: np.ndarray, name: str) -> np.ndarray:
    nodes = np.unique(values)
    if nodes.size < 4:
        raise ValueError(f"grid file needs at least 4 distinct {name} values")
    steps = np.diff(nodes)
    if np.max(np.abs(steps - steps.mean())) > 1e-9 * max(1.0, float(np.max(np.abs(nodes)))):
        raise ValueError(f"{name} nodes are not uniformly spaced")
    return nodes


def frame_to_grid(df: pd.DataFrame) -> PotentialGrid:
    """
    Rebuild a PotentialGrid from a u,t,phi frame.

    Raises:
        ValueError: If columns are missing or the nodes do not form a full uniform grid.
    """
    missing = [c for c in (COL_U, COL_T, COL_PHI) if c not in df.columns]
    if missing:
        raise ValueError(f"grid file is missing columns: {', '.join(missing)}")
    u = _uniform_nodes(df[COL_U].to_numpy(dtype=float), COL_U)
    t = _uniform_nodes(df[COL_T].to_numpy(dtype=float), COL_T)
    if len(df) != u.size * t.size:
        raise ValueError(f"grid file has {len(df)} rows, expected {u.size}x{t.size}")
    if not (np.isclose(t[0], 0.0) and np.isclose(t[-1], 1.0)):
        raise ValueError("t nodes must span [0, 1]")
    ordered = df.sort_values([COL_U, COL_T], kind="mergesort")
    values = ordered[COL_PHI].to_numpy(dtype=float).reshape(u.size, t.size)
    geo = BackgroundGeometry(u_max=float(u[-1]), n_u=int(u.size), u_min=float(u[0]))
    return PotentialGrid.from_values(geo, values)


def load_grid(path) -> PotentialGrid:
    """Read a grid CSV written by save_grid."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"grid file not found: {path}")
    grid = frame_to_grid(pd.read_csv(path))
    logger.debug("loaded %s: %dx%d", path, grid.geo.n_u, grid.n_t)
    return grid


def load_f_field(path, geo: BackgroundGeometry, n_t: int) -> np.ndarray:
    """
    Read a sampled f for the right-hand side ε e^f ζ^{−p}.

    Accepts either a profile (columns u, f), interpolated onto the u nodes,
    or a full field (columns u, t, f) on exactly the run's grid.

    Returns:
        An (n_u,) profile or an (n_u, n_t) field.
    """
    df = pd.read_csv(Path(path))
    if COL_F not in df.columns or COL_U not in df.columns:
        raise ValueError("f_field file needs columns u and f")
    if COL_T in df.columns:
        grid = frame_to_grid(df.rename(columns={COL_F: COL_PHI}))
        if grid.values.shape != (geo.n_u, n_t) or not np.allclose(grid.geo.u, geo.u):
            raise ValueError("f_field grid does not match the run grid")
        return np.array(grid.values)
    ordered = df.sort_values(COL_U)
    u, f = ordered[COL_U].to_numpy(dtype=float), ordered[COL_F].to_numpy(dtype=float)
    if u[0] > geo.u_min or u[-1] < geo.u_max:
        logger.warning("f_field covers [%g, %g] only; held constant beyond", u[0], u[-1])
    return np.interp(geo.u, u, f)


def write_jsonl(path, records: Iterable[dict]) -> Path:
    """Write one JSON document per line."""
    text = "".join(json.dumps(record, sort_keys=True) + "\n" for record in records)
    return atomic_write_text(path, text)


def read_jsonl(path) -> list[dict]:
    with open(path, encoding="utf-8") as handle:
        return [json.loads(line) for line in handle if line.strip()]


def write_json(path, payload: dict, text: Optional[str] = None) -> Path:
    return atomic_write_text(path, (text or json.dumps(payload, indent=2, sort_keys=True)) + "\n")
