"""Result emission: CSV tables, SVG heatmaps, run manifests.

Everything written here is a pure function of the computed results: column
order is fixed, floats are rendered to six significant digits, and no
timestamps or environment details leak in, so re-running a configuration
reproduces the files byte for byte.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

# Master column order for results tables; rows may fill any subset.
MASTER_COLUMNS = [
    "scenario", "environment", "algorithm", "alpha", "gamma", "epsilon",
    "temperature", "drift", "variant", "checkpoint", "population",
    "rollouts_per_agent", "failed_pct", "mfpt", "fpt_std",
    "heated_route_pct", "policy_name", "pct_right_x0", "pct_right_x0m1",
    "pct_right_x0m2", "oracle_mfpt", "oracle_fpt_std", "oracle_best_k",
    "gap_pct", "exact_gap_pct", "region_a_share", "region_b_share", "notes",
]


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if value != value:  # nan
        return ""
    return f"{value:.6g}"


def ordered_columns(rows: list[dict]) -> list[str]:
    present = set()
    for row in rows:
        present.update(row.keys())
    columns = [c for c in MASTER_COLUMNS if c in present]
    extras = sorted(present - set(MASTER_COLUMNS))
    return columns + extras


def write_csv(path, rows: list[dict], columns: list[str] | None = None) -> None:
    if columns is None:
        columns = ordered_columns(rows)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    """Dense matrix (density map etc.) as plain CSV, row 0 first."""
    matrix = np.atleast_2d(matrix)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in matrix:
            writer.writerow([format_value(v) for v in row])


def write_svg_heatmap(path, matrix: np.ndarray, cell_px: int = 24,
                      flip_vertical: bool = True) -> None:
    """Linear grayscale heatmap, one rect per cell, zero -> white.

    2D world matrices are indexed [y, x] with y growing upward, so rows are
    flipped by default to draw row 0 at the bottom.
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    h, w = matrix.shape
    top = float(matrix.max())
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w * cell_px}" '
        f'height="{h * cell_px}" shape-rendering="crispEdges">'
    ]
    for y in range(h):
        row_y = (h - 1 - y) if flip_vertical else y
        for x in range(w):
            level = 0.0 if top == 0.0 else matrix[y, x] / top
            shade = int(round(255 * (1.0 - level)))
            parts.append(
                f'<rect x="{x * cell_px}" y="{row_y * cell_px}" '
                f'width="{cell_px}" height="{cell_px}" '
                f'fill="rgb({shade},{shade},{shade})"/>')
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n")


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
