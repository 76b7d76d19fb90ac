"""Writers for the delimited state table and the JSON reports.

Floats are rendered with ``%.17g`` so a rerun of the same scenario and
seed produces byte-identical files.  The covariance block stores the
upper triangle in row-major order; symplectic eigenvalue columns are
always present, diagnostic columns only when requested.
"""

from __future__ import annotations

import json
from typing import List, Sequence

import numpy as np

from .runner import ScenarioRun
from .scenario import Scenario

__all__ = [
    "states_header",
    "write_states_csv",
    "write_summary_json",
    "write_oracle_json",
    "format_float",
]


def format_float(value: float) -> str:
    """Shortest decimal form that round-trips a double."""
    return "%.17g" % float(value)


def states_header(n_modes: int, diagnostic_columns: Sequence[str]) -> List[str]:
    """Column names for the state table of an ``n_modes`` scenario."""
    dim = 2 * n_modes
    names = ["t"]
    names += [f"V_{i}_{j}" for i in range(1, dim + 1) for j in range(i, dim + 1)]
    names += [f"xi_{k}" for k in range(1, dim + 1)]
    names += [f"nu_{m}" for m in range(1, n_modes + 1)]
    names += list(diagnostic_columns)
    return names


def write_states_csv(path: str, run: ScenarioRun, n_modes: int) -> None:
    """Writes one row per time: moments, eigenvalues, then diagnostics."""
    dim = 2 * n_modes
    upper = [(i, j) for i in range(dim) for j in range(i, dim)]
    columns = list(run.diagnostics)
    lines = [",".join(states_header(n_modes, columns))]
    for row in range(run.times.shape[0]):
        cells = [format_float(run.times[row])]
        cov = run.covs[row]
        cells += [format_float(cov[i, j]) for i, j in upper]
        cells += [format_float(x) for x in run.means[row]]
        cells += [format_float(x) for x in run.nus[row]]
        for name in columns:
            value = run.diagnostics[name][row]
            if run.diagnostics[name].dtype.kind in "iub":
                cells.append(str(int(value)))
            else:
                cells.append(format_float(value))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def _dump(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, allow_nan=False)
        handle.write("\n")


def write_summary_json(
    path: str,
    scenario: Scenario,
    run: ScenarioRun,
    wall_time_s: float,
    outputs: Sequence[str],
) -> None:
    """Writes the run metadata next to the state table."""
    payload = {
        "scenario": scenario.to_dict(),
        "solver": run.solver_info,
        "rows": int(run.times.shape[0]),
        "wall_time_s": wall_time_s,
        "warnings": list(run.warnings),
        "outputs": list(outputs),
    }
    if run.n_samples is not None:
        payload["sampling"] = {
            "n_samples": run.n_samples,
            "n_divergent": run.n_divergent,
            "max_standard_error": run.max_standard_error,
            "jump_count_histogram": {
                str(k): v for k, v in sorted(run.jump_count_histogram.items())
            },
        }
    _dump(path, payload)


def write_oracle_json(path: str, payload: dict) -> None:
    """Writes the truncated-space cross-check report."""
    _dump(path, payload)
