"""Run traces: per-iteration diagnostic rows plus a manifest, persisted as CSV + JSON.

CSV floats use Python's shortest round-trip repr, which is platform-stable
for IEEE doubles, so identical (config, seed) pairs reproduce trace.csv
byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

# Fixed column order.  Linear and neural runs share the base schema; neural
# runs append the inner-loop columns.
BASE_COLUMNS = [
    "k",
    "gap",
    "cum_regret",
    "eps_c_l2",
    "eps_c_sup",
    "e_sup",
    "theta_kl",
    "eps_a",
    "eps_b",
    "phi_star",
    "sigma_star",
    "J_pi",
    "kl_to_opt",
    "a_resid",
    "inv_tau",
    "actor_norm",
    "critic_norm",
]
NEURAL_COLUMNS = BASE_COLUMNS + ["actor_mse", "critic_mse", "actor_lin_gap", "critic_lin_gap"]

TRACE_FILENAME = "trace.csv"
MANIFEST_FILENAME = "manifest.json"


def _format_cell(column: str, value) -> str:
    if column == "k":
        return str(int(value))
    return repr(float(value))


@dataclass
class RunTrace:
    """Manifest plus K+1 diagnostic rows; ``history`` holds in-memory extras."""

    manifest: dict
    columns: list[str]
    rows: list[list[float]]
    history: dict = field(default_factory=dict, repr=False)

    def column(self, name: str):
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_format_cell(c, v) for c, v in zip(self.columns, row)))
        return "\n".join(lines) + "\n"

    def save(self, directory) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / TRACE_FILENAME).write_text(self.to_csv_text())
        with open(directory / MANIFEST_FILENAME, "w") as fh:
            json.dump(self.manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return directory


def load_trace(directory) -> RunTrace:
    directory = Path(directory)
    csv_path = directory / TRACE_FILENAME
    manifest_path = directory / MANIFEST_FILENAME
    if not csv_path.is_file() or not manifest_path.is_file():
        raise ConfigError(f"trace directory {directory} is missing {TRACE_FILENAME} or {MANIFEST_FILENAME}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    text = csv_path.read_text().strip().splitlines()
    if not text:
        raise ConfigError(f"{csv_path} is empty")
    columns = text[0].split(",")
    rows = []
    for lineno, line in enumerate(text[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(columns):
            raise ConfigError(f"{csv_path}:{lineno}: expected {len(columns)} cells, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as exc:
            raise ConfigError(f"{csv_path}:{lineno}: {exc}") from exc
    return RunTrace(manifest=manifest, columns=columns, rows=rows)
