"""Reading and validating the simulator's sweep CSV tables.

The only coupling to the simulator is its public CSV schema (plus the
optional sibling manifest JSON for bath temperatures); nothing here imports
the simulator package.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

EXPECTED_HEADER = ["r", "sigma", "W_over_kTc", "eta", "P_attowatts", "Q_ins_J",
                   "Q_hc_J", "Q_rem_J", "Q_ch_J", "n_steps", "leakage",
                   "engine_flag"]


class SchemaError(ValueError):
    """CSV does not conform to the sweep-table schema."""


@dataclass(frozen=True)
class SweepTable:
    """Columns of one sweep CSV, as arrays; one entry per data row."""

    r: np.ndarray
    sigma: np.ndarray
    W_over_kTc: np.ndarray
    eta: np.ndarray
    P_attowatts: np.ndarray
    n_steps: np.ndarray
    leakage: np.ndarray
    engine_flag: np.ndarray   # bool
    path: str

    def __len__(self) -> int:
        return len(self.r)


def read_table(path: str) -> SweepTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != EXPECTED_HEADER:
        got = ",".join(rows[0]) if rows else "<empty file>"
        raise SchemaError(f"{path}: expected header "
                          f"{','.join(EXPECTED_HEADER)!r}, got {got!r}")
    body = [row for row in rows[1:] if row]
    if not body:
        raise SchemaError(f"{path}: no data rows; refusing to draw an empty plot")
    cols = list(zip(*body))
    if len(cols) != len(EXPECTED_HEADER):
        raise SchemaError(f"{path}: wrong column count {len(cols)}")
    try:
        flags = []
        for v in cols[11]:
            if v not in ("true", "false"):
                raise ValueError(v)
            flags.append(v == "true")
        return SweepTable(
            r=np.array([int(v) for v in cols[0]]),
            sigma=np.array([float(v) for v in cols[1]]),
            W_over_kTc=np.array([float(v) for v in cols[2]]),
            eta=np.array([float(v) for v in cols[3]]),
            P_attowatts=np.array([float(v) for v in cols[4]]),
            n_steps=np.array([int(v) for v in cols[9]]),
            leakage=np.array([float(v) for v in cols[10]]),
            engine_flag=np.array(flags, dtype=bool),
            path=path)
    except ValueError as exc:
        raise SchemaError(f"{path}: unparsable cell ({exc})") from None


def carnot_efficiency(csv_path: str) -> float:
    """1 - T_c/T_h from the sibling manifest; falls back to the simulator's
    default operating point (T_h = 0.1 K, T_c = 0.05 K) when absent."""
    manifest = csv_path + ".manifest.json"
    if os.path.exists(manifest):
        with open(manifest) as fh:
            config = json.load(fh)["config"]
        return 1.0 - config["T_c"]["value"] / config["T_h"]["value"]
    return 1.0 - 0.05 / 0.1
