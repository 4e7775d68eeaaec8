"""Parsers for the run artifacts this package renders.

Strictly file-format based: any producer that writes the documented CSV and
JSON-lines layouts can feed these plots.  Parse failures report the offending
line number.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np


class ParseError(ValueError):
    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


@dataclass
class HeatmapData:
    """Rows of a parameter-space evaluation table (2-D parameter space)."""

    mu1: np.ndarray
    mu2: np.ndarray
    max_rel_error: np.ndarray
    residual_indicator: np.ndarray
    sampled: np.ndarray  # bool


def read_heatmap_csv(path) -> HeatmapData:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(path, 1, "empty file")
        expected = ["mu_1", "mu_2", "max_rel_error", "residual_indicator", "sampled"]
        if header != expected:
            raise ParseError(path, 1, f"expected header {expected}, got {header}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise ParseError(path, line_no, f"expected 5 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1]), float(row[2]),
                             float(row[3]), int(row[4])))
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
    if not rows:
        raise ParseError(path, 2, "no data rows")
    arr = np.array(rows)
    return HeatmapData(mu1=arr[:, 0], mu2=arr[:, 1], max_rel_error=arr[:, 2],
                       residual_indicator=arr[:, 3],
                       sampled=arr[:, 4].astype(bool))


@dataclass
class LatentData:
    """Encoder-produced vs integrated latent time series."""

    t: np.ndarray
    z_enc: np.ndarray  # (n_times, n_z)
    z_di: np.ndarray   # (n_times, n_z)


def read_latent_csv(path) -> LatentData:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "t":
            raise ParseError(path, 1, "expected a 't,z*,zhat*' header")
        n_z = sum(1 for c in header if c.startswith("z") and not c.startswith("zhat"))
        if n_z == 0 or header != (["t"] + [f"z{i+1}" for i in range(n_z)]
                                  + [f"zhat{i+1}" for i in range(n_z)]):
            raise ParseError(path, 1, f"malformed latent header {header}")
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 1 + 2 * n_z:
                raise ParseError(path, line_no,
                                 f"expected {1 + 2 * n_z} columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ParseError(path, line_no, str(exc)) from None
    if not rows:
        raise ParseError(path, 2, "no data rows")
    arr = np.array(rows)
    return LatentData(t=arr[:, 0], z_enc=arr[:, 1:1 + n_z], z_di=arr[:, 1 + n_z:])


@dataclass
class AuditData:
    """Greedy audit trail: per-iteration sample scores and the error fit."""

    e_res: np.ndarray   # all accumulated indicator values
    e_max: np.ndarray   # matching true errors
    fit_slope: float    # from the final record
    fit_intercept: float


def read_audit_log(path) -> AuditData:
    e_res, e_max = [], []
    last = None
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, f"bad JSON: {exc}") from None
            for key in ("e_res", "e_max", "fit_slope", "fit_intercept"):
                if key not in record:
                    raise ParseError(path, line_no, f"missing field {key!r}")
            e_res.extend(record["e_res"])
            e_max.extend(record["e_max"])
            last = record
    if last is None:
        raise ParseError(path, 1, "no records")
    return AuditData(e_res=np.array(e_res, dtype=float),
                     e_max=np.array(e_max, dtype=float),
                     fit_slope=float(last["fit_slope"]),
                     fit_intercept=float(last["fit_intercept"]))
