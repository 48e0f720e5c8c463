"""Per-iteration run logs and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

TRACE_SCHEMA_VERSION = 1
DECAY_CHECKPOINTS = (1, 4, 16, 64)

INGD_COLUMNS = ["t", "k_total", "f", "g_norm", "value_evals", "grad_evals", "outcome"] + [
    f"g2_k{k}" for k in DECAY_CHECKPOINTS
]
CG_COLUMNS = ["t", "k_total", "f", "g_norm", "value_evals", "grad_evals", "outcome",
              "cg_iters", "oracle_calls", "centroid_samples", "slack_used"]


@dataclass
class TraceRecord:
    """One outer iteration.

    ``value_evals``/``grad_evals`` are cumulative over the run; ``inner_iters``
    and ``k_total`` count direction-finder iterations in this step and in
    total. ``g2_k`` holds ``||g_k||^2 * 1{still running at k}`` at the decay
    checkpoints (INGD only).
    """

    t: int
    x: np.ndarray
    f: float
    g_norm: float
    inner_iters: int
    k_total: int
    value_evals: int
    grad_evals: int
    outcome: str
    g2_k: dict = field(default_factory=dict)
    cg_iters: int = 0
    oracle_calls: int = 0
    centroid_samples: int = 0
    slack_used: bool = False


@dataclass
class RunTrace:
    algorithm: str
    records: list = field(default_factory=list)
    budget_exhausted: bool = False
    warnings: list = field(default_factory=list)

    def append(self, record: TraceRecord):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    @property
    def columns(self) -> list[str]:
        return INGD_COLUMNS if self.algorithm == "ingd" else CG_COLUMNS

    @property
    def total_value_evals(self) -> int:
        return self.records[-1].value_evals if self.records else 0

    @property
    def total_grad_evals(self) -> int:
        return self.records[-1].grad_evals if self.records else 0

    def rows(self):
        for r in self.records:
            row = asdict(r)
            row["f"] = repr(float(r.f))
            row["g_norm"] = repr(float(r.g_norm))
            for k in DECAY_CHECKPOINTS:
                row[f"g2_k{k}"] = repr(float(r.g2_k.get(k, 0.0)))
            row["slack_used"] = int(r.slack_used)
            yield {c: row[c] for c in self.columns}

    def write_csv(self, fh):
        fh.write(f"# nsgoldstein trace schema_version={TRACE_SCHEMA_VERSION} algorithm={self.algorithm}\n")
        writer = csv.DictWriter(fh, fieldnames=self.columns, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            writer.writerow(row)

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def read_trace_csv(path) -> tuple[Optional[int], list[dict]]:
    """Read a trace CSV written by :meth:`RunTrace.write_csv`.

    Returns ``(schema_version, rows)``; numeric fields stay strings.
    """
    with open(path, newline="") as fh:
        first = fh.readline()
        version = None
        if first.startswith("#"):
            for tok in first.split():
                if tok.startswith("schema_version="):
                    version = int(tok.split("=", 1)[1])
        else:
            fh.seek(0)
        return version, list(csv.DictReader(fh))
