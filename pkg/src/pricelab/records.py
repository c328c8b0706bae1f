"""Line-delimited demonstration records.

One transition per line, tab-separated, with a header. Each line carries the
raw observables of the decision period (uv, revenue, profit) plus those of
the previous period, followed by the raw (unnormalized) state vectors, so
rewards can be recomputed at load time under any reward definition and
feature scaling stays reproducible.

Column order::

    product_id  group_id  period  done  action  uv  revenue  profit
    prev_uv  prev_revenue  prev_profit  s0..s{m-1}  n0..n{m-1}

``action`` is the raw price paid; discrete policies re-bucket it on load.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

FIXED_FIELDS = (
    "product_id",
    "group_id",
    "period",
    "done",
    "action",
    "uv",
    "revenue",
    "profit",
    "prev_uv",
    "prev_revenue",
    "prev_profit",
)


class RecordFormatError(ValueError):
    """A demonstration file violated the record schema."""


@dataclass(frozen=True)
class DemoRecord:
    product_id: int
    group_id: int
    period: int
    done: bool
    action: float  # raw price paid during the period
    uv: int
    revenue: float
    profit: float
    prev_uv: int
    prev_revenue: float
    prev_profit: float
    state: np.ndarray  # raw features before the period
    next_state: np.ndarray  # raw features after the period

    def __post_init__(self) -> None:
        if self.state.shape != self.next_state.shape:
            raise ValueError("state and next_state dimensions differ")


def header_for(dim: int) -> str:
    cols = list(FIXED_FIELDS)
    cols += [f"s{i}" for i in range(dim)]
    cols += [f"n{i}" for i in range(dim)]
    return "\t".join(cols)


def write_records(path: str | Path, records: Sequence[DemoRecord]) -> None:
    if not records:
        raise ValueError("refusing to write an empty record file")
    dim = records[0].state.shape[0]
    lines = [header_for(dim)]
    for rec in records:
        if rec.state.shape[0] != dim:
            raise ValueError("all records must share one state dimension")
        parts = [
            str(rec.product_id),
            str(rec.group_id),
            str(rec.period),
            str(int(rec.done)),
            repr(rec.action),
            str(rec.uv),
            repr(rec.revenue),
            repr(rec.profit),
            str(rec.prev_uv),
            repr(rec.prev_revenue),
            repr(rec.prev_profit),
        ]
        parts += [repr(v) for v in rec.state]
        parts += [repr(v) for v in rec.next_state]
        lines.append("\t".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def read_records(path: str | Path) -> list[DemoRecord]:
    """Parse a record file; malformed lines are reported with their line number."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise RecordFormatError(f"{path}: empty file")
    header = lines[0].split("\t")
    n_fixed = len(FIXED_FIELDS)
    if tuple(header[:n_fixed]) != FIXED_FIELDS or (len(header) - n_fixed) % 2 != 0:
        raise RecordFormatError(f"{path}: unrecognized header")
    dim = (len(header) - n_fixed) // 2
    if dim < 1:
        raise RecordFormatError(f"{path}: header declares no state columns")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != n_fixed + 2 * dim:
            raise RecordFormatError(
                f"{path}: line {lineno}: expected {n_fixed + 2 * dim} fields, got {len(parts)}"
            )
        try:
            records.append(
                DemoRecord(
                    product_id=int(parts[0]),
                    group_id=int(parts[1]),
                    period=int(parts[2]),
                    done=bool(int(parts[3])),
                    action=float(parts[4]),
                    uv=int(parts[5]),
                    revenue=float(parts[6]),
                    profit=float(parts[7]),
                    prev_uv=int(parts[8]),
                    prev_revenue=float(parts[9]),
                    prev_profit=float(parts[10]),
                    state=np.array([float(v) for v in parts[n_fixed : n_fixed + dim]]),
                    next_state=np.array([float(v) for v in parts[n_fixed + dim :]]),
                )
            )
        except ValueError as exc:
            raise RecordFormatError(f"{path}: line {lineno}: {exc}") from exc
    return records
