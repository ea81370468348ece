"""Per-run report and its CSV form."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .faults import Flip

CSV_COLUMNS = (
    "seed", "workload", "mitigation", "para_p", "refresh_k", "counter_threshold",
    "acts", "flips", "auto_refreshes", "mitigation_refreshes", "device_refreshes",
    "ecc_corrected", "ecc_uncorrectable", "sim_time_ns",
)
_INT_COLUMNS = {"seed", "refresh_k", "counter_threshold", "acts", "flips", "auto_refreshes",
                "mitigation_refreshes", "device_refreshes", "ecc_corrected",
                "ecc_uncorrectable", "sim_time_ns"}


@dataclass
class RunReport:
    seed: int = 0
    workload: str = ""
    mitigation: str = "none"
    para_p: float | None = None
    refresh_k: int | None = None
    counter_threshold: int | None = None
    acts: int = 0
    reads: int = 0
    writes: int = 0
    precharges: int = 0
    flip_log: list[Flip] = field(default_factory=list)
    auto_refreshes: int = 0
    mitigation_refreshes: int = 0
    device_refreshes: int = 0
    command_refreshes: int = 0
    ecc_clean: int | None = None
    ecc_corrected: int | None = None
    ecc_uncorrectable: int | None = None
    sim_time_ns: int = 0
    # Modeled hardware cost of the counter mitigation: one entry per row.
    counter_table_entries: int = 0

    @property
    def flips(self) -> int:
        return len(self.flip_log)

    def csv_row(self) -> dict:
        return {c: getattr(self, c) for c in CSV_COLUMNS}


def _cell(v) -> str:
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


def format_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in reports:
        row = r.csv_row()
        writer.writerow([_cell(row[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit_csv(reports, path):
    with open(path, "w", newline="") as fh:
        fh.write(format_csv(reports))


def parse_csv(text: str) -> list[dict]:
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for c in CSV_COLUMNS:
            v = raw[c]
            if v == "":
                row[c] = None
            elif c in _INT_COLUMNS:
                row[c] = int(v)
            elif c == "para_p":
                row[c] = float(v)
            else:
                row[c] = v
        rows.append(row)
    return rows


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return parse_csv(fh.read())
