"""Metrics tracking and CSV export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DataError

CSV_HEADER = ("epoch", "split", "metric", "value")


@dataclass
class MetricsReport:
    """Per-epoch metric rows plus run metadata."""

    config_hash: str = ""
    entries: list[tuple[int, str, str, float]] = field(default_factory=list)
    wall_clock: float = 0.0

    def add(self, epoch: int, split: str, metric: str, value: float) -> None:
        if self.entries and epoch < self.entries[-1][0]:
            raise DataError("epoch indices must be monotone")
        self.entries.append((int(epoch), str(split), str(metric), float(value)))

    def latest(self, split: str, metric: str) -> float | None:
        for epoch, s, m, v in reversed(self.entries):
            if s == split and m == metric:
                return v
        return None

    def series(self, split: str, metric: str) -> list[tuple[int, float]]:
        return [(e, v) for e, s, m, v in self.entries if s == split and m == metric]


def export_report(report: MetricsReport, path) -> None:
    """CSV with a fixed header; floats use repr so parsing round-trips."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for epoch, split, metric, value in report.entries:
        writer.writerow([epoch, split, metric, repr(value)])
    Path(path).write_text(buf.getvalue())


def parse_report(path) -> MetricsReport:
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise DataError(f"{path}: missing report header {CSV_HEADER}")
    report = MetricsReport()
    for row in rows[1:]:
        if len(row) != 4:
            raise DataError(f"{path}: malformed row {row}")
        report.add(int(row[0]), row[1], row[2], float(row[3]))
    return report
