"""Result rows and their TABLE / CSV / JSON renderings."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .timebase import (
    DEFAULT_TICKS_PER_US,
    MeasurementSeries,
    Rational,
    as_fraction,
    summarize,
    ticks_to_micros_display,
    truncate_2dp,
)


class OutputFormat(str, Enum):
    TABLE = "table"
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class ReportRow:
    """One benchmark line: ticks, raw microseconds and display cells."""

    name: str
    count: int
    bcet_ticks: int
    wcet_ticks: int
    average_ticks: float
    average_ticks_cell: int
    bcet_us: float
    wcet_us: float
    average_us: float
    stddev_us: float
    ticks_per_us: str = str(DEFAULT_TICKS_PER_US)

    @classmethod
    def from_series(cls, name: str, series: Union[MeasurementSeries, Sequence[int]],
                    ticks_per_us: Rational = DEFAULT_TICKS_PER_US, with_stddev: bool = True) -> "ReportRow":
        samples = series.samples if isinstance(series, MeasurementSeries) else list(series)
        stats = summarize(samples, ticks_per_us, with_stddev)
        return cls(
            name=name,
            count=stats.count,
            bcet_ticks=stats.bcet_ticks,
            wcet_ticks=stats.wcet_ticks,
            average_ticks=stats.average_ticks,
            # the table shows whole ticks; exact integer floor of the mean
            average_ticks_cell=sum(samples) // len(samples),
            bcet_us=stats.bcet_us,
            wcet_us=stats.wcet_us,
            average_us=stats.average_us,
            stddev_us=stats.stddev_us,
            ticks_per_us=str(as_fraction(ticks_per_us)),
        )

    @property
    def rate(self) -> Fraction:
        return Fraction(self.ticks_per_us)

    @property
    def bcet_us_cell(self) -> str:
        return ticks_to_micros_display(self.bcet_ticks, self.rate)

    @property
    def wcet_us_cell(self) -> str:
        return ticks_to_micros_display(self.wcet_ticks, self.rate)

    @property
    def average_us_cell(self) -> str:
        return ticks_to_micros_display(self.average_ticks_cell, self.rate)

    @property
    def stddev_us_cell(self) -> str:
        return truncate_2dp(self.stddev_us)


CSV_FIELDS = ("name", "count", "bcet_ticks", "wcet_ticks", "average_ticks",
              "bcet_us", "wcet_us", "average_us", "stddev_us")


def render_table(rows: Sequence[ReportRow]) -> str:
    width = max([len("Benchmark")] + [len(r.name) for r in rows])
    head1 = f"{'':<{width}} | {'Time (ticks)':^26} | {'Time (us)':^39}"
    head2 = (f"{'Benchmark':<{width}} | {'BCET':>8}{'WCET':>9}{'Average':>9} | "
             f"{'BCET':>9}{'WCET':>10}{'Average':>10}{'STD Dev.':>10}")
    lines = [head1, head2, "-" * len(head2)]
    for r in rows:
        lines.append(
            f"{r.name:<{width}} | {r.bcet_ticks:>8}{r.wcet_ticks:>9}{r.average_ticks_cell:>9} | "
            f"{r.bcet_us_cell:>9}{r.wcet_us_cell:>10}{r.average_us_cell:>10}{r.stddev_us_cell:>10}")
    return "\n".join(lines) + "\n"


def render_csv(rows: Sequence[ReportRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in rows:
        writer.writerow([r.name, r.count, r.bcet_ticks, r.wcet_ticks, f"{r.average_ticks:.6f}",
                         f"{r.bcet_us:.6f}", f"{r.wcet_us:.6f}", f"{r.average_us:.6f}",
                         f"{r.stddev_us:.6f}"])
    return out.getvalue()


def render_json(rows: Sequence[ReportRow]) -> str:
    payload = []
    for r in rows:
        record = asdict(r)
        record["display"] = {
            "bcet_us": r.bcet_us_cell,
            "wcet_us": r.wcet_us_cell,
            "average_us": r.average_us_cell,
            "stddev_us": r.stddev_us_cell,
        }
        payload.append(record)
    return json.dumps(payload, indent=2) + "\n"


def rows_from_json(text: str) -> list[ReportRow]:
    rows = []
    for record in json.loads(text):
        record.pop("display", None)
        rows.append(ReportRow(**record))
    return rows


def emit(rows: Iterable[ReportRow], fmt: Union[OutputFormat, str] = OutputFormat.TABLE) -> str:
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to report")
    fmt = OutputFormat(fmt)
    if fmt is OutputFormat.TABLE:
        return render_table(rows)
    if fmt is OutputFormat.CSV:
        return render_csv(rows)
    return render_json(rows)
