import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

import structlog

from diffalg import codec

logger = structlog.get_logger(__name__)


def format_float(value: float) -> str:
    return f"{value:.12g}"


def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return format_float(value)
    if isinstance(value, complex):
        return f"{format_float(value.real)}{format_float(value.imag):+}j".replace("+-", "-")
    if value is None:
        return ""
    return str(value)


def tsv_table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = ["\t".join(header)]
    lines += ["\t".join(format_cell(cell) for cell in row) for row in rows]
    return "\n".join(lines) + "\n"


@dataclass
class Report:
    """
    Primary output of one command: the same content as TSV text and as a
    JSON-able document. `failures` lists checks that ran and did not hold.
    """
    name: str
    tsv: str
    data: Any
    failures: List[Exception] = field(default_factory=list)

    def render(self, fmt: str) -> str:
        if fmt == "json":
            return codec.dumps(self.data) + "\n"
        return self.tsv


def write_report(report: Report, fmt: str, out: Optional[str]) -> Optional[Path]:
    """Write to `out` when given, to stdout otherwise. Returns the file written, if any."""
    text = report.render(fmt)
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return None
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info("Report written", report=report.name, path=str(path), format=fmt)
    return path
