"""Result tables and their CSV form.

A result file is a ``#`` preamble (tool version, backend, config echo and
per-run summaries) followed by an RFC 4180 style table with ``\\n`` endings.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field

from .. import _backend
from .config import ExperimentConfig, config_from_lines, config_lines

VERSION = "0.1.0"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(v)


@dataclass
class ResultTable:
    schema: tuple
    rows: list = field(default_factory=list)
    config: ExperimentConfig | None = None
    summary: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def add(self, *values):
        if len(values) != len(self.schema):
            raise ValueError(f"row has {len(values)} values, schema has {len(self.schema)}")
        self.rows.append(tuple(values))

    def column(self, name):
        i = self.schema.index(name)
        return [r[i] for r in self.rows]

    def provenance(self) -> list:
        lines = [f"relu-recover {VERSION}", f"backend = {_backend.NAME}"]
        stamp = os.environ.get("SOURCE_DATE_EPOCH")
        if stamp:
            lines.append(f"timestamp = {stamp}")
        if self.config is not None:
            lines += config_lines(self.config)
        for rec in self.summary:
            lines.append("summary: " + ", ".join(f"{k}={_cell(v)}" for k, v in rec.items()))
        lines += [f"note: {n}" for n in self.notes]
        return lines

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.provenance():
            buf.write(f"# {line}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.schema)
        for row in self.rows:
            writer.writerow([_cell(v) for v in row])
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


def _parse_cell(text):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_summary(line):
    rec = {}
    for item in line[len("summary:"):].split(","):
        k, v = item.strip().split("=", 1)
        rec[k] = _parse_cell(v)
    return rec


def parse_csv(text: str) -> ResultTable:
    lines = text.splitlines()
    pre = [ln[1:].strip() for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    reader = csv.reader(body)
    schema = tuple(next(reader))
    rows = [tuple(_parse_cell(c) for c in row) for row in reader]
    cfg = config_from_lines(pre) if any(p.startswith("config.") for p in pre) else None
    summary = [_parse_summary(p) for p in pre if p.startswith("summary:")]
    notes = [p[len("note:"):].strip() for p in pre if p.startswith("note:")]
    return ResultTable(schema, rows, cfg, summary, notes)


def read_csv(path) -> ResultTable:
    with open(path, encoding="utf-8") as fh:
        return parse_csv(fh.read())
