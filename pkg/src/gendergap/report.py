"""Serialization of aggregate tables to CSV, JSON and SVG, plus the run manifest.

Output is byte-deterministic: rows are sorted by ``(group, key)``, columns
follow a fixed per-report order and decimals are rendered with 4 places,
half-to-even, ``.`` as separator.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import IoFailure, UnsupportedShape
from .metrics import AggregateRow, Bucket

log = logging.getLogger(__name__)

FORMATS = ("csv", "json", "svg")
MANIFEST_NAME = "manifest.json"
DECIMAL_PLACES = 4


@dataclass(frozen=True)
class ReportSpec:
    name: str
    dimension: str
    columns: tuple[tuple[str, str], ...]  # (column, "int" | "dec")
    group: str | None = None
    shares: tuple[tuple[str, ...], ...] = ()
    share_axis: str | None = None  # "column": a share column sums to 100 per group; "row": per row
    chart: str | None = None

    @property
    def header(self) -> list[str]:
        head = [self.group] if self.group else []
        return head + [self.dimension] + [c for c, _ in self.columns]

    @property
    def bar_shaped(self) -> bool:
        return self.group is None and self.chart is not None


_BUCKET_COLS = tuple(b.value.lower() for b in Bucket)

REPORTS: dict[str, ReportSpec] = {
    spec.name: spec
    for spec in (
        ReportSpec("journals_per_area", "area", (("journals", "int"),), chart="journals"),
        ReportSpec(
            "area_volume", "area", (("publications", "int"), ("authorships", "int")), chart="authorships"
        ),
        ReportSpec(
            "continent_distribution",
            "continent",
            (("authorships", "int"), ("pct", "dec")),
            shares=(("pct",),),
            share_axis="column",
            chart="pct",
        ),
        ReportSpec(
            "gender_distribution",
            "gender",
            (("authorships", "int"), ("pct", "dec")),
            shares=(("pct",),),
            share_axis="column",
            chart="pct",
        ),
        ReportSpec(
            "gender_by_continent",
            "continent",
            (
                ("female", "int"),
                ("male", "int"),
                ("unknown", "int"),
                ("female_pct", "dec"),
                ("male_pct", "dec"),
                ("unknown_pct", "dec"),
            ),
            shares=(("female_pct", "male_pct", "unknown_pct"),),
            share_axis="row",
            chart="female_pct",
        ),
        ReportSpec(
            "bucket_distribution",
            "bucket",
            (("papers", "int"), ("pct", "dec")),
            shares=(("pct",),),
            share_axis="column",
            chart="papers",
        ),
        ReportSpec(
            "area_gap_distribution",
            "area",
            (("papers", "int"),)
            + tuple((c, "int") for c in _BUCKET_COLS)
            + tuple((c + "_pct", "dec") for c in _BUCKET_COLS)
            + (("mean_gap_index", "dec"), ("mean_known_gap", "dec")),
            shares=(tuple(c + "_pct" for c in _BUCKET_COLS),),
            share_axis="row",
            chart="papers",
        ),
        ReportSpec(
            "country_timeline",
            "year",
            (("female", "int"), ("male", "int"), ("female_pct", "dec"), ("male_pct", "dec")),
            group="country",
            shares=(("female_pct", "male_pct"),),
            share_axis="row",
        ),
    )
}


# --------------------------------------------------------------------------
# values


def render_decimal(value) -> str:
    """Exact value -> fixed 4-place string, ties to even."""
    scaled = round(Fraction(value) * 10**DECIMAL_PLACES)
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    whole, frac = divmod(scaled, 10**DECIMAL_PLACES)
    return f"{sign}{whole}.{frac:0{DECIMAL_PLACES}d}"


def render_value(value, kind: str) -> str:
    if value is None:
        return ""
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"expected an integer count, got {value!r}")
        return str(value)
    return render_decimal(value)


def parse_value(text: str, kind: str):
    if text == "":
        return None
    if kind == "int":
        return int(text)
    return Fraction(Decimal(text))


def spec_for(name: str, rows: Sequence[AggregateRow]) -> ReportSpec:
    if name in REPORTS:
        return REPORTS[name]
    # ad-hoc report: infer columns from the first row
    first = rows[0] if rows else AggregateRow("key", "")
    columns = tuple(
        (col, "int" if all(isinstance(r.values.get(col), int) for r in rows) else "dec") for col in first.values
    )
    group = "group" if any(r.group for r in rows) else None
    chart = columns[0][0] if columns else None
    return ReportSpec(name, first.dimension, columns, group=group, chart=chart)


def _sorted(rows: Iterable[AggregateRow]) -> list[AggregateRow]:
    return sorted(rows, key=lambda r: (r.group, r.key))


def _cells(row: AggregateRow, spec: ReportSpec) -> list[str]:
    head = [row.group] if spec.group else []
    return head + [row.key] + [render_value(row.values.get(col), kind) for col, kind in spec.columns]


# --------------------------------------------------------------------------
# encoders


def to_csv(rows: Sequence[AggregateRow], spec: ReportSpec) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(spec.header)
    for row in _sorted(rows):
        writer.writerow(_cells(row, spec))
    return buf.getvalue().encode("utf-8")


def to_json(rows: Sequence[AggregateRow], spec: ReportSpec) -> bytes:
    out = []
    for row in _sorted(rows):
        obj: dict = {}
        if spec.group:
            obj[spec.group] = row.group
        obj[spec.dimension] = row.key
        for col, kind in spec.columns:
            text = render_value(row.values.get(col), kind)
            if text == "":
                obj[col] = None
            elif kind == "int":
                obj[col] = int(text)
            else:
                obj[col] = float(text)
        out.append(obj)
    return (json.dumps(out, indent=2, ensure_ascii=False) + "\n").encode("utf-8")


def _xml_escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def to_svg(rows: Sequence[AggregateRow], spec: ReportSpec) -> bytes:
    """Minimal vertical bar chart of the report's chart column."""
    if not spec.bar_shaped:
        raise UnsupportedShape(f"report {spec.name!r} is not bar-shaped")
    kind = dict(spec.columns)[spec.chart]
    rows = _sorted(rows)
    values = [Fraction(r.values.get(spec.chart) or 0) for r in rows]
    if any(v < 0 for v in values):
        raise UnsupportedShape(f"report {spec.name!r} has negative bar values")
    bar, gap, height, margin = 40, 20, 200, 40
    width = margin * 2 + len(rows) * (bar + gap)
    top = max(values, default=Fraction(0)) or Fraction(1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + 2 * margin}" '
        f'viewBox="0 0 {width} {height + 2 * margin}">',
        f'<title>{_xml_escape(spec.name)}</title>',
        f'<line x1="{margin}" y1="{margin + height}" x2="{width - margin}" y2="{margin + height}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{margin + height}" stroke="black"/>',
        f'<text x="{margin}" y="{margin - 20}" font-size="12">{_xml_escape(spec.chart)}</text>',
    ]
    for i, (row, value) in enumerate(zip(rows, values)):
        h = render_decimal(value / top * height)
        x = margin + gap // 2 + i * (bar + gap)
        y = render_decimal(margin + height - value / top * height)
        label = render_value(row.values.get(spec.chart), kind)
        parts.append(f'<rect x="{x}" y="{y}" width="{bar}" height="{h}" fill="steelblue"/>')
        parts.append(
            f'<text x="{x + bar // 2}" y="{margin + height + 14}" font-size="9" text-anchor="middle">'
            f"{_xml_escape(row.key)}</text>"
        )
        parts.append(
            f'<text x="{x + bar // 2}" y="{margin - 4}" font-size="8" text-anchor="middle">{_xml_escape(label)}</text>'
        )
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode("utf-8")


ENCODERS = {"csv": to_csv, "json": to_json, "svg": to_svg}


def encode(rows: Sequence[AggregateRow], name: str, format: str = "csv") -> bytes:
    if format not in ENCODERS:
        raise ValueError(f"unsupported format {format!r}")
    if rows is None:
        raise ValueError("rows must not be None")
    return ENCODERS[format](rows, spec_for(name, rows))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def emit_report(
    rows: Sequence[AggregateRow], name: str, format: str = "csv", out_dir: str | os.PathLike = "."
) -> tuple[Path, str]:
    """Write ``<out_dir>/<name>.<format>`` and return its path and sha256."""
    data = encode(rows, name, format)
    path = Path(out_dir) / f"{name}.{format}"
    _write(path, data)
    return path, sha256_bytes(data)


# --------------------------------------------------------------------------
# parsing


def parse_report_csv(data: bytes | str, name: str) -> list[AggregateRow]:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if name in REPORTS:
        spec = REPORTS[name]
        if header != spec.header:
            raise ValueError(f"{name}: unexpected header {header}")
    else:
        raise ValueError(f"unknown report {name!r}")
    rows = []
    offset = 1 if spec.group else 0
    for cells in reader:
        values = {col: parse_value(cells[offset + 1 + i], kind) for i, (col, kind) in enumerate(spec.columns)}
        rows.append(AggregateRow(spec.dimension, cells[offset], values, group=cells[0] if spec.group else ""))
    return rows


def share_sums(data: bytes | str, name: str) -> list[tuple[str, Decimal]]:
    """Sum of each share grouping in an emitted CSV, as rendered.

    Groupings whose shares are all empty or zero (no underlying records)
    are skipped.
    """
    spec = REPORTS[name]
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    records = list(csv.DictReader(io.StringIO(text)))
    sums = []
    for columns in spec.shares:
        if spec.share_axis == "row":
            for rec in records:
                cells = [rec[c] for c in columns]
                if all(c in ("", "0.0000") for c in cells):
                    continue
                label = f"{rec.get(spec.group, '')}/{rec[spec.dimension]}".lstrip("/")
                sums.append((label, sum((Decimal(c) for c in cells if c), Decimal(0))))
        else:
            groups: dict[str, list[str]] = {}
            for rec in records:
                groups.setdefault(rec.get(spec.group, "") if spec.group else "", []).extend(rec[c] for c in columns)
            for label, cells in groups.items():
                if all(c in ("", "0.0000") for c in cells):
                    continue
                sums.append((label or spec.name, sum((Decimal(c) for c in cells if c), Decimal(0))))
    return sums


# --------------------------------------------------------------------------
# bundle


@dataclass
class ReportBundle:
    root: Path
    entries: list[dict] = field(default_factory=list)

    @property
    def manifest_path(self) -> Path:
        return self.root / MANIFEST_NAME


def manifest_bytes(entries: Sequence[Mapping]) -> bytes:
    ordered = sorted(entries, key=lambda e: (e["name"], e["format"]))
    return (json.dumps({"version": 1, "reports": ordered}, indent=2, sort_keys=True) + "\n").encode("utf-8")


def emit_bundle(
    reports: Mapping[str, Sequence[AggregateRow]],
    out_dir: str | os.PathLike,
    formats: Sequence[str] = ("csv",),
) -> ReportBundle:
    """Emit every report in every requested format and write ``manifest.json``.

    SVG is produced only for bar-shaped reports; other reports are skipped
    for that format.
    """
    root = Path(out_dir)
    bundle = ReportBundle(root)
    for name in sorted(reports):
        rows = reports[name]
        for fmt in formats:
            try:
                path, digest = emit_report(rows, name, fmt, root)
            except UnsupportedShape:
                log.info("skipping svg for %s: not bar-shaped", name)
                continue
            bundle.entries.append(
                {"name": name, "format": fmt, "path": path.name, "rows": len(rows), "sha256": digest}
            )
    _write(bundle.manifest_path, manifest_bytes(bundle.entries))
    return bundle


def load_manifest(run_dir: str | os.PathLike) -> dict:
    path = Path(run_dir) / MANIFEST_NAME
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (OSError, ValueError) as exc:
        raise IoFailure(f"cannot read manifest {path}: {exc}") from exc


def verify_bundle(run_dir: str | os.PathLike) -> list[str]:
    """Return the report files whose checksum no longer matches (missing counts too)."""
    root = Path(run_dir)
    manifest = load_manifest(root)
    bad = []
    for entry in manifest.get("reports", []):
        path = root / entry["path"]
        if not path.exists() or sha256_file(path) != entry["sha256"]:
            bad.append(entry["path"])
    return bad


# --------------------------------------------------------------------------
# exact interchange between the metrics and report stages


def _exact(value):
    if isinstance(value, Fraction):
        return {"q": f"{value.numerator}/{value.denominator}"}
    return value


def _unexact(value):
    if isinstance(value, dict) and "q" in value:
        return Fraction(value["q"])
    return value


def dump_exact(reports: Mapping[str, Sequence[AggregateRow]]) -> str:
    out = {
        name: [
            {"dimension": r.dimension, "group": r.group, "key": r.key, "values": {k: _exact(v) for k, v in r.values.items()}}
            for r in rows
        ]
        for name, rows in sorted(reports.items())
    }
    return json.dumps(out, indent=1, sort_keys=False) + "\n"


def load_exact(text: str) -> dict[str, list[AggregateRow]]:
    data = json.loads(text)
    return {
        name: [
            AggregateRow(r["dimension"], r["key"], {k: _unexact(v) for k, v in r["values"].items()}, group=r["group"])
            for r in rows
        ]
        for name, rows in data.items()
    }
