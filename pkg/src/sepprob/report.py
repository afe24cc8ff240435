"""Result artifacts (CSV / JSON) and the merged bound summary.

Every artifact embeds the run configuration verbatim plus a short hash of
it, and contains no timestamps, so identical configurations produce
byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

OUTPUT_DIR_ENV = "SEPPROB_OUTPUT_DIR"

# fixed column order; the first six are the documented core columns
COLUMNS = ("name", "xi", "value", "std_error", "n", "seed", "provenance", "target", "abs_error", "passed")
PROVENANCES = ("closed-form", "quadrature", "qmc-estimate")


class ArtifactError(ValueError):
    pass


def fmt_float(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    if x is None or x == "":
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.17g}"


@dataclass
class ResultRow:
    name: str
    value: float
    provenance: str
    xi: float | None = None
    std_error: float | None = None
    n: int | None = None
    seed: int | None = None
    target: float | None = None
    abs_error: float | None = None
    passed: bool | None = None

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")

    def csv_cells(self) -> list:
        d = asdict(self)
        out = []
        for c in COLUMNS:
            v = d[c]
            if c in ("xi", "value", "std_error", "target", "abs_error"):
                out.append(fmt_float(v))
            elif c == "passed":
                out.append("" if v is None else ("pass" if v else "fail"))
            else:
                out.append("" if v is None else str(v))
        return out

    def json_obj(self) -> dict:
        d = {}
        for c in COLUMNS:
            v = getattr(self, c)
            if isinstance(v, float):
                # keep exact doubles while staying valid JSON
                v = fmt_float(v) if not math.isfinite(v) else float(fmt_float(v))
            d[c] = v
        return d


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:12]


def render_csv(config: dict, rows: list[ResultRow]) -> str:
    buf = io.StringIO()
    buf.write(f"# config: {canonical_json(config)}\n")
    buf.write(f"# config_hash: {config_hash(config)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow(r.csv_cells())
    return buf.getvalue()


def render_json(config: dict, rows: list[ResultRow], extra: dict | None = None) -> str:
    doc = {"config": config, "config_hash": config_hash(config), "columns": list(COLUMNS),
           "rows": [r.json_obj() for r in rows]}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_artifact(path: str | os.PathLike, config: dict, rows: list[ResultRow], fmt: str = "csv",
                   extra: dict | None = None) -> Path:
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    text = render_csv(config, rows) if fmt == "csv" else render_json(config, rows, extra)
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text)
    return p


def _cell(v: str, kind: str):
    if v == "":
        return None
    if kind == "float":
        return float(v)
    if kind == "int":
        return int(v)
    if kind == "bool":
        return v == "pass"
    return v


_KINDS = {"xi": "float", "value": "float", "std_error": "float", "target": "float", "abs_error": "float",
          "n": "int", "seed": "int", "passed": "bool"}


def read_artifact(path: str | os.PathLike) -> dict:
    """Parse a CSV or JSON artifact into ``{"config", "config_hash", "rows"}``."""
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ArtifactError(f"cannot read {p}: {e}") from e
    try:
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
            rows = [ResultRow(**{c: r.get(c) for c in COLUMNS}) for r in doc["rows"]]
            return {"config": doc["config"], "config_hash": doc["config_hash"], "rows": rows, "path": str(p)}
        lines = text.splitlines()
        if not lines or not lines[0].startswith("# config: "):
            raise ArtifactError(f"{p}: missing config header")
        config = json.loads(lines[0][len("# config: "):])
        h = lines[1].split(":", 1)[1].strip()
        reader = csv.DictReader(io.StringIO("\n".join(lines[2:])))
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ArtifactError(f"{p}: unexpected columns {reader.fieldnames}")
        rows = [ResultRow(**{c: _cell(r[c], _KINDS.get(c, "str")) for c in COLUMNS}) for r in reader]
        return {"config": config, "config_hash": h, "rows": rows, "path": str(p)}
    except ArtifactError:
        raise
    except (ValueError, KeyError, TypeError, IndexError) as e:
        raise ArtifactError(f"{p}: corrupt artifact ({e})") from e


# ---------------------------------------------------------------------------
# Summary

# how each named quantity enters the ranked table
ROLES = {
    "absolute": "lower",
    "full_ph": "estimate",
    "paired_intermediate": "upper",
    "intermediate": "upper",
    "dominant": "upper",
    "minors2x2_all": "upper",
}
_ROLE_ORDER = {"lower": 0, "estimate": 1, "upper": 2}


@dataclass
class SummaryRow:
    rank: int
    name: str
    role: str
    value: float
    boundary: float
    provenance: str
    source: str


@dataclass
class Summary:
    rows: list
    violations: list = field(default_factory=list)

    @property
    def ordered(self) -> bool:
        return not self.violations

    def render(self) -> str:
        lines = [f"{'rank':>4}  {'quantity':<22} {'role':<9} {'value':>12} {'boundary':>12}  provenance"]
        for r in self.rows:
            lines.append(f"{r.rank:>4}  {r.name:<22} {r.role:<9} {r.value:>12.7f} {r.boundary:>12.7f}  {r.provenance}")
        lines.append("ordering: " + ("ok" if self.ordered else "VIOLATED: " + "; ".join(self.violations)))
        return "\n".join(lines)

    def to_json(self) -> str:
        doc = {"rows": [asdict(r) for r in self.rows], "violations": self.violations, "ordered": self.ordered}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def report_summary(artifacts, out: str | os.PathLike | None = None) -> Summary:
    """Merge artifacts into one ranked bound table.

    Lower bounds first, then estimates, then upper bounds from tightest to
    loosest.  The boundary column halves each value (minimally degenerate
    states).  Ordering violations are listed, not raised.
    """
    docs = [a if isinstance(a, dict) else read_artifact(a) for a in artifacts]
    if not docs:
        raise ArtifactError("no artifacts to summarise")
    picked = {}
    for d in docs:
        for r in d["rows"]:
            name = r.name
            if name in ROLES and r.xi is None and r.value is not None:
                # later artifacts override earlier ones
                picked[name] = (r, d.get("path", "<memory>"))
    if not picked:
        raise ArtifactError("artifacts contain no rankable quantities")
    items = sorted(picked.items(), key=lambda kv: (_ROLE_ORDER[ROLES[kv[0]]], kv[1][0].value))
    rows = [SummaryRow(i + 1, name, ROLES[name], r.value, 0.5 * r.value, r.provenance, src)
            for i, (name, (r, src)) in enumerate(items)]
    violations = []
    for lo in rows:
        for hi in rows:
            if _ROLE_ORDER[lo.role] < _ROLE_ORDER[hi.role] and lo.value >= hi.value:
                violations.append(f"{lo.name} ({lo.role}) >= {hi.name} ({hi.role})")
    summary = Summary(rows, violations)
    if out is not None:
        p = Path(out)
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(summary.to_json() if p.suffix == ".json" else summary.render() + "\n")
    return summary


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))
