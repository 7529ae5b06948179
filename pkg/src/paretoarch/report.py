"""Report tables and plot data derived from a record store.

Everything here is recomputed from store records; nothing is kept that
the store cannot reproduce.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .arch_space import ArchSpaceError, parse_key
from .lp import RediscoveryCertificate, rediscover
from .pareto import ParetoFront, UncertifiedPreference, pareto_front, select
from .prefs import PreferenceExpr
from .store import PerformanceRecord


@dataclass
class Discovery:
    preference: str
    key: str
    value: float
    restricted_to_front: bool


@dataclass
class Report:
    records: list[PerformanceRecord]
    front: ParetoFront
    discoveries: list[Discovery] = field(default_factory=list)
    certificates: list[RediscoveryCertificate] = field(default_factory=list)

    def record(self, key: str) -> PerformanceRecord:
        return self._index[key]

    def __post_init__(self):
        self._index = {r.key: r for r in self.records}


def latest_records(records: Sequence[PerformanceRecord]) -> list[PerformanceRecord]:
    """One record per key; the last appended wins."""
    by_key = {}
    for r in records:
        by_key[r.key] = r
    return [by_key[k] for k in sorted(by_key)]


def build_report(records: Sequence[PerformanceRecord], prefs: Sequence[PreferenceExpr] = (), targets: Sequence[str] = ()) -> Report:
    records = latest_records(records)
    front = pareto_front(records)
    report = Report(records, front)
    for pref in prefs:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UncertifiedPreference)
            key, value, restricted = select(records, pref)
        report.discoveries.append(Discovery(pref.name or pref.render(), key, value, restricted))
    for target in targets:
        report.certificates.append(rediscover(front, target))
    return report


def _describe(key: str) -> tuple[str, str, str]:
    try:
        spec = parse_key(key)
    except ArchSpaceError:
        return "-", "-", key
    return str(spec.lookback), str(spec.hidden_dim), spec.describe()


def _fmt(v: float) -> str:
    return repr(float(v))


def front_rows(report: Report) -> list[list[str]]:
    rows = [["key", "lookback", "hidden", "blocks", "f1", "f2", "f3", "fhat1", "fhat2", "fhat3"]]
    for key, vec in report.front.members:
        fhat = report.front.rescale_point(vec)
        rows.append([key, *_describe(key), _fmt(vec[0]), _fmt(vec[1]), str(int(vec[2])), *map(_fmt, fhat)])
    return rows


def discovery_rows(report: Report) -> list[list[str]]:
    rows = [["preference", "key", "lookback", "hidden", "blocks", "f1", "f2", "f3", "value", "searched"]]
    for d in report.discoveries:
        r = report.record(d.key)
        rows.append([d.preference, d.key, *_describe(d.key), _fmt(r.f1), _fmt(r.f2), str(r.f3), _fmt(d.value),
                     "front" if d.restricted_to_front else "all"])
    return rows


def rediscovery_rows(report: Report) -> list[list[str]]:
    rows = [["case", "key", "lookback", "hidden", "blocks", "status", "lambda1", "lambda2", "lambda3"]]
    for i, c in enumerate(report.certificates, start=1):
        weights = [_fmt(w) for w in c.weights] if c.weights else ["-"] * 3
        rows.append([str(i), c.target, *_describe(c.target), c.status.value, *weights])
    return rows


def plot_rows(report: Report) -> list[list[str]]:
    """All points with front membership and discovery markers, for scatter plots."""
    on_front = set(report.front.keys)
    winners: dict[str, list[str]] = {}
    for d in report.discoveries:
        winners.setdefault(d.key, []).append(d.preference)
    rows = [["key", "f1", "f2", "f3", "fhat1", "fhat2", "fhat3", "on_front", "discovered_by"]]
    for r in report.records:
        fhat = report.front.rescale_point(r.objectives)
        rows.append([r.key, _fmt(r.f1), _fmt(r.f2), str(r.f3), *map(_fmt, fhat),
                     "1" if r.key in on_front else "0", ";".join(winners.get(r.key, [])) or "-"])
    return rows


def write_tsv(path: Path, rows: list[list[str]]) -> None:
    path.write_text("".join("\t".join(row) + "\n" for row in rows))


def front_lines(report: Report) -> list[str]:
    """Store-format lines for front members plus their re-scaled triple."""
    lines = []
    for key, vec in report.front.members:
        obj = json.loads(report.record(key).to_line())
        obj["fhat"] = list(report.front.rescale_point(vec))
        lines.append(json.dumps(obj))
    return lines


def certificate_line(cert: RediscoveryCertificate) -> str:
    return json.dumps({"target": cert.target, "status": cert.status.value,
                       "lambda": list(cert.weights) if cert.weights else None})


def format_table(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


def write_report(report: Report, out_dir: str | Path) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "front": out / "front.tsv",
        "front_records": out / "front.jsonl",
        "discovery": out / "discovery.tsv",
        "rediscovery": out / "rediscovery.tsv",
        "certificates": out / "certificates.jsonl",
        "points": out / "points.tsv",
        "summary": out / "report.md",
    }
    write_tsv(paths["front"], front_rows(report))
    paths["front_records"].write_text("".join(line + "\n" for line in front_lines(report)))
    write_tsv(paths["discovery"], discovery_rows(report))
    write_tsv(paths["rediscovery"], rediscovery_rows(report))
    paths["certificates"].write_text("".join(certificate_line(c) + "\n" for c in report.certificates))
    write_tsv(paths["points"], plot_rows(report))
    summary = [
        f"# Architecture report\n\n{len(report.records)} architectures, {len(report.front)} Pareto optimal.\n",
        "## Pareto front\n\n```\n" + format_table(front_rows(report)) + "\n```\n",
    ]
    if report.discoveries:
        summary.append("## Discovery\n\n```\n" + format_table(discovery_rows(report)) + "\n```\n")
    if report.certificates:
        summary.append("## Rediscovery\n\n```\n" + format_table(rediscovery_rows(report)) + "\n```\n")
    paths["summary"].write_text("\n".join(summary))
    return paths
