"""Archive-wide measurements: snapshot volume, link-in-archive rates,
tag evolution, and outlink counts per crawl year.

Everything except the per-year snapshot histogram runs over a seeded
uniform sample of the archive's HTML captures, so the cost is bounded
on arbitrarily large archives and every run is reproducible from
(index, n, seed).
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

__all__ = [
    "StatsReport",
    "snapshots_per_year",
    "sample_refs",
    "analyze_sample",
    "link_in_archive_rate",
    "tag_stats",
    "outlink_stats",
    "build_report",
]

TAG_FIELDS = ("script", "style_element", "linked_style", "table", "div")


def snapshots_per_year(index):
    """Exact per-year capture counts straight from the index; no fetches."""
    hist = {}
    for e in index:
        hist[e.year] = hist.get(e.year, 0) + 1
    return hist


def sample_refs(index, n, seed):
    """Uniform reservoir sample of min(n, #HTML entries) HTML captures.

    Single pass in index order (algorithm R); deterministic per seed.
    The returned refs keep index order so downstream work is stable.
    """
    if n <= 0:
        raise ValueError("sample size must be positive")
    rng = random.Random(seed)
    reservoir = []
    seen = 0
    for e in index:
        if not e.is_html:
            continue
        seen += 1
        if len(reservoir) < n:
            reservoir.append(e)
        else:
            j = rng.randrange(seen)
            if j < n:
                reservoir[j] = e
    reservoir.sort(key=lambda e: (e.canonical_url, e.timestamp14))
    return reservoir


def analyze_sample(sample, archive):
    """Fetch and parse every sampled page: [(entry, PageAnalysis)].

    Exactly len(sample) fetches; corrupt captures are dropped.
    """
    from .extraction import _analyze
    from .store import CorruptSnapshotError

    analyzed = []
    for e in sample:
        try:
            analyzed.append((e, _analyze(archive.fetch(e))))
        except (CorruptSnapshotError, OSError):
            continue
    return analyzed


def _macro_mean(values):
    return sum(values) / len(values) if values else None


def link_in_archive_rate(analyzed, index, same_year=False):
    """Per-year (internal_rate, external_rate): the mean over pages of
    the per-page fraction of outlinks whose target has a capture in
    the index.

    A link counts as contained if any capture of its target exists;
    with ``same_year`` the capture must share the page's crawl year.
    Pages without links of a kind are excluded from that kind's mean.
    """

    def contained(target, year):
        entries = index.entries_for(target)
        if not same_year:
            return bool(entries)
        return any(e.year == year for e in entries)

    per_year = {}
    for entry, analysis in analyzed:
        fracs = per_year.setdefault(entry.year, ([], []))
        for slot, links in ((0, analysis.internal_outlinks()), (1, analysis.external_outlinks())):
            if not links:
                continue
            hit = sum(1 for l in links if contained(l.target, entry.year))
            fracs[slot].append(hit / len(links))
    return {
        year: (_macro_mean(internal), _macro_mean(external))
        for year, (internal, external) in sorted(per_year.items())
    }


def tag_stats(analyzed):
    """Per-year mean tag counts, plus each tag's series normalized by
    its maximum across years (0/0 defined as 0).

    Returns (averages, normalized): {year: {tag: value}} both.
    """
    sums, counts = {}, {}
    for entry, analysis in analyzed:
        year = entry.year
        counts[year] = counts.get(year, 0) + 1
        acc = sums.setdefault(year, {t: 0 for t in TAG_FIELDS})
        for t in TAG_FIELDS:
            acc[t] += analysis.tag_counts[t]
    averages = {
        year: {t: sums[year][t] / counts[year] for t in TAG_FIELDS} for year in sums
    }
    normalized = {}
    for t in TAG_FIELDS:
        peak = max((averages[y][t] for y in averages), default=0.0)
        for y in averages:
            normalized.setdefault(y, {})[t] = (
                averages[y][t] / peak if peak > 0 else 0.0
            )
    return averages, normalized


def outlink_stats(analyzed):
    """Per-year mean outlinks per page: {year: (total, internal, external)}."""
    sums, counts = {}, {}
    for entry, analysis in analyzed:
        year = entry.year
        counts[year] = counts.get(year, 0) + 1
        internal, ext = sums.get(year, (0, 0))
        internal += len(analysis.internal_outlinks())
        ext += len(analysis.external_outlinks())
        sums[year] = (internal, ext)
    out = {}
    for year in sorted(sums):
        internal, ext = sums[year]
        avg_int = internal / counts[year]
        avg_ext = ext / counts[year]
        # Total is the sum of the two averages so the partition identity
        # avg_total == avg_internal + avg_external holds bit-exactly.
        out[year] = (avg_int + avg_ext, avg_int, avg_ext)
    return out


@dataclass
class YearRow:
    year: int
    snapshot_count: int = 0
    sampled_pages: int = 0
    internal_link_rate: float = None
    external_link_rate: float = None
    avg_scripts: float = None
    avg_style_elements: float = None
    avg_linked_styles: float = None
    avg_table: float = None
    avg_div: float = None
    avg_outlinks_total: float = None
    avg_outlinks_internal: float = None
    avg_outlinks_external: float = None


_WIDE_COLUMNS = [
    "year",
    "snapshot_count",
    "sampled_pages",
    "internal_link_rate",
    "external_link_rate",
    "avg_scripts",
    "avg_style_elements",
    "avg_linked_styles",
    "avg_table",
    "avg_div",
    "avg_outlinks_total",
    "avg_outlinks_internal",
    "avg_outlinks_external",
]

_TAG_TO_COLUMN = {
    "script": "avg_scripts",
    "style_element": "avg_style_elements",
    "linked_style": "avg_linked_styles",
    "table": "avg_table",
    "div": "avg_div",
}


@dataclass
class StatsReport:
    rows: list = field(default_factory=list)  # YearRow, ascending year
    normalized_tags: dict = field(default_factory=dict)  # {year: {tag: [0,1]}}
    sample_size: int = 0
    seed: int = 0

    def write_wide_csv(self, path):
        """One row per year, plot-ready."""
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(_WIDE_COLUMNS)
            for row in self.rows:
                w.writerow(
                    ["" if (v := getattr(row, c)) is None else v for c in _WIDE_COLUMNS]
                )

    def write_long_csv(self, path):
        """year,metric,value rows, including the normalized tag series."""
        with open(path, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(["year", "metric", "value"])
            for row in self.rows:
                for c in _WIDE_COLUMNS[1:]:
                    v = getattr(row, c)
                    if v is not None:
                        w.writerow([row.year, c, v])
                for tag in TAG_FIELDS:
                    norm = self.normalized_tags.get(row.year, {}).get(tag)
                    if norm is not None:
                        w.writerow([row.year, "normalized_%s" % tag, norm])


def build_report(index, archive, n, seed):
    """Compute the full statistics suite over one indexed archive."""
    histogram = snapshots_per_year(index)
    sample = sample_refs(index, n, seed)
    analyzed = analyze_sample(sample, archive)

    rates = link_in_archive_rate(analyzed, index)
    averages, normalized = tag_stats(analyzed)
    outlinks = outlink_stats(analyzed)
    sampled_per_year = {}
    for e in sample:
        sampled_per_year[e.year] = sampled_per_year.get(e.year, 0) + 1

    report = StatsReport(sample_size=len(sample), seed=seed, normalized_tags=normalized)
    for year in sorted(set(histogram) | set(sampled_per_year)):
        row = YearRow(year=year, snapshot_count=histogram.get(year, 0))
        row.sampled_pages = sampled_per_year.get(year, 0)
        if year in rates:
            row.internal_link_rate, row.external_link_rate = rates[year]
        if year in averages:
            for tag, column in _TAG_TO_COLUMN.items():
                setattr(row, column, averages[year][tag])
        if year in outlinks:
            (
                row.avg_outlinks_total,
                row.avg_outlinks_internal,
                row.avg_outlinks_external,
            ) = outlinks[year]
        report.rows.append(row)
    return report
