"""Command-line surface for the iterative workflow:
index -> extract -> evaluate -> refine (plus stats and single lookups).

Exit codes: 0 success, 1 validation error, 2 I/O or corruption error,
3 valid-but-empty result. Payload goes to stdout, diagnostics to
stderr, so scripted refinement loops can branch on the code and parse
the output without filtering.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from . import evaluation, extraction, stats
from .spec import SpecError, parse_spec_file
from .store import (
    Archive,
    ArchiveIndex,
    ArchiveIOError,
    CorruptSnapshotError,
    IngestStats,
    SnapshotNotFound,
    ingest_warc,
    is_valid_timestamp14,
)
from .urls import CanonicalizationError
from .warc import WarcFormatError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_EMPTY = 3


def _log(message):
    print(message, file=sys.stderr)


def cmd_index(args):
    if not args.warcs:
        _log("error: no input WARC files given")
        return EXIT_VALIDATION
    entries = []
    totals = IngestStats()
    for path in args.warcs:
        try:
            entries.extend(ingest_warc(path, stats=totals))
        except (OSError, WarcFormatError) as exc:
            _log("error: %s: %s" % (path, exc))
            return EXIT_IO
    ArchiveIndex(entries).save(args.output)
    _log(
        "indexed records=%d responses=%d skipped=%d bytes=%d"
        % (totals.records, totals.responses, totals.skipped, totals.bytes)
    )
    return EXIT_OK


def cmd_extract(args):
    try:
        spec = parse_spec_file(args.spec)
    except (OSError, SpecError) as exc:
        _log("error: %s" % exc)
        return EXIT_VALIDATION if isinstance(exc, SpecError) else EXIT_IO
    try:
        index = ArchiveIndex.load(args.index)
    except (OSError, ValueError) as exc:
        _log("error: %s" % exc)
        return EXIT_IO
    archive = Archive(directory=args.archive_dir)
    try:
        coll = extraction.extract(archive, index, spec, workers=args.workers)
    except (ArchiveIOError, CorruptSnapshotError, WarcFormatError, OSError) as exc:
        _log("error: %s" % exc)
        return EXIT_IO
    coll.write_manifest(args.output)
    if args.export_warc:
        extraction.export_warc(coll, archive, args.export_warc)
    for key in ("candidates_scanned", "fetches", "closure_added", "errors", "members"):
        print("%s=%d" % (key, coll.counters[key]))
    return EXIT_OK if coll.members else EXIT_EMPTY


def cmd_evaluate(args):
    try:
        index = ArchiveIndex.load(args.index)
        coll = extraction.SubCollection.read_manifest(args.manifest, index=index)
    except SnapshotNotFound as exc:
        _log("error: manifest member not in index: %s" % exc)
        return EXIT_IO
    except (OSError, ValueError) as exc:
        _log("error: %s" % exc)
        return EXIT_IO
    truth = None
    if args.truth:
        try:
            truth = evaluation.TruthSet.load(args.truth)
        except (OSError, ValueError) as exc:
            _log("error: %s" % exc)
            return EXIT_IO
    archive = Archive(directory=args.archive_dir)
    oracle = None
    if args.spec:
        try:
            spec = parse_spec_file(args.spec)
        except (OSError, SpecError) as exc:
            _log("error: %s" % exc)
            return EXIT_VALIDATION if isinstance(exc, SpecError) else EXIT_IO
        oracle = evaluation.default_link_oracle(index, spec)
    try:
        report = evaluation.evaluate(coll, archive, index, truth=truth, oracle=oracle)
    except (ArchiveIOError, CorruptSnapshotError, WarcFormatError, OSError) as exc:
        _log("error: %s" % exc)
        return EXIT_IO
    for line in report.as_key_values():
        print(line)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as f:
            w = csv.writer(f)
            w.writerow(["metric", "facet", "value"])
            for row in report.as_csv_rows():
                w.writerow(row)
    return EXIT_OK


def cmd_stats(args):
    if args.sample_n <= 0:
        _log("error: --sample-n must be positive")
        return EXIT_VALIDATION
    try:
        index = ArchiveIndex.load(args.index)
    except (OSError, ValueError) as exc:
        _log("error: %s" % exc)
        return EXIT_IO
    archive = Archive(directory=args.archive_dir)
    try:
        report = stats.build_report(index, archive, args.sample_n, args.seed)
    except (ArchiveIOError, WarcFormatError, OSError) as exc:
        _log("error: %s" % exc)
        return EXIT_IO
    report.write_wide_csv(args.output)
    base, ext = os.path.splitext(args.output)
    long_path = base + "_long" + (ext or ".csv")
    report.write_long_csv(long_path)
    _log("sampled_pages=%d wide=%s long=%s" % (report.sample_size, args.output, long_path))
    return EXIT_OK


def cmd_get(args):
    if not is_valid_timestamp14(args.at):
        _log("error: --at must be a valid 14-digit UTC timestamp")
        return EXIT_VALIDATION
    try:
        index = ArchiveIndex.load(args.index)
    except (OSError, ValueError) as exc:
        _log("error: %s" % exc)
        return EXIT_IO
    try:
        ref = index.lookup_nearest(args.url, args.at)
    except SnapshotNotFound:
        _log("not found: %s" % args.url)
        return EXIT_EMPTY
    except CanonicalizationError as exc:
        _log("error: %s" % exc)
        return EXIT_VALIDATION
    archive = Archive(directory=args.archive_dir)
    try:
        snap = archive.fetch(ref)
    except (ArchiveIOError, CorruptSnapshotError, WarcFormatError, OSError) as exc:
        _log("error: %s" % exc)
        return EXIT_IO
    _log("%s %s %s" % (ref.canonical_url, ref.timestamp14, ref.digest))
    sys.stdout.buffer.write(snap.body)
    sys.stdout.buffer.flush()
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="subcollect",
        description="Extract and evaluate topic/event focused sub-collections "
        "from WARC web archives.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build a sorted lookup index from WARC files")
    p.add_argument("warcs", nargs="*", help="input WARC files")
    p.add_argument("--output", required=True, help="index file to write")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("extract", help="run a sub-collection specification")
    p.add_argument("--spec", required=True, help="JSON specification file")
    p.add_argument("--index", required=True, help="index file")
    p.add_argument("--archive-dir", required=True, help="directory holding the WARC files")
    p.add_argument("--output", required=True, help="manifest file to write")
    p.add_argument("--export-warc", help="also copy member records into this WARC file")
    p.add_argument("--workers", type=int, default=1, help="parallel fetch workers")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("evaluate", help="compute the metric suite over a manifest")
    p.add_argument("manifest", help="manifest file from 'extract'")
    p.add_argument("--index", required=True)
    p.add_argument("--archive-dir", required=True)
    p.add_argument("--truth", help="labeled truth set (enables precision/recall)")
    p.add_argument("--spec", help="spec file; scopes the link-completeness oracle")
    p.add_argument("--output", help="also write the report as CSV here")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="archive statistics from a seeded sample")
    p.add_argument("--index", required=True)
    p.add_argument("--archive-dir", required=True)
    p.add_argument("--sample-n", type=int, default=40000, help="sample size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="wide CSV path (long CSV written beside it)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("get", help="print the capture nearest to a timestamp")
    p.add_argument("--index", required=True)
    p.add_argument("--archive-dir", required=True)
    p.add_argument("--url", required=True)
    p.add_argument("--at", required=True, help="14-digit UTC target timestamp")
    p.set_defaults(func=cmd_get)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
