"""Command-line interface: index, search, evaluate, export-pairwise, stats."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from bobsearch import evaluate as ev
from bobsearch import index as ix
from bobsearch.corpus import catalog_stats, ingest_catalog
from bobsearch.errors import BobSearchError
from bobsearch.pipeline import RunConfig, index_catalog


def _add_index_parser(sub):
    p = sub.add_parser("index", help="preprocess a catalog and write the BoB index")
    p.add_argument("--catalog", required=True, help="catalog CSV path")
    p.add_argument("--out", required=True, help="output index file path")
    p.add_argument("--seed", required=True, type=int, help="RNG seed (mandatory)")
    p.add_argument("--k", type=int, default=9, help="k-means cluster count")
    p.add_argument("--fraction", type=float, default=0.15, help="mosaic selection fraction")
    p.add_argument("--features", default="reference", help="'reference' or a feature file path")
    p.add_argument("--patch-um", type=float, default=500.0, help="patch physical size in microns")
    p.add_argument("--mpp", type=float, default=0.5, help="microns per pixel")
    p.add_argument("--min-tissue", type=float, default=0.5, help="minimum patch tissue fraction")
    return p


def cmd_index(args) -> int:
    catalog = ingest_catalog(args.catalog)
    config = RunConfig(
        seed=args.seed,
        physical_size_um=args.patch_um,
        magnification_mpp=args.mpp,
        min_tissue_fraction=args.min_tissue,
        k=args.k,
        selection_fraction=args.fraction,
        feature_source=args.features,
    )
    idx, manifest = index_catalog(catalog, config)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    ix.save_index(idx, out)
    manifest_path = out.with_suffix(out.suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    print(f"indexed {len(idx)} slides, {manifest['total_barcodes']} barcodes -> {out}")
    return 0


def cmd_search(args) -> int:
    idx = ix.load_index(args.index)
    hits = ix.search(idx, args.slide, scope=args.scope, n=args.n)
    print("rank,slide_id,subtype,distance")
    for rank, hit in enumerate(hits, start=1):
        print(f"{rank},{hit.slide_id},{hit.subtype_code},{hit.distance:.4f}")
    return 0


def cmd_evaluate(args) -> int:
    idx = ix.load_index(args.index)
    report = ev.evaluate(idx, scope=args.scope, section=args.section)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(ev.report_table(report), encoding="utf-8")

    labels, confusion = ev.confusion_frequency(report.results, n=10)
    (out / "confusion.csv").write_text(ev.matrix_table(labels, confusion), encoding="utf-8")
    slide_counts = {row.label: row.wsi_count for row in report.rows}
    if all(slide_counts.get(label, 0) > 0 for label in labels):
        heatmap = ev.rescale_heatmap(confusion, slide_counts, labels)
        (out / "heatmap.csv").write_text(ev.matrix_table(labels, heatmap), encoding="utf-8")
    _, chord = ev.chord_matrix(report.results, n=10, labels=labels)
    (out / "chord.csv").write_text(ev.matrix_table(labels, chord), encoding="utf-8")

    if args.pairwise_sample:
        rng = np.random.default_rng(args.seed)
        ids = sorted(r.query_slide_id for r in report.results)
        take = min(args.pairwise_sample, len(ids))
        sample = sorted(rng.choice(ids, size=take, replace=False).tolist())
        matrix = ix.pairwise_distances(idx, sample)
        (out / "pairwise.csv").write_text(ev.matrix_table(sample, matrix), encoding="utf-8")

    print(ev.report_table(report), end="")
    return 0


def cmd_export_pairwise(args) -> int:
    idx = ix.load_index(args.index)
    if args.slides:
        ids = args.slides
    else:
        rng = np.random.default_rng(args.seed)
        all_ids = sorted(e.slide_id for e in idx.entries)
        take = min(args.sample, len(all_ids))
        ids = sorted(rng.choice(all_ids, size=take, replace=False).tolist())
    matrix = ix.pairwise_distances(idx, ids)
    text = ev.matrix_table(ids, matrix)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def cmd_stats(args) -> int:
    catalog = ingest_catalog(args.catalog)
    stats = catalog_stats(catalog)
    print("subtype,slides,patients,frozen,permanent,unspecified")
    for code, entry in stats.items():
        sec = entry["sections"]
        print(
            f"{code},{entry['slides']},{entry['patients']},"
            f"{sec['frozen']},{sec['permanent']},{sec['unspecified']}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bobsearch",
        description="Index, search, and evaluate histopathology slides via bunches of barcodes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    _add_index_parser(sub)

    p = sub.add_parser("search", help="query the index for similar slides")
    p.add_argument("--index", required=True)
    p.add_argument("--slide", required=True, help="query slide id")
    p.add_argument("--scope", choices=["horizontal", "vertical"], default="horizontal")
    p.add_argument("--n", type=int, default=10)

    p = sub.add_parser("evaluate", help="run the leave-one-patient-out evaluation")
    p.add_argument("--index", required=True)
    p.add_argument("--scope", choices=["horizontal", "vertical"], default="horizontal")
    p.add_argument("--section", choices=["frozen", "permanent", "all"], default="all")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--pairwise-sample", type=int, default=0, help="also export an NxN pairwise distance matrix for a sample")
    p.add_argument("--seed", type=int, default=0, help="seed for the pairwise sample")

    p = sub.add_parser("export-pairwise", help="export a pairwise bunch-distance matrix")
    p.add_argument("--index", required=True)
    p.add_argument("--slides", nargs="*", help="explicit slide ids")
    p.add_argument("--sample", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV path (default: stdout)")

    p = sub.add_parser("stats", help="summarize a catalog")
    p.add_argument("--catalog", required=True)

    return parser


_COMMANDS = {
    "index": cmd_index,
    "search": cmd_search,
    "evaluate": cmd_evaluate,
    "export-pairwise": cmd_export_pairwise,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (BobSearchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
