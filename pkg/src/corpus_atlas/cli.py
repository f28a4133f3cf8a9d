"""corpus-atlas command line interface.

Every pipeline stage is exposed as a standalone subcommand; `run` executes
the whole pipeline from a TOML config.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import cluster, corpus as corpus_mod, modelsel, project, reduce as reduce_mod, report, synth
from .embedstore import align, read_embeddings, write_embeddings
from .pipeline import PipelineError, load_config, run_pipeline


def _cmd_ingest(args) -> int:
    policy = corpus_mod.FilterPolicy(
        min_abstract_words=args.min_words, min_category_count=args.min_cat_count
    )
    corp = corpus_mod.load_corpus(args.input, policy)
    corpus_mod.save_corpus(corp, args.out)
    prov = corp.provenance
    print(f"ingested {prov['final_records']} records -> {args.out}")
    for key in (
        "input_records",
        "malformed",
        "duplicates_removed",
        "withdrawn_removed",
        "short_abstract_removed",
        "rare_categories_dropped",
        "label_less_records_dropped",
    ):
        print(f"  {key}: {prov[key]}")
    return 0


def _cmd_stats(args) -> int:
    corp = corpus_mod.load_atlas(args.atlas)
    stats = corpus_mod.length_stats(corp)
    ranked, multiplicity = corpus_mod.category_histograms(corp)
    print("Abstract length statistics")
    rows = [
        ("samples", str(stats.n)),
        ("mean", f"{stats.mean:.1f}"),
        ("std", f"{stats.std:.1f}"),
        ("min", str(stats.min)),
        ("25%", f"{stats.q25:g}"),
        ("50%", f"{stats.q50:g}"),
        ("75%", f"{stats.q75:g}"),
        ("max", str(stats.max)),
    ]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"  {k.ljust(width)}  {v}")
    print()
    print(f"Categories ({len(ranked)})")
    name_w = max(len(c) for c, _ in ranked)
    for code, count in ranked[: args.top]:
        print(f"  {code.ljust(name_w)}  {count}")
    if len(ranked) > args.top:
        print(f"  ... {len(ranked) - args.top} more")
    print()
    print("Labels per paper")
    for m, count in multiplicity.items():
        print(f"  {m}  {count}")
    if args.csv:
        outdir = Path(args.csv)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "length_stats.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "mean", "std", "min", "q25", "q50", "q75", "max"])
            w.writerow(
                [stats.n, repr(stats.mean), repr(stats.std), stats.min,
                 repr(stats.q25), repr(stats.q50), repr(stats.q75), stats.max]
            )
        with open(outdir / "category_counts.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["category", "count"])
            w.writerows(ranked)
        with open(outdir / "label_multiplicity.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["labels", "papers"])
            w.writerows(multiplicity.items())
        print(f"\ncsv written to {outdir}")
    return 0


def _cmd_align(args) -> int:
    corp = corpus_mod.load_atlas(args.corpus)
    emb = read_embeddings(args.infile)
    res = align(corp, emb)
    write_embeddings(res.matrix, args.out)
    print(f"aligned {res.matrix.n} rows to corpus order -> {args.out}")
    if res.missing_embedding:
        print(f"  records without embedding: {len(res.missing_embedding)}")
    if res.unmatched_rows:
        print(f"  embedding rows without record: {len(res.unmatched_rows)}")
    return 0


def _cmd_reduce(args) -> int:
    emb = read_embeddings(args.infile)
    model = reduce_mod.fit(emb, args.target)
    reduce_mod.save_model(model, args.model)
    write_embeddings(reduce_mod.transform(model, emb), args.out)
    curve = reduce_mod.explained_curve(model)
    print(f"retained {model.m} of {emb.d} dimensions "
          f"(cumulative explained variance {curve[-1]:.4f}) -> {args.out}")
    return 0


def _cmd_cluster(args) -> int:
    emb = read_embeddings(args.infile)
    params = cluster.KMeansParams(k=args.k, seed=args.seed, n_init=args.n_init)
    model = cluster.fit(emb.data.astype(np.float64), params)
    cluster.save_model(model, args.out)
    labels = cluster.predict(model, emb.data.astype(np.float64))
    with open(args.labels, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "cluster"])
        for rid, lab in zip(emb.ids, labels):
            w.writerow([rid, int(lab)])
    print(f"k={args.k} wcss={model.wcss:.6g} iterations={model.iterations} -> {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    train = read_embeddings(args.train)
    val = read_embeddings(args.val)
    result = modelsel.sweep(
        train.data.astype(np.float64),
        val.data.astype(np.float64),
        k_values=range(args.kmin, args.kmax + 1),
        seed=args.seed,
        n_init=args.n_init,
        subsample_cap=args.subsample_cap,
    )
    modelsel.write_sweep_csv(result, args.out)
    if args.plot:
        modelsel.write_sweep_plot(result, args.plot)
    best_s = result.silhouette_val[result.k_values.index(result.best_k)]
    print(f"best k = {result.best_k} (validation silhouette {best_s:.4f}) -> {args.out}")
    return 0


def _cmd_project(args) -> int:
    emb = read_embeddings(args.infile)
    data = emb.data.astype(np.float64)
    ids = list(emb.ids)
    if len(ids) > args.max_points:
        rng = np.random.default_rng(args.seed)
        keep = np.sort(rng.choice(len(ids), size=args.max_points, replace=False))
        data = data[keep]
        ids = [ids[i] for i in keep]
    coords = project.tsne(
        data,
        project.TsneConfig(perplexity=args.perplexity, iterations=args.iterations,
                           seed=args.seed),
    )
    cluster_of = {}
    if args.labels:
        with open(args.labels, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                cluster_of[row["id"]] = row["cluster"]
    cats_of = {}
    if args.corpus:
        corp = corpus_mod.load_atlas(args.corpus)
        cats_of = {r.id: " ".join(r.categories) for r in corp.records}
    header = ["id", "x", "y"]
    if cluster_of:
        header.append("cluster")
    if cats_of:
        header.append("categories")
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for rid, (px, py) in zip(ids, coords):
            row = [rid, repr(float(px)), repr(float(py))]
            if cluster_of:
                row.append(cluster_of.get(rid, ""))
            if cats_of:
                row.append(cats_of.get(rid, ""))
            w.writerow(row)
    print(f"projected {len(ids)} points -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    corp = corpus_mod.load_atlas(args.corpus)
    labels: dict[str, int] = {}
    with open(args.labels, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            labels[row["id"]] = int(row["cluster"])
    aliases = None
    if args.aliases:
        aliases = json.loads(Path(args.aliases).read_text(encoding="utf-8"))
    rep = report.build_report(
        labels, corp, top_n=args.top, min_count=args.min_count, aliases=aliases
    )
    written = report.emit_report(rep, args.out)
    p = rep.purity
    print(
        f"{len(rep.crosstab.clusters)} clusters; macro purity "
        f"{p.fractions[1]:.0%}/{p.fractions[2]:.0%}/{p.fractions[3]:.0%} "
        f"(1/2/3+ macros) over {p.evaluated_clusters} clusters"
    )
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def _cmd_run(args) -> int:
    config = load_config(args.config)
    manifest = run_pipeline(config)
    print(f"pipeline complete: {len(manifest['artifacts'])} artifacts in {config.outdir}")
    return 0


def _cmd_make_fixture(args) -> int:
    paths = synth.make_fixture(
        args.out, n_records=args.n, n_topics=args.topics, dim=args.dim, seed=args.seed
    )
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corpus-atlas", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="filter a line-delimited record file into an atlas")
    p.add_argument("--input", required=True)
    p.add_argument("--min-words", type=int, default=31)
    p.add_argument("--min-cat-count", type=int, default=250)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("stats", help="print corpus statistics and histograms")
    p.add_argument("atlas")
    p.add_argument("--top", type=int, default=20, help="categories to list")
    p.add_argument("--csv", help="also write csv files to this directory")
    p.set_defaults(func=_cmd_stats)

    p = sub.add_parser("align", help="reorder an embedding file to corpus record order")
    p.add_argument("--corpus", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("reduce", help="fit PCA at a variance target and transform")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--target", type=float, default=0.95)
    p.add_argument("--out", required=True)
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("cluster", help="K-Means fit + labels")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--out", required=True)
    p.add_argument("--labels", required=True)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("sweep", help="silhouette model selection over a k range")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--kmin", type=int, default=2)
    p.add_argument("--kmax", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-init", type=int, default=10)
    p.add_argument("--subsample-cap", type=int, default=10_000)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", help="companion plot-data csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("project", help="t-SNE 2-D projection")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-points", type=int, default=2000)
    p.add_argument("--labels", help="labels.csv to join a cluster column")
    p.add_argument("--corpus", help="corpus.atlas to join a categories column")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_project)

    p = sub.add_parser("report", help="cluster-vs-category report")
    p.add_argument("--labels", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--top", type=int, default=3)
    p.add_argument("--aliases", help="JSON file of extra macro aliases")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("run", help="run the full pipeline from a TOML config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("make-fixture", help="generate a synthetic corpus fixture")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--topics", type=int, default=5)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=_cmd_make_fixture)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except PipelineError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
