"""Relate discovered clusters to subject categories.

Counting is multi-label: a paper carrying m category codes contributes to m
cells of its cluster's crosstab row, so row sums can exceed cluster sizes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .corpus import Corpus, macro_of


@dataclass
class CrossTab:
    clusters: list[int]  # ascending
    categories: list[str]  # lexicographic
    counts: np.ndarray  # (n_clusters, n_categories) int64
    cluster_sizes: dict[int, int]

    def row(self, cluster_id: int) -> dict[str, int]:
        i = self.clusters.index(cluster_id)
        return {
            cat: int(c) for cat, c in zip(self.categories, self.counts[i]) if c > 0
        }


@dataclass
class MacroPurity:
    fractions: dict[int, float]  # 1 -> exactly one macro, 2 -> two, 3 -> three or more
    cluster_counts: dict[int, int]
    evaluated_clusters: int


@dataclass
class ClusterReport:
    crosstab: CrossTab
    top3: list[tuple[int, list[tuple[str, int]]]]  # ordered by decreasing cluster size
    macro_profile: dict[int, list[str]]
    purity: MacroPurity
    top_n: int
    min_count: int


def crosstab(labels: Mapping[str, int], corpus: Corpus) -> CrossTab:
    """Cluster-by-category counts over the labeled subset of the corpus."""
    by_id = {r.id: r for r in corpus.records}
    unknown = [rid for rid in labels if rid not in by_id]
    if unknown:
        raise ValueError(f"labels reference ids absent from corpus: {unknown[:5]}")
    clusters = sorted(set(labels.values()))
    cats = sorted({c for rid in labels for c in by_id[rid].categories})
    cluster_pos = {c: i for i, c in enumerate(clusters)}
    cat_pos = {c: i for i, c in enumerate(cats)}
    counts = np.zeros((len(clusters), len(cats)), dtype=np.int64)
    sizes = {c: 0 for c in clusters}
    for rid, cl in labels.items():
        sizes[cl] += 1
        for code in by_id[rid].categories:
            counts[cluster_pos[cl], cat_pos[code]] += 1
    return CrossTab(clusters=clusters, categories=cats, counts=counts, cluster_sizes=sizes)


def top_categories(
    xt: CrossTab, top_n: int = 3, min_count: int = 10
) -> list[tuple[int, list[tuple[str, int]]]]:
    """Per-cluster top categories after the min-count exclusion.

    Entries are sorted by count descending then code ascending; clusters are
    ordered by decreasing size (ties toward the smaller cluster id).
    """
    order = sorted(xt.clusters, key=lambda c: (-xt.cluster_sizes[c], c))
    out = []
    for cl in order:
        row = xt.row(cl)
        entries = [(code, cnt) for code, cnt in row.items() if cnt >= min_count]
        entries.sort(key=lambda e: (-e[1], e[0]))
        out.append((cl, entries[:top_n]))
    return out


def macro_purity(
    top3: list[tuple[int, list[tuple[str, int]]]],
    aliases: dict[str, str] | None = None,
) -> MacroPurity:
    """Fractions of clusters whose surviving top categories span 1, 2, 3+ macros.

    Clusters whose every category fell below the min-count threshold are
    excluded from the denominator.
    """
    counts = {1: 0, 2: 0, 3: 0}
    profile_sizes = []
    for _, entries in top3:
        if not entries:
            continue
        macros = {macro_of(code, aliases) for code, _ in entries}
        profile_sizes.append(len(macros))
        counts[min(len(macros), 3)] += 1
    denom = len(profile_sizes)
    fractions = {m: (counts[m] / denom if denom else 0.0) for m in (1, 2, 3)}
    return MacroPurity(fractions=fractions, cluster_counts=counts, evaluated_clusters=denom)


def build_report(
    labels: Mapping[str, int],
    corpus: Corpus,
    top_n: int = 3,
    min_count: int = 10,
    aliases: dict[str, str] | None = None,
) -> ClusterReport:
    xt = crosstab(labels, corpus)
    top3 = top_categories(xt, top_n=top_n, min_count=min_count)
    profile = {
        cl: sorted({macro_of(code, aliases) for code, _ in entries})
        for cl, entries in top3
    }
    return ClusterReport(
        crosstab=xt,
        top3=top3,
        macro_profile=profile,
        purity=macro_purity(top3, aliases),
        top_n=top_n,
        min_count=min_count,
    )


def _render_table(report: ClusterReport) -> str:
    headers = ["cluster", "size"] + [
        f"top{i + 1}" for i in range(report.top_n)
    ]
    rows = []
    for cl, entries in report.top3:
        cells = [str(cl), str(report.crosstab.cluster_sizes[cl])]
        for i in range(report.top_n):
            if i < len(entries):
                code, cnt = entries[i]
                cells.append(f"{code} ({cnt})")
            else:
                cells.append("-")
        rows.append(cells)
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    p = report.purity
    lines.append("")
    lines.append(
        f"macro-category purity over {p.evaluated_clusters} clusters: "
        f"{p.fractions[1]:.0%} one macro, {p.fractions[2]:.0%} two, "
        f"{p.fractions[3]:.0%} three or more"
    )
    return "\n".join(lines) + "\n"


def emit_report(report: ClusterReport, outdir: str | Path) -> list[Path]:
    """Write the text table, crosstab CSV, purity CSV, and per-cluster bar data.

    Bar-chart data files cover the four largest clusters. Output is
    byte-stable for identical inputs.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    table = outdir / "cluster_table.txt"
    table.write_text(_render_table(report), encoding="utf-8")
    written.append(table)

    xt = report.crosstab
    ct_path = outdir / "crosstab.csv"
    with open(ct_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["cluster"] + xt.categories)
        for i, cl in enumerate(xt.clusters):
            w.writerow([cl] + [int(v) for v in xt.counts[i]])
    written.append(ct_path)

    pur_path = outdir / "purity.csv"
    with open(pur_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["distinct_macros", "clusters", "fraction"])
        p = report.purity
        for m, label in ((1, "1"), (2, "2"), (3, "3+")):
            w.writerow([label, p.cluster_counts[m], repr(p.fractions[m])])
    written.append(pur_path)

    largest = [cl for cl, _ in report.top3[:4]]
    for cl in largest:
        bar_path = outdir / f"cluster_{cl}_categories.csv"
        row = xt.row(cl)
        entries = sorted(row.items(), key=lambda e: (-e[1], e[0]))
        with open(bar_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["category", "count"])
            for code, cnt in entries:
                w.writerow([code, cnt])
        written.append(bar_path)
    return written


def read_crosstab_csv(path: str | Path) -> CrossTab:
    """Re-parse an emitted crosstab CSV (sizes are not stored in the CSV)."""
    with open(path, "r", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    cats = rows[0][1:]
    clusters = [int(r[0]) for r in rows[1:]]
    counts = np.asarray([[int(v) for v in r[1:]] for r in rows[1:]], dtype=np.int64)
    return CrossTab(clusters=clusters, categories=cats, counts=counts,
                    cluster_sizes={c: 0 for c in clusters})
