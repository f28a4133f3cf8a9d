"""Deterministic synthetic corpus + embedding fixtures.

Generates an arXiv-flavoured record file with planted topic structure and a
matching Gaussian-blob embedding file, plus a ready-to-run pipeline config.
Used by the test suite and the README walkthrough; everything is a pure
function of the seed.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .embedstore import EmbeddingMatrix, write_embeddings

TOPIC_NAMES = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta", "eta", "theta"]

_COMMON_WORDS = (
    "we study the of a and for with model results method using data is are "
    "show that this to in on new approach analysis based propose present"
).split()


def _abstract(rng: np.random.Generator, topic: str, n_words: int) -> str:
    pool = [f"{topic}term{i}" for i in range(40)]
    words = [
        pool[int(rng.integers(len(pool)))]
        if rng.random() < 0.7
        else _COMMON_WORDS[int(rng.integers(len(_COMMON_WORDS)))]
        for _ in range(n_words)
    ]
    return " ".join(words)


def make_fixture(
    outdir: str | Path,
    n_records: int = 1000,
    n_topics: int = 5,
    dim: int = 64,
    seed: int = 7,
    blob_sigma: float = 0.6,
    center_scale: float = 12.0,
) -> dict[str, Path]:
    """Write records.jsonl, embeddings.emb1, truth.csv, and pipeline.toml.

    The record stream includes a handful of dirty entries (short abstracts,
    withdrawn notices, one duplicated id, one malformed line, one record with
    only a rare label, one record without an embedding) so ingest and align
    have something to clean.
    """
    if not 2 <= n_topics <= len(TOPIC_NAMES):
        raise ValueError(f"n_topics must be in [2, {len(TOPIC_NAMES)}]")
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    lines: list[str] = []
    truth: list[tuple[str, int]] = []
    emb_ids: list[str] = []
    emb_rows: list[np.ndarray] = []
    centers = np.zeros((n_topics, dim))
    for t in range(n_topics):
        centers[t, t] = center_scale

    def _emit(rid: str, abstract: str, cats: list[str], topic: int, embed: bool = True):
        lines.append(
            json.dumps(
                {"id": rid, "abstract": abstract, "categories": " ".join(cats)},
                sort_keys=True,
                separators=(",", ":"),
            )
        )
        truth.append((rid, topic))
        if embed:
            emb_ids.append(rid)
            emb_rows.append(centers[topic] + rng.normal(0.0, blob_sigma, size=dim))

    no_embedding_at = 57  # one clean record deliberately left without a row
    for i in range(n_records):
        rid = f"2301.{i:05d}"
        topic = int(rng.integers(n_topics))
        name = TOPIC_NAMES[topic]
        cats = [f"{name}.core"]
        if rng.random() < 0.30:
            cats.append(f"{name}.aux")
        if rng.random() < 0.003:
            cats.append("misc.rare")
        n_words = int(rng.integers(45, 130))
        _emit(rid, _abstract(rng, name, n_words), cats, topic, embed=i != no_embedding_at)

    # dirty entries: all get embeddings so align (not ingest) is never the filter
    t = int(rng.integers(n_topics))
    _emit("2301.90001", _abstract(rng, TOPIC_NAMES[t], 20), [f"{TOPIC_NAMES[t]}.core"], t)
    t = int(rng.integers(n_topics))
    _emit("2301.90002", "Withdrawn by the authors due to an error in section 2.",
          [f"{TOPIC_NAMES[t]}.core"], t)
    t = int(rng.integers(n_topics))
    _emit(
        "2301.90003",
        "This paper has been withdrawn. " + _abstract(rng, TOPIC_NAMES[t], 40),
        [f"{TOPIC_NAMES[t]}.core"],
        t,
    )
    t = int(rng.integers(n_topics))
    _emit("2301.90004", _abstract(rng, TOPIC_NAMES[t], 60), ["misc.rare"], t)
    # duplicate of an existing id; same topic so the survivor is consistent
    dup_topic = truth[3][1]
    lines.append(
        json.dumps(
            {
                "id": truth[3][0],
                "abstract": _abstract(rng, TOPIC_NAMES[dup_topic], 70),
                "categories": f"{TOPIC_NAMES[dup_topic]}.core",
            },
            sort_keys=True,
            separators=(",", ":"),
        )
    )
    lines.append('{"id": "2301.90005", "abstract": 13}')  # malformed: non-string abstract
    lines.append("not json at all {{{")

    records_path = outdir / "records.jsonl"
    records_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    emb_path = outdir / "embeddings.emb1"
    write_embeddings(
        EmbeddingMatrix(
            data=np.asarray(emb_rows, dtype=np.float32),
            ids=emb_ids,
            variant_tag="synthetic-blobs",
        ),
        emb_path,
    )

    truth_path = outdir / "truth.csv"
    with open(truth_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "topic"])
        for rid, topic in truth:
            w.writerow([rid, topic])

    config_path = outdir / "pipeline.toml"
    config_path.write_text(
        "\n".join(
            [
                "[input]",
                'records = "records.jsonl"',
                'embeddings = "embeddings.emb1"',
                "",
                "[filter]",
                "min_words = 31",
                "min_category_count = 5",
                "",
                "[pca]",
                "variance_target = 0.95",
                'fit_on = "train"',
                "",
                "[sweep]",
                "k_min = 2",
                f"k_max = {max(15, n_topics + 3)}",
                "n_init = 10",
                "",
                "[seeds]",
                "split = 0",
                "model = 0",
                "tsne = 0",
                "",
                "[report]",
                "top_n = 3",
                "min_count = 10",
                "",
                "[project]",
                "enabled = false",
                "",
                "[output]",
                'dir = "out"',
                "",
            ]
        ),
        encoding="utf-8",
    )
    return {
        "records": records_path,
        "embeddings": emb_path,
        "truth": truth_path,
        "config": config_path,
    }
