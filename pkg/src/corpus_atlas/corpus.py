"""Corpus ingestion, quality filtering, descriptive statistics, and splits.

Input is one JSON object per line with at least `id`, `abstract`, and
`categories` (a single space-separated string of codes, as in public arXiv
metadata snapshots). Filtering removes duplicates, withdrawn papers, short
abstracts, and rare categories, in that order.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

#: archive-prefix aliases applied on top of the "text before the first dot" rule
MACRO_ALIASES = {"math-ph": "math"}

_WITHDRAWN_RE = re.compile(
    r"this (?:paper|article|submission) (?:has been|is) withdrawn", re.IGNORECASE
)


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class PaperRecord:
    id: str
    abstract: str
    categories: tuple[str, ...]
    word_count: int


@dataclass
class FilterPolicy:
    min_abstract_words: int = 31
    min_category_count: int = 250


@dataclass
class Corpus:
    records: list[PaperRecord]
    category_counts: dict[str, int]
    provenance: dict

    def __len__(self) -> int:
        return len(self.records)

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def word_counts(self) -> np.ndarray:
        return np.asarray([r.word_count for r in self.records], dtype=np.int64)


@dataclass
class SplitIndex:
    train_ids: list[str]
    val_ids: list[str]
    test_ids: list[str]
    seed: int


@dataclass
class LengthStats:
    n: int
    mean: float
    std: float
    min: int
    q25: float
    q50: float
    q75: float
    max: int


def macro_of(category: str, aliases: dict[str, str] | None = None) -> str:
    """Archive-level macro code: text before the first '.', with alias fixups."""
    if not category:
        raise ValueError("empty category code")
    head = category.split(".", 1)[0]
    table = MACRO_ALIASES if aliases is None else {**MACRO_ALIASES, **aliases}
    return table.get(head, head)


def is_withdrawn(abstract: str) -> bool:
    text = abstract.strip()
    return text.lower().startswith("withdrawn") or bool(_WITHDRAWN_RE.search(text))


def _parse_record(obj: dict) -> PaperRecord:
    rid = obj.get("id")
    abstract = obj.get("abstract")
    cats = obj.get("categories")
    if not isinstance(rid, str) or not rid:
        raise ValueError("missing or empty 'id'")
    if not isinstance(abstract, str):
        raise ValueError("missing 'abstract'")
    if isinstance(cats, str):
        codes = tuple(cats.split())
    elif isinstance(cats, list) and all(isinstance(c, str) for c in cats):
        codes = tuple(cats)
    else:
        raise ValueError("missing 'categories'")
    return PaperRecord(
        id=rid, abstract=abstract, categories=codes, word_count=len(abstract.split())
    )


def filter_records(records: list[PaperRecord], policy: FilterPolicy) -> tuple[list[PaperRecord], dict]:
    """Apply the quality filters in order; returns surviving records and rule counts.

    Order: dedup (last occurrence wins) -> withdrawal heuristic -> abstract
    length -> corpus-wide rare-category strip -> drop records left label-less.
    Idempotent: running the result through again changes nothing.
    """
    by_id: dict[str, PaperRecord] = {}
    for rec in records:
        by_id[rec.id] = rec
    deduped = list(by_id.values())
    n_dupes = len(records) - len(deduped)

    kept = [r for r in deduped if not is_withdrawn(r.abstract)]
    n_withdrawn = len(deduped) - len(kept)

    long_enough = [r for r in kept if r.word_count >= policy.min_abstract_words]
    n_short = len(kept) - len(long_enough)

    counts = Counter(c for r in long_enough for c in r.categories)
    rare = {c for c, k in counts.items() if k < policy.min_category_count}
    stripped: list[PaperRecord] = []
    for r in long_enough:
        codes = tuple(c for c in r.categories if c not in rare)
        stripped.append(r if codes == r.categories else
                        PaperRecord(r.id, r.abstract, codes, r.word_count))
    final = [r for r in stripped if r.categories]
    n_labelless = len(stripped) - len(final)

    provenance = {
        "duplicates_removed": n_dupes,
        "withdrawn_removed": n_withdrawn,
        "short_abstract_removed": n_short,
        "rare_categories_dropped": len(rare),
        "label_less_records_dropped": n_labelless,
        "final_records": len(final),
    }
    return final, provenance


def load_corpus(path: str | Path, policy: FilterPolicy | None = None) -> Corpus:
    """Parse a line-delimited record file and apply the filter policy.

    Malformed lines are skipped, logged with their line number, and counted
    in the provenance. An empty resulting corpus is an error.
    """
    policy = policy or FilterPolicy()
    records: list[PaperRecord] = []
    malformed_lines: list[int] = []
    n_lines = 0
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise CorpusError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            n_lines += 1
            try:
                records.append(_parse_record(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                log.warning("%s:%d: skipping malformed record: %s", path, lineno, exc)
                malformed_lines.append(lineno)

    final, rule_counts = filter_records(records, policy)
    if not final:
        raise CorpusError(f"{path}: no records survive filtering")
    provenance = {
        "input_records": n_lines,
        "malformed": len(malformed_lines),
        "malformed_lines": malformed_lines,
        **rule_counts,
    }
    counts = Counter(c for r in final for c in r.categories)
    return Corpus(records=final, category_counts=dict(counts), provenance=provenance)


def length_stats(corpus: Corpus) -> LengthStats:
    """Word-count statistics; population std, linearly interpolated quartiles."""
    if not corpus.records:
        raise CorpusError("empty corpus")
    wc = corpus.word_counts()
    q25, q50, q75 = np.percentile(wc, [25, 50, 75], method="linear")
    return LengthStats(
        n=len(wc),
        mean=float(wc.mean()),
        std=float(wc.std(ddof=0)),
        min=int(wc.min()),
        q25=float(q25),
        q50=float(q50),
        q75=float(q75),
        max=int(wc.max()),
    )


def category_histograms(corpus: Corpus) -> tuple[list[tuple[str, int]], dict[int, int]]:
    """Ranked category counts and the labels-per-paper multiplicity histogram."""
    if not corpus.records:
        raise CorpusError("empty corpus")
    counts = Counter(c for r in corpus.records for c in r.categories)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    multiplicity = Counter(len(r.categories) for r in corpus.records)
    return ranked, dict(sorted(multiplicity.items()))


def split(corpus: Corpus, seed: int) -> SplitIndex:
    """Seeded uniform split: ~10% test, ~18% val (20% of the remainder), rest train."""
    n = len(corpus.records)
    if n < 10:
        raise CorpusError(f"corpus too small to split ({n} records, need >= 10)")
    ids = corpus.ids()
    perm = np.random.default_rng(seed).permutation(n)
    n_test = math.ceil(0.10 * n)
    n_val = math.ceil(0.20 * (n - n_test))
    n_train = n - n_test - n_val
    if min(n_test, n_val, n_train) < 1:
        raise CorpusError(f"corpus too small to give each split a record (n={n})")
    shuffled = [ids[i] for i in perm]
    return SplitIndex(
        train_ids=shuffled[n_test + n_val :],
        val_ids=shuffled[n_test : n_test + n_val],
        test_ids=shuffled[:n_test],
        seed=seed,
    )


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the filtered corpus as a header line plus one record per line."""
    header = {
        "format": "atlas/1",
        "n": len(corpus.records),
        "category_counts": dict(sorted(corpus.category_counts.items())),
        "provenance": corpus.provenance,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True, separators=(",", ":")) + "\n")
        for r in corpus.records:
            fh.write(
                json.dumps(
                    {
                        "id": r.id,
                        "abstract": r.abstract,
                        "categories": list(r.categories),
                        "word_count": r.word_count,
                    },
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )


def load_atlas(path: str | Path) -> Corpus:
    """Read a file written by save_corpus without re-filtering."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"{path}: bad atlas header: {exc}") from exc
        if not isinstance(header, dict) or header.get("format") != "atlas/1":
            raise CorpusError(f"{path}: not an atlas/1 file")
        records = []
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                records.append(
                    PaperRecord(
                        id=obj["id"],
                        abstract=obj["abstract"],
                        categories=tuple(obj["categories"]),
                        word_count=int(obj["word_count"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusError(f"{path}:{lineno}: bad atlas record: {exc}") from exc
    if len(records) != header.get("n"):
        raise CorpusError(
            f"{path}: header declares {header.get('n')} records, found {len(records)}"
        )
    return Corpus(
        records=records,
        category_counts=dict(header.get("category_counts", {})),
        provenance=dict(header.get("provenance", {})),
    )


def split_to_json(split_index: SplitIndex) -> str:
    return json.dumps(
        {
            "seed": split_index.seed,
            "train_ids": split_index.train_ids,
            "val_ids": split_index.val_ids,
            "test_ids": split_index.test_ids,
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def split_from_json(text: str) -> SplitIndex:
    obj = json.loads(text)
    return SplitIndex(
        train_ids=list(obj["train_ids"]),
        val_ids=list(obj["val_ids"]),
        test_ids=list(obj["test_ids"]),
        seed=int(obj["seed"]),
    )
