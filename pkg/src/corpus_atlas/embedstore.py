"""EMB1 embedding exchange files.

The on-disk layout is byte-exact so that independently written files can be
compared by digest:

    bytes 0-7    ASCII magic ``EMBV0001``
    bytes 8-11   unsigned 32-bit little-endian header length H
    bytes 12..   H bytes of UTF-8 JSON:
                 {"n": int, "d": int, "dtype": "f32le", "variant": str,
                  "ids": [str, ...]}
    remainder    exactly n*d*4 bytes of little-endian float32, row-major
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"EMBV0001"
DTYPE_TAG = "f32le"
_HEADER_KEYS = ("n", "d", "dtype", "variant", "ids")


class Emb1Error(ValueError):
    """Malformed, inconsistent, or truncated EMB1 data."""


@dataclass
class EmbeddingMatrix:
    """Dense n x d float32 matrix with one unique id per row."""

    data: np.ndarray
    ids: list[str]
    variant_tag: str = ""

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float32)
        if self.data.ndim != 2:
            raise ValueError(f"embedding data must be 2-D, got shape {self.data.shape}")
        self.ids = [str(i) for i in self.ids]
        if len(self.ids) != self.data.shape[0]:
            raise ValueError(
                f"id count {len(self.ids)} does not match row count {self.data.shape[0]}"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("duplicate ids in embedding matrix")
        if self.data.size and not np.isfinite(self.data).all():
            raise ValueError("embedding matrix contains non-finite values")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass
class AlignResult:
    """Outcome of aligning an embedding matrix against a corpus."""

    matrix: EmbeddingMatrix
    missing_embedding: list[str] = field(default_factory=list)  # corpus ids with no row
    unmatched_rows: list[str] = field(default_factory=list)  # row ids not in the corpus


def write_embeddings(m: EmbeddingMatrix, path: str | Path) -> None:
    """Write `m` to `path` in EMB1 format. Read back with read_embeddings."""
    if m.data.size and not np.isfinite(m.data).all():
        raise ValueError("refusing to write non-finite embedding values")
    header = {
        "n": m.n,
        "d": m.d,
        "dtype": DTYPE_TAG,
        "variant": m.variant_tag,
        "ids": list(m.ids),
    }
    header_bytes = json.dumps(header, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    payload = np.ascontiguousarray(m.data, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        fh.write(payload)


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read an EMB1 file, validating magic, header consistency, and payload size."""
    raw = Path(path).read_bytes()
    if len(raw) < 12:
        raise Emb1Error(f"{path}: file too short for an EMB1 header ({len(raw)} bytes)")
    if raw[:8] != MAGIC:
        raise Emb1Error(f"{path}: bad magic {raw[:8]!r}, expected {MAGIC!r}")
    (header_len,) = struct.unpack("<I", raw[8:12])
    if len(raw) < 12 + header_len:
        raise Emb1Error(
            f"{path}: truncated header, expected {header_len} bytes, found {len(raw) - 12}"
        )
    try:
        header = json.loads(raw[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise Emb1Error(f"{path}: unparseable header: {exc}") from exc
    if not isinstance(header, dict) or any(k not in header for k in _HEADER_KEYS):
        raise Emb1Error(f"{path}: header missing required keys {_HEADER_KEYS}")
    n, d = header["n"], header["d"]
    if not (isinstance(n, int) and isinstance(d, int)) or n < 0 or d < 0:
        raise Emb1Error(f"{path}: invalid dimensions n={n!r} d={d!r}")
    if header["dtype"] != DTYPE_TAG:
        raise Emb1Error(f"{path}: unsupported dtype {header['dtype']!r}")
    ids = header["ids"]
    if not isinstance(ids, list) or len(ids) != n:
        raise Emb1Error(
            f"{path}: header declares n={n} but carries {len(ids) if isinstance(ids, list) else 'no'} ids"
        )
    payload = raw[12 + header_len :]
    expected = n * d * 4
    if len(payload) != expected:
        raise Emb1Error(
            f"{path}: payload length mismatch, expected {expected} bytes, found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()
    try:
        return EmbeddingMatrix(data=data, ids=ids, variant_tag=str(header["variant"]))
    except ValueError as exc:
        raise Emb1Error(f"{path}: {exc}") from exc


def align(corpus, m: EmbeddingMatrix) -> AlignResult:
    """Reorder rows of `m` to corpus record order, keeping ids present on both sides.

    Corpus records without an embedding row and rows without a corpus record
    are reported in the result rather than raising; zero overlap is an error.
    """
    row_of = {rid: i for i, rid in enumerate(m.ids)}
    keep_rows: list[int] = []
    keep_ids: list[str] = []
    missing: list[str] = []
    for rec in corpus.records:
        idx = row_of.get(rec.id)
        if idx is None:
            missing.append(rec.id)
        else:
            keep_rows.append(idx)
            keep_ids.append(rec.id)
    if not keep_rows:
        raise ValueError("no overlap between corpus ids and embedding ids")
    corpus_ids = {rec.id for rec in corpus.records}
    unmatched = [rid for rid in m.ids if rid not in corpus_ids]
    aligned = EmbeddingMatrix(
        data=m.data[np.asarray(keep_rows, dtype=np.intp)],
        ids=keep_ids,
        variant_tag=m.variant_tag,
    )
    return AlignResult(matrix=aligned, missing_embedding=missing, unmatched_rows=unmatched)
