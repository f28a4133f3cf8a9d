import json
import struct

import numpy as np
import pytest

from corpus_atlas.embedstore import (
    MAGIC,
    AlignResult,
    Emb1Error,
    EmbeddingMatrix,
    align,
    read_embeddings,
    write_embeddings,
)

from conftest import make_corpus


def test_round_trip_2x3(tmp_path):
    m = EmbeddingMatrix(data=[[1, 2, 3], [4, 5, 6]], ids=["a", "b"], variant_tag="scibert-t")
    path = tmp_path / "m.emb1"
    write_embeddings(m, path)
    raw = path.read_bytes()
    (header_len,) = struct.unpack("<I", raw[8:12])
    assert len(raw) == 12 + header_len + 24  # 2*3*4 payload bytes
    back = read_embeddings(path)
    assert back.ids == ["a", "b"]
    assert back.variant_tag == "scibert-t"
    assert np.array_equal(back.data, m.data)


def test_round_trip_empty(tmp_path):
    m = EmbeddingMatrix(data=np.zeros((0, 768), dtype=np.float32), ids=[], variant_tag="x")
    path = tmp_path / "empty.emb1"
    write_embeddings(m, path)
    back = read_embeddings(path)
    assert back.n == 0
    assert back.d == 768
    assert back.ids == []


def test_round_trip_768_dims(tmp_path):
    rng = np.random.default_rng(0)
    m = EmbeddingMatrix(data=rng.normal(size=(3, 768)).astype(np.float32),
                        ids=["p1", "p2", "p3"], variant_tag="ft-scibert-cls")
    path = tmp_path / "m.emb1"
    write_embeddings(m, path)
    assert read_embeddings(path).d == 768


def test_round_trip_random_matrices_bit_exact(tmp_path):
    rng = np.random.default_rng(42)
    for trial in range(25):
        n = int(rng.integers(0, 12))
        d = int(rng.integers(1, 9))
        data = rng.normal(scale=float(rng.uniform(1e-6, 1e6)), size=(n, d)).astype(np.float32)
        m = EmbeddingMatrix(data=data, ids=[f"id{i}" for i in range(n)], variant_tag=f"v{trial}")
        path = tmp_path / f"t{trial}.emb1"
        write_embeddings(m, path)
        back = read_embeddings(path)
        assert back.data.tobytes() == m.data.tobytes()
        assert back.ids == m.ids
        assert back.variant_tag == m.variant_tag


def test_nan_rejected_no_file(tmp_path):
    path = tmp_path / "bad.emb1"
    with pytest.raises(ValueError):
        EmbeddingMatrix(data=[[np.nan, 0.0]], ids=["a"])
    # bypass the constructor check by mutating afterwards
    m = EmbeddingMatrix(data=[[1.0, 2.0]], ids=["a"])
    m.data[0, 0] = np.nan
    with pytest.raises(ValueError):
        write_embeddings(m, path)
    assert not path.exists()


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError, match="duplicate"):
        EmbeddingMatrix(data=np.zeros((2, 2)), ids=["a", "a"])


def test_truncated_payload_reports_byte_counts(tmp_path):
    m = EmbeddingMatrix(data=np.ones((2, 3), dtype=np.float32), ids=["a", "b"])
    path = tmp_path / "trunc.emb1"
    write_embeddings(m, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(Emb1Error, match=r"expected 24 bytes, found 19"):
        read_embeddings(path)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.emb1"
    path.write_bytes(b"NOTEMB01" + b"\x00" * 32)
    with pytest.raises(Emb1Error, match="magic"):
        read_embeddings(path)


def test_header_id_count_mismatch(tmp_path):
    header = json.dumps(
        {"n": 2, "d": 1, "dtype": "f32le", "variant": "", "ids": ["a", "b", "c"]},
        separators=(",", ":"),
    ).encode()
    payload = np.zeros(2, dtype="<f4").tobytes()
    path = tmp_path / "bad.emb1"
    path.write_bytes(MAGIC + struct.pack("<I", len(header)) + header + payload)
    with pytest.raises(Emb1Error, match="ids"):
        read_embeddings(path)


def test_file_with_duplicate_ids(tmp_path):
    header = json.dumps(
        {"n": 2, "d": 1, "dtype": "f32le", "variant": "", "ids": ["a", "a"]},
        separators=(",", ":"),
    ).encode()
    payload = np.zeros(2, dtype="<f4").tobytes()
    path = tmp_path / "dup.emb1"
    path.write_bytes(MAGIC + struct.pack("<I", len(header)) + header + payload)
    with pytest.raises(Emb1Error, match="duplicate"):
        read_embeddings(path)


def test_align_reorders_and_reports():
    corpus = make_corpus([("a", ["x"]), ("b", ["x"]), ("c", ["x"])])
    m = EmbeddingMatrix(data=[[3.0, 3.0], [1.0, 1.0]], ids=["c", "a"])
    res = align(corpus, m)
    assert res.matrix.ids == ["a", "c"]
    assert np.array_equal(res.matrix.data, np.array([[1, 1], [3, 3]], dtype=np.float32))
    assert res.missing_embedding == ["b"]
    assert res.unmatched_rows == []


def test_align_identity():
    corpus = make_corpus([("a", ["x"]), ("b", ["x"])])
    m = EmbeddingMatrix(data=[[1.0], [2.0]], ids=["a", "b"])
    res = align(corpus, m)
    assert res.matrix.ids == m.ids
    assert np.array_equal(res.matrix.data, m.data)
    assert not res.missing_embedding and not res.unmatched_rows


def test_align_disjoint_errors():
    corpus = make_corpus([("a", ["x"])])
    m = EmbeddingMatrix(data=[[1.0]], ids=["z"])
    with pytest.raises(ValueError, match="overlap"):
        align(corpus, m)


def test_align_idempotent_and_order_stable():
    corpus = make_corpus([("a", ["x"]), ("b", ["x"]), ("c", ["x"]), ("d", ["x"])])
    rng = np.random.default_rng(3)
    m = EmbeddingMatrix(data=rng.normal(size=(3, 2)), ids=["d", "b", "a"])
    once = align(corpus, m)
    twice = align(corpus, once.matrix)
    assert twice.matrix.ids == once.matrix.ids == ["a", "b", "d"]
    assert np.array_equal(twice.matrix.data, once.matrix.data)
    assert isinstance(once, AlignResult)
