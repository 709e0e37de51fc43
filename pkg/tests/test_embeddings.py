"""PFEMB store construction, validation, and round-trip guarantees."""

import random

import numpy as np
import pytest

from idiorank.embeddings import EmbeddingStore, load_embeddings, write_embeddings
from idiorank.errors import FormatError, MissingEmbedding


def test_store_validates_dimension_and_finiteness():
    store = EmbeddingStore(4, {"a": [1, 2, 3, 4], "b": [0, 0, 0, 1]})
    assert len(store) == 2
    assert store.dimension == 4
    with pytest.raises(FormatError):
        EmbeddingStore(4, {"short": [1, 2, 3]})
    with pytest.raises(FormatError):
        EmbeddingStore(2, {"nan": [1, float("nan")]})
    with pytest.raises(FormatError):
        EmbeddingStore(2, {"inf": [1, float("inf")]})
    with pytest.raises(FormatError):
        EmbeddingStore(0, {})


def test_store_rejects_keys_with_tab_or_newline():
    with pytest.raises(FormatError):
        EmbeddingStore(1, {"bad\tkey": [1.0]})
    with pytest.raises(FormatError):
        EmbeddingStore(1, {"bad\nkey": [1.0]})


def test_getitem_raises_missing_embedding():
    store = EmbeddingStore(2, {"a": [1.0, 0.0]})
    assert store.get("nope") is None
    with pytest.raises(MissingEmbedding) as err:
        store["nope"]
    assert "nope" in str(err.value)


def test_basic_decode(tmp_path):
    path = tmp_path / "t.pfemb"
    path.write_text("PFEMB 1 4 2\na\t1.0 0.0 0.5 -2.0\nb\t0.25 1e-05 3.0 4.0\n")
    store = load_embeddings(path)
    assert len(store) == 2
    assert store.dimension == 4
    np.testing.assert_array_equal(store["a"], [1.0, 0.0, 0.5, -2.0])
    np.testing.assert_array_equal(store["b"], [0.25, 1e-05, 3.0, 4.0])


def test_record_length_mismatch_rejected(tmp_path):
    path = tmp_path / "t.pfemb"
    path.write_text("PFEMB 1 4 1\na\t1.0 2.0 3.0\n")
    with pytest.raises(FormatError):
        load_embeddings(path)


@pytest.mark.parametrize(
    "content",
    [
        "",
        "NOTPF 1 4 0\n",
        "PFEMB 2 4 0\n",
        "PFEMB 1 x 0\n",
        "PFEMB 1 4 5\n",  # count disagrees with records
        "PFEMB 1 2 1\na\t1.0 nan\n",
        "PFEMB 1 2 1\na 1.0 2.0\n",  # no tab separator
        "PFEMB 1 2 2\na\t1.0 2.0\na\t3.0 4.0\n",  # duplicate key
    ],
)
def test_malformed_files_rejected(tmp_path, content):
    path = tmp_path / "bad.pfemb"
    path.write_text(content)
    with pytest.raises(FormatError):
        load_embeddings(path)


def test_empty_store_writes_header_only(tmp_path):
    path = tmp_path / "empty.pfemb"
    write_embeddings(EmbeddingStore(8, {}), path)
    assert path.read_text() == "PFEMB 1 8 0\n"


def test_singleton_round_trip(tmp_path):
    path = tmp_path / "one.pfemb"
    store = EmbeddingStore(2, {"a": [1.0, 0.0]})
    write_embeddings(store, path)
    assert load_embeddings(path) == store


def _random_store(rng: random.Random, dim: int) -> EmbeddingStore:
    keys = [f"key-{rng.randrange(10**9)}-{i}" for i in range(rng.randint(0, 12))]
    entries = {}
    for key in keys:
        # Mix magnitudes so shortest-repr serialization is exercised hard.
        entries[key] = [
            rng.choice([1.0, -1.0, 0.0, rng.uniform(-1, 1), rng.uniform(-1, 1) * 10 ** rng.randint(-8, 8)])
            for _ in range(dim)
        ]
    return EmbeddingStore(dim, entries)


def test_load_write_round_trip_random_stores(tmp_path):
    rng = random.Random(1234)
    for trial in range(30):
        dim = rng.randint(1, 9)
        store = _random_store(rng, dim)
        path = tmp_path / f"rt{trial}.pfemb"
        write_embeddings(store, path)
        loaded = load_embeddings(path)
        assert loaded == store, "load(write(store)) must reproduce the store exactly"
        # write(load(file)) reproduces the canonical bytes
        path2 = tmp_path / f"rt{trial}b.pfemb"
        write_embeddings(loaded, path2)
        assert path2.read_bytes() == path.read_bytes()


def test_canonicalization_ignores_insert_order(tmp_path):
    rng = random.Random(99)
    base = {f"k{i}": [float(i), float(-i)] for i in range(10)}
    reference = None
    for trial in range(5):
        items = list(base.items())
        rng.shuffle(items)
        store = EmbeddingStore(2, dict(items))
        path = tmp_path / f"c{trial}.pfemb"
        write_embeddings(store, path)
        data = path.read_bytes()
        if reference is None:
            reference = data
        assert data == reference, "equal maps must serialize to identical bytes"


def test_keys_sorted_by_byte_value(tmp_path):
    # "Z" < "a" in byte order even though "a" < "Z" case-insensitively.
    store = EmbeddingStore(1, {"a": [1.0], "Z": [2.0], "ké": [3.0], "k1": [4.0]})
    path = tmp_path / "sorted.pfemb"
    write_embeddings(store, path)
    keys = [line.split("\t")[0] for line in path.read_text().splitlines()[1:]]
    assert keys == sorted(keys, key=lambda k: k.encode("utf-8"))
