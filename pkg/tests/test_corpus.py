"""Corpus I/O: EMB1 binary format, TSV fallback, JSONL metadata, joins."""

import struct

import numpy as np
import pytest

from openintent.corpus import (
    EmbeddingSet,
    Utterance,
    join,
    load_embeddings,
    load_utterances,
    split_views,
    write_embeddings,
    write_utterances,
)
from openintent.errors import DataError

from helpers import make_embs


def emb1_bytes(ids, matrix):
    """Hand-rolled EMB1 encoding, independent of write_embeddings."""
    matrix = np.asarray(matrix, dtype="<f4")
    out = [b"EMB1", struct.pack("<II", matrix.shape[0], matrix.shape[1])]
    for uid in ids:
        raw = uid.encode("utf-8")
        out.append(struct.pack("<H", len(raw)) + raw)
    out.append(matrix.tobytes(order="C"))
    return b"".join(out)


class TestEmb1:
    def test_load_matches_hand_encoding(self, tmp_path):
        ids = ["a", "b-long-id", "c"]
        mat = np.array([[1.0, 2.0], [0.5, -0.25], [3.0, 4.0]])
        p = tmp_path / "x.emb1"
        p.write_bytes(emb1_bytes(ids, mat))
        embs = load_embeddings(p)
        assert embs.ids == tuple(ids)
        np.testing.assert_array_equal(embs.matrix, mat)

    def test_write_then_load_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        # values quantize to f32 on disk; start from f32-exact values
        mat = rng.normal(size=(7, 5)).astype(np.float32).astype(np.float64)
        embs = make_embs([f"u{i}" for i in range(7)], mat)
        p = tmp_path / "x.emb1"
        write_embeddings(embs, p)
        back = load_embeddings(p)
        assert back.ids == embs.ids
        np.testing.assert_array_equal(back.matrix, embs.matrix)

    def test_write_is_canonical(self, tmp_path):
        """Same set written twice gives byte-identical files."""
        embs = make_embs(["a", "b"], [[1.0, 2.0], [3.0, 4.0]])
        p1, p2 = tmp_path / "a.emb1", tmp_path / "b.emb1"
        write_embeddings(embs, p1)
        write_embeddings(embs, p2)
        assert p1.read_bytes() == p2.read_bytes()
        assert p1.read_bytes() == emb1_bytes(["a", "b"], embs.matrix)

    def test_f32_quantization_on_disk(self, tmp_path):
        embs = make_embs(["a"], [[1.0 / 3.0]])
        p = tmp_path / "x.emb1"
        write_embeddings(embs, p)
        back = load_embeddings(p)
        assert back.matrix[0, 0] == float(np.float32(1.0 / 3.0))

    def test_non_ascii_ids(self, tmp_path):
        embs = make_embs(["uttérance-😀"], [[1.0, 2.0]])
        p = tmp_path / "x.emb1"
        write_embeddings(embs, p)
        assert load_embeddings(p).ids == ("uttérance-😀",)

    @pytest.mark.parametrize("cut", [3, 6, 10, 14])
    def test_truncation_rejected(self, tmp_path, cut):
        blob = emb1_bytes(["ab", "cd"], [[1.0, 2.0], [3.0, 4.0]])
        p = tmp_path / "x.emb1"
        p.write_bytes(blob[: len(blob) - cut])
        with pytest.raises(DataError, match="truncated"):
            load_embeddings(p)

    def test_trailing_bytes_rejected(self, tmp_path):
        p = tmp_path / "x.emb1"
        p.write_bytes(emb1_bytes(["a"], [[1.0]]) + b"\x00\x00")
        with pytest.raises(DataError, match="trailing"):
            load_embeddings(p)

    def test_zero_dimension_rejected(self, tmp_path):
        p = tmp_path / "x.emb1"
        p.write_bytes(b"EMB1" + struct.pack("<II", 0, 0))
        with pytest.raises(DataError, match="dimension is zero"):
            load_embeddings(p)

    def test_non_finite_payload_rejected(self, tmp_path):
        p = tmp_path / "x.emb1"
        p.write_bytes(emb1_bytes(["a", "b"], [[1.0], [np.nan]]))
        with pytest.raises(DataError, match="finite"):
            load_embeddings(p)

    def test_duplicate_ids_rejected(self, tmp_path):
        p = tmp_path / "x.emb1"
        p.write_bytes(emb1_bytes(["a", "a"], [[1.0], [2.0]]))
        with pytest.raises(DataError, match="duplicate"):
            load_embeddings(p)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_embeddings(tmp_path / "nope.emb1")


class TestTsv:
    def test_basic_parse(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("a\t1.0\t2.5\nb\t-3\t0\n")
        embs = load_embeddings(p)
        assert embs.ids == ("a", "b")
        np.testing.assert_array_equal(embs.matrix, [[1.0, 2.5], [-3.0, 0.0]])

    def test_blank_lines_skipped(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("a\t1.0\n\nb\t2.0\n")
        assert load_embeddings(p).n == 2

    def test_empty_file_cannot_infer_dimension(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("")
        with pytest.raises(DataError, match="cannot infer dimension"):
            load_embeddings(p)

    def test_ragged_rows_rejected(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("a\t1\t2\nb\t3\n")
        with pytest.raises(DataError, match="expected 2"):
            load_embeddings(p)

    def test_bad_float_reports_line(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("a\t1\nb\toops\n")
        with pytest.raises(DataError, match=":2:"):
            load_embeddings(p)

    def test_id_only_row_rejected(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("a\n")
        with pytest.raises(DataError, match="at least one value"):
            load_embeddings(p)


class TestEmbeddingSet:
    def test_matrix_not_writeable(self):
        embs = make_embs(["a"], [[1.0]])
        with pytest.raises(ValueError):
            embs.matrix[0, 0] = 2.0

    def test_row_and_index(self):
        embs = make_embs(["a", "b"], [[1.0, 2.0], [3.0, 4.0]])
        assert embs.index_of("b") == 1
        np.testing.assert_array_equal(embs.row("b"), [3.0, 4.0])
        with pytest.raises(DataError, match="unknown id"):
            embs.row("zz")

    def test_subset_preserves_requested_order(self):
        embs = make_embs(["a", "b", "c"], [[1.0], [2.0], [3.0]])
        sub = embs.subset(["c", "a"])
        assert sub.ids == ("c", "a")
        np.testing.assert_array_equal(sub.matrix, [[3.0], [1.0]])

    def test_shape_mismatch_rejected(self):
        with pytest.raises(DataError):
            make_embs(["a", "b"], [[1.0]])


class TestUtterances:
    def test_train_seen_requires_labels(self):
        with pytest.raises(DataError):
            Utterance(id="a", split="train_seen", intent="i")
        with pytest.raises(DataError):
            Utterance(id="a", split="train_seen", domain="d")

    def test_unknown_split_rejected(self):
        with pytest.raises(DataError, match="split"):
            Utterance(id="a", split="test")

    def test_jsonl_round_trip(self, tmp_path):
        utts = [
            Utterance(id="a", split="train_seen", intent="i", domain="d", text="hi"),
            Utterance(id="b", split="unlabeled"),
        ]
        p = tmp_path / "u.jsonl"
        write_utterances(utts, p)
        back = load_utterances(p)
        assert back == utts

    def test_duplicate_id_reports_line(self, tmp_path):
        p = tmp_path / "u.jsonl"
        p.write_text('{"id": "a", "split": "ood"}\n{"id": "a", "split": "ood"}\n')
        with pytest.raises(DataError, match=":2: duplicate id"):
            load_utterances(p)

    def test_invalid_json_reports_line(self, tmp_path):
        p = tmp_path / "u.jsonl"
        p.write_text('{"id": "a", "split": "ood"}\nnot json\n')
        with pytest.raises(DataError, match=":2: invalid JSON"):
            load_utterances(p)

    def test_missing_fields_rejected(self, tmp_path):
        p = tmp_path / "u.jsonl"
        p.write_text('{"split": "ood"}\n')
        with pytest.raises(DataError, match="missing id"):
            load_utterances(p)
        p.write_text('{"id": "a"}\n')
        with pytest.raises(DataError, match="missing split"):
            load_utterances(p)


class TestJoinAndSplit:
    def utts(self):
        return [
            Utterance(id="s1", split="train_seen", intent="i1", domain="d1"),
            Utterance(id="s2", split="train_seen", intent="i2", domain="d2"),
            Utterance(id="o1", split="ood", intent="oos"),
            Utterance(id="x1", split="unlabeled"),
            Utterance(id="v1", split="validation", intent="i1", domain="d1"),
        ]

    def embs(self, ids):
        return make_embs(ids, np.arange(len(ids) * 2, dtype=float).reshape(-1, 2))

    def test_join_orders_by_embedding_rows(self):
        ids = ["x1", "s2", "v1", "o1", "s1"]
        ds = join(self.utts(), self.embs(ids))
        assert list(ds.utterances) == ids

    def test_join_rejects_asymmetry(self):
        with pytest.raises(DataError, match="without embeddings"):
            join(self.utts(), self.embs(["s1", "s2", "o1", "x1"]))
        with pytest.raises(DataError, match="without utterances"):
            join(self.utts()[:4], self.embs(["s1", "s2", "o1", "x1", "v1"]))

    def test_split_views_partition(self):
        ids = ["s1", "s2", "o1", "x1", "v1"]
        d_t, ood, d_c = split_views(join(self.utts(), self.embs(ids)))
        assert d_t.ids == ("s1", "s2")
        assert d_t.validation_ids == ("v1",)
        assert ood.ids == ("o1",)
        assert d_c.ids == ("x1",)
        assert d_t.intents() == {"s1": "i1", "s2": "i2"}
        assert d_t.domains() == {"s1": "d1", "s2": "d2"}

    def test_seen_ood_vocabulary_overlap_rejected(self):
        utts = self.utts()
        utts[2] = Utterance(id="o1", split="ood", intent="i1")
        ds = join(utts, self.embs(["s1", "s2", "o1", "x1", "v1"]))
        with pytest.raises(DataError, match="overlap"):
            split_views(ds)

    def test_view_embeddings_subset(self):
        ids = ["s1", "s2", "o1", "x1", "v1"]
        ds = join(self.utts(), self.embs(ids))
        d_t, _, _ = split_views(ds)
        sub = d_t.embeddings()
        assert sub.ids == ("s1", "s2")
        np.testing.assert_array_equal(sub.matrix, ds.embeddings.matrix[:2])
