import json

import numpy as np
import pytest

from embedder.cli import main
from embedder.corpus_io import Invariant, read_invariants, read_pairs, write_vectors
from embedder.encode import EmbedJob, encode, load_encoder, similarity_margin
from embedder.model import build_vocabulary
from embedder.train import fine_tune, split_pairs, train_contrastive

from conftest import write_invariants


def read_vector_file(path):
    lines = path.read_text().splitlines()
    n, d = map(int, lines[0].split())
    ids = [line.split()[0] for line in lines[1:]]
    rows = np.array([[float(x) for x in line.split()[1:]] for line in lines[1:]])
    assert rows.shape == (n, d)
    return ids, rows


class TestViews:
    def test_predicate_view(self):
        inv = Invariant("a", "x > 0", "too small")
        assert inv.view_text("predicate") == "x > 0"

    def test_message_view_joins(self):
        inv = Invariant("a", "x > 0", "too small")
        assert inv.view_text("message") == "x > 0 :: too small"

    def test_message_view_without_message(self):
        assert Invariant("a", "x > 0", None).view_text("message") == "x > 0"

    def test_unknown_view_rejected(self):
        with pytest.raises(ValueError):
            Invariant("a", "x", None).view_text("other")


class TestVocabulary:
    def test_covers_corpus_words_and_characters(self):
        vocab = build_vocabulary(["balanceof(from) >= amount"])
        for token in ("balanceof", "(", ")", ">", "=", "amount", "##f"):
            assert token in vocab

    def test_special_tokens_lead(self):
        vocab = build_vocabulary(["x > 0"])
        assert vocab["[PAD]"] == 0 and vocab["[UNK]"] == 1


class TestEncode:
    def test_rows_unit_norm(self, family_corpus, tmp_path):
        out = tmp_path / "vec.txt"
        encode(EmbedJob(family_corpus["invariants"], family_corpus["model"], out))
        _, rows = read_vector_file(out)
        np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-6)

    def test_duplicate_texts_identical_vectors(self, family_corpus, tmp_path):
        inv = tmp_path / "dups.jsonl"
        write_invariants(inv, ["!paused", "!paused", "balanceof(a) >= b"])
        out = tmp_path / "vec.txt"
        encode(EmbedJob(inv, family_corpus["model"], out))
        _, rows = read_vector_file(out)
        np.testing.assert_array_equal(rows[0], rows[1])
        assert float(rows[0] @ rows[1]) == pytest.approx(1.0, abs=1e-12)

    def test_deterministic_across_runs(self, family_corpus, tmp_path):
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        encode(EmbedJob(family_corpus["invariants"], family_corpus["model"], a, seed=3))
        encode(EmbedJob(family_corpus["invariants"], family_corpus["model"], b, seed=3))
        assert a.read_text() == b.read_text()

    def test_permutation_equivariant(self, family_corpus, tmp_path):
        texts = family_corpus["texts"][:6]
        inv_a = tmp_path / "a.jsonl"
        inv_b = tmp_path / "b.jsonl"
        write_invariants(inv_a, texts)
        write_invariants(inv_b, texts[::-1])
        out_a, out_b = tmp_path / "a.txt", tmp_path / "b.txt"
        encode(EmbedJob(inv_a, family_corpus["model"], out_a))
        encode(EmbedJob(inv_b, family_corpus["model"], out_b))
        _, rows_a = read_vector_file(out_a)
        _, rows_b = read_vector_file(out_b)
        np.testing.assert_array_equal(rows_b, rows_a[::-1])

    def test_overlong_text_truncates_with_warning(self, family_corpus, tmp_path):
        長 = "x > 0 && " * 200 + "y > 0"
        inv = tmp_path / "long.jsonl"
        write_invariants(inv, [長, "y > 0"])
        out = tmp_path / "vec.txt"
        with pytest.warns(UserWarning, match="truncated"):
            encode(EmbedJob(inv, family_corpus["model"], out))
        _, rows = read_vector_file(out)
        np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-6)

    def test_message_view_changes_vectors(self, family_corpus, tmp_path):
        inv = tmp_path / "msg.jsonl"
        write_invariants(
            inv,
            ["x > 0", "y > 0"],
            messages=["value too small", None],
        )
        plain, with_msg = tmp_path / "p.txt", tmp_path / "m.txt"
        encode(EmbedJob(inv, family_corpus["model"], plain, view="predicate"))
        encode(EmbedJob(inv, family_corpus["model"], with_msg, view="message"))
        _, rows_p = read_vector_file(plain)
        _, rows_m = read_vector_file(with_msg)
        # the message text moves the vector far; the no-message row only
        # sees padding-composition float noise from the changed batch
        assert np.linalg.norm(rows_p[0] - rows_m[0]) > 1e-3
        np.testing.assert_allclose(rows_m[1], rows_p[1], atol=1e-6)

    def test_empty_input_rejected(self, family_corpus, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("", encoding="utf-8")
        with pytest.raises(ValueError):
            encode(EmbedJob(empty, family_corpus["model"], tmp_path / "v.txt"))


class TestFineTune:
    def test_empty_class_refused(self, family_corpus, tmp_path):
        pairs = tmp_path / "onesided.jsonl"
        pairs.write_text(
            json.dumps({"id_a": "inv0000", "id_b": "inv0001", "label": "Positive", "similarity": 0.9})
            + "\n",
            encoding="utf-8",
        )
        with pytest.raises(ValueError, match="empty pair class"):
            fine_tune(
                family_corpus["model"],
                family_corpus["invariants"],
                pairs,
                tmp_path / "tuned",
            )

    def test_zero_epochs_is_identity(self, family_corpus, tmp_path):
        tuned = fine_tune(
            family_corpus["model"],
            family_corpus["invariants"],
            family_corpus["pairs"],
            tmp_path / "tuned",
            epochs=0,
        )
        base_out, tuned_out = tmp_path / "base.txt", tmp_path / "tuned.txt"
        encode(EmbedJob(family_corpus["invariants"], family_corpus["model"], base_out))
        encode(EmbedJob(family_corpus["invariants"], tuned, tuned_out))
        assert base_out.read_text() == tuned_out.read_text()

    def test_unknown_pair_ids_rejected(self, family_corpus, tmp_path):
        pairs = tmp_path / "ghost.jsonl"
        pairs.write_text(
            json.dumps({"id_a": "ghost-a", "id_b": "ghost-b", "label": "Positive", "similarity": 0.9})
            + "\n"
            + json.dumps({"id_a": "inv0000", "id_b": "inv0001", "label": "Negative", "similarity": 0.1})
            + "\n",
            encoding="utf-8",
        )
        with pytest.raises(ValueError, match="unknown invariant ids"):
            fine_tune(
                family_corpus["model"],
                family_corpus["invariants"],
                pairs,
                tmp_path / "tuned",
            )

    def test_split_is_per_class_and_deterministic(self, family_corpus):
        pairs = read_pairs(family_corpus["pairs"])
        train_a, held_a = split_pairs(pairs, 0.25, seed=5)
        train_b, held_b = split_pairs(pairs, 0.25, seed=5)
        assert train_a == train_b and held_a == held_b
        assert len(held_a) == 50 and len(train_a) == 150
        assert sum(p.label == "Positive" for p in held_a) == 25

    def test_margin_reproducible_to_metric_level(self, family_corpus, tmp_path):
        invariants = read_invariants(family_corpus["invariants"])
        pairs = read_pairs(family_corpus["pairs"])
        train, held = split_pairs(pairs, 0.25, seed=5)
        margins = []
        for run in range(2):
            tokenizer, model = load_encoder(family_corpus["model"])
            train_contrastive(model, tokenizer, invariants, train, "predicate", 1, seed=11)
            margins.append(similarity_margin(model, tokenizer, invariants, held, "predicate"))
        assert margins[0] == pytest.approx(margins[1], abs=1e-6)


class TestCli:
    def test_margin_command(self, family_corpus, capsys):
        code = main(
            [
                "margin",
                "--invariants", str(family_corpus["invariants"]),
                "--pairs", str(family_corpus["pairs"]),
                "--model", str(family_corpus["model"]),
            ]
        )
        assert code == 0
        float(capsys.readouterr().out.strip())

    def test_encode_with_inline_finetune(self, family_corpus, tmp_path, capsys):
        out = tmp_path / "tuned_vectors.txt"
        code = main(
            [
                "encode",
                "--invariants", str(family_corpus["invariants"]),
                "--model", str(family_corpus["model"]),
                "--fine-tune-pairs", str(family_corpus["pairs"]),
                "--epochs", "1",
                "--seed", "11",
                "--out", str(out),
            ]
        )
        assert code == 0
        _, rows = read_vector_file(out)
        np.testing.assert_allclose(np.linalg.norm(rows, axis=1), 1.0, atol=1e-6)

    def test_missing_file_is_error(self, family_corpus, tmp_path, capsys):
        code = main(
            [
                "encode",
                "--invariants", "missing.jsonl",
                "--model", str(family_corpus["model"]),
                "--out", str(tmp_path / "v.txt"),
            ]
        )
        assert code == 1


class TestVectorWriter:
    def test_shape_validation(self, tmp_path):
        with pytest.raises(ValueError):
            write_vectors(["a", "b"], np.zeros((3, 2)), tmp_path / "v.txt")
