import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guardmine.corpus import (
    ClassStat,
    FailureClass,
    TransactionRecord,
    classify_failure,
    cochran_sample_size,
    corpus_statistics,
    load_corpus,
    out_of_gas_match,
)
from guardmine.errors import CorpusError, RecordParseError
from guardmine.extract import StatementKind


def make_record(**overrides) -> dict:
    base = {
        "hash": "0x" + "11" * 32,
        "failure_reason": "execution reverted",
        "block_number": 20100158,
        "from_address": "0x" + "aa" * 20,
        "to_address": "0x" + "bb" * 20,
        "tx_input": "0xa9059cbb",
        "gas": 21000,
        "gas_price": 12,
        "gas_limit": 30000,
        "value": 0,
        "tx_index": 3,
        "failure_message": None,
        "failure_invariant": None,
        "failure_file": None,
        "failure_function": None,
        "failure_contract": None,
        "timestamp": 1718400000,
    }
    base.update(overrides)
    return base


def write_corpus(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


class TestLoadCorpus:
    def test_empty_file_gives_empty_sequence(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_corpus(path) == []

    def test_single_record_round_trips(self, tmp_path):
        row = make_record(
            failure_invariant="balanceOf(from) >= amount",
            failure_file="contracts/Token.sol",
            failure_function="transfer",
            failure_contract="0x" + "bb" * 20,
            failure_message="insufficient balance",
        )
        path = tmp_path / "corpus.jsonl"
        write_corpus(path, [row])
        (record,) = load_corpus(path)
        for field, expected in row.items():
            assert getattr(record, field) == expected

    def test_duplicate_hash_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_corpus(path, [make_record(), make_record()])
        with pytest.raises(CorpusError, match="0x" + "11" * 32):
            load_corpus(path)

    def test_unknown_field_rejected_with_line_number(self, tmp_path):
        row = make_record()
        row["surprise"] = 1
        path = tmp_path / "corpus.jsonl"
        write_corpus(path, [make_record(hash="0x" + "22" * 32), row])
        with pytest.raises(RecordParseError, match="line 2"):
            load_corpus(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        path.write_text(json.dumps(make_record()) + "\n{not json\n", encoding="utf-8")
        with pytest.raises(RecordParseError, match="line 2"):
            load_corpus(path)

    def test_gas_above_limit_rejected(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_corpus(path, [make_record(gas=50000, gas_limit=30000)])
        with pytest.raises(RecordParseError, match="gas"):
            load_corpus(path)

    def test_invariant_requires_location_fields(self):
        with pytest.raises(ValueError, match="failure_file"):
            TransactionRecord(**make_record(failure_invariant="x > 0"))


class TestClassifyFailure:
    def test_out_of_gas_message(self):
        record = TransactionRecord(**make_record(failure_message="Out of gas"))
        assert classify_failure(record) is FailureClass.OUT_OF_GAS

    def test_out_of_gas_reason_relaxed_case(self):
        record = TransactionRecord(**make_record(failure_reason="OUT OF GAS"))
        assert classify_failure(record) is FailureClass.OUT_OF_GAS
        assert out_of_gas_match(record) == "relaxed"

    def test_arithmetic_panic(self):
        record = TransactionRecord(
            **make_record(failure_message="panic: arithmetic underflow or overflow")
        )
        assert classify_failure(record) is FailureClass.ARITHMETIC

    def test_division_by_zero_is_arithmetic(self):
        record = TransactionRecord(**make_record(failure_message="Division by zero"))
        assert classify_failure(record) is FailureClass.ARITHMETIC

    def test_no_source_entry(self):
        record = TransactionRecord(**make_record())
        assert classify_failure(record, has_source=False) is FailureClass.NO_SOURCE_CODE

    def test_source_without_invariant_is_extraction_failure(self):
        record = TransactionRecord(**make_record())
        assert classify_failure(record, has_source=True) is FailureClass.EXTRACTION_FAILURE

    @pytest.mark.parametrize(
        "kind,expected",
        [
            (StatementKind.REQUIRE, FailureClass.INVARIANT_REQUIRE),
            (StatementKind.ASSERT, FailureClass.INVARIANT_ASSERT),
            (StatementKind.IF_REVERT, FailureClass.INVARIANT_IF_REVERT),
        ],
    )
    def test_invariant_kinds(self, kind, expected):
        record = TransactionRecord(
            **make_record(
                failure_invariant="x > 0",
                failure_file="contracts/A.sol",
                failure_function="f",
                failure_contract="0x" + "bb" * 20,
            )
        )
        assert classify_failure(record, has_source=True, statement_kind=kind) is expected

    def test_classification_is_deterministic(self):
        record = TransactionRecord(**make_record(failure_message="Out of gas"))
        assert classify_failure(record) is classify_failure(record)


class TestCorpusStatistics:
    def test_large_corpus_out_of_gas_share(self):
        classes = [FailureClass.OUT_OF_GAS] * 2420 + [FailureClass.NO_SOURCE_CODE] * 17580
        stats = corpus_statistics(classes)
        assert stats[FailureClass.OUT_OF_GAS] == ClassStat(2420, 12.1)

    def test_single_class(self):
        stats = corpus_statistics([FailureClass.NO_SOURCE_CODE] * 10)
        assert stats[FailureClass.NO_SOURCE_CODE] == ClassStat(10, 100.0)
        assert stats[FailureClass.OUT_OF_GAS] == ClassStat(0, 0.0)

    def test_hand_tally(self):
        classes = [FailureClass.OUT_OF_GAS, FailureClass.ARITHMETIC, FailureClass.ARITHMETIC]
        stats = corpus_statistics(classes)
        assert stats[FailureClass.OUT_OF_GAS] == ClassStat(1, 33.3)
        assert stats[FailureClass.ARITHMETIC] == ClassStat(2, 66.7)

    def test_empty_corpus_percentages_undefined(self):
        stats = corpus_statistics([])
        assert all(s.count == 0 and s.percent is None for s in stats.values())

    @given(st.lists(st.sampled_from(list(FailureClass)), max_size=300))
    def test_counts_sum_to_corpus_size(self, classes):
        stats = corpus_statistics(classes)
        assert sum(s.count for s in stats.values()) == len(classes)


class TestCochran:
    def test_one_percent_margin_minimum(self):
        assert cochran_sample_size(0.95, 0.01, 0.5) == 9604

    def test_five_percent_margin(self):
        # 1.96^2 * 0.25 / 0.0025 = 384.16, ceiling
        assert cochran_sample_size(0.95, 0.05, 0.5) == 385

    def test_evaluation_sample_adequacy(self):
        assert 20000 > cochran_sample_size(0.95, 0.01, 0.5)

    @pytest.mark.parametrize("bad", [{"confidence": 0.8}, {"margin": 0.0}, {"margin": 1.0}, {"p": 0.0}, {"p": 1.5}])
    def test_out_of_range_arguments(self, bad):
        kwargs = {"confidence": 0.95, "margin": 0.01, "p": 0.5}
        kwargs.update(bad)
        with pytest.raises(ValueError):
            cochran_sample_size(**kwargs)

    @settings(max_examples=200)
    @given(
        margin_a=st.floats(0.001, 0.5),
        shrink=st.floats(0.1, 1.0),
        p=st.floats(0.01, 0.99),
    )
    def test_monotone_in_margin(self, margin_a, shrink, p):
        margin_b = margin_a * shrink  # margin_b <= margin_a
        assert cochran_sample_size(0.95, margin_b, p) >= cochran_sample_size(0.95, margin_a, p)

    @settings(max_examples=200)
    @given(p=st.floats(0.01, 0.99))
    def test_half_maximizes_over_p(self, p):
        assert cochran_sample_size(0.95, 0.05, 0.5) >= cochran_sample_size(0.95, 0.05, p)
