import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from retrobench.bpe import (
    MergeTable, decode, encode, merge_vocab, read_merge_table, train,
    write_merge_table,
)
from retrobench.elements import all_symbols


def test_first_merge_on_reference_corpus():
    # pair counts: (C,C) x3 beats (C,O) x2 and (C,N) x1
    table = train(["CCO", "CCO", "CCN"], 1)
    assert table.merges == (("C", "C"),)


def test_zero_merges_vocab_is_charset_plus_elements():
    table = train(["CCO"], 0)
    assert table.merges == ()
    assert {"C", "O"} <= table.vocab
    assert set(all_symbols()) <= table.vocab


def test_training_is_deterministic():
    corpus = ["c1ccccc1", "CCO", "CC(=O)O", "ClCCl"]
    assert train(corpus, 8) == train(corpus, 8)


def test_greedy_prefix_property():
    corpus = ["c1ccccc1", "CCO", "CC(=O)O", "ClCCl", "CCN", "CCCC"]
    small = train(corpus, 3)
    large = train(corpus, 9)
    assert large.merges[:3] == small.merges


def test_encode_applies_merges_in_order():
    table = train(["CCO", "CCO", "CCN"], 1)
    assert encode("CCCC", table) == ["CC", "CC"]


def test_two_letter_elements_are_single_tokens():
    table = train(["CCO"], 0)
    assert encode("Cl", table) == ["Cl"]
    assert encode("ClCCl", table) == ["Cl", "C", "Cl"]
    for symbol in all_symbols():
        assert encode(symbol, table) == [symbol], symbol


def test_round_trip_smiles():
    table = train(["CCO", "c1ccccc1"], 4)
    for text in ("c1ccccc1", "CN.O=[N+]([O-])c1cnc(Cl)nc1Cl", "F/C=C\\F"):
        assert decode(encode(text, table), table) == text


@settings(max_examples=300, deadline=None)
@given(st.text(max_size=40))
def test_round_trip_arbitrary_utf8(text):
    table = train(["CCO", "CCN"], 2)
    assert decode(encode(text, table), table) == text


def test_compression_monotone_in_merge_count():
    corpus = ["c1ccccc1O", "c1ccccc1N", "CCOCC", "CC(=O)OCC"] * 3
    probe = "CC(=O)OCCc1ccccc1"
    lengths = []
    for n in (0, 2, 4, 8, 16, 32):
        table = train(corpus, n)
        lengths.append(len(encode(probe, table)))
    assert lengths == sorted(lengths, reverse=True)


def test_merge_vocab_reports_deltas():
    table = train(["CCO"], 2)
    merged, report = merge_vocab(set(), table)
    assert merged == set(table.vocab)
    assert report["added_tokens"] == len(table.vocab)
    merged2, report2 = merge_vocab(merged, table)
    assert merged2 == merged
    assert report2["added_tokens"] == 0


def test_merge_table_requires_all_elements():
    with pytest.raises(ValueError, match="missing"):
        MergeTable(("C", "N"), (), frozenset())


def test_negative_merges_rejected():
    with pytest.raises(ValueError):
        train(["CCO"], -1)


def test_file_round_trip(tmp_path):
    table = train(["c1ccccc1", "CCO", "ClCCl"], 6)
    path = tmp_path / "merges.txt"
    write_merge_table(table, path)
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == "retrobench-bpe v1"
    loaded = read_merge_table(path)
    assert loaded.merges == table.merges
    assert loaded.forced_tokens == table.forced_tokens
    for text in ("CCOc1ccccc1", "ClCCl"):
        assert encode(text, loaded) == encode(text, table)
