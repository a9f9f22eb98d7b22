import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ltswap.errors import ConfigError
from ltswap.ingest import (
    RawCorpus,
    ingest_corpus,
    load_dictionary,
    pad_symbols,
    segment,
    sentences_with,
    shortest_sentence_with,
)


class TestPadSymbols:
    def test_symbols_and_figures_get_spaces(self):
        assert pad_symbols("Jeremy's 59th birthday.").lower() == "jeremy ' s 5 9 th birthday . "

    def test_plain_words_untouched(self):
        assert pad_symbols("hello world") == "hello world"

    def test_single_comma(self):
        assert pad_symbols("a,b") == "a , b"

    def test_newlines_survive(self):
        assert pad_symbols("a.\nb") == "a . \nb"

    @given(st.text(max_size=200))
    @settings(max_examples=200)
    def test_idempotent(self, text):
        once = pad_symbols(text)
        assert pad_symbols(once) == once

    @given(st.text(alphabet=st.characters(whitelist_categories=("Lu", "Ll")), max_size=50))
    def test_letters_pass_through(self, text):
        assert pad_symbols(text) == text


class TestSegment:
    def test_two_sentences(self):
        refs = segment(" the cat . the dog . ")
        assert len(refs) == 2
        assert refs[0].tokens == ("the", "cat", ".")
        assert refs[1].tokens == ("the", "dog", ".")

    def test_single_token(self):
        refs = segment("hi")
        assert len(refs) == 1
        assert refs[0].tokens == ("hi",)

    def test_newline_boundary(self):
        refs = segment("one two\nthree")
        assert [r.tokens for r in refs] == [("one", "two"), ("three",)]

    def test_twelve_line_fixture(self):
        text = "\n".join(f"line {i} ." for i in range(12))
        assert len(segment(pad_symbols(text))) == 12

    def test_ids_sequential(self):
        refs = segment(" a . b . c . ", start_id=5)
        assert [r.sentence_id for r in refs] == [5, 6, 7]

    def test_empty(self):
        assert segment("") == []


class TestVocabAndIndex:
    def _corpus(self):
        text = "the cat sat .\nthe cat ran .\nthe cat hid .\na dog hid .\n"
        return ingest_corpus(RawCorpus(documents=(text,), source_ids=("t",)))

    def test_counts(self):
        result = self._corpus()
        assert result.vocab.count("cat") == 3
        assert result.vocab.count("dog") == 1
        assert result.vocab.count("zzz") == 0

    def test_total_tokens_is_sum(self):
        vocab = self._corpus().vocab
        assert sum(vocab.entries.values()) == vocab.total_tokens

    def test_planted_counts_exact(self):
        text = "a a a b .\na a c .\n"
        res = ingest_corpus(RawCorpus(documents=(text,), source_ids=("t",)))
        assert res.vocab.count("a") == 5
        assert res.vocab.count("b") == 1

    def test_index_returns_exact_ids(self):
        res = self._corpus()
        refs = sentences_with("hid", res.index, res.sentences)
        assert [r.sentence_id for r in refs] == [2, 3]

    def test_absent_word_empty(self):
        res = self._corpus()
        assert sentences_with("zzz", res.index, res.sentences) == []

    def test_every_vocab_word_indexed_with_matching_count(self):
        res = self._corpus()
        for word, count in res.vocab.entries.items():
            refs = sentences_with(word, res.index, res.sentences)
            assert len(refs) >= 1
            assert sum(r.tokens.count(word) for r in refs) == count

    def test_postings_strictly_increasing(self):
        res = self._corpus()
        for ids in res.index.postings.values():
            assert list(ids) == sorted(set(ids))


class TestShortestSentence:
    def test_shortest_then_lowest_id(self):
        text = "w a b c d .\nw a .\nw b .\n"
        res = ingest_corpus(RawCorpus(documents=(text,), source_ids=("t",)))
        by_id = {s.sentence_id: s for s in res.sentences}
        best = shortest_sentence_with("w", res.index, by_id)
        assert best.sentence_id == 1

    def test_exclude(self):
        text = "w a .\nw b .\n"
        res = ingest_corpus(RawCorpus(documents=(text,), source_ids=("t",)))
        by_id = {s.sentence_id: s for s in res.sentences}
        best = shortest_sentence_with("w", res.index, by_id, exclude={("w", "a", ".")})
        assert best.tokens == ("w", "b", ".")

    def test_none_when_all_excluded(self):
        text = "w a .\n"
        res = ingest_corpus(RawCorpus(documents=(text,), source_ids=("t",)))
        by_id = {s.sentence_id: s for s in res.sentences}
        assert shortest_sentence_with("w", res.index, by_id, exclude={("w", "a", ".")}) is None


def test_cased_and_normalized_streams_align():
    res = ingest_corpus(RawCorpus(documents=("The Cat RAN.",), source_ids=("t",)))
    assert res.cased[0] == ("The", "Cat", "RAN", ".")
    assert res.sentences[0].tokens == ("the", "cat", "ran", ".")


def test_missing_dictionary_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_dictionary(tmp_path / "nope.txt")


def test_dictionary_loads_lowercased(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("Cat\ndog\n\nBIRD\n")
    assert load_dictionary(p) == frozenset({"cat", "dog", "bird"})


def test_ingest_deterministic_serialization(tmp_path):
    from ltswap.ingest import dump_index

    text = "the cat sat .\nthe dog ran .\n"
    a = ingest_corpus(RawCorpus(documents=(text,), source_ids=("t",)))
    b = ingest_corpus(RawCorpus(documents=(text,), source_ids=("t",)))
    dump_index(a.index, tmp_path / "a.bin")
    dump_index(b.index, tmp_path / "b.bin")
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
    assert a.vocab == b.vocab
