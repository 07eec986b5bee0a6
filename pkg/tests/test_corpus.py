import unicodedata

import pytest
from hypothesis import given
from hypothesis import strategies as st

from paravec.corpus import (
    CorpusFormatError,
    PairReader,
    load_pairs,
    load_parsed,
    load_sentences,
    load_sts,
    tokenize,
    write_pairs,
)


def oracle_tokenize(raw):
    """Character-level enumeration of the tokenization rule."""
    out = []
    buf = ""
    for ch in raw.lower():
        if ch.isspace():
            if buf:
                out.append(buf)
            buf = ""
        elif unicodedata.category(ch).startswith("P"):
            if buf:
                out.append(buf)
            buf = ""
            out.append(ch)
        else:
            buf += ch
    if buf:
        out.append(buf)
    return out


class TestTokenize:
    def test_punctuation_isolated(self):
        assert tokenize("Hello, world!").tokens == ["hello", ",", "world", "!"]

    def test_empty(self):
        assert tokenize("").tokens == []

    def test_table2_sentence(self):
        raw = "it's gonna be ...... classic."
        expected = ["it", "'", "s", "gonna", "be", ".", ".", ".", ".", ".", ".", "classic", "."]
        assert tokenize(raw).tokens == expected
        assert oracle_tokenize(raw) == expected

    def test_raw_preserved(self):
        assert tokenize("A b").raw == "A b"

    @given(st.text(max_size=60))
    def test_matches_character_oracle(self, raw):
        assert tokenize(raw).tokens == oracle_tokenize(raw)

    @given(st.text(max_size=60))
    def test_deterministic(self, raw):
        assert tokenize(raw).tokens == tokenize(raw).tokens

    @given(st.text(max_size=60))
    def test_idempotent_on_detokenized_output(self, raw):
        tokens = tokenize(raw).tokens
        assert tokenize(" ".join(tokens)).tokens == tokens

    @given(st.text(max_size=60))
    def test_token_invariants(self, raw):
        for token in tokenize(raw).tokens:
            assert token
            assert not any(ch.isspace() for ch in token)
            if len(token) > 1:
                assert not any(unicodedata.category(c).startswith("P") for c in token)


class TestLoadPairs:
    def test_table2_pair(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("greetings, all!\thello everyone!\n", encoding="utf-8")
        pairs, skipped = load_pairs(path)
        assert skipped == 0
        assert pairs[0].reference.tokens == ["greetings", ",", "all", "!"]
        assert pairs[0].translation.tokens == ["hello", "everyone", "!"]
        assert pairs[0].translation_logprob is None

    def test_logprob_column(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\t-3.5\n", encoding="utf-8")
        pairs, _ = load_pairs(path)
        assert pairs[0].translation_logprob == -3.5

    def test_four_columns_is_error(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\n1\t2\t-1\tjunk\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError, match=r":2"):
            load_pairs(path)

    def test_bad_logprob_names_line(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\nc\td\tnotanumber\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError, match=r":2"):
            load_pairs(path)

    @pytest.mark.parametrize("bad", ["0.5", "inf", "nan"])
    def test_positive_or_nonfinite_logprob_rejected(self, tmp_path, bad):
        path = tmp_path / "pairs.tsv"
        path.write_text(f"a\tb\t{bad}\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError):
            load_pairs(path)

    def test_zero_logprob_allowed(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\t0.0\n", encoding="utf-8")
        pairs, _ = load_pairs(path)
        assert pairs[0].translation_logprob == 0.0

    def test_degenerate_pairs_skipped_and_counted(self, tmp_path):
        lines = [
            "good one\tfine",
            "\tno reference",
            "no translation\t",
            "   \tblank after tokenize",
            "also good\tyes",
        ]
        path = tmp_path / "pairs.tsv"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        pairs, skipped = load_pairs(path)
        # brute-force recount of lines with an empty side
        expected_skips = sum(
            1
            for line in lines
            if not tokenize(line.split("\t")[0]).tokens
            or not tokenize(line.split("\t")[1]).tokens
        )
        assert skipped == expected_skips == 3
        assert len(pairs) == 2

    def test_comment_lines_ignored(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("# provenance line\na\tb\n", encoding="utf-8")
        pairs, skipped = load_pairs(path)
        assert len(pairs) == 1 and skipped == 0

    def test_round_trip_preserves_tokens(self, tmp_path):
        src = tmp_path / "src.tsv"
        src.write_text(
            "Greetings, ALL!\thello everyone!\t-2.25\nSo what?\thalf an hour won't kill you.\n",
            encoding="utf-8",
        )
        pairs, _ = load_pairs(src)
        dst = tmp_path / "dst.tsv"
        write_pairs(dst, pairs, header="# rewritten")
        reloaded, skipped = load_pairs(dst)
        assert skipped == 0
        assert [p.reference.tokens for p in reloaded] == [p.reference.tokens for p in pairs]
        assert [p.translation.tokens for p in reloaded] == [p.translation.tokens for p in pairs]
        assert [p.translation_logprob for p in reloaded] == [-2.25, None]

    def test_reader_is_streaming(self, tmp_path):
        path = tmp_path / "pairs.tsv"
        path.write_text("a\tb\n\tx\n", encoding="utf-8")
        reader = PairReader(path)
        assert len(list(reader)) == 1
        assert reader.n_skipped == 1


class TestLoadSts:
    def _write(self, tmp_path, rows, name="data.tsv"):
        path = tmp_path / name
        path.write_text("".join(f"{a}\t{b}\t{g}\n" for a, b, g in rows), encoding="utf-8")
        return path

    def test_single_file_one_group(self, tmp_path):
        self._write(tmp_path, [("a b", "c d", 1.0), ("e", "f", 0.0), ("g", "h", 5.0)])
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("data.tsv\t2015\theadlines\n", encoding="utf-8")
        groups = load_sts(manifest)
        assert list(groups) == [("2015", "headlines")]
        assert len(groups[("2015", "headlines")]) == 3
        assert groups[("2015", "headlines")][0].gold == 1.0

    def test_gold_out_of_range(self, tmp_path):
        self._write(tmp_path, [("a", "b", 5.5)])
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("data.tsv\t2015\theadlines\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError, match=r"data.tsv:1"):
            load_sts(manifest)

    def test_non_numeric_gold(self, tmp_path):
        self._write(tmp_path, [("a", "b", "high")])
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("data.tsv\t2015\theadlines\n", encoding="utf-8")
        with pytest.raises(CorpusFormatError, match="non-numeric"):
            load_sts(manifest)

    def test_two_datasets_share_a_year(self, tmp_path):
        self._write(tmp_path, [("a", "b", 2.0)], name="one.tsv")
        self._write(tmp_path, [("c", "d", 3.0)], name="two.tsv")
        manifest = tmp_path / "manifest.tsv"
        manifest.write_text("one.tsv\t2014\timages\ntwo.tsv\t2014\tnews\n", encoding="utf-8")
        groups = load_sts(manifest)
        assert set(groups) == {("2014", "images"), ("2014", "news")}


def test_load_parsed(tmp_path):
    path = tmp_path / "parsed.tsv"
    path.write_text("the dog runs\t(S (NP (DT the) (NN dog)) (VP (VBZ runs)))\n", encoding="utf-8")
    parsed = load_parsed(path)
    assert parsed[0].sentence.tokens == ["the", "dog", "runs"]
    assert parsed[0].bracketed_parse.startswith("(S")


def test_load_sentences_keeps_blank_lines(tmp_path):
    path = tmp_path / "text.txt"
    path.write_text("One sentence.\n\n# comment\nAnother\n", encoding="utf-8")
    sentences = load_sentences(path)
    assert len(sentences) == 3
    assert sentences[1].tokens == []
