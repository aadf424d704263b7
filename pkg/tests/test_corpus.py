import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sumlen.corpus import (
    CorpusFormatError,
    Dialogue,
    compression_rate,
    load_corpus,
    save_corpus,
    split_stats,
    surface_features,
    word_count,
)

from .conftest import make_example, synthetic_examples


# ---------------------------------------------------------------- word_count


def test_word_count_empty():
    assert word_count("") == 0


def test_word_count_manual_twelve_word_sentence():
    # counted by hand: 12 whitespace-separated words
    text = "Mia is asking her brother to carry the baskets down to the car."
    assert word_count(text) == 12


def test_word_count_collapses_whitespace_runs():
    assert word_count("a  b") == 2
    assert word_count("  a \t b \n c  ") == 3


@given(st.lists(st.text(alphabet="abcxyz", min_size=1), max_size=20))
def test_word_count_whitespace_invariance(words):
    text = " ".join(words)
    assert word_count(text) == len(words)
    assert word_count("  " + text + "\t") == len(words)
    assert word_count(text.replace(" ", "   ")) == len(words)


# ------------------------------------------------------------------ dialogue


def test_dialogue_parse_turns():
    d = Dialogue.from_raw("d1", "#Person1#: hello there\n#Person2#: hi")
    assert len(d.turns) == 2
    assert d.turns[0].speaker == "#Person1#"
    assert d.turns[0].text == " hello there"
    assert d.flatten() == d.raw_text


def test_dialogue_tag_only_turn_preserved():
    d = Dialogue.from_raw("d1", "#Person1#:")
    assert d.turns[0].text == ""
    assert d.flatten() == "#Person1#:"


def test_dialogue_line_without_colon_is_tag_only():
    d = Dialogue.from_raw("d1", "Hi")
    assert d.turns[0].speaker == "Hi"
    assert d.turns[0].tagged is False
    assert d.flatten() == "Hi"


def test_dialogue_empty_text_rejected():
    with pytest.raises(CorpusFormatError):
        Dialogue.from_raw("d1", "")


def test_dialogue_blank_turn_rejected():
    with pytest.raises(CorpusFormatError, match="empty turn"):
        Dialogue.from_raw("d1", "#Person1#: hi\n\n#Person2#: yo")


@given(
    st.lists(
        st.tuples(
            st.text(alphabet="abAB#", min_size=1, max_size=6),
            st.text(alphabet="abc xyz", max_size=12),
        ),
        min_size=1,
        max_size=6,
    )
)
def test_dialogue_flatten_round_trip(turns):
    raw = "\n".join(f"{speaker}:{body}" for speaker, body in turns)
    d = Dialogue.from_raw("p", raw)
    assert d.flatten() == raw


# ---------------------------------------------------------- surface features


def test_surface_features_counts_speaker_tag():
    d = Dialogue.from_raw("d", "#Person1#: hello world")
    f = surface_features(d)
    assert (f.dialogue_word_count, f.utterance_count) == (3, 1)


def test_surface_features_degenerate_turn():
    d = Dialogue.from_raw("d", "#Person1#:")
    f = surface_features(d)
    assert (f.dialogue_word_count, f.utterance_count) == (1, 1)


def test_surface_features_two_turns():
    # five whitespace words per line, tags included
    d = Dialogue.from_raw("d", "#P1#: meet me at noon\n#P2#: fine see you there")
    f = surface_features(d)
    assert (f.dialogue_word_count, f.utterance_count) == (10, 2)


def test_surface_x_at_least_y():
    for ex in synthetic_examples(20, seed=5):
        f = surface_features(ex.dialogue)
        assert f.dialogue_word_count >= f.utterance_count >= 1


# -------------------------------------------------------------------- loader


def _write_lines(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


def test_load_single_record(tmp_path):
    path = tmp_path / "one.jsonl"
    _write_lines(path, [{"id": "a", "dialogue": "#P1#: hi there", "summary": "They greet."}])
    examples = load_corpus(path, "samsum", "train")
    assert len(examples) == 1
    assert len(examples[0].refs) == 1
    assert examples[0].refs[0].word_len == 2


def test_load_multi_reference_record(tmp_path):
    path = tmp_path / "test.jsonl"
    _write_lines(
        path,
        [
            {
                "id": "t0",
                "dialogue": "#P1#: hi\n#P2#: hello",
                "summary1": "first one.",
                "summary2": "second one here.",
                "summary3": "third.",
            }
        ],
    )
    (example,) = load_corpus(path, "dialogsum", "test")
    assert [r.annotator_id for r in example.refs] == [1, 2, 3]
    assert [r.text for r in example.refs] == ["first one.", "second one here.", "third."]


def test_load_accepts_fname_alias(tmp_path):
    path = tmp_path / "f.jsonl"
    _write_lines(path, [{"fname": "x9", "dialogue": "#P1#: ok", "summary": "Fine."}])
    (example,) = load_corpus(path, "dialogsum", "train")
    assert example.id == "x9"


def test_load_preserves_unknown_fields(tmp_path):
    path = tmp_path / "f.jsonl"
    _write_lines(
        path, [{"id": "a", "dialogue": "#P1#: ok", "summary": "Fine.", "topic": "greeting"}]
    )
    (example,) = load_corpus(path, "samsum", "train")
    assert example.extras == {"topic": "greeting"}


def test_load_malformed_line_names_line_number(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "dialogue": "#P1#: hi", "summary": "x y."}\n{oops\n', encoding="utf-8")
    with pytest.raises(CorpusFormatError, match=r":2"):
        load_corpus(path, "samsum", "train")


def test_load_missing_field_named(tmp_path):
    path = tmp_path / "bad.jsonl"
    _write_lines(path, [{"id": "a", "summary": "x."}])
    with pytest.raises(CorpusFormatError, match="dialogue"):
        load_corpus(path, "samsum", "train")
    _write_lines(path, [{"id": "a", "dialogue": "#P#: hi"}])
    with pytest.raises(CorpusFormatError, match="summary"):
        load_corpus(path, "samsum", "train")


def test_load_zero_records(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    with pytest.raises(CorpusFormatError, match="no records"):
        load_corpus(path, "samsum", "train")


def test_load_ref_count_validation(tmp_path):
    path = tmp_path / "f.jsonl"
    _write_lines(path, [{"id": "a", "dialogue": "#P#: hi", "summary": "One."}])
    with pytest.raises(CorpusFormatError, match="expected 3"):
        load_corpus(path, "dialogsum", "test")
    _write_lines(
        path,
        [{"id": "a", "dialogue": "#P#: hi", "summary1": "x.", "summary2": "y.", "summary3": "z."}],
    )
    with pytest.raises(CorpusFormatError, match="expected 1"):
        load_corpus(path, "samsum", "train")


def test_load_rejects_mixed_summary_fields(tmp_path):
    path = tmp_path / "f.jsonl"
    _write_lines(
        path,
        [{"id": "a", "dialogue": "#P#: hi", "summary": "x.", "summary1": "y.",
          "summary2": "z.", "summary3": "w."}],
    )
    with pytest.raises(CorpusFormatError, match="both"):
        load_corpus(path, "dialogsum", "test")


def test_load_rejects_empty_summary(tmp_path):
    path = tmp_path / "f.jsonl"
    _write_lines(path, [{"id": "a", "dialogue": "#P#: hi", "summary": "   "}])
    with pytest.raises(CorpusFormatError, match="empty"):
        load_corpus(path, "samsum", "train")


def test_unknown_format_and_split():
    with pytest.raises(ValueError, match="format"):
        load_corpus("whatever", "cnn", "train")
    with pytest.raises(ValueError, match="split"):
        load_corpus("whatever", "samsum", "dev")


# ---------------------------------------------------------------- round trip


def test_save_load_round_trip(tmp_path):
    originals = synthetic_examples(12, n_refs=1, split="train", seed=3)
    path = save_corpus(originals, tmp_path / "rt.jsonl")
    reloaded = load_corpus(path, "samsum", "train")
    assert reloaded == originals


def test_save_load_round_trip_multi_ref(tmp_path):
    originals = synthetic_examples(6, n_refs=3, split="test", seed=4)
    path = save_corpus(originals, tmp_path / "rt3.jsonl")
    reloaded = load_corpus(path, "dialogsum", "test")
    assert reloaded == originals


def test_word_len_invariant_corpus_wide():
    for ex in synthetic_examples(25, n_refs=3, split="test", seed=6):
        for ref in ex.refs:
            assert ref.word_len == word_count(ref.text)


# ----------------------------------------------------------------- stats


def test_compression_rate_identity_summaries():
    examples = []
    for i in range(4):
        turns = [("#P1#", f"sample line number {i}")]
        dialogue_text = f"#P1#: sample line number {i}"
        examples.append(make_example(f"e{i}", turns, [dialogue_text]))
    assert compression_rate(examples) == 1.0


def test_compression_rate_hand_computed():
    ex = make_example("e", [("#P1#", "one two three four five six seven")], ["one two."])
    # 2 summary words over 8 dialogue words (tag included)
    assert compression_rate([ex]) == pytest.approx(2 / 8)


def test_compression_rate_counts_dialogue_once_per_reference(multi_ref_example):
    total_ref = sum(r.word_len for r in multi_ref_example.refs)
    d_words = word_count(multi_ref_example.dialogue.raw_text)
    expected = total_ref / (3 * d_words)
    assert compression_rate([multi_ref_example]) == pytest.approx(expected)


def test_compression_rate_empty_corpus():
    with pytest.raises(ValueError):
        compression_rate([])


def test_split_stats_counts(multi_ref_example, tiny_example):
    stats = split_stats([multi_ref_example, tiny_example])
    assert stats["dialogues"] == 2
    assert stats["summaries"] == 4
    assert 0 < stats["compression_rate"] <= 1.0
