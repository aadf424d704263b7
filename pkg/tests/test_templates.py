import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sumlen.corpus import Dialogue, word_count
from sumlen.templates import (
    LengthBudget,
    PredictorVariant,
    parse_generated,
    render_la_input,
    render_la_target,
    render_predictor_input,
    render_predictor_target,
)

from .conftest import make_dialogue, make_example

ALL_VARIANTS = list(PredictorVariant)

_dialogue_words = st.lists(st.text(alphabet="abcdefgh", min_size=1, max_size=6), min_size=1, max_size=12)


@st.composite
def dialogues(draw):
    n_turns = draw(st.integers(1, 4))
    turns = [(f"#Person{(t % 2) + 1}#", " ".join(draw(_dialogue_words))) for t in range(n_turns)]
    return make_dialogue("hyp", turns)


def _example_with_ref_len(z: int, split="train"):
    return make_example("e", [("#P1#", "let us meet at noon")], ["w" + " w" * (z - 1)], split)


# ------------------------------------------------------------------- renders


def test_surface_input_exact():
    d = make_dialogue("d", [("#Person1#", "hello world")])
    assert render_predictor_input(PredictorVariant.SURFACE, d) == (
        "Length of dialogue: #3. Number of utterance: #1."
    )


def test_single_input_exact():
    d = Dialogue.from_raw("d", "Hi")
    assert render_predictor_input(PredictorVariant.SINGLE, d) == "Dialogue: Hi."


def test_single_plus_is_surface_then_single():
    d = make_dialogue("d", [("#Person1#", "a b c"), ("#Person2#", "d e")])
    surface = render_predictor_input(PredictorVariant.SURFACE, d)
    single = render_predictor_input(PredictorVariant.SINGLE, d)
    assert render_predictor_input(PredictorVariant.SINGLE_PLUS, d) == surface + " " + single


def test_multi_variants_share_inputs():
    d = make_dialogue("d", [("#Person1#", "a b c")])
    assert render_predictor_input(PredictorVariant.MULTI, d) == render_predictor_input(
        PredictorVariant.SINGLE, d
    )
    assert render_predictor_input(PredictorVariant.MULTI_PLUS, d) == render_predictor_input(
        PredictorVariant.SINGLE_PLUS, d
    )


def test_predictor_target_length_only():
    ex = make_example("e", [("#P1#", "hello")], ["Rae plans the trip with her dad today more."])
    n = ex.refs[0].word_len
    assert n == word_count(ex.refs[0].text)
    assert render_predictor_target(PredictorVariant.SINGLE, ex, 0) == f"Summary length: #{n}."


def test_predictor_target_multitask():
    ex = make_example("e", [("#P1#", "hello")], ["Hi there."])
    assert (
        render_predictor_target(PredictorVariant.MULTI, ex, 0)
        == "Summary length: #2. Summary: Hi there."
    )


def test_multi_plus_target_equals_multi_target():
    ex = make_example("e", [("#P1#", "hello")], ["Three word summary."])
    assert render_predictor_target(PredictorVariant.MULTI_PLUS, ex, 0) == render_predictor_target(
        PredictorVariant.MULTI, ex, 0
    )


def test_predictor_target_ref_index_out_of_range():
    ex = make_example("e", [("#P1#", "hello")], ["One."])
    with pytest.raises(IndexError):
        render_predictor_target(PredictorVariant.SINGLE, ex, 1)


def test_la_input_exact():
    d = Dialogue.from_raw("d", "Hi")
    assert render_la_input(LengthBudget(15, "user"), d) == "Summary length: #15. Dialogue: Hi."


def test_la_target_plain_and_multitask():
    ex = make_example("e", [("#P1#", "hello")], ["Hi."])
    assert render_la_target(False, ex, 0) == "Hi."
    assert render_la_target(True, ex, 0) == "Summary length: #1. Summary: Hi."


def test_la_target_ref_index_out_of_range():
    ex = make_example("e", [("#P1#", "hello")], ["Hi."])
    with pytest.raises(IndexError):
        render_la_target(True, ex, 3)


def test_length_budget_bounds():
    with pytest.raises(ValueError):
        LengthBudget(0, "gold")
    with pytest.raises(ValueError):
        LengthBudget(1001, "gold")
    with pytest.raises(ValueError):
        LengthBudget(5, "guessed")


# -------------------------------------------------------------------- parser


def test_parse_length_only_round_trip():
    parsed = parse_generated("length_only", "Summary length: #12.")
    assert (parsed.length, parsed.summary, parsed.ok) == (12, None, True)


def test_parse_length_plus_summary_round_trip():
    parsed = parse_generated("length_plus_summary", "Summary length: #2. Summary: Hi there.")
    assert (parsed.length, parsed.summary, parsed.ok) == (2, "Hi there.", True)


def test_parse_failure_keeps_raw():
    parsed = parse_generated("length_only", "garbled output")
    assert not parsed.ok
    assert parsed.raw == "garbled output"
    assert parsed.length is None


def test_parse_length_plus_summary_requires_both_anchors():
    parsed = parse_generated("length_plus_summary", "Summary length: #4.")
    assert not parsed.ok
    assert parsed.length == 4


def test_parse_summary_only_passthrough():
    parsed = parse_generated("summary_only", "Anything at all.")
    assert parsed.ok and parsed.summary == "Anything at all." and parsed.length is None


def test_parse_is_whitespace_tolerant():
    assert parse_generated("length_only", "  Summary  length :  # 7 .").length == 7
    parsed = parse_generated("length_plus_summary", "Summary length:#3. Summary:Tiny words here.")
    assert parsed.ok and parsed.length == 3 and parsed.summary == "Tiny words here."


def test_parse_unknown_mode():
    with pytest.raises(ValueError):
        parse_generated("everything", "x")


def test_parse_unparsable_integer_fails():
    assert not parse_generated("length_only", "Summary length: #many.").ok


# ---------------------------------------------------------------- properties


@given(z=st.integers(1, 1000), d=dialogues())
def test_la_input_parse_recovers_budget(z, d):
    text = render_la_input(LengthBudget(z, "user"), d)
    assert parse_generated("length_only", text).length == z


@given(z=st.integers(1, 300))
def test_predictor_target_bijection_all_variants(z):
    ex = _example_with_ref_len(z)
    for variant in ALL_VARIANTS:
        target = render_predictor_target(variant, ex, 0)
        mode = "length_plus_summary" if variant.multitask else "length_only"
        parsed = parse_generated(mode, target)
        assert parsed.ok and parsed.length == z
        if variant.multitask:
            assert parsed.summary == ex.refs[0].text


@given(z=st.integers(1, 300))
def test_la_target_multitask_round_trip(z):
    ex = _example_with_ref_len(z)
    parsed = parse_generated("length_plus_summary", render_la_target(True, ex, 0))
    assert parsed.ok and parsed.length == z and parsed.summary == ex.refs[0].text


_ANCHORS = ("Summary length: #", "Dialogue: ", "Length of dialogue: #", "Number of utterance: #")


def _expected_anchor_counts(variant):
    return {
        "Summary length: #": 0,
        "Dialogue: ": 1 if variant.uses_dialogue else 0,
        "Length of dialogue: #": 1 if variant.uses_surface else 0,
        "Number of utterance: #": 1 if variant.uses_surface else 0,
    }


@given(d=dialogues())
def test_rendered_anchors_appear_exactly_once(d):
    for variant in ALL_VARIANTS:
        rendered = render_predictor_input(variant, d)
        for anchor, expected in _expected_anchor_counts(variant).items():
            assert rendered.count(anchor) == expected, (variant, anchor)
    la = render_la_input(LengthBudget(9, "user"), d)
    assert la.count("Summary length: #") == 1
    assert la.count("Dialogue: ") == 1


@given(d=dialogues(), z1=st.integers(1, 500), z2=st.integers(1, 500))
def test_inputs_differ_only_in_budget_integer(d, z1, z2):
    a = render_la_input(LengthBudget(z1, "user"), d)
    b = render_la_input(LengthBudget(z2, "user"), d)
    assert a.replace(f"#{z1}.", "#Z.", 1) == b.replace(f"#{z2}.", "#Z.", 1)
