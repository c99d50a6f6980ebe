import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from werfair import ErrorCounts, align, corpus_wer, tokenize
from werfair.errors import EmptyCorpusError

from oracles import edit_script_distance

tokens = st.lists(st.sampled_from(["a", "b", "c"]), max_size=6)


def test_tokenize_whitespace_split():
    assert tokenize("play music") == ["play", "music"]


def test_tokenize_empty():
    assert tokenize("") == []
    assert tokenize("   \t ") == []


def test_tokenize_normalizes():
    assert tokenize("  Call  Mom ") == ["call", "mom"]
    assert tokenize("Call Mom", normalize=False) == ["Call", "Mom"]


def test_align_identity():
    c = align(["a", "b", "c"], ["a", "b", "c"])
    assert (c.insertions, c.deletions, c.substitutions) == (0, 0, 0)
    assert c.ref_words == 3


def test_align_single_substitution():
    c = align(["a", "b", "c"], ["a", "x", "c"])
    assert c.substitutions == 1
    assert c.total() == 1


def test_align_call_mom():
    ref = ["call", "mom", "now"]
    hyp = ["call", "my", "mom"]
    c = align(ref, hyp)
    assert c.total() == 2
    assert c.total() == edit_script_distance(tuple(ref), tuple(hyp))


def test_align_empty_sides():
    assert align([], ["x", "y"]).insertions == 2
    assert align(["x", "y"], []).deletions == 2
    assert align([], []).total() == 0


@given(tokens)
@settings(deadline=None)
def test_align_self_is_zero(seq):
    assert align(seq, seq).total() == 0


@given(tokens, tokens)
@settings(deadline=None)
def test_align_swap_symmetry(ref, hyp):
    fwd = align(ref, hyp)
    rev = align(hyp, ref)
    assert fwd.total() == rev.total()
    assert fwd.insertions == rev.deletions
    assert fwd.deletions == rev.insertions
    assert fwd.substitutions == rev.substitutions


@given(tokens, tokens)
@settings(deadline=None)
def test_align_bounds(ref, hyp):
    total = align(ref, hyp).total()
    assert total >= abs(len(ref) - len(hyp))
    assert total <= max(len(ref), len(hyp))


@given(tokens, tokens)
@settings(deadline=None)
def test_align_split_consistency(ref, hyp):
    c = align(ref, hyp)
    assert c.hyp_words == len(hyp)
    assert abs(c.ref_words - c.hyp_words) <= c.total()


def test_corpus_wer_basic():
    counts = [ErrorCounts(1, 0, 0, 10), ErrorCounts(0, 0, 1, 10)]
    assert corpus_wer(counts) == pytest.approx(0.10)


def test_corpus_wer_zero_errors():
    assert corpus_wer([ErrorCounts(0, 0, 0, 5)]) == 0.0


def test_corpus_wer_above_one():
    assert corpus_wer([ErrorCounts(5, 3, 4, 10)]) == pytest.approx(1.2)


def test_corpus_wer_empty_exposure():
    with pytest.raises(EmptyCorpusError):
        corpus_wer([])
