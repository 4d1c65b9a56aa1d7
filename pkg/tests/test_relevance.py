import math

import pytest
from hypothesis import given, strategies as st

from subcollect.htmldoc import PageAnalysis
from subcollect.relevance import entity_match, is_relevant, keyword_score
from subcollect.spec import EntityRef, SubCollectionSpec


def brute_cosine(tokens, terms):
    """Independent oracle: explicit vectors over the joint vocabulary."""
    vocab = sorted(set(tokens) | set(terms))
    tf = [tokens.count(v) for v in vocab]
    kw = [1 if v in terms else 0 for v in vocab]
    dot = sum(a * b for a, b in zip(tf, kw))
    na = math.sqrt(sum(a * a for a in tf))
    nb = math.sqrt(sum(b * b for b in kw))
    return dot / (na * nb) if na and nb else 0.0


def test_keyword_score_hand_example():
    tokens = ["web", "web", "archive"]
    score = keyword_score(tokens, ["web", "archive"])
    assert score == pytest.approx(3 / (math.sqrt(5) * math.sqrt(2)), abs=1e-12)
    assert score == pytest.approx(brute_cosine(tokens, ["web", "archive"]), abs=1e-12)


def test_keyword_score_no_overlap_is_zero():
    assert keyword_score(["other", "words"], ["web"]) == 0.0


def test_keyword_score_exact_match_is_one():
    assert keyword_score(["web", "archive"], ["web", "archive"]) == pytest.approx(1.0)


def test_keyword_score_empty_tokens():
    assert keyword_score([], ["web"]) == 0.0


def test_keyword_score_empty_keywords_rejected():
    with pytest.raises(ValueError):
        keyword_score(["a"], [])


def test_multiword_keywords_split():
    assert keyword_score(["web", "archive"], ["web archive"]) == pytest.approx(1.0)


def test_scale_invariance_under_duplication():
    tokens = ["web", "archive", "history", "web"]
    once = keyword_score(tokens, ["web", "history"])
    twice = keyword_score(tokens * 2, ["web", "history"])
    assert once == pytest.approx(twice, abs=1e-12)


_token = st.sampled_from(["web", "archive", "history", "crawl", "page", "de"])


@given(
    tokens=st.lists(_token, max_size=30),
    keywords=st.lists(_token, min_size=1, max_size=4, unique=True),
)
def test_keyword_score_matches_brute_force(tokens, keywords):
    assert keyword_score(tokens, keywords) == pytest.approx(
        brute_cosine(tokens, keywords), abs=1e-12
    )


# entity matching -----------------------------------------------------------

MERKEL = EntityRef(id="e1", label="Angela Merkel", aliases=("Merkel",))


def test_entity_contiguous_subsequence():
    assert entity_match(["news", "angela", "merkel", "today"], MERKEL)


def test_entity_contiguity_required():
    strict = EntityRef(id="e1", label="Angela Merkel")
    assert not entity_match(["merkel", "x", "angela"], strict)


def test_entity_token_boundary_not_substring():
    un = EntityRef(id="un", label="UN")
    assert not entity_match(["unprecedented"], un)
    assert entity_match(["the", "un", "said"], un)


def test_entity_alias_case_insensitive():
    upper = EntityRef(id="e", label="ANGELA MERKEL")
    lower = EntityRef(id="e", label="angela merkel")
    tokens = ["angela", "merkel"]
    assert entity_match(tokens, upper) == entity_match(tokens, lower) is True


# is_relevant ---------------------------------------------------------------


def analysis_with(tokens):
    return PageAnalysis(tokens=list(tokens))


def test_no_content_scopes_always_relevant():
    spec = SubCollectionSpec(url_scope=("http://a.de/",))
    assert is_relevant(analysis_with([]), spec).relevant
    assert is_relevant(analysis_with(["anything"]), spec).relevant


def test_threshold_inclusive():
    # Single keyword, doc of one matching token among k tokens: score is
    # 1/sqrt(k) for distinct fillers; pick a case landing exactly on 0.5.
    spec = SubCollectionSpec(keyword_scope=("web",), relevance_threshold=0.5)
    tokens = ["web", "a", "b", "c"]  # tf norm = 2, score = 0.5
    verdict = is_relevant(analysis_with(tokens), spec)
    assert verdict.keyword_score == pytest.approx(0.5)
    assert verdict.relevant


def test_entity_combine_all_requires_every_entity():
    other = EntityRef(id="e2", label="Gerhard")
    spec = SubCollectionSpec(entity_scope=(MERKEL, other), entity_combine="all")
    verdict = is_relevant(analysis_with(["angela", "merkel"]), spec)
    assert verdict.matched_entities == {"e1"}
    assert not verdict.relevant


def test_entity_combine_any_default():
    other = EntityRef(id="e2", label="Gerhard")
    spec = SubCollectionSpec(entity_scope=(MERKEL, other), entity_combine="any")
    assert is_relevant(analysis_with(["angela", "merkel"]), spec).relevant


@given(
    tokens=st.lists(_token, max_size=20),
    low=st.floats(0, 1),
    high=st.floats(0, 1),
)
def test_threshold_monotonicity(tokens, low, high):
    low, high = min(low, high), max(low, high)
    loose = SubCollectionSpec(keyword_scope=("web",), relevance_threshold=low)
    tight = SubCollectionSpec(keyword_scope=("web",), relevance_threshold=high)
    a = analysis_with(tokens)
    if is_relevant(a, tight).relevant:
        assert is_relevant(a, loose).relevant
