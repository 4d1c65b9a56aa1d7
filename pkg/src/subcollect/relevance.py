"""Content relevance scoring against keyword and entity scopes.

Keyword scoring is cosine similarity between the page's raw
term-frequency vector and a uniform indicator vector over the keyword
terms. TF (not TF-IDF) keeps scoring a pure per-page computation; an
IDF variant would need a corpus pass and can be registered as an
alternative scorer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .htmldoc import tokenize

__all__ = [
    "RelevanceVerdict",
    "keyword_score",
    "entity_match",
    "is_relevant",
    "register_scorer",
    "get_scorer",
]


@dataclass
class RelevanceVerdict:
    keyword_score: float = None  # None when the spec has no keyword scope
    matched_entities: frozenset = frozenset()
    relevant: bool = True


def _keyword_terms(keywords):
    """Distinct lowercase terms; multi-word keywords split into terms."""
    terms = []
    for kw in keywords:
        terms.extend(tokenize(kw))
    seen, out = set(), []
    for t in terms:
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def keyword_score(tokens, keywords):
    """Cosine similarity of page TF vector vs. uniform keyword vector, in [0, 1]."""
    if not keywords:
        raise ValueError("keyword list must be non-empty")
    terms = _keyword_terms(keywords)
    if not terms:
        raise ValueError("keywords contain no scoreable terms")
    if not tokens:
        return 0.0
    tf = {}
    for t in tokens:
        tf[t] = tf.get(t, 0) + 1
    dot = sum(tf.get(t, 0) for t in terms)
    if dot == 0:
        return 0.0
    doc_norm = math.sqrt(sum(c * c for c in tf.values()))
    return dot / (doc_norm * math.sqrt(len(terms)))


def entity_match(tokens, entity):
    """True iff any alias occurs as a contiguous token subsequence.

    Aliases are tokenized by the same rules as page text, so "UN" never
    matches inside "unprecedented" and matching is case-insensitive.
    """
    for name in entity.all_names():
        needle = tokenize(name)
        if not needle:
            continue
        n = len(needle)
        first = needle[0]
        for i, tok in enumerate(tokens):
            if tok == first and tokens[i : i + n] == needle:
                return True
    return False


def is_relevant(analysis, spec):
    """Apply the spec's content scopes to one page analysis.

    The keyword clause is inclusive (score >= threshold counts);
    entities combine per spec.entity_combine. Metadata scopes are the
    caller's responsibility.
    """
    score = None
    keyword_ok = True
    if spec.keyword_scope is not None:
        scorer = get_scorer("keyword-cosine")
        score = scorer(analysis.tokens, spec.keyword_scope)
        keyword_ok = score >= spec.relevance_threshold

    matched = frozenset()
    entity_ok = True
    if spec.entity_scope is not None:
        matched = frozenset(
            e.id for e in spec.entity_scope if entity_match(analysis.tokens, e)
        )
        if spec.entity_combine == "all":
            entity_ok = len(matched) == len(spec.entity_scope)
        else:
            entity_ok = len(matched) > 0

    return RelevanceVerdict(
        keyword_score=score,
        matched_entities=matched,
        relevant=keyword_ok and entity_ok,
    )


_SCORERS = {"keyword-cosine": keyword_score}


def register_scorer(scorer_id, fn):
    """Add a scorer under a string id (slot for future classifier-style scorers)."""
    _SCORERS[scorer_id] = fn


def get_scorer(scorer_id):
    try:
        return _SCORERS[scorer_id]
    except KeyError:
        raise KeyError("unknown scorer %r" % scorer_id) from None
