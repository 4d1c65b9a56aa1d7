"""Declarative sub-collection specification.

A spec combines scopes (URL, domain, time, keywords, entities, size)
conjunctively: every additional scope narrows the result. Metadata
scopes (URL/domain/time) are decidable from the index alone;
keyword/entity scopes need page content and live in the relevance
module.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .store import is_valid_timestamp14
from .urls import CanonicalizationError, canonicalize_url, host_of

__all__ = [
    "SpecError",
    "EntityRef",
    "SubCollectionSpec",
    "parse_spec",
    "parse_spec_file",
    "serialize_spec",
    "in_scope_metadata",
]


class SpecError(ValueError):
    """Invalid specification; message carries the offending field path."""


@dataclass(frozen=True)
class EntityRef:
    id: str
    label: str
    aliases: tuple = ()

    def all_names(self):
        """Label plus aliases, case-insensitively deduplicated."""
        seen, out = set(), []
        for name in (self.label, *self.aliases):
            key = name.lower()
            if name and key not in seen:
                seen.add(key)
                out.append(name)
        return out


@dataclass(frozen=True)
class SubCollectionSpec:
    name: str = ""
    url_scope: tuple = None
    domain_scope: tuple = None
    time_scope: tuple = None  # (from_ts14, to_ts14)
    keyword_scope: tuple = None
    entity_scope: tuple = None
    size_scope: int = None
    link_mode: str = "disconnected"
    version_mode: str = "timeline"
    relevance_threshold: float = None
    entity_combine: str = "any"
    closure_policy: str = "all_links"
    closure_max_depth: int = None  # None = unbounded
    seed: int = 0

    def has_content_scopes(self):
        return self.keyword_scope is not None or self.entity_scope is not None

    def digest(self):
        """Stable hex digest of the spec, for manifest provenance."""
        blob = json.dumps(serialize_spec(self), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _expect(cond, path, message):
    if not cond:
        raise SpecError("%s: %s" % (path, message))


def _string_list(value, path):
    _expect(isinstance(value, list) and value, path, "must be a non-empty list")
    for i, v in enumerate(value):
        _expect(isinstance(v, str) and v, "%s[%d]" % (path, i), "must be a non-empty string")
    return tuple(value)


def _check_keys(obj, allowed, path):
    for key in obj:
        if key not in allowed:
            raise SpecError("%s: unknown field %r" % (path, key))


def parse_spec(text):
    """Parse and validate the JSON spec document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("invalid JSON: %s" % exc) from exc
    _expect(isinstance(doc, dict), "$", "spec must be a JSON object")
    _check_keys(
        doc, {"name", "scopes", "link_mode", "version_mode", "relevance", "closure", "seed"}, "$"
    )

    name = doc.get("name", "")
    _expect(isinstance(name, str), "name", "must be a string")

    scopes = doc.get("scopes", {})
    _expect(isinstance(scopes, dict), "scopes", "must be an object")
    _check_keys(scopes, {"urls", "domains", "time", "keywords", "entities", "size"}, "scopes")

    url_scope = domain_scope = time_scope = keyword_scope = entity_scope = None
    size_scope = None

    if "urls" in scopes:
        urls = _string_list(scopes["urls"], "scopes.urls")
        canon = []
        for i, u in enumerate(urls):
            try:
                canon.append(canonicalize_url(u))
            except CanonicalizationError as exc:
                raise SpecError("scopes.urls[%d]: %s" % (i, exc)) from exc
        url_scope = tuple(canon)

    if "domains" in scopes:
        domain_scope = tuple(d.lower() for d in _string_list(scopes["domains"], "scopes.domains"))

    if "time" in scopes:
        t = scopes["time"]
        _expect(isinstance(t, dict), "scopes.time", "must be an object")
        _check_keys(t, {"from", "to"}, "scopes.time")
        _expect("from" in t and "to" in t, "scopes.time", "needs both 'from' and 'to'")
        lo, hi = str(t["from"]), str(t["to"])
        _expect(is_valid_timestamp14(lo), "scopes.time.from", "not a valid 14-digit timestamp")
        _expect(is_valid_timestamp14(hi), "scopes.time.to", "not a valid 14-digit timestamp")
        _expect(lo <= hi, "scopes.time", "'from' must not exceed 'to'")
        time_scope = (lo, hi)

    if "keywords" in scopes:
        keyword_scope = tuple(
            k.lower() for k in _string_list(scopes["keywords"], "scopes.keywords")
        )

    if "entities" in scopes:
        ents = scopes["entities"]
        _expect(isinstance(ents, list) and ents, "scopes.entities", "must be a non-empty list")
        parsed = []
        for i, e in enumerate(ents):
            path = "scopes.entities[%d]" % i
            _expect(isinstance(e, dict), path, "must be an object")
            _check_keys(e, {"id", "label", "aliases"}, path)
            label = e.get("label", "")
            _expect(isinstance(label, str) and label, path + ".label", "must be non-empty")
            aliases = e.get("aliases", [])
            _expect(isinstance(aliases, list), path + ".aliases", "must be a list")
            parsed.append(
                EntityRef(id=str(e.get("id", "")), label=label, aliases=tuple(aliases))
            )
        entity_scope = tuple(parsed)

    if "size" in scopes:
        size_scope = scopes["size"]
        _expect(
            isinstance(size_scope, int) and size_scope > 0,
            "scopes.size",
            "must be a positive integer",
        )

    if all(
        s is None
        for s in (url_scope, domain_scope, time_scope, keyword_scope, entity_scope, size_scope)
    ):
        raise SpecError("scopes: at least one scope is required")

    link_mode = doc.get("link_mode", "disconnected")
    _expect(link_mode in ("connected", "disconnected"), "link_mode", "must be connected|disconnected")
    version_mode = doc.get("version_mode", "timeline")
    _expect(version_mode in ("snapshot", "timeline"), "version_mode", "must be snapshot|timeline")

    relevance = doc.get("relevance", {})
    _expect(isinstance(relevance, dict), "relevance", "must be an object")
    _check_keys(relevance, {"threshold", "entity_combine"}, "relevance")
    threshold = relevance.get("threshold")
    if threshold is not None:
        _expect(
            isinstance(threshold, (int, float)) and 0.0 <= threshold <= 1.0,
            "relevance.threshold",
            "must be a number in [0, 1]",
        )
        threshold = float(threshold)
    if keyword_scope is not None and threshold is None:
        raise SpecError("relevance.threshold: required when keyword scope is present")
    if keyword_scope is None and threshold is not None:
        raise SpecError("relevance.threshold: only meaningful with a keyword scope")
    entity_combine = relevance.get("entity_combine", "any")
    _expect(entity_combine in ("any", "all"), "relevance.entity_combine", "must be any|all")

    closure = doc.get("closure", {})
    _expect(isinstance(closure, dict), "closure", "must be an object")
    _check_keys(closure, {"policy", "max_depth"}, "closure")
    policy = closure.get("policy", "all_links")
    _expect(policy in ("all_links", "relevant_links"), "closure.policy", "must be all_links|relevant_links")
    max_depth = closure.get("max_depth")
    if max_depth is not None:
        _expect(
            isinstance(max_depth, int) and max_depth > 0,
            "closure.max_depth",
            "must be a positive integer",
        )

    seed = doc.get("seed", 0)
    _expect(
        isinstance(seed, int) and 0 <= seed < 2**64, "seed", "must be a 64-bit unsigned integer"
    )

    return SubCollectionSpec(
        name=name,
        url_scope=url_scope,
        domain_scope=domain_scope,
        time_scope=time_scope,
        keyword_scope=keyword_scope,
        entity_scope=entity_scope,
        size_scope=size_scope,
        link_mode=link_mode,
        version_mode=version_mode,
        relevance_threshold=threshold,
        entity_combine=entity_combine,
        closure_policy=policy,
        closure_max_depth=max_depth,
        seed=seed,
    )


def parse_spec_file(path):
    with open(path, "r", encoding="utf-8") as f:
        return parse_spec(f.read())


def serialize_spec(spec):
    """Spec -> plain JSON-ready dict; parse_spec(json.dumps(...)) round-trips."""
    scopes = {}
    if spec.url_scope is not None:
        scopes["urls"] = list(spec.url_scope)
    if spec.domain_scope is not None:
        scopes["domains"] = list(spec.domain_scope)
    if spec.time_scope is not None:
        scopes["time"] = {"from": spec.time_scope[0], "to": spec.time_scope[1]}
    if spec.keyword_scope is not None:
        scopes["keywords"] = list(spec.keyword_scope)
    if spec.entity_scope is not None:
        scopes["entities"] = [
            {"id": e.id, "label": e.label, "aliases": list(e.aliases)} for e in spec.entity_scope
        ]
    if spec.size_scope is not None:
        scopes["size"] = spec.size_scope
    doc = {
        "name": spec.name,
        "scopes": scopes,
        "link_mode": spec.link_mode,
        "version_mode": spec.version_mode,
        "relevance": {"entity_combine": spec.entity_combine},
        "closure": {"policy": spec.closure_policy},
        "seed": spec.seed,
    }
    if spec.relevance_threshold is not None:
        doc["relevance"]["threshold"] = spec.relevance_threshold
    if spec.closure_max_depth is not None:
        doc["closure"]["max_depth"] = spec.closure_max_depth
    return doc


def _domain_matches(host, domain):
    return host == domain or host.endswith("." + domain)


def in_scope_metadata(spec, entry):
    """Conjunction over the metadata-only scopes (URL, domain, time).

    Content scopes are deliberately not consulted here: this predicate
    must be decidable from the index alone, with zero fetches.
    """
    if spec.url_scope is not None and entry.canonical_url not in spec.url_scope:
        return False
    if spec.domain_scope is not None:
        host = host_of(entry.canonical_url)
        if not any(_domain_matches(host, d) for d in spec.domain_scope):
            return False
    if spec.time_scope is not None:
        lo, hi = spec.time_scope
        if not (lo <= entry.timestamp14 <= hi):
            return False
    return True
