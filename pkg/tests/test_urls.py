import pytest
from hypothesis import given, strategies as st

from subcollect.urls import (
    CanonicalizationError,
    canonicalize_url,
    host_of,
    same_host,
    strip_www,
)


def test_case_folding():
    assert canonicalize_url("http://Example.DE/") == "http://example.de/"


def test_default_port_and_fragment_removed():
    assert canonicalize_url("https://a.de:443/p#frag") == "https://a.de/p"
    assert canonicalize_url("http://a.de:80/p") == "http://a.de/p"


def test_non_default_port_kept():
    assert canonicalize_url("http://a.de:8080/p") == "http://a.de:8080/p"


def test_empty_path_becomes_slash():
    assert canonicalize_url("http://a.de") == "http://a.de/"


def test_query_preserved_verbatim():
    assert canonicalize_url("http://a.de/p?b=2&a=1") == "http://a.de/p?b=2&a=1"


@pytest.mark.parametrize(
    "bad",
    ["", "not a url", "ftp://a.de/", "http:relative", "http://", "http://ho st/"],
)
def test_malformed_rejected(bad):
    with pytest.raises(CanonicalizationError):
        canonicalize_url(bad)


def test_error_carries_position():
    try:
        canonicalize_url("http://ho st.de/")
    except CanonicalizationError as exc:
        assert exc.position == len("http://ho")
    else:
        pytest.fail("expected rejection")


@pytest.mark.parametrize(
    "url",
    [
        "http://Example.DE/",
        "https://a.de:443/p#frag",
        "http://a.de",
        "http://user@a.de:8080/p?x=1",
        "http://www.a.de/deep/path?q=a%20b",
    ],
)
def test_idempotent(url):
    once = canonicalize_url(url)
    assert canonicalize_url(once) == once


@given(
    host=st.from_regex(r"[a-z][a-z0-9]{0,8}(\.[a-z]{2,3}){1,2}", fullmatch=True),
    path=st.from_regex(r"(/[a-zA-Z0-9._-]{0,6}){0,3}", fullmatch=True),
)
def test_idempotence_property(host, path):
    url = "http://%s%s" % (host, path)
    once = canonicalize_url(url)
    assert canonicalize_url(once) == once


def test_host_of():
    assert host_of("http://user@a.de:8080/p") == "a.de"
    assert host_of("http://News.A.DE/") == "news.a.de"


def test_strip_www():
    assert strip_www("www.a.de") == "a.de"
    assert strip_www("a.de") == "a.de"
    assert strip_www("wwwx.a.de") == "wwwx.a.de"


def test_same_host_www_rule():
    assert same_host("http://www.a.de/x", "http://a.de/y")
    assert not same_host("http://www.a.de/x", "http://a.de/y", ignore_www=False)
    assert not same_host("http://b.de/x", "http://a.de/y")
