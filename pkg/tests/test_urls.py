import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarscope.urls import URLRejected, canonicalize_url, try_canonicalize


@pytest.mark.parametrize("raw,want", [
    ("https://www.hs.fi/politiikka/art-1.html", ("hs.fi", "hs.fi/politiikka/art-1.html")),
    ("http://m.iltalehti.fi/a?utm_source=tw&id=3&fbclid=x", ("iltalehti.fi", "iltalehti.fi/a?id=3")),
    ("HTTPS://WWW.YLE.FI/uutiset/3-1#top", ("yle.fi", "yle.fi/uutiset/3-1")),
    ("https://yle.fi/a?b=2&a=1&share=1&REF=t", ("yle.fi", "yle.fi/a?a=1&b=2")),
    ("//hs.fi/x", ("hs.fi", "hs.fi/x")),
    ("hs.fi/x", ("hs.fi", "hs.fi/x")),
    ("https://hs.fi:443/x", ("hs.fi", "hs.fi/x")),
    ("https://www.m.hs.fi/x", ("hs.fi", "hs.fi/x")),
    ("https://www.fi/x", ("www.fi", "www.fi/x")),
])
def test_canonical_forms(raw, want):
    assert canonicalize_url(raw) == want


def test_path_case_is_kept():
    assert canonicalize_url("https://hs.fi/A")[1] != canonicalize_url("https://hs.fi/a")[1]


@pytest.mark.parametrize("raw", ["", "   ", "mailto:x@hs.fi", "ftp://hs.fi/x", "https://localhost/x", "https://",
                                 "https://hs..fi/x", "https://hs.fi:99999/x"])
def test_rejected(raw):
    with pytest.raises(URLRejected):
        canonicalize_url(raw)
    assert try_canonicalize(raw) is None


segment = st.text(alphabet="abcdefghij0123456789-", min_size=1, max_size=6)


@given(host=st.lists(segment, min_size=2, max_size=3), path=st.lists(segment, max_size=3),
       query=st.lists(st.tuples(st.sampled_from(["a", "utm_x", "id", "ref"]), segment), max_size=3),
       prefix=st.sampled_from(["https://", "http://www.", "//m.", ""]))
def test_idempotent(host, path, query, prefix):
    raw = prefix + ".".join(host) + "/" + "/".join(path)
    if query:
        raw += "?" + "&".join(f"{k}={v}" for k, v in query)
    outlet, key = canonicalize_url(raw)
    assert canonicalize_url(key) == (outlet, key)
    assert "utm_" not in key and "ref=" not in key
