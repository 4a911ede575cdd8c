"""URL canonicalization for news-article identity."""
from __future__ import annotations

import re
from urllib.parse import parse_qsl, urlencode, urlsplit

TRACKING_PREFIXES = ("utm_",)
TRACKING_PARAMS = frozenset({"fbclid", "share", "ref"})
STRIPPED_LABELS = ("www.", "m.")

_HAS_SCHEME = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.\-]*://")
_OTHER_SCHEME = re.compile(r"^[a-zA-Z][a-zA-Z0-9+.\-]*:(?!\d)")


class URLRejected(ValueError):
    """The input cannot name a news article."""


def _is_tracking(key: str, prefixes, params) -> bool:
    k = key.lower()
    return k in params or k.startswith(prefixes)


def canonicalize_url(raw: str, tracking_prefixes=TRACKING_PREFIXES,
                     tracking_params=TRACKING_PARAMS) -> tuple[str, str]:
    """Return ``(outlet, article_key)`` or raise :class:`URLRejected`.

    Scheme-less input (such as an article key itself) is read as http, which
    makes the operation idempotent on its own output.
    """
    if not isinstance(raw, str) or not raw.strip():
        raise URLRejected("empty URL")
    text = raw.strip()
    if text.startswith("//"):
        text = "http:" + text
    elif not _HAS_SCHEME.match(text):
        if _OTHER_SCHEME.match(text):
            raise URLRejected(f"unsupported scheme in {raw!r}")
        text = "http://" + text
    try:
        parts = urlsplit(text)
        host = parts.hostname
        parts.port  # raises on a malformed port
    except ValueError as exc:
        raise URLRejected(f"unparseable URL {raw!r}: {exc}") from None
    if parts.scheme.lower() not in ("http", "https"):
        raise URLRejected(f"unsupported scheme {parts.scheme!r}")
    if not host or "." not in host or any(not label for label in host.split(".")):
        raise URLRejected(f"no usable host in {raw!r}")
    host = host.lower()
    stripped = True
    while stripped:
        stripped = False
        for label in STRIPPED_LABELS:
            if host.startswith(label) and "." in host[len(label):]:
                host = host[len(label):]
                stripped = True
    query = [(k, v) for k, v in parse_qsl(parts.query, keep_blank_values=True)
             if not _is_tracking(k, tuple(tracking_prefixes), tracking_params)]
    query.sort()
    key = host + parts.path
    if query:
        key += "?" + urlencode(query)
    return host, key


def try_canonicalize(raw: str, **kwargs) -> tuple[str, str] | None:
    try:
        return canonicalize_url(raw, **kwargs)
    except URLRejected:
        return None
