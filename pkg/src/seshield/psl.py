"""Registrable-domain (eTLD+1) extraction against a public-suffix rule list.

Naive dot-splitting miscounts multi-label suffixes such as ``co.uk``, which
would corrupt any grouping keyed on second-level domains. This module applies
the standard public-suffix matching algorithm (longest rule wins, ``*.``
wildcards match one label, ``!`` exceptions override) over a bundled snapshot.
"""

from __future__ import annotations

import importlib.resources
from functools import lru_cache
from pathlib import Path
from urllib.parse import urlsplit

_DEFAULT_RULES_RESOURCE = "public_suffixes.dat"


class DomainSplitter:
    """Matches hostnames against public-suffix rules to find the eTLD+1."""

    def __init__(self, rules_path: str | Path | None = None):
        if rules_path is None:
            ref = importlib.resources.files("seshield.data") / _DEFAULT_RULES_RESOURCE
            text = ref.read_text(encoding="utf-8")
        else:
            text = Path(rules_path).read_text(encoding="utf-8")
        self.rules: set[str] = set()
        self.exceptions: set[str] = set()
        for line in text.splitlines():
            line = line.strip().lower()
            if not line or line.startswith("//"):
                continue
            if line.startswith("!"):
                self.exceptions.add(line[1:])
            else:
                self.rules.add(line)

    def public_suffix(self, host: str) -> str:
        labels = host.lower().strip(".").split(".")
        # Exception rules win outright; their suffix drops the leading label.
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            if candidate in self.exceptions:
                return ".".join(labels[i + 1:])
        best = labels[-1]  # implicit "*" rule: the bare TLD
        for i in range(len(labels)):
            tail = labels[i:]
            candidate = ".".join(tail)
            wildcard = ".".join(["*"] + tail[1:]) if len(tail) >= 1 else ""
            if candidate in self.rules or wildcard in self.rules:
                if len(tail) > len(best.split(".")):
                    best = candidate
        return best

    def registrable_domain(self, host: str) -> str:
        """eTLD+1 of ``host``; the empty string if host IS a public suffix."""
        host = host.lower().strip(".")
        if not host or "." not in host:
            return host
        suffix = self.public_suffix(host)
        labels = host.split(".")
        n_suffix = len(suffix.split(".")) if suffix else 0
        if len(labels) <= n_suffix:
            return ""
        return ".".join(labels[-(n_suffix + 1):])


@lru_cache(maxsize=1)
def default_splitter() -> DomainSplitter:
    return DomainSplitter()


def sld_of_url(url: str, splitter: DomainSplitter | None = None) -> str:
    """Second-level domain (eTLD+1) of a URL, no scheme, no subdomain."""
    splitter = splitter or default_splitter()
    host = urlsplit(url).hostname
    if host is None:
        # Tolerate scheme-less inputs like "sub.example.co.uk/path".
        host = urlsplit("//" + url).hostname
    if host is None:
        raise ValueError(f"cannot extract hostname from url: {url!r}")
    return splitter.registrable_domain(host)
