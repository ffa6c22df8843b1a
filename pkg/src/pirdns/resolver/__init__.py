"""Blind recursive resolver.

Exports are resolved lazily so that importing the blind query path
(``pirdns.resolver.answering``) never pulls in the record codec.
"""

import importlib

_EXPORTS = {
    "MalformedQueryError": "answering", "OverloadedError": "answering", "QueryHandler": "answering",
    "Snapshot": "answering", "UnknownClientError": "answering",
    "PopulateMessage": "populate", "PopulateRecord": "populate",
    "PopulateResult": "service", "RegistrationError": "service", "ResolverService": "service",
    "TranscriptSignature": "signing", "TranscriptSigner": "signing",
    "TrustEntry": "trust", "TrustRegistry": "trust",
}

__all__ = sorted(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        return getattr(importlib.import_module(f".{_EXPORTS[name]}", __name__), name)
    raise AttributeError(name)
