"""Embedding-store keying scheme, version 1.

This is a cross-tool contract: the offline exporter derives the same keys
from the same dataset, so both sides must agree byte-for-byte. Do not
change any derivation here without bumping ``KEY_SCHEME_VERSION``.

Scheme v1:
  * query texts      -> ``q:<sha1 of UTF-8 text>``   (content-addressed,
                        so caches survive re-runs and dataset reshuffles)
  * candidate images -> ``img:<candidate id>``
  * captions         -> ``cap:<instance id>#<slot>`` with 0-based slot
  * classifier features reuse the query scheme on the feature text
"""

from __future__ import annotations

import hashlib

KEY_SCHEME_VERSION = "1"

# Separator used when concatenating sentence and compound into the
# sentence-type classifier's feature text.
FEATURE_SEPARATOR = " [SEP] "


def query_key(text: str) -> str:
    """Content-addressed key for a rendered query text."""
    return "q:" + hashlib.sha1(text.encode("utf-8")).hexdigest()


def image_key(candidate_id: str) -> str:
    """Key for a candidate image embedding."""
    return "img:" + candidate_id


def caption_key(instance_id: str, slot: int) -> str:
    """Key for the caption embedding of one candidate slot (0-based)."""
    if not 0 <= slot:
        raise ValueError(f"slot must be nonnegative, got {slot}")
    return f"cap:{instance_id}#{slot}"


def feature_text(sentence: str, compound: str) -> str:
    """Text whose embedding feeds the sentence-type classifier."""
    return sentence + FEATURE_SEPARATOR + compound


def feature_key(sentence: str, compound: str) -> str:
    """Key for a sentence-type classifier feature embedding."""
    return query_key(feature_text(sentence, compound))
