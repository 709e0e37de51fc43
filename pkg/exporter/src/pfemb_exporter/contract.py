"""The cross-tool contract shared with the ranking pipeline, version 1.

The exporter deliberately does not import the ranking package: it talks
to it only through file formats (task TSV, lexicon TSV, PFEMB stores).
Everything in this module therefore re-derives, byte for byte, the key
scheme and query construction the pipeline documents:

  * query texts      -> ``q:<sha1 of UTF-8 text>``
  * candidate images -> ``img:<candidate id>``
  * captions         -> ``cap:<instance id>#<slot>`` (0-based slot)
  * typer features reuse the query scheme on ``<sentence> [SEP] <compound>``

Query texts are the template renderings of both the original sentence
and, when the lexicon covers the compound, the rewritten sentence (the
pipeline picks one at runtime, so the exporter emits the superset). Any
change here requires bumping ``KEY_SCHEME_VERSION`` on both sides.
"""

from __future__ import annotations

import hashlib
import re

KEY_SCHEME_VERSION = "1"

FEATURE_SEPARATOR = " [SEP] "

DEFAULT_TEMPLATES = (
    "{sentence}",
    'photo illustrating "{compound}": {sentence}',
    "{sentence} ({compound} means {definition})",
)


def query_key(text: str) -> str:
    return "q:" + hashlib.sha1(text.encode("utf-8")).hexdigest()


def image_key(candidate_id: str) -> str:
    return "img:" + candidate_id


def caption_key(instance_id: str, slot: int) -> str:
    return f"cap:{instance_id}#{slot}"


def feature_text(sentence: str, compound: str) -> str:
    return sentence + FEATURE_SEPARATOR + compound


def normalize_idiom(text: str) -> str:
    return " ".join(text.casefold().split())


def rewrite_sentence(sentence: str, compound: str, paraphrase: str) -> str | None:
    """Apply the pipeline's substitution rule; None when nothing matches."""
    tokens = [re.escape(tok) for tok in compound.split()]
    pattern = re.compile(r"\b" + r"\s+".join(tokens) + r"\b", re.IGNORECASE)
    rewritten, count = pattern.subn(paraphrase, sentence)
    return rewritten if count else None


def render_queries(
    sentence: str,
    compound: str,
    definitions: tuple[str, ...],
    fewshot: tuple[str, ...],
    templates: tuple[str, ...],
) -> list[str]:
    prefix = (" ".join(fewshot) + " ") if fewshot else ""
    rendered: list[str] = []
    for template in templates:
        if "{definition}" in template:
            for definition in definitions:
                rendered.append(
                    prefix
                    + template.format(
                        sentence=sentence, compound=compound, definition=definition
                    )
                )
        else:
            rendered.append(prefix + template.format(sentence=sentence, compound=compound))
    return rendered
