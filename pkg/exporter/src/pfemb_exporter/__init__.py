"""Offline embedding exporter for the idiom-ranking pipeline.

Reads a dataset TSV (plus schema and optional lexicon), derives every
embedding key the ranking pipeline can request, and writes one PFEMB
store per similarity stream. Synth mode produces deterministic
pseudo-random vectors for hermetic testing, including a "planted" mode
that makes a chosen candidate win; real mode plugs in sentence-encoder
backends and is best-effort only.
"""

from .contract import KEY_SCHEME_VERSION
from .errors import ExporterError, KeySchemeMismatch, ManifestError, ModelLoadError
from .export import enumerate_demands, export, synth, write_pfemb
from .manifest import ExportManifest, load_manifest

__all__ = [
    "KEY_SCHEME_VERSION",
    "ExporterError",
    "KeySchemeMismatch",
    "ManifestError",
    "ModelLoadError",
    "ExportManifest",
    "load_manifest",
    "enumerate_demands",
    "export",
    "synth",
    "write_pfemb",
]
