"""Exporter failure types."""


class ExporterError(Exception):
    """Base class for expected exporter failures."""


class ManifestError(ExporterError):
    """The export manifest is malformed or references missing inputs."""


class KeySchemeMismatch(ExporterError):
    """Manifest requests a keying-scheme version this exporter cannot produce."""


class ModelLoadError(ExporterError):
    """A real encoder backend could not be loaded."""


class DataError(ExporterError):
    """The dataset or lexicon file is malformed."""
