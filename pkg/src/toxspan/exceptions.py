"""Exception hierarchy shared by all toxspan modules."""


class ToxspanError(Exception):
    """Base class for all errors raised by this package."""


class IngestError(ToxspanError):
    """A source file row or record could not be converted to a sample."""


class FormatError(ToxspanError):
    """A prediction, score, or lexicon file violates its documented format."""


class ConfigError(ToxspanError):
    """An experiment configuration is missing or inconsistent."""
