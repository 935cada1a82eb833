"""Exception hierarchy shared by every module."""


class WaveDHError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(WaveDHError, ValueError):
    """A tensor shape does not satisfy an operation's contract."""


class ConfigError(WaveDHError, ValueError):
    """Invalid layer or model configuration (channel/group divisibility, ratios)."""


class DomainError(WaveDHError, ValueError):
    """A scalar argument lies outside its valid domain."""


class ManifestError(WaveDHError, KeyError):
    """Weight paths supplied to a model do not match the paths it demands."""

    def __init__(self, missing=(), extra=(), mismatched=()):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        self.mismatched = sorted(mismatched)
        parts = []
        if self.missing:
            parts.append("missing: " + ", ".join(self.missing))
        if self.extra:
            parts.append("unexpected: " + ", ".join(self.extra))
        if self.mismatched:
            parts.append("shape mismatch: " + ", ".join(self.mismatched))
        super().__init__("; ".join(parts) or "manifest mismatch")

    def __str__(self):
        return self.args[0]


class FormatError(WaveDHError, ValueError):
    """A file does not follow the expected binary/text layout."""


class CorruptionError(FormatError):
    """A file is structurally valid but its lengths do not add up."""


class UnsupportedError(FormatError):
    """A file uses a feature this package deliberately does not handle."""
