from typing import Dict, Optional


class ExchangeError(Exception):
    """Base class for every document exchange failure."""
    pass


class ParameterError(ExchangeError):
    """Inconsistent scheme parameters or command-line flags."""
    pass


class InsufficientEntropy(ExchangeError):
    """Entropy stream shorter than the total seed width."""
    pass


class EnumerationCapExceeded(ExchangeError):
    """Seed support too large to enumerate."""
    pass


class FieldMismatch(ExchangeError):
    """Arithmetic between elements of different fields."""
    pass


class DecodeFailure(ExchangeError):
    """Reed-Solomon decoding found no codeword within the unique decoding radius."""
    pass


class SeedSearchExhausted(ExchangeError):
    """No seed in the support avoids bad self-matchings."""
    pass


class FormatError(ExchangeError):
    """Malformed DXS1/DXC1 bytes."""
    pass


class Truncation(FormatError):
    pass


class BadMagic(FormatError):
    pass


class VersionMismatch(FormatError):
    pass


class ChecksumMismatch(FormatError):
    pass


class LengthMismatch(FormatError):
    pass


class WitnessSearchExhausted(ExchangeError):
    """No witness and value assignment matched the verification payload."""

    def __init__(self, message: str, failures: Optional[Dict[int, str]] = None):
        super().__init__(message)
        self.failures = failures or {}


class FinalCheckMismatch(ExchangeError):
    """Reconstructed file disagrees with the whole-file check hash."""
    pass


class InnerDecodeFailure(ExchangeError):
    """The inner insertion/deletion code could not resynchronize."""
    pass


class RecoveryFailure(ExchangeError):
    """Document recovery from a codeword failed after the inner decode succeeded."""
    pass
