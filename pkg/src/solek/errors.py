"""Exception types shared across the package."""


class SolekError(Exception):
    """Base class for every error raised by this package."""


class CryptoError(SolekError):
    """A cryptographic check failed. The CLI maps these to exit code 2."""


class InvalidScalar(CryptoError, ValueError):
    pass


class DomainError(CryptoError, ValueError):
    """Unknown hash domain tag or out-of-range hash output length."""


class MalformedEncoding(CryptoError, ValueError):
    """Bytes do not decode to a canonical scalar, element, or wire record."""


class InvalidKey(CryptoError):
    """A public key failed its certificate check."""


class WrongContext(CryptoError):
    """Credential or re-encryption key does not match the ciphertext header."""


class CorruptCiphertext(CryptoError):
    """Authenticated decryption of the payload failed."""


class InvalidReEncryption(CryptoError):
    """Key-confirmation tag of a re-encrypted ciphertext did not verify."""


class ConfigError(SolekError, ValueError):
    """Invalid simulator configuration; the message names the offending field."""


class CatalogError(SolekError, KeyError):
    pass
