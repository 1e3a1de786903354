"""Key distribution for encrypted edge caching, with a cache simulator and benchmarks."""

from .errors import (
    CatalogError,
    ConfigError,
    CorruptCiphertext,
    CryptoError,
    DomainError,
    InvalidKey,
    InvalidReEncryption,
    InvalidScalar,
    MalformedEncoding,
    SolekError,
    WrongContext,
)
from .group import BN254, PROFILES, TOY, Group, OpCounter, get_profile
from .protocol import (
    EdgePublicKey,
    EdgeSecret,
    FirstLevelCiphertext,
    MasterSecret,
    PublicParams,
    ReEncryptedCiphertext,
    ReEncryptionKey,
    RecipientKey,
    ServicePublicKey,
    ServiceSecret,
    UserCredential,
    decrypt,
    dem_open,
    dem_seal,
    edge_key_ext,
    encrypt,
    encrypt_to,
    re_decrypt,
    re_encrypt,
    recipient_key,
    rekey_gen,
    serv_key_ext,
    setup,
    verify_edge_key,
    verify_service_key,
)

__version__ = "0.1.0"
