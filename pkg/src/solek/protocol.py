"""Service- and location-bound key distribution over certificateless proxy re-encryption.

A trusted authority (TA) holds a master scalar ``s`` with ``P_pub = s*P``.
It certifies two kinds of key pairs with the same Schnorr-like shape:

* a *service key* for service ``ID_S``: public ``(X, Y, R)``, secret ``y``;
* an *edge key* for edge node ``ID_i`` in time slot ``t_i``: public
  ``(A, B, D)``, secret ``a``.

The public certificate check is ``R*P == Y + H1(X, Y, ID_S)*P_pub`` (resp.
``D*P == B + H1(A, B, ID_i, t_i)*P_pub``). The secret is ``y = x + R`` so
that the holder can also confirm ``y*P == X + R*P``.

Content is hybrid-encrypted. A fresh 256-bit session key ``k`` is hashed
ElGamal-encapsulated to the combined key ``(X + R*P) + (A + D*P)``, so that
opening it needs both the service secret and the secret of the edge area.
The payload is sealed with AES-256-GCM under ``H5(k)`` with the ciphertext
header as associated data.

An edge node re-targets a cached ciphertext at a neighbouring area ``ID_j``
with a re-encryption key ``(alpha, W, tag)``; the payload and the first two
ciphertext components are never touched.

Hash roles: H1 certificates, H2 KEM mask, H3 re-encryption scalar, H4
re-encryption key-confirmation tag, H5 session-key to payload-key.
"""

from __future__ import annotations

import hmac
import random
import struct
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import (
    CorruptCiphertext,
    InvalidKey,
    InvalidReEncryption,
    WrongContext,
)
from .group import Group, OpCounter, default_rng

H1, H2, H3, H4, H5 = "SOLEK/H1", "SOLEK/H2", "SOLEK/H3", "SOLEK/H4", "SOLEK/H5"

SESSION_KEY_BITS = 256
DEM_KEY_LEN = 32
DEM_NONCE_LEN = 12
DEM_TAG_LEN = 16
DEM_OVERHEAD = DEM_NONCE_LEN + DEM_TAG_LEN
CONFIRM_TAG_LEN = 32


def _ident(value: bytes | str) -> bytes:
    return value.encode("utf-8") if isinstance(value, str) else bytes(value)


def frame(*parts: bytes | int) -> bytes:
    """Unambiguous concatenation: bytes get a u16 length prefix, ints are u64."""
    out = bytearray()
    for part in parts:
        if isinstance(part, int):
            out += struct.pack(">Q", part)
        else:
            if len(part) > 0xFFFF:
                raise ValueError("framed field longer than 65535 bytes")
            out += struct.pack(">H", len(part)) + part
    return bytes(out)


def header_bytes(service_id: bytes, edge_id: bytes, epoch: int, content_id: bytes) -> bytes:
    """Associated data for the payload seal; identical for both ciphertext levels."""
    return frame(service_id, edge_id, content_id) + struct.pack(">Q", epoch)


# ---------------------------------------------------------------------------
# key material


@dataclass(frozen=True)
class PublicParams:
    group: Group
    p_pub: object
    session_bits: int = SESSION_KEY_BITS

    @property
    def session_len(self) -> int:
        return self.session_bits // 8


@dataclass(frozen=True)
class MasterSecret:
    s: int = field(repr=False)


@dataclass(frozen=True)
class ServicePublicKey:
    """``(X, Y, R)``: user-key commitment, certificate commitment, certificate response."""

    service_id: bytes
    key_commit: object
    cert_commit: object
    cert_response: int

    def __post_init__(self):
        object.__setattr__(self, "service_id", _ident(self.service_id))


@dataclass(frozen=True)
class ServiceSecret:
    service_id: bytes
    y: int = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "service_id", _ident(self.service_id))


@dataclass(frozen=True)
class EdgePublicKey:
    """``(A, B, D)`` for an edge node in time slot ``epoch``."""

    edge_id: bytes
    epoch: int
    key_commit: object
    cert_commit: object
    cert_response: int

    def __post_init__(self):
        object.__setattr__(self, "edge_id", _ident(self.edge_id))


@dataclass(frozen=True)
class EdgeSecret:
    edge_id: bytes
    epoch: int
    a: int = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "edge_id", _ident(self.edge_id))


@dataclass(frozen=True)
class UserCredential:
    """What a user carries: one service secret plus the secret of its current area."""

    service: ServiceSecret
    edge: EdgeSecret

    @property
    def service_id(self) -> bytes:
        return self.service.service_id

    @property
    def edge_id(self) -> bytes:
        return self.edge.edge_id

    @property
    def epoch(self) -> int:
        return self.edge.epoch


@dataclass(frozen=True)
class RecipientKey:
    """Verified ``(spk, epk)`` pair with its combined encapsulation key cached."""

    spk: ServicePublicKey
    epk: EdgePublicKey
    point: object


@dataclass(frozen=True)
class ReEncryptionKey:
    source_id: bytes
    target_id: bytes
    target_epoch: int
    alpha: int = field(repr=False)
    commitment: object
    confirm_tag: bytes

    def __post_init__(self):
        object.__setattr__(self, "source_id", _ident(self.source_id))
        object.__setattr__(self, "target_id", _ident(self.target_id))


# ---------------------------------------------------------------------------
# ciphertexts


@dataclass(frozen=True)
class FirstLevelCiphertext:
    service_id: bytes
    edge_id: bytes
    epoch: int
    content_id: bytes
    ephemeral: object  # E1 = w*P
    masked_key: bytes  # E2 = k xor mask
    payload: bytes  # Em = nonce || AES-GCM ciphertext || tag

    def __post_init__(self):
        for name in ("service_id", "edge_id", "content_id"):
            object.__setattr__(self, name, _ident(getattr(self, name)))

    @property
    def header(self) -> bytes:
        return header_bytes(self.service_id, self.edge_id, self.epoch, self.content_id)


@dataclass(frozen=True)
class ReEncryptedCiphertext:
    service_id: bytes
    edge_id: bytes
    epoch: int
    target_id: bytes
    target_epoch: int
    content_id: bytes
    ephemeral: object
    transformed: object  # E1' = alpha*E1
    masked_key: bytes
    commitment: object  # W
    confirm_tag: bytes  # R_ij
    payload: bytes

    def __post_init__(self):
        for name in ("service_id", "edge_id", "target_id", "content_id"):
            object.__setattr__(self, name, _ident(getattr(self, name)))

    @property
    def header(self) -> bytes:
        # payload was sealed under the first-level header
        return header_bytes(self.service_id, self.edge_id, self.epoch, self.content_id)

    def components(self) -> tuple:
        """The six ciphertext components in wire order."""
        return (
            self.ephemeral,
            self.transformed,
            self.masked_key,
            self.commitment,
            self.confirm_tag,
            self.payload,
        )


# ---------------------------------------------------------------------------
# payload encapsulation


def dem_seal(key: bytes, ad: bytes, message: bytes, rng: random.Random | None = None) -> bytes:
    if len(key) != DEM_KEY_LEN:
        raise ValueError(f"payload key must be {DEM_KEY_LEN} bytes")
    nonce = (rng or default_rng()).randbytes(DEM_NONCE_LEN)
    return nonce + AESGCM(key).encrypt(nonce, message, ad)


def dem_open(key: bytes, ad: bytes, blob: bytes) -> bytes:
    if len(key) != DEM_KEY_LEN:
        raise ValueError(f"payload key must be {DEM_KEY_LEN} bytes")
    if len(blob) < DEM_OVERHEAD:
        raise CorruptCiphertext("payload shorter than nonce and tag")
    try:
        return AESGCM(key).decrypt(blob[:DEM_NONCE_LEN], blob[DEM_NONCE_LEN:], ad)
    except InvalidTag:
        raise CorruptCiphertext("payload authentication failed") from None


def _xor(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


# ---------------------------------------------------------------------------
# TA algorithms


def setup(group: Group, rng: random.Random | None = None) -> tuple[PublicParams, MasterSecret]:
    s = group.random_scalar(rng)
    p_pub = group.base_mul(s)
    group.precompute(p_pub)
    return PublicParams(group, p_pub), MasterSecret(s)


def _certify(params: PublicParams, ms: MasterSecret, hash_input, rng):
    """Shared key extraction: returns (key_commit, cert_commit, cert_response, secret)."""
    g = params.group
    x = g.random_scalar(rng)
    r = g.random_scalar(rng)
    key_commit = g.base_mul(x)
    cert_commit = g.base_mul(r)
    h = g.hash_to_scalar(H1, hash_input(key_commit, cert_commit))
    response = (r + ms.s * h) % g.order
    secret = (x + response) % g.order
    return key_commit, cert_commit, response, secret


def _service_h1_input(params, service_id):
    enc = params.group.encode
    return lambda key_commit, cert_commit: frame(enc(key_commit), enc(cert_commit), service_id)


def _edge_h1_input(params, edge_id, epoch):
    enc = params.group.encode
    return lambda key_commit, cert_commit: frame(enc(key_commit), enc(cert_commit), edge_id, epoch)


def serv_key_ext(
    params: PublicParams, ms: MasterSecret, service_id: bytes | str, rng: random.Random | None = None
) -> tuple[ServiceSecret, ServicePublicKey]:
    service_id = _ident(service_id)
    if not service_id:
        raise ValueError("service id must be nonempty")
    X, Y, R, y = _certify(params, ms, _service_h1_input(params, service_id), rng)
    return ServiceSecret(service_id, y), ServicePublicKey(service_id, X, Y, R)


def edge_key_ext(
    params: PublicParams,
    ms: MasterSecret,
    edge_id: bytes | str,
    epoch: int,
    rng: random.Random | None = None,
) -> tuple[EdgeSecret, EdgePublicKey]:
    edge_id = _ident(edge_id)
    if not edge_id:
        raise ValueError("edge id must be nonempty")
    if not 0 <= epoch < 2**64:
        raise ValueError("epoch must fit in an unsigned 64-bit integer")
    A, B, D, a = _certify(params, ms, _edge_h1_input(params, edge_id, epoch), rng)
    return EdgeSecret(edge_id, epoch, a), EdgePublicKey(edge_id, epoch, A, B, D)


def _check_certificate(params, key_commit, cert_commit, response, hash_input, secret, counter) -> bool:
    g = params.group
    if g.is_identity(key_commit) or g.is_identity(cert_commit):
        return False
    if not 0 <= response < g.order:
        return False
    h = g.hash_to_scalar(H1, hash_input(key_commit, cert_commit), counter)
    lhs = g.base_mul(response, counter)
    rhs = g.element_add(cert_commit, g.scalar_mul(h, params.p_pub, counter), counter)
    if lhs != rhs:
        return False
    if secret is None:
        return True
    # lhs is response*P, so the secret check costs one more multiplication
    return g.base_mul(secret, counter) == g.element_add(key_commit, lhs, counter)


def verify_service_key(
    params: PublicParams,
    spk: ServicePublicKey,
    secret: ServiceSecret | None = None,
    counter: OpCounter | None = None,
) -> bool:
    """Certificate check; with ``secret`` also confirms ``y*P == X + R*P``."""
    if secret is not None and secret.service_id != spk.service_id:
        return False
    return _check_certificate(
        params,
        spk.key_commit,
        spk.cert_commit,
        spk.cert_response,
        _service_h1_input(params, spk.service_id),
        None if secret is None else secret.y,
        counter,
    )


def verify_edge_key(
    params: PublicParams,
    epk: EdgePublicKey,
    secret: EdgeSecret | None = None,
    counter: OpCounter | None = None,
) -> bool:
    """Certificate check; with ``secret`` also confirms ``a*P == A + D*P``."""
    if secret is not None and (secret.edge_id, secret.epoch) != (epk.edge_id, epk.epoch):
        return False
    return _check_certificate(
        params,
        epk.key_commit,
        epk.cert_commit,
        epk.cert_response,
        _edge_h1_input(params, epk.edge_id, epk.epoch),
        None if secret is None else secret.a,
        counter,
    )


# ---------------------------------------------------------------------------
# content encryption


def _full_key(params, key_commit, response, counter):
    g = params.group
    return g.element_add(key_commit, g.base_mul(response, counter), counter)


def recipient_key(
    params: PublicParams,
    spk: ServicePublicKey,
    epk: EdgePublicKey,
    counter: OpCounter | None = None,
) -> RecipientKey:
    """Verify both certificates and combine the full public keys.

    Certificate checks are not charged to ``counter``; the two full-key
    multiplications are. Cache the result to encrypt repeatedly to the same
    (service, area, time slot) for two multiplications per message.
    """
    if not verify_service_key(params, spk):
        raise InvalidKey(f"service key for {spk.service_id!r} failed certificate check")
    if not verify_edge_key(params, epk):
        raise InvalidKey(f"edge key for {epk.edge_id!r} failed certificate check")
    pk_service = _full_key(params, spk.key_commit, spk.cert_response, counter)
    pk_edge = _full_key(params, epk.key_commit, epk.cert_response, counter)
    return RecipientKey(spk, epk, params.group.element_add(pk_service, pk_edge, counter))


def _mask(params, service_id, edge_id, epoch, ephemeral, shared, counter) -> bytes:
    g = params.group
    data = frame(service_id, edge_id, epoch, g.encode(ephemeral), g.encode(shared))
    return g.hash_to_bytes(H2, data, params.session_len, counter)


def _payload_key(params, session_key, counter) -> bytes:
    return params.group.hash_to_bytes(H5, frame(session_key), DEM_KEY_LEN, counter)


def encrypt_to(
    params: PublicParams,
    recipient: RecipientKey,
    message: bytes,
    content_id: bytes | str,
    rng: random.Random | None = None,
    counter: OpCounter | None = None,
) -> FirstLevelCiphertext:
    rng = rng or default_rng()
    g = params.group
    spk, epk = recipient.spk, recipient.epk
    content_id = _ident(content_id)
    w = g.random_scalar(rng)
    ephemeral = g.base_mul(w, counter)
    shared = g.scalar_mul(w, recipient.point, counter)
    session_key = rng.randbytes(params.session_len)
    mask = _mask(params, spk.service_id, epk.edge_id, epk.epoch, ephemeral, shared, counter)
    ad = header_bytes(spk.service_id, epk.edge_id, epk.epoch, content_id)
    payload = dem_seal(_payload_key(params, session_key, counter), ad, message, rng)
    return FirstLevelCiphertext(
        spk.service_id, epk.edge_id, epk.epoch, content_id, ephemeral, _xor(session_key, mask), payload
    )


def encrypt(
    params: PublicParams,
    spk: ServicePublicKey,
    epk: EdgePublicKey,
    message: bytes,
    content_id: bytes | str,
    rng: random.Random | None = None,
    counter: OpCounter | None = None,
) -> FirstLevelCiphertext:
    """Origin-side encryption of ``message`` for users of ``spk`` inside ``epk``'s area.

    Raises InvalidKey if either certificate fails. Charges four scalar
    multiplications to ``counter``.
    """
    return encrypt_to(params, recipient_key(params, spk, epk, counter), message, content_id, rng, counter)


def _check_context(cred: UserCredential, service_id, edge_id, epoch) -> None:
    if cred.service_id != service_id:
        raise WrongContext(f"credential is for service {cred.service_id!r}, ciphertext for {service_id!r}")
    if (cred.edge_id, cred.epoch) != (edge_id, epoch):
        raise WrongContext(
            f"credential is for area {cred.edge_id!r}@{cred.epoch}, ciphertext for {edge_id!r}@{epoch}"
        )


def decrypt(
    params: PublicParams,
    cred: UserCredential,
    ct: FirstLevelCiphertext,
    counter: OpCounter | None = None,
) -> bytes:
    _check_context(cred, ct.service_id, ct.edge_id, ct.epoch)
    g = params.group
    if g.is_identity(ct.ephemeral) or len(ct.masked_key) != params.session_len:
        raise CorruptCiphertext("malformed key encapsulation")
    shared = g.scalar_mul(cred.service.y + cred.edge.a, ct.ephemeral, counter)
    mask = _mask(params, ct.service_id, ct.edge_id, ct.epoch, ct.ephemeral, shared, counter)
    session_key = _xor(ct.masked_key, mask)
    return dem_open(_payload_key(params, session_key, counter), ct.header, ct.payload)


# ---------------------------------------------------------------------------
# re-encryption


def _rekey_material(params, source_id, target_id, target_epoch, commitment, shared, counter):
    g = params.group
    data = frame(source_id, target_id, target_epoch, g.encode(commitment), g.encode(shared))
    h3 = g.hash_to_scalar(H3, data, counter)
    tag = g.hash_to_bytes(H4, data, CONFIRM_TAG_LEN, counter)
    return h3, tag


def rekey_gen(
    params: PublicParams,
    source: EdgeSecret,
    target: EdgePublicKey,
    rng: random.Random | None = None,
    counter: OpCounter | None = None,
) -> ReEncryptionKey:
    """Edge node ``source`` delegates its area's ciphertexts to ``target``'s area.

    The key is ciphertext-independent and bound to ``target.epoch``.
    """
    if not verify_edge_key(params, target):
        raise InvalidKey(f"edge key for {target.edge_id!r} failed certificate check")
    g = params.group
    pk_target = _full_key(params, target.key_commit, target.cert_response, counter)
    rho = g.random_scalar(rng)
    commitment = g.base_mul(rho, counter)
    shared = g.scalar_mul(rho, pk_target, counter)
    h3, tag = _rekey_material(params, source.edge_id, target.edge_id, target.epoch, commitment, shared, counter)
    alpha = (source.a + h3) % g.order
    return ReEncryptionKey(source.edge_id, target.edge_id, target.epoch, alpha, commitment, tag)


def re_encrypt(
    params: PublicParams,
    rk: ReEncryptionKey,
    ct: FirstLevelCiphertext,
    counter: OpCounter | None = None,
) -> ReEncryptedCiphertext:
    if rk.source_id != ct.edge_id:
        raise WrongContext(f"re-encryption key is from {rk.source_id!r}, ciphertext addressed to {ct.edge_id!r}")
    transformed = params.group.scalar_mul(rk.alpha, ct.ephemeral, counter)
    return ReEncryptedCiphertext(
        service_id=ct.service_id,
        edge_id=ct.edge_id,
        epoch=ct.epoch,
        target_id=rk.target_id,
        target_epoch=rk.target_epoch,
        content_id=ct.content_id,
        ephemeral=ct.ephemeral,
        transformed=transformed,
        masked_key=ct.masked_key,
        commitment=rk.commitment,
        confirm_tag=rk.confirm_tag,
        payload=ct.payload,
    )


def re_decrypt(
    params: PublicParams,
    cred: UserCredential,
    rct: ReEncryptedCiphertext,
    counter: OpCounter | None = None,
) -> bytes:
    _check_context(cred, rct.service_id, rct.target_id, rct.target_epoch)
    g = params.group
    if g.is_identity(rct.ephemeral) or len(rct.masked_key) != params.session_len:
        raise CorruptCiphertext("malformed key encapsulation")
    if g.is_identity(rct.commitment):
        raise InvalidReEncryption("degenerate re-encryption commitment")
    shared = g.scalar_mul(cred.edge.a, rct.commitment, counter)
    h3, tag = _rekey_material(
        params, rct.edge_id, rct.target_id, rct.target_epoch, rct.commitment, shared, counter
    )
    if not hmac.compare_digest(tag, rct.confirm_tag):
        raise InvalidReEncryption("key-confirmation tag mismatch")
    # (y + a_i + h3)*E1 - h3*E1 == (y + a_i)*E1
    kem_shared = g.element_add(
        g.element_add(g.scalar_mul(cred.service.y, rct.ephemeral, counter), rct.transformed, counter),
        g.neg(g.scalar_mul(h3, rct.ephemeral, counter)),
        counter,
    )
    mask = _mask(params, rct.service_id, rct.edge_id, rct.epoch, rct.ephemeral, kem_shared, counter)
    session_key = _xor(rct.masked_key, mask)
    return dem_open(_payload_key(params, session_key, counter), rct.header, rct.payload)
