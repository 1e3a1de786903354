"""Binary key and ciphertext files.

Every record is::

    b"SOLK" | version 0x01 | type byte | identifiers | fixed fields [| payload]

Identifiers are u16 big-endian length-prefixed byte strings. Fixed fields
follow in declaration order: time slots as u64 big-endian, elements and
scalars in the group's canonical fixed-length encoding, tags raw. A trailing
payload (the sealed content) is u32 length-prefixed. Decoding is strict:
wrong lengths, trailing bytes, non-canonical encodings and identity elements
where a generator-multiple is required all raise MalformedEncoding.
"""

from __future__ import annotations

import struct

from .errors import DomainError, MalformedEncoding
from .group import Group, get_profile
from .protocol import (
    CONFIRM_TAG_LEN,
    DEM_OVERHEAD,
    EdgePublicKey,
    EdgeSecret,
    FirstLevelCiphertext,
    MasterSecret,
    PublicParams,
    ReEncryptedCiphertext,
    ReEncryptionKey,
    ServicePublicKey,
    ServiceSecret,
    UserCredential,
)

MAGIC = b"SOLK"
VERSION = 0x01

T_PARAMS = 0x01
T_SPK = 0x02
T_EPK = 0x03
T_SECRET = 0x04
T_CT1 = 0x05
T_CT2 = 0x06
T_REKEY = 0x07

PREAMBLE_LEN = len(MAGIC) + 2

def _preamble(kind: int) -> bytes:
    return MAGIC + bytes([VERSION, kind])


def _ids(*values: bytes) -> bytes:
    out = bytearray()
    for v in values:
        if len(v) > 0xFFFF:
            raise ValueError("identifier longer than 65535 bytes")
        out += struct.pack(">H", len(v)) + v
    return bytes(out)


def _u64(v: int) -> bytes:
    return struct.pack(">Q", v)


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n: int) -> bytes:
        if n < 0 or self.pos + n > len(self.data):
            raise MalformedEncoding("record truncated")
        out = bytes(self.data[self.pos : self.pos + n])
        self.pos += n
        return out

    def ident(self) -> bytes:
        (n,) = struct.unpack(">H", self.take(2))
        return self.take(n)

    def u64(self) -> int:
        return struct.unpack(">Q", self.take(8))[0]

    def u32_blob(self) -> bytes:
        (n,) = struct.unpack(">I", self.take(4))
        return self.take(n)

    def element(self, group: Group, allow_identity: bool = False):
        el = group.decode(self.take(group.element_len))
        if not allow_identity and group.is_identity(el):
            raise MalformedEncoding("identity element not allowed here")
        return el

    def scalar(self, group: Group) -> int:
        return group.decode_scalar(self.take(group.scalar_len))

    def done(self) -> None:
        if self.pos != len(self.data):
            raise MalformedEncoding(f"{len(self.data) - self.pos} trailing bytes")


def record_type(data: bytes) -> int:
    if len(data) < PREAMBLE_LEN or data[:4] != MAGIC:
        raise MalformedEncoding("missing SOLK magic")
    if data[4] != VERSION:
        raise MalformedEncoding(f"unsupported version {data[4]}")
    kind = data[5]
    if kind not in _DECODERS:
        raise MalformedEncoding(f"unknown record type 0x{kind:02x}")
    return kind


# -- encoders ---------------------------------------------------------------


def dumps(obj, group: Group | None = None) -> bytes:
    """Serialize any protocol object. ``group`` defaults to the params' own group."""
    if isinstance(obj, PublicParams):
        g = obj.group
        return (
            _preamble(T_PARAMS)
            + _ids(g.name.encode("ascii"))
            + g.encode(obj.p_pub)
            + struct.pack(">H", obj.session_bits)
        )
    if group is None:
        raise TypeError("group is required for non-params records")
    enc, sc = group.encode, group.encode_scalar
    if isinstance(obj, ServicePublicKey):
        return (
            _preamble(T_SPK)
            + _ids(obj.service_id)
            + enc(obj.key_commit)
            + enc(obj.cert_commit)
            + sc(obj.cert_response)
        )
    if isinstance(obj, EdgePublicKey):
        return (
            _preamble(T_EPK)
            + _ids(obj.edge_id)
            + _u64(obj.epoch)
            + enc(obj.key_commit)
            + enc(obj.cert_commit)
            + sc(obj.cert_response)
        )
    if isinstance(obj, (MasterSecret, ServiceSecret, EdgeSecret, UserCredential)):
        return _dump_secret(obj, group)
    if isinstance(obj, FirstLevelCiphertext):
        return (
            _preamble(T_CT1)
            + _ids(obj.service_id, obj.edge_id, obj.content_id)
            + _u64(obj.epoch)
            + enc(obj.ephemeral)
            + obj.masked_key
            + struct.pack(">I", len(obj.payload))
            + obj.payload
        )
    if isinstance(obj, ReEncryptedCiphertext):
        return (
            _preamble(T_CT2)
            + _ids(obj.service_id, obj.edge_id, obj.target_id, obj.content_id)
            + _u64(obj.epoch)
            + _u64(obj.target_epoch)
            + enc(obj.ephemeral)
            + enc(obj.transformed)
            + obj.masked_key
            + enc(obj.commitment)
            + obj.confirm_tag
            + struct.pack(">I", len(obj.payload))
            + obj.payload
        )
    if isinstance(obj, ReEncryptionKey):
        return (
            _preamble(T_REKEY)
            + _ids(obj.source_id, obj.target_id)
            + _u64(obj.target_epoch)
            + sc(obj.alpha)
            + enc(obj.commitment)
            + obj.confirm_tag
        )
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump_secret(obj, group: Group) -> bytes:
    sc = group.encode_scalar
    if isinstance(obj, MasterSecret):
        kind, sid, eid, epoch, scalars = b"master", b"", b"", 0, [obj.s]
    elif isinstance(obj, ServiceSecret):
        kind, sid, eid, epoch, scalars = b"service", obj.service_id, b"", 0, [obj.y]
    elif isinstance(obj, EdgeSecret):
        kind, sid, eid, epoch, scalars = b"edge", b"", obj.edge_id, obj.epoch, [obj.a]
    else:
        kind, sid, eid, epoch = b"credential", obj.service_id, obj.edge_id, obj.epoch
        scalars = [obj.service.y, obj.edge.a]
    return _preamble(T_SECRET) + _ids(kind, sid, eid) + _u64(epoch) + b"".join(sc(s) for s in scalars)


# -- decoders ---------------------------------------------------------------


def _load_params(r: _Reader, group):
    try:
        g = get_profile(r.ident().decode("ascii", "replace"))
    except DomainError as exc:
        raise MalformedEncoding(str(exc)) from None
    if group is not None and group is not g:
        raise MalformedEncoding(f"params are for profile {g.name!r}, expected {group.name!r}")
    p_pub = r.element(g)
    (bits,) = struct.unpack(">H", r.take(2))
    if bits % 8 or not 8 <= bits <= 512:
        raise MalformedEncoding(f"bad session key length {bits}")
    g.precompute(p_pub)
    return PublicParams(g, p_pub, bits)


def _load_spk(r: _Reader, g: Group):
    sid = r.ident()
    return ServicePublicKey(sid, r.element(g), r.element(g), r.scalar(g))


def _load_epk(r: _Reader, g: Group):
    eid = r.ident()
    epoch = r.u64()
    return EdgePublicKey(eid, epoch, r.element(g), r.element(g), r.scalar(g))


def _load_secret(r: _Reader, g: Group):
    kind, sid, eid = r.ident(), r.ident(), r.ident()
    epoch = r.u64()
    if kind == b"master":
        if sid or eid or epoch:
            raise MalformedEncoding("master secret carries no identifiers")
        value = MasterSecret(_nonzero(r.scalar(g)))
    elif kind == b"service":
        if not sid or eid or epoch:
            raise MalformedEncoding("service secret needs only a service id")
        value = ServiceSecret(sid, _nonzero(r.scalar(g)))
    elif kind == b"edge":
        if sid or not eid:
            raise MalformedEncoding("edge secret needs only an edge id")
        value = EdgeSecret(eid, epoch, _nonzero(r.scalar(g)))
    elif kind == b"credential":
        if not sid or not eid:
            raise MalformedEncoding("credential needs service and edge ids")
        y, a = _nonzero(r.scalar(g)), _nonzero(r.scalar(g))
        value = UserCredential(ServiceSecret(sid, y), EdgeSecret(eid, epoch, a))
    else:
        raise MalformedEncoding(f"unknown secret kind {kind!r}")
    return value


def _nonzero(k: int) -> int:
    if k == 0:
        raise MalformedEncoding("zero secret scalar")
    return k


def _load_ct1(r: _Reader, g: Group, session_len: int):
    sid, eid, mid = r.ident(), r.ident(), r.ident()
    epoch = r.u64()
    e1 = r.element(g)
    e2 = r.take(session_len)
    return FirstLevelCiphertext(sid, eid, epoch, mid, e1, e2, r.u32_blob())


def _load_ct2(r: _Reader, g: Group, session_len: int):
    sid, eid, tid, mid = r.ident(), r.ident(), r.ident(), r.ident()
    epoch, target_epoch = r.u64(), r.u64()
    e1 = r.element(g)
    e1p = r.element(g)
    e2 = r.take(session_len)
    w = r.element(g)
    tag = r.take(CONFIRM_TAG_LEN)
    payload = r.u32_blob()
    return ReEncryptedCiphertext(sid, eid, epoch, tid, target_epoch, mid, e1, e1p, e2, w, tag, payload)


def _load_rekey(r: _Reader, g: Group):
    src, dst = r.ident(), r.ident()
    target_epoch = r.u64()
    alpha = r.scalar(g)
    w = r.element(g)
    return ReEncryptionKey(src, dst, target_epoch, alpha, w, r.take(CONFIRM_TAG_LEN))


_DECODERS = {
    T_PARAMS: None,
    T_SPK: _load_spk,
    T_EPK: _load_epk,
    T_SECRET: _load_secret,
    T_CT1: _load_ct1,
    T_CT2: _load_ct2,
    T_REKEY: _load_rekey,
}


def loads(data: bytes, params: PublicParams | None = None, expect: int | None = None):
    """Parse one record. ``params`` is required for everything but a params record."""
    kind = record_type(data)
    if expect is not None and kind != expect:
        raise MalformedEncoding(f"expected record type 0x{expect:02x}, got 0x{kind:02x}")
    r = _Reader(data)
    r.take(PREAMBLE_LEN)
    if kind == T_PARAMS:
        obj = _load_params(r, None if params is None else params.group)
    else:
        if params is None:
            raise TypeError("params are required to decode this record")
        if kind in (T_CT1, T_CT2):
            obj = _DECODERS[kind](r, params.group, params.session_len)
        else:
            obj = _DECODERS[kind](r, params.group)
    r.done()
    return obj


# -- sizes ------------------------------------------------------------------


def ciphertext_header_len(service_id: bytes, edge_id: bytes, content_id: bytes, target_id: bytes | None = None) -> int:
    """Framing bytes around the cryptographic fields: preamble, identifiers, time slots, payload length."""
    ids = [service_id, edge_id, content_id] + ([] if target_id is None else [target_id])
    n_epochs = 1 if target_id is None else 2
    return PREAMBLE_LEN + sum(2 + len(i) for i in ids) + 8 * n_epochs + 4


def kem_len(params: PublicParams, level: int) -> int:
    """Bytes of key-encapsulation material at ciphertext level 1 or 2."""
    base = params.group.element_len + params.session_len
    if level == 1:
        return base
    if level == 2:
        return base + 2 * params.group.element_len + CONFIRM_TAG_LEN
    raise ValueError("level must be 1 or 2")


def ciphertext_overhead(params: PublicParams, level: int, header_len: int) -> int:
    """Serialized size minus plaintext size: header + KEM + nonce and tag."""
    return header_len + kem_len(params, level) + DEM_OVERHEAD
