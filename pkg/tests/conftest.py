import hashlib
import random
import struct

import pytest

from solek import protocol as pr
from solek.group import BN254, TOY

TOY_P, TOY_Q, TOY_G = 607, 101, 64


def toy_pow(base, k):
    """Repeated multiplication mod 607; deliberately avoids pow()."""
    acc = 1
    for _ in range(k % TOY_Q):
        acc = acc * base % TOY_P
    return acc


def toy_dlog(el):
    """Exponent e with 64^e == el, by enumeration."""
    acc = 1
    for e in range(TOY_Q):
        if acc == el:
            return e
        acc = acc * TOY_G % TOY_P
    raise ValueError(f"{el} is not in the subgroup")


def naive_ec_mul(k, pt, p=BN254.p):
    """Affine double-and-add on y^2 = x^3 + 3; independent of the library's Jacobian code."""

    def add(a, b):
        if a is None:
            return b
        if b is None:
            return a
        (x1, y1), (x2, y2) = a, b
        if x1 == x2 and (y1 + y2) % p == 0:
            return None
        if a == b:
            lam = 3 * x1 * x1 * pow(2 * y1, -1, p) % p
        else:
            lam = (y2 - y1) * pow(x2 - x1, -1, p) % p
        x3 = (lam * lam - x1 - x2) % p
        return x3, (lam * (x1 - x3) - y1) % p

    acc = None
    for bit in bin(k)[2:] if k else "":
        acc = add(acc, acc)
        if bit == "1":
            acc = add(acc, pt)
    return acc


def ref_hash(tag: str, data: bytes) -> bytes:
    """512-bit tagged SHA-256 expansion, written out from its definition."""
    t = tag.encode()
    return b"".join(hashlib.sha256(bytes([len(t)]) + t + data + bytes([c])).digest() for c in (0, 1))


def ref_frame(*parts):
    out = b""
    for part in parts:
        out += struct.pack(">Q", part) if isinstance(part, int) else struct.pack(">H", len(part)) + part
    return out


class World:
    """One TA with a service and two neighbouring edge areas at time slot 1."""

    def __init__(self, group, seed=1):
        self.rng = random.Random(seed)
        self.params, self.ms = pr.setup(group, self.rng)
        self.y, self.spk = pr.serv_key_ext(self.params, self.ms, "video", self.rng)
        self.a_i, self.epk_i = pr.edge_key_ext(self.params, self.ms, "edge-i", 1, self.rng)
        self.a_j, self.epk_j = pr.edge_key_ext(self.params, self.ms, "edge-j", 1, self.rng)
        self.cred_i = pr.UserCredential(self.y, self.a_i)
        self.cred_j = pr.UserCredential(self.y, self.a_j)

    @property
    def group(self):
        return self.params.group

    def encrypt(self, message=b"payload", content_id="m-1"):
        return pr.encrypt(self.params, self.spk, self.epk_i, message, content_id, self.rng)

    def rekey(self):
        return pr.rekey_gen(self.params, self.a_i, self.epk_j, self.rng)

    def re_encrypted(self, message=b"payload"):
        return pr.re_encrypt(self.params, self.rekey(), self.encrypt(message))


@pytest.fixture(params=["toy", "default"])
def world(request):
    return World(TOY if request.param == "toy" else BN254)


@pytest.fixture
def toy_world():
    return World(TOY)


@pytest.fixture(scope="session")
def default_world():
    return World(BN254)
