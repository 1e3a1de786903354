"""Prime-order cyclic groups used by the protocol.

Two profiles are provided:

* ``default`` -- G1 of the BN254 (Barreto-Naehrig) curve, y^2 = x^3 + 3, a
  254-bit prime-order group with cofactor 1. Elements are affine ``(x, y)``
  tuples, the point at infinity is ``None``.
* ``toy`` -- the order-101 subgroup of the multiplicative group mod 607.
  Elements are plain ints. It is small enough to test exhaustively.

Scalars are plain ints in ``[0, q)`` in both profiles. Elements are opaque to
callers: always go through the group's methods so the operation counter sees
every scalar multiplication.
"""

from __future__ import annotations

import hashlib
import random
import secrets
from dataclasses import dataclass, fields

from .errors import DomainError, InvalidScalar, MalformedEncoding

HASH_TAGS = ("SOLEK/H1", "SOLEK/H2", "SOLEK/H3", "SOLEK/H4", "SOLEK/H5")
MAX_HASH_BYTES = 64


@dataclass
class OpCounter:
    """Counts group work inside a measurement window.

    Pass one explicitly to the operations you want measured; nothing is
    counted globally.
    """

    scalar_mul_count: int = 0
    element_add_count: int = 0
    hash_count: int = 0

    def snapshot(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def reset(self) -> None:
        for f in fields(self):
            setattr(self, f.name, 0)

    def merge(self, other: "OpCounter") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))


def default_rng() -> random.Random:
    """OS-backed randomness for production use."""
    return secrets.SystemRandom()


class Group:
    """Common scalar, hash and counting logic. Subclasses supply the group law."""

    name: str
    kind: str
    order: int
    generator: object
    identity: object
    element_len: int
    scalar_len: int

    # -- scalars ---------------------------------------------------------

    def scalar_arith(self, op: str, a: int, b: int | None = None) -> int:
        q = self.order
        if op == "add":
            return (a + b) % q
        if op == "sub":
            return (a - b) % q
        if op == "mul":
            return (a * b) % q
        if op == "neg":
            return (-a) % q
        if op == "inv":
            if a % q == 0:
                raise InvalidScalar("zero has no inverse")
            return pow(a, -1, q)
        raise ValueError(f"unknown scalar op {op!r}")

    def random_scalar(self, rng: random.Random | None = None) -> int:
        """Uniform scalar in [1, q). ``rng`` is any ``random.Random``; seed it for reproducibility."""
        rng = rng or default_rng()
        return rng.randrange(1, self.order)

    def encode_scalar(self, k: int) -> bytes:
        if not 0 <= k < self.order:
            raise InvalidScalar(f"scalar out of range for {self.name}")
        return k.to_bytes(self.scalar_len, "big")

    def decode_scalar(self, data: bytes) -> int:
        if len(data) != self.scalar_len:
            raise MalformedEncoding(f"scalar must be {self.scalar_len} bytes, got {len(data)}")
        k = int.from_bytes(data, "big")
        if k >= self.order:
            raise MalformedEncoding("scalar not reduced mod q")
        return k

    # -- hashing ---------------------------------------------------------

    @staticmethod
    def _wide_digest(tag: str, data: bytes) -> bytes:
        if tag not in HASH_TAGS:
            raise DomainError(f"unregistered hash tag {tag!r}")
        prefix = bytes([len(tag)]) + tag.encode("ascii") + data
        return hashlib.sha256(prefix + b"\x00").digest() + hashlib.sha256(prefix + b"\x01").digest()

    def hash_to_scalar(self, tag: str, data: bytes, counter: OpCounter | None = None) -> int:
        # 512-bit reduction keeps the modulo bias below 2^-128
        wide = self._wide_digest(tag, data)
        if counter is not None:
            counter.hash_count += 1
        return int.from_bytes(wide, "big") % self.order

    def hash_to_bytes(self, tag: str, data: bytes, out_len: int, counter: OpCounter | None = None) -> bytes:
        if not 1 <= out_len <= MAX_HASH_BYTES:
            raise DomainError(f"out_len must be in [1, {MAX_HASH_BYTES}], got {out_len}")
        wide = self._wide_digest(tag, data)
        if counter is not None:
            counter.hash_count += 1
        return wide[:out_len]

    # -- counted group law -----------------------------------------------

    def scalar_mul(self, k: int, element, counter: OpCounter | None = None):
        if counter is not None:
            counter.scalar_mul_count += 1
        return self._mul(k % self.order, element)

    def element_add(self, a, b, counter: OpCounter | None = None):
        if counter is not None:
            counter.element_add_count += 1
        return self._add(a, b)

    def base_mul(self, k: int, counter: OpCounter | None = None):
        """``k`` times the generator; same accounting as :meth:`scalar_mul`."""
        return self.scalar_mul(k, self.generator, counter)

    def precompute(self, element) -> None:
        """Hint that ``element`` will be multiplied often. No-op unless overridden."""

    def neg(self, element):
        raise NotImplementedError

    def is_identity(self, element) -> bool:
        return element == self.identity

    def encode(self, element) -> bytes:
        raise NotImplementedError

    def decode(self, data: bytes):
        raise NotImplementedError

    def _mul(self, k: int, element):
        raise NotImplementedError

    def _add(self, a, b):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class SubgroupModP(Group):
    """Order-q subgroup of (Z/pZ)^*, with q | p - 1."""

    kind = "modular-subgroup"

    def __init__(self, name: str, p: int, q: int, generator: int | None = None):
        if (p - 1) % q:
            raise ValueError("q must divide p - 1")
        self.name = name
        self.p = p
        self.order = q
        self.identity = 1
        self.element_len = (p.bit_length() + 7) // 8
        self.scalar_len = max(1, (q.bit_length() + 7) // 8)
        if generator is None:
            generator = self._derive_generator()
        if generator == 1 or pow(generator, q, p) != 1:
            raise ValueError("generator does not have order q")
        self.generator = generator

    def _derive_generator(self) -> int:
        cofactor = (self.p - 1) // self.order
        for h in range(2, self.p):
            g = pow(h, cofactor, self.p)
            if g != 1:
                return g
        raise ValueError("no generator found")

    def _mul(self, k: int, element: int) -> int:
        return pow(element, k, self.p)

    def _add(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, element: int) -> int:
        return pow(element, -1, self.p)

    def encode(self, element: int) -> bytes:
        return element.to_bytes(self.element_len, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != self.element_len:
            raise MalformedEncoding(f"element must be {self.element_len} bytes, got {len(data)}")
        x = int.from_bytes(data, "big")
        if not 1 <= x < self.p or pow(x, self.order, self.p) != 1:
            raise MalformedEncoding("value is not in the order-q subgroup")
        return x


class ShortWeierstrassA0(Group):
    """Prime-order curve y^2 = x^3 + b over F_p with cofactor 1 and p = 3 mod 4.

    Internally uses Jacobian coordinates; public values are affine tuples.
    Compressed encoding is ``0x02|0x03 || x`` (parity of y in the prefix);
    the point at infinity encodes as all-zero bytes.
    """

    kind = "elliptic-curve"
    _WINDOW = 5
    _FIXED_BITS = 4

    def __init__(self, name: str, p: int, b: int, q: int, generator: tuple[int, int]):
        if p % 4 != 3:
            raise ValueError("square roots are computed with the p = 3 mod 4 shortcut")
        self.name = name
        self.p = p
        self.b = b
        self.order = q
        self.identity = None
        self.generator = generator
        self.field_len = (p.bit_length() + 7) // 8
        self.element_len = 1 + self.field_len
        self.scalar_len = (q.bit_length() + 7) // 8
        if not self.on_curve(generator):
            raise ValueError("generator is not on the curve")
        self._fixed_tables: dict[tuple[int, int], list] = {}

    def on_curve(self, pt) -> bool:
        if pt is None:
            return True
        x, y = pt
        p = self.p
        return 0 <= x < p and 0 <= y < p and (y * y - x * x * x - self.b) % p == 0

    # -- Jacobian arithmetic ----------------------------------------------

    def _jdouble(self, X, Y, Z):
        p = self.p
        if Y == 0 or Z == 0:
            return 1, 1, 0
        A = X * X % p
        B = Y * Y % p
        C = B * B % p
        D = 2 * ((X + B) ** 2 - A - C) % p
        E = 3 * A % p
        F = E * E % p
        X3 = (F - 2 * D) % p
        Y3 = (E * (D - X3) - 8 * C) % p
        Z3 = 2 * Y * Z % p
        return X3, Y3, Z3

    def _jadd_affine(self, X1, Y1, Z1, x2, y2):
        p = self.p
        if Z1 == 0:
            return x2, y2, 1
        Z1Z1 = Z1 * Z1 % p
        U2 = x2 * Z1Z1 % p
        S2 = y2 * Z1 * Z1Z1 % p
        H = (U2 - X1) % p
        r = 2 * (S2 - Y1) % p
        if H == 0:
            if r == 0:
                return self._jdouble(X1, Y1, Z1)
            return 1, 1, 0
        HH = H * H % p
        I = 4 * HH % p
        J = H * I % p
        V = X1 * I % p
        X3 = (r * r - J - 2 * V) % p
        Y3 = (r * (V - X3) - 2 * Y1 * J) % p
        Z3 = ((Z1 + H) ** 2 - Z1Z1 - HH) % p
        return X3, Y3, Z3

    def _to_affine(self, X, Y, Z):
        if Z == 0:
            return None
        p = self.p
        zi = pow(Z, -1, p)
        zi2 = zi * zi % p
        return X * zi2 % p, Y * zi2 * zi % p

    def _add(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        return self._to_affine(*self._jadd_affine(a[0], a[1], 1, b[0], b[1]))

    def neg(self, pt):
        if pt is None:
            return None
        return pt[0], (-pt[1]) % self.p

    def _odd_multiples(self, pt, count):
        """Affine [P, 3P, 5P, ...] of length ``count``."""
        twice = self._add(pt, pt)
        out = [pt]
        for _ in range(count - 1):
            out.append(self._add(out[-1], twice))
        return out

    @staticmethod
    def _wnaf(k: int, w: int) -> list[int]:
        digits = []
        full = 1 << w
        half = full >> 1
        while k:
            if k & 1:
                d = k & (full - 1)
                if d >= half:
                    d -= full
                k -= d
            else:
                d = 0
            digits.append(d)
            k >>= 1
        return digits

    def _mul(self, k: int, pt):
        if k == 0 or pt is None:
            return None
        if pt == self.generator:
            self.precompute(pt)
        table = self._fixed_tables.get(pt)
        if table is not None:
            return self._fixed_base_mul(k, table)
        table = self._odd_multiples(pt, 1 << (self._WINDOW - 2))
        p = self.p
        X, Y, Z = 1, 1, 0
        for d in reversed(self._wnaf(k, self._WINDOW)):
            X, Y, Z = self._jdouble(X, Y, Z)
            if d > 0:
                x2, y2 = table[d >> 1]
                X, Y, Z = self._jadd_affine(X, Y, Z, x2, y2)
            elif d < 0:
                x2, y2 = table[(-d) >> 1]
                X, Y, Z = self._jadd_affine(X, Y, Z, x2, p - y2)
        return self._to_affine(X, Y, Z)

    def precompute(self, pt) -> None:
        """Build a fixed-base table so later multiples of ``pt`` skip doublings."""
        if pt is not None and pt not in self._fixed_tables:
            self._fixed_tables[pt] = self._build_base_table(pt)

    def _fixed_base_mul(self, k: int, table):
        bits = self._FIXED_BITS
        mask = (1 << bits) - 1
        X, Y, Z = 1, 1, 0
        for row in table:
            d = k & mask
            if d:
                x2, y2 = row[d - 1]
                X, Y, Z = self._jadd_affine(X, Y, Z, x2, y2)
            k >>= bits
            if not k:
                break
        return self._to_affine(X, Y, Z)

    def _build_base_table(self, base):
        # row j holds d * 2^(bits*j) * base for d = 1 .. 2^bits - 1
        bits = self._FIXED_BITS
        rows = []
        for _ in range((self.order.bit_length() + bits - 1) // bits):
            row = [base]
            for _ in range((1 << bits) - 2):
                row.append(self._add(row[-1], base))
            rows.append(row)
            base = self._add(row[-1], base)
        return rows

    # -- encoding ----------------------------------------------------------

    def encode(self, pt) -> bytes:
        if pt is None:
            return bytes(self.element_len)
        x, y = pt
        return bytes([2 | (y & 1)]) + x.to_bytes(self.field_len, "big")

    def decode(self, data: bytes):
        if len(data) != self.element_len:
            raise MalformedEncoding(f"element must be {self.element_len} bytes, got {len(data)}")
        prefix = data[0]
        if prefix == 0:
            if any(data):
                raise MalformedEncoding("non-canonical identity encoding")
            return None
        if prefix not in (2, 3):
            raise MalformedEncoding(f"bad point prefix 0x{prefix:02x}")
        p = self.p
        x = int.from_bytes(data[1:], "big")
        if x >= p:
            raise MalformedEncoding("x coordinate not reduced")
        rhs = (x * x * x + self.b) % p
        y = pow(rhs, (p + 1) // 4, p)
        if y * y % p != rhs:
            raise MalformedEncoding("x is not on the curve")
        if (y & 1) != (prefix & 1):
            y = p - y
        # cofactor 1: every curve point is in the prime-order group
        return x, y


BN254 = ShortWeierstrassA0(
    "default",
    p=21888242871839275222246405745257275088696311157297823662689037894645226208583,
    b=3,
    q=21888242871839275222246405745257275088548364400416034343698204186575808495617,
    generator=(1, 2),
)

TOY = SubgroupModP("toy", p=607, q=101)

PROFILES: dict[str, Group] = {"default": BN254, "toy": TOY}


def get_profile(name: str) -> Group:
    try:
        return PROFILES[name]
    except KeyError:
        raise DomainError(f"unknown group profile {name!r}; choose from {sorted(PROFILES)}") from None
