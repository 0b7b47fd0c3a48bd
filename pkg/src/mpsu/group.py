"""Prime-order groups and the multi-key rerandomizable ElGamal scheme.

Two group families back every protocol in this package:

* Schnorr groups: the order-q subgroup of quadratic residues mod p where
  p = 2q + 1 is a safe prime.  ``TEST_GROUP`` uses a 31-bit q so brute-force
  oracles (discrete-log tables, exhaustive scans) stay cheap; ``TINY_GROUP``
  (q = 1019) exists purely for unit-test oracles.
* ``P256_GROUP``: the NIST P-256 curve with compressed point encoding, for
  runs at a standard ~128-bit security level.

The group identity doubles as the dummy plaintext: valid payloads must be
non-identity, so a decryptor can always recognise filler slots.
"""

import hashlib

import gmpy2

from .errors import InvalidConfig, MalformedMessage, OutOfDictionary

DEFAULT_DICT_BOUND = 1 << 20


def _h2g_digest(data, ctr):
    return hashlib.blake2b(b"mpsu-h2g" + ctr.to_bytes(4, "little") + data,
                           digest_size=32).digest()


class GroupDesc:
    """Abstract prime-order cyclic group.

    Concrete subclasses provide the group law, fixed-length element
    encoding, and hashing into the group.  Elements are immutable values
    (ints for Schnorr groups, affine tuples for curves) and safe to share
    across threads.
    """

    name = "abstract"
    order = None        # prime q
    generator = None
    identity = None
    elem_len = None     # bytes per encoded element

    def mul(self, a, b):
        raise NotImplementedError

    def exp(self, a, e):
        raise NotImplementedError

    def inv(self, a):
        raise NotImplementedError

    def encode(self, a) -> bytes:
        raise NotImplementedError

    def decode(self, data: bytes):
        raise NotImplementedError

    def hash_to_group(self, data: bytes):
        raise NotImplementedError

    def exp_g(self, e):
        return self.exp(self.generator, e)

    def rand_exponent(self, rng):
        """Uniform exponent in [1, q): zero is rejected so public keys and
        blinding factors are never degenerate."""
        return 1 + rng.randbelow(self.order - 1)

    # -- invertible small-domain encoding (exponent embedding + BSGS) -----

    def __init__(self):
        self._baby_table = None
        self._baby_step = None
        self._giant_factor = None

    def encode_element(self, x: int, bound: int = DEFAULT_DICT_BOUND):
        """Map x in [0, bound) to g^(x+1); the +1 offset avoids identity."""
        if not 0 <= x < bound:
            raise OutOfDictionary(f"{x} outside dictionary bound {bound}")
        return self.exp_g(x + 1)

    def decode_element(self, elem, bound: int = DEFAULT_DICT_BOUND) -> int:
        """Invert encode_element via baby-step/giant-step over the bound."""
        if self._baby_table is None:
            step = min(8192, bound + 1)
            table = {}
            acc = self.identity
            for k in range(step):
                table.setdefault(acc, k)
                acc = self.mul(acc, self.generator)
            self._baby_table = table
            self._baby_step = step
            self._giant_factor = self.inv(self.exp_g(step))
        step = self._baby_step
        y = elem
        for giant in range(0, bound // step + 2):
            k = self._baby_table.get(y)
            if k is not None:
                exp = giant * step + k
                if 1 <= exp <= bound and self.exp_g(exp) == elem:
                    return exp - 1
            y = self.mul(y, self._giant_factor)
        raise OutOfDictionary("element not in dictionary range")


class SchnorrGroup(GroupDesc):
    """Order-q subgroup of Z_p^* with p = 2q+1; elements are the quadratic
    residues mod p, encoded as fixed-length little-endian residues."""

    def __init__(self, name, q, p, g, elem_len):
        super().__init__()
        if p != 2 * q + 1:
            raise InvalidConfig("p must equal 2q+1")
        self.name = name
        self.order = q
        self.p = p
        self.generator = g
        self.identity = 1
        self.elem_len = elem_len
        self._mp = gmpy2.mpz(p)
        if pow(g, q, p) != 1 or g == 1:
            raise InvalidConfig("generator does not have order q")

    def mul(self, a, b):
        return a * b % self.p

    def exp(self, a, e):
        return int(gmpy2.powmod(a, e, self._mp))

    def inv(self, a):
        return int(gmpy2.invert(a, self._mp))

    def is_element(self, a):
        return 0 < a < self.p and gmpy2.powmod(a, self.order, self._mp) == 1

    def encode(self, a):
        return int(a).to_bytes(self.elem_len, "little")

    def decode(self, data):
        if len(data) != self.elem_len:
            raise MalformedMessage("bad element length")
        v = int.from_bytes(data, "little")
        if not self.is_element(v):
            raise MalformedMessage("bytes do not encode a subgroup element")
        return v

    def hash_to_group(self, data):
        # Squaring lands the digest in the QR subgroup; identity is skipped
        # so hash outputs are always usable plaintexts.
        for ctr in range(1000):
            c = int.from_bytes(_h2g_digest(data, ctr), "little") % self.p
            e = c * c % self.p
            if e != 1:
                return e
        raise RuntimeError("hash_to_group failed to land in the group")


# NIST P-256 parameters.
_P256_P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
_P256_A = _P256_P - 3
_P256_B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
_P256_N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
_P256_GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
_P256_GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5


class P256Group(GroupDesc):
    """NIST P-256 with 33-byte compressed encoding; the point at infinity
    (identity / dummy symbol) is encoded as 33 zero bytes."""

    def __init__(self):
        super().__init__()
        self.name = "p256"
        self.order = _P256_N
        self.p = _P256_P
        self.generator = (_P256_GX, _P256_GY)
        self.identity = None
        self.elem_len = 33

    # Internal arithmetic uses Jacobian coordinates; public values are
    # affine (x, y) tuples or None for infinity.

    def _jac_double(self, P):
        X1, Y1, Z1 = P
        if not Y1:
            return (0, 0, 0)
        p = self.p
        YY = Y1 * Y1 % p
        S = 4 * X1 * YY % p
        ZZ = Z1 * Z1 % p
        M = (3 * X1 * X1 + _P256_A * ZZ % p * ZZ) % p
        X3 = (M * M - 2 * S) % p
        Y3 = (M * (S - X3) - 8 * YY * YY) % p
        Z3 = 2 * Y1 * Z1 % p
        return (X3, Y3, Z3)

    def _jac_add(self, P, Q):
        if not P[2]:
            return Q
        if not Q[2]:
            return P
        p = self.p
        X1, Y1, Z1 = P
        X2, Y2, Z2 = Q
        Z1Z1 = Z1 * Z1 % p
        Z2Z2 = Z2 * Z2 % p
        U1 = X1 * Z2Z2 % p
        U2 = X2 * Z1Z1 % p
        S1 = Y1 * Z2 * Z2Z2 % p
        S2 = Y2 * Z1 * Z1Z1 % p
        if U1 == U2:
            if S1 != S2:
                return (0, 0, 0)
            return self._jac_double(P)
        H = (U2 - U1) % p
        I = 4 * H * H % p
        J = H * I % p
        r = 2 * (S2 - S1) % p
        V = U1 * I % p
        X3 = (r * r - J - 2 * V) % p
        Y3 = (r * (V - X3) - 2 * S1 * J) % p
        Z3 = 2 * H * Z1 * Z2 % p
        return (X3, Y3, Z3)

    def _to_jac(self, A):
        return (0, 0, 0) if A is None else (A[0], A[1], 1)

    def _to_affine(self, P):
        if not P[2]:
            return None
        p = self.p
        zinv = int(gmpy2.invert(P[2], p))
        z2 = zinv * zinv % p
        return (P[0] * z2 % p, P[1] * z2 % p * zinv % p)

    def mul(self, a, b):
        return self._to_affine(self._jac_add(self._to_jac(a), self._to_jac(b)))

    def exp(self, a, e):
        e %= self.order
        if e == 0 or a is None:
            return None
        R = (0, 0, 0)
        P = self._to_jac(a)
        while e:
            if e & 1:
                R = self._jac_add(R, P)
            P = self._jac_double(P)
            e >>= 1
        return self._to_affine(R)

    def inv(self, a):
        if a is None:
            return None
        return (a[0], self.p - a[1])

    def _on_curve(self, x, y):
        return (y * y - (x * x * x + _P256_A * x + _P256_B)) % self.p == 0

    def encode(self, a):
        if a is None:
            return b"\x00" * 33
        x, y = a
        return bytes([2 | (y & 1)]) + x.to_bytes(32, "big")

    def decode(self, data):
        if len(data) != 33:
            raise MalformedMessage("bad point length")
        if data == b"\x00" * 33:
            return None
        prefix = data[0]
        if prefix not in (2, 3):
            raise MalformedMessage("bad compression prefix")
        x = int.from_bytes(data[1:], "big")
        if x >= self.p:
            raise MalformedMessage("x out of range")
        rhs = (x * x * x + _P256_A * x + _P256_B) % self.p
        y = int(gmpy2.powmod(rhs, (self.p + 1) // 4, self.p))
        if y * y % self.p != rhs:
            raise MalformedMessage("x is not on the curve")
        if (y & 1) != (prefix & 1):
            y = self.p - y
        return (x, y)

    def hash_to_group(self, data):
        # Try-and-increment on the x coordinate.
        for ctr in range(10000):
            digest = _h2g_digest(data, ctr)
            x = int.from_bytes(digest, "big") % self.p
            rhs = (x * x * x + _P256_A * x + _P256_B) % self.p
            y = int(gmpy2.powmod(rhs, (self.p + 1) // 4, self.p))
            if y * y % self.p == rhs:
                if (y & 1) != (digest[0] & 1):
                    y = self.p - y
                return (x, y)
        raise RuntimeError("hash_to_group failed to find a curve point")


# 31-bit safe-prime pair: q prime, p = 2q+1 prime, brute-forceable oracles.
TEST_GROUP = SchnorrGroup("test", q=2147483543, p=4294967087, g=4, elem_len=8)
# q = 1019, p = 2039: small enough for exhaustive discrete-log tables.
TINY_GROUP = SchnorrGroup("tiny", q=1019, p=2039, g=4, elem_len=8)
P256_GROUP = P256Group()

GROUPS = {g.name: g for g in (TEST_GROUP, TINY_GROUP, P256_GROUP)}


def get_group(name):
    try:
        return GROUPS[name]
    except KeyError:
        raise InvalidConfig(f"unknown group {name!r}") from None


class KeyPair:
    """ElGamal key share: pk = g^sk.  Aggregate keys multiply/add."""

    __slots__ = ("sk", "pk")

    def __init__(self, sk, pk):
        self.sk = sk
        self.pk = pk


class Ciphertext:
    """Two-element ElGamal ciphertext (c1, c2) = (g^r, x * pk^r)."""

    __slots__ = ("c1", "c2")

    def __init__(self, c1, c2):
        self.c1 = c1
        self.c2 = c2

    def __eq__(self, other):
        return isinstance(other, Ciphertext) and \
            self.c1 == other.c1 and self.c2 == other.c2

    def __hash__(self):
        return hash((self.c1, self.c2))


class Plaintext:
    """Group-element plaintext; the identity element is the dummy symbol."""

    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    @property
    def is_bottom(self):
        return self.value is None or self.value == 1

    def __eq__(self, other):
        return isinstance(other, Plaintext) and self.value == other.value


def bottom(group):
    return Plaintext(group.identity)


def keygen(group, rng):
    sk = group.rand_exponent(rng)
    return KeyPair(sk, group.exp_g(sk))


def aggregate_pk(group, pks):
    acc = group.identity
    for pk in pks:
        acc = group.mul(acc, pk)
    return acc


def encrypt(group, pk, x, rng, r=None):
    """Enc(pk, x) = (g^r, x * pk^r).  Explicit r is a test hook only."""
    value = x.value if isinstance(x, Plaintext) else x
    if r is None:
        r = group.rand_exponent(rng)
    return Ciphertext(group.exp_g(r), group.mul(value, group.exp(pk, r)))


def partial_decrypt(group, sk_share, ct):
    """Strip one key share: (c1, c2 * c1^-sk)."""
    return Ciphertext(ct.c1, group.mul(ct.c2, group.exp(ct.c1, -sk_share % group.order)))


def decrypt(group, sk, ct):
    return Plaintext(group.mul(ct.c2, group.exp(ct.c1, -sk % group.order)))


def rerandomize(group, pk, ct, rng, r=None):
    """ReRand(pk, ct) = (c1 * g^r', c2 * pk^r'); fresh r' unless test-pinned."""
    if r is None:
        r = group.rand_exponent(rng)
    return Ciphertext(group.mul(ct.c1, group.exp_g(r)),
                      group.mul(ct.c2, group.exp(pk, r)))


def encode_ciphertext(group, ct) -> bytes:
    return group.encode(ct.c1) + group.encode(ct.c2)


def decode_ciphertext(group, data: bytes) -> Ciphertext:
    n = group.elem_len
    if len(data) != 2 * n:
        raise MalformedMessage("bad ciphertext length")
    return Ciphertext(group.decode(data[:n]), group.decode(data[n:]))


def ciphertext_len(group) -> int:
    return 2 * group.elem_len
