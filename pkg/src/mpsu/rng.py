"""Deterministic and OS-backed randomness streams.

Every operation in this package that needs randomness takes an explicit
``rng`` argument so that whole protocol transcripts are reproducible from
per-party seeds.  ``StreamRng`` is a SHAKE-256 counter stream: same seed,
same platform-independent byte sequence.  ``SystemRng`` wraps ``os.urandom``
for non-test use.
"""

import hashlib
import os


class StreamRng:
    """Deterministic byte stream derived from a seed via SHAKE-256."""

    _BLOCK = 8192

    def __init__(self, seed):
        if isinstance(seed, int):
            seed = seed.to_bytes(16, "little", signed=False)
        self._seed = bytes(seed)
        self._counter = 0
        self._buf = b""
        self._pos = 0

    def _refill(self):
        h = hashlib.shake_256()
        h.update(b"mpsu-rng")
        h.update(self._seed)
        h.update(self._counter.to_bytes(8, "little"))
        self._counter += 1
        self._buf = h.digest(self._BLOCK)
        self._pos = 0

    def randbytes(self, n):
        out = bytearray()
        while n > 0:
            if self._pos >= len(self._buf):
                self._refill()
            take = min(n, len(self._buf) - self._pos)
            out += self._buf[self._pos:self._pos + take]
            self._pos += take
            n -= take
        return bytes(out)

    def randbits(self, k):
        nbytes = (k + 7) // 8
        v = int.from_bytes(self.randbytes(nbytes), "little")
        return v >> (nbytes * 8 - k) if nbytes * 8 != k else v

    def bit(self):
        return self.randbytes(1)[0] & 1

    def randbelow(self, n):
        """Uniform integer in [0, n) by rejection sampling."""
        if n <= 0:
            raise ValueError("randbelow needs n > 0")
        k = n.bit_length()
        while True:
            v = self.randbits(k)
            if v < n:
                return v

    def randrange(self, lo, hi):
        return lo + self.randbelow(hi - lo)

    def shuffle(self, seq):
        """In-place Fisher-Yates."""
        for i in range(len(seq) - 1, 0, -1):
            j = self.randbelow(i + 1)
            seq[i], seq[j] = seq[j], seq[i]

    def permutation(self, n):
        perm = list(range(n))
        self.shuffle(perm)
        return perm

    def child(self, label):
        """Independent substream; label distinguishes siblings."""
        if isinstance(label, str):
            label = label.encode()
        return StreamRng(hashlib.blake2b(self._seed + b"/" + label,
                                         digest_size=16).digest())


class SystemRng(StreamRng):
    """os.urandom-backed stream with the same interface."""

    def __init__(self):
        super().__init__(b"")

    def randbytes(self, n):
        return os.urandom(n)

    def child(self, label):
        return SystemRng()


def rng_from_seed(seed):
    """StreamRng when a seed is given, SystemRng for seed=None."""
    return SystemRng() if seed is None else StreamRng(seed)
