"""Trusted correlation dealer for tests and benchmarks.

INSECURE BY DESIGN: the dealer derives every correlation (random OTs,
Beaver triples, shuffle share-translations) from one master seed that all
endpoints of a session share.  It stands in for the offline phase of the
protocols so online costs can be measured in isolation; nothing produced
here may be used against a real adversary.

Both endpoints of a correlation derive the same bytes locally (no wire
traffic), keyed by a per-kind cursor that advances in lockstep because
the endpoints consume correlations at the same protocol step.
"""

import hashlib

import numpy as np

from ..rng import StreamRng
from ..utils import np_bytes, unpack_bits, xor_select


class DealerEndpoint:
    """One party's view of the dealer; cursors are local but stay in sync
    with the peer's because consumption is protocol-ordered."""

    def __init__(self, seed: bytes, stats=None):
        self.seed = bytes(seed)
        self.stats = stats
        self._cursors = {}

    def _next(self, key):
        cur = self._cursors.get(key, 0)
        self._cursors[key] = cur + 1
        return cur

    def _stream(self, *label):
        tag = "/".join(str(part) for part in label).encode()
        return StreamRng(hashlib.blake2b(self.seed + b"|" + tag,
                                         digest_size=16).digest())

    def _meter(self, nbytes):
        if self.stats is not None:
            self.stats.dealer_bytes += nbytes

    # -- random OTs -------------------------------------------------------

    def rot_fields(self, sender, receiver, count, nbytes):
        """Raw (r0, r1, bits) for the next ROT block on this ordered pair."""
        cur = self._next(("rot", sender, receiver, nbytes))
        rng = self._stream("rot", sender, receiver, nbytes, cur)
        r0 = np_bytes(rng.randbytes(count * nbytes), count, nbytes)
        r1 = np_bytes(rng.randbytes(count * nbytes), count, nbytes)
        bits = unpack_bits(rng.randbytes((count + 7) // 8), count)
        return r0, r1, bits

    def rot_sender_view(self, sender, receiver, count, nbytes):
        r0, r1, _ = self.rot_fields(sender, receiver, count, nbytes)
        self._meter(2 * count * nbytes)
        return r0, r1

    def rot_receiver_view(self, sender, receiver, count, nbytes):
        r0, r1, bits = self.rot_fields(sender, receiver, count, nbytes)
        self._meter(count * nbytes + (count + 7) // 8)
        return bits, xor_select(bits, r0, r1)

    # -- Beaver triples ---------------------------------------------------

    def triple_fields(self, first, second, nbits):
        cur = self._next(("triple", first, second))
        rng = self._stream("triple", first, second, cur)
        nbytes = (nbits + 7) // 8
        mask = (1 << nbits) - 1
        a1, b1, c1, a2, b2 = (
            int.from_bytes(rng.randbytes(nbytes), "little") & mask
            for _ in range(5))
        c2 = ((a1 ^ a2) & (b1 ^ b2)) ^ c1
        return (a1, b1, c1), (a2, b2, c2)

    def triples_view(self, first, second, nbits, mine_first):
        one, two = self.triple_fields(first, second, nbits)
        self._meter(3 * ((nbits + 7) // 8))
        return one if mine_first else two

    # -- shuffle share translations ---------------------------------------

    def translation_permutation(self, round_id, permuter, n):
        cur = self._next(("shufperm", round_id, permuter, n))
        return self._stream("shufperm", round_id, permuter, n,
                            cur).permutation(n)

    def translation_fields(self, round_id, permuter, holder, n, nbytes):
        cur = self._next(("shuftrans", round_id, permuter, holder))
        rng = self._stream("shuftrans", round_id, permuter, holder, cur)
        r = np_bytes(rng.randbytes(n * nbytes), n, nbytes)
        s = np_bytes(rng.randbytes(n * nbytes), n, nbytes)
        return r, s

    def translation_holder_view(self, round_id, permuter, holder, n, nbytes):
        r, s = self.translation_fields(round_id, permuter, holder, n, nbytes)
        self._meter(2 * n * nbytes)
        return r, s

    def translation_permuter_view(self, round_id, permuter, holder, n,
                                  nbytes, perm):
        r, s = self.translation_fields(round_id, permuter, holder, n, nbytes)
        self._meter(n * nbytes)
        return r[np.asarray(perm)] ^ s  # t = pi(r) ^ s
