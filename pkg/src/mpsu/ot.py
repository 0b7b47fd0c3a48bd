"""Two-party oblivious-transfer substrate.

Provides 1-out-of-2 random OT in two backends:

* dealer: correlations read from the trusted dealer (tests/benchmarks,
  insecure by design), no wire traffic;
* interactive: two-message DH base OT on a GroupDesc, extended IKNP-style
  with a PRG and a bit-matrix transpose for batches of 512 and up.

On top of the ROT contract sit choice-bit derandomization (one bit per
instance) and Beaver bit-triple generation (dealer or Gilboa-style from
two ROTs per triple).
"""

import hashlib

import numpy as np

from .errors import InvalidConfig, ModeMismatch, ReusedCorrelation, \
    TriplesExhausted
from .runtime.framing import TAGS
from .utils import int_from_bits, bits_from_int, np_bytes, np_to_bytes, \
    pack_bits, unpack_bits, xor_select

IKNP_WIDTH = 128          # base-OT count / column count
EXTENSION_THRESHOLD = 512
POOL_CHUNK = 4096


def _kdf(seed_bytes, index, nbytes):
    h = hashlib.shake_128(b"mpsu-rot" + index.to_bytes(8, "little")
                          + seed_bytes)
    return h.digest(nbytes)


class RotBatch:
    """One side's view of `count` random-OT instances with nbytes messages.

    Sender view: r0, r1 arrays.  Receiver view: bits, rb arrays where
    rb[i] = r1[i] if bits[i] else r0[i].  Single-consumer: any value
    accessor after consume() raises ReusedCorrelation.
    """

    def __init__(self, role, count, nbytes, r0=None, r1=None, bits=None,
                 rb=None):
        self.role = role
        self.count = count
        self.nbytes = nbytes
        self._r0, self._r1, self._bits, self._rb = r0, r1, bits, rb
        self._consumed = False

    def _check(self):
        if self._consumed:
            raise ReusedCorrelation("ROT batch already consumed")

    def consume(self):
        self._check()
        self._consumed = True

    @property
    def r0(self):
        self._check()
        return self._r0

    @property
    def r1(self):
        self._check()
        return self._r1

    @property
    def bits(self):
        self._check()
        return self._bits

    @property
    def rb(self):
        self._check()
        return self._rb


# -- DH base OT (semi-honest, two messages) --------------------------------


def base_ot_send(channel, count, nbytes, rng, group):
    """Sender half: outputs (r0, r1) arrays of shape (count, nbytes)."""
    a = group.rand_exponent(rng)
    big_a = group.exp_g(a)
    channel.send(TAGS["OT_BASE_S1"], group.encode(big_a))
    data = channel.recv(TAGS["OT_BASE_S2"])
    el = group.elem_len
    inv_a_of = group.inv(big_a)
    r0 = np.empty((count, nbytes), dtype=np.uint8)
    r1 = np.empty((count, nbytes), dtype=np.uint8)
    for i in range(count):
        k_i = group.decode(data[i * el:(i + 1) * el])
        r0[i] = np.frombuffer(
            _kdf(group.encode(group.exp(k_i, a)), i, nbytes), dtype=np.uint8)
        r1[i] = np.frombuffer(
            _kdf(group.encode(group.exp(group.mul(k_i, inv_a_of), a)), i,
                 nbytes), dtype=np.uint8)
    return r0, r1


def base_ot_recv(channel, bits, nbytes, rng, group):
    """Receiver half: for choice bits, outputs the chosen messages."""
    bits = np.asarray(bits, dtype=bool)
    count = len(bits)
    big_a = group.decode(channel.recv(TAGS["OT_BASE_S1"]))
    ks = []
    out = bytearray()
    for i in range(count):
        k = group.rand_exponent(rng)
        ks.append(k)
        point = group.exp_g(k)
        if bits[i]:
            point = group.mul(big_a, point)
        out += group.encode(point)
    channel.send(TAGS["OT_BASE_S2"], bytes(out))
    rb = np.empty((count, nbytes), dtype=np.uint8)
    for i in range(count):
        shared = group.exp(big_a, ks[i])
        rb[i] = np.frombuffer(_kdf(group.encode(shared), i, nbytes),
                              dtype=np.uint8)
    return rb


# -- IKNP-style extension ---------------------------------------------------


def _prg_bytes(seed, salt, nbytes):
    return hashlib.shake_128(b"mpsu-ext" + salt.to_bytes(8, "little")
                             + seed).digest(nbytes)


class IknpRotSource:
    """Pool of extended ROTs over one ordered channel pair.

    The pool refills in chunks; both endpoints hit the refill at the same
    consumption index, so the extension messages interleave safely with
    whatever protocol is running above.
    """

    def __init__(self, channel, role, rng, group, chunk=POOL_CHUNK):
        self.channel = channel
        self.role = role
        self.rng = rng
        self.group = group
        self.chunk = chunk
        self._setup_done = False
        self._abs_index = 0
        self._rows = None      # sender: q rows; receiver: t rows (uint8)
        self._row_bits = None  # receiver: choice bits
        self._avail = 0
        self._offset = 0

    def _setup(self):
        if self._setup_done:
            return
        if self.role == "sender":
            # sender of extended OTs acts as base-OT receiver with secret s
            self._s_bits = unpack_bits(self.rng.randbytes(IKNP_WIDTH // 8),
                                       IKNP_WIDTH)
            seeds = base_ot_recv(self.channel, self._s_bits, 16, self.rng,
                                 self.group)
            self._seeds = [bytes(seeds[i]) for i in range(IKNP_WIDTH)]
            self._s_row = np.frombuffer(pack_bits(self._s_bits),
                                        dtype=np.uint8)
        else:
            s0, s1 = base_ot_send(self.channel, IKNP_WIDTH, 16, self.rng,
                                  self.group)
            self._seed_pairs = [(bytes(s0[i]), bytes(s1[i]))
                                for i in range(IKNP_WIDTH)]
        self._setup_done = True

    def _extend(self, nrows):
        self._setup()
        nrows = max(nrows, self.chunk)
        col_bytes = (nrows + 7) // 8
        salt = self._abs_index
        if self.role == "receiver":
            bits = unpack_bits(self.rng.randbytes(col_bytes), nrows)
            r_packed = np.frombuffer(pack_bits(bits), dtype=np.uint8)
            t_cols = np.empty((IKNP_WIDTH, col_bytes), dtype=np.uint8)
            u_cols = np.empty((IKNP_WIDTH, col_bytes), dtype=np.uint8)
            for i, (k0, k1) in enumerate(self._seed_pairs):
                t_i = np.frombuffer(_prg_bytes(k0, salt + i, col_bytes),
                                    dtype=np.uint8)
                g1 = np.frombuffer(_prg_bytes(k1, salt + i, col_bytes),
                                   dtype=np.uint8)
                t_cols[i] = t_i
                u_cols[i] = t_i ^ g1 ^ r_packed
            self.channel.send(TAGS["OT_EXT_MATRIX"], np_to_bytes(u_cols))
            rows = np.packbits(
                np.unpackbits(t_cols, axis=1, bitorder="little")
                [:, :nrows].T, axis=1, bitorder="little")
            self._rows = rows
            self._row_bits = bits
        else:
            u = np_bytes(self.channel.recv(TAGS["OT_EXT_MATRIX"]),
                         IKNP_WIDTH, col_bytes)
            q_cols = np.empty((IKNP_WIDTH, col_bytes), dtype=np.uint8)
            for i in range(IKNP_WIDTH):
                g = np.frombuffer(_prg_bytes(self._seeds[i], salt + i,
                                             col_bytes), dtype=np.uint8)
                q_cols[i] = g ^ u[i] if self._s_bits[i] else g
            rows = np.packbits(
                np.unpackbits(q_cols, axis=1, bitorder="little")
                [:, :nrows].T, axis=1, bitorder="little")
            self._rows = rows
        self._avail = nrows
        self._offset = 0

    def take(self, count, nbytes) -> RotBatch:
        if self._avail < count:
            # drop any remainder; both endpoints refill at the same index
            self._abs_index += self._offset + self._avail
            self._extend(count)
        off = self._offset
        rows = self._rows[off:off + count]
        base = self._abs_index + off
        self._offset = off + count
        self._avail -= count
        if self.role == "sender":
            r0 = np.empty((count, nbytes), dtype=np.uint8)
            r1 = np.empty((count, nbytes), dtype=np.uint8)
            s_row = self._s_row
            for j in range(count):
                row = rows[j]
                r0[j] = np.frombuffer(_kdf(row.tobytes(), base + j, nbytes),
                                      dtype=np.uint8)
                r1[j] = np.frombuffer(_kdf((row ^ s_row).tobytes(), base + j,
                                           nbytes), dtype=np.uint8)
            return RotBatch("sender", count, nbytes, r0=r0, r1=r1)
        bits = self._row_bits[off:off + count].copy()
        rb = np.empty((count, nbytes), dtype=np.uint8)
        for j in range(count):
            rb[j] = np.frombuffer(_kdf(rows[j].tobytes(), base + j, nbytes),
                                  dtype=np.uint8)
        return RotBatch("receiver", count, nbytes, bits=bits, rb=rb)


class DealerRotSource:
    """ROT pool backed by the trusted dealer; no wire traffic."""

    def __init__(self, endpoint, sender_id, receiver_id, role):
        self.endpoint = endpoint
        self.sender_id = sender_id
        self.receiver_id = receiver_id
        self.role = role

    def take(self, count, nbytes) -> RotBatch:
        if self.role == "sender":
            r0, r1 = self.endpoint.rot_sender_view(
                self.sender_id, self.receiver_id, count, nbytes)
            return RotBatch("sender", count, nbytes, r0=r0, r1=r1)
        bits, rb = self.endpoint.rot_receiver_view(
            self.sender_id, self.receiver_id, count, nbytes)
        return RotBatch("receiver", count, nbytes, bits=bits, rb=rb)


def rot_batch(channel, role, count, nbytes, mode, rng, group, dealer=None,
              me=None, peer=None):
    """Top-level batched ROT per the functionality contract.

    Interactive mode uses per-instance base OTs below the extension
    threshold and IKNP above it.  Both endpoints must agree on the mode;
    a dealer request without a dealer endpoint raises ModeMismatch.
    """
    if mode == "dealer":
        if dealer is None:
            raise ModeMismatch("dealer mode requested without a dealer")
        ids = (me, peer) if role == "sender" else (peer, me)
        return DealerRotSource(dealer, ids[0], ids[1], role).take(count,
                                                                  nbytes)
    if mode != "interactive":
        raise ModeMismatch(f"unknown resource mode {mode!r}")
    if count >= EXTENSION_THRESHOLD:
        return IknpRotSource(channel, role, rng, group,
                             chunk=count).take(count, nbytes)
    if role == "sender":
        r0, r1 = base_ot_send(channel, count, nbytes, rng, group)
        return RotBatch("sender", count, nbytes, r0=r0, r1=r1)
    bits = unpack_bits(rng.randbytes((count + 7) // 8), count)
    rb = base_ot_recv(channel, bits, nbytes, rng, group)
    return RotBatch("receiver", count, nbytes, bits=bits, rb=rb)


# -- derandomization --------------------------------------------------------


def derandomize_sender(batch: RotBatch, channel):
    """Receive the swap bits; returns (m0, m1) keyed by the chosen bits."""
    if batch.role != "sender":
        raise InvalidConfig("derandomize_sender needs a sender batch")
    swap = unpack_bits(channel.recv(TAGS["OT_DERAND"]), batch.count)
    r0, r1 = batch.r0, batch.r1
    batch.consume()
    return xor_select(swap, r0, r1), xor_select(swap, r1, r0)


def derandomize_receiver(batch: RotBatch, channel, chosen_bits):
    """Send d = c xor chosen; afterwards rb is the value for chosen_bits."""
    if batch.role != "receiver":
        raise InvalidConfig("derandomize_receiver needs a receiver batch")
    chosen = np.asarray(chosen_bits, dtype=bool)
    channel.send(TAGS["OT_DERAND"], pack_bits(batch.bits ^ chosen))
    rb = batch.rb
    batch.consume()
    return rb


# -- Beaver bit triples -----------------------------------------------------


class TripleStore:
    """Per-pair supply of Beaver bit triples, consumed as packed ints."""

    def __init__(self, mode, me, peer, rng, channel=None, dealer=None,
                 rot_sources=None, chunk=1 << 15):
        self.mode = mode
        self.me = me
        self.peer = peer
        self.first = min(me, peer)
        self.second = max(me, peer)
        self.rng = rng
        self.channel = channel
        self.dealer = dealer
        self.rot_sources = rot_sources  # (as_sender, as_receiver)
        self.chunk = chunk
        self._a = self._b = self._c = 0
        self._avail = 0

    def take(self, nbits):
        """Next nbits triples as (a, b, c) packed ints, low bit first."""
        if nbits < 0:
            raise InvalidConfig("negative triple request")
        while self._avail < nbits:
            self._refill(max(self.chunk, nbits))
        mask = (1 << nbits) - 1
        out = (self._a & mask, self._b & mask, self._c & mask)
        self._a >>= nbits
        self._b >>= nbits
        self._c >>= nbits
        self._avail -= nbits
        return out

    def _stash(self, a, b, c, nbits):
        self._a |= a << self._avail
        self._b |= b << self._avail
        self._c |= c << self._avail
        self._avail += nbits

    def _refill(self, count):
        if self.mode == "dealer":
            if self.dealer is None:
                raise TriplesExhausted("no dealer endpoint for triples")
            a, b, c = self.dealer.triples_view(
                self.first, self.second, count, self.me == self.first)
            self._stash(a, b, c, count)
            return
        self._refill_ot(count)

    def _refill_ot(self, count):
        """Gilboa-style product sharing: each cross term a_i * b_peer costs
        one bit-ROT plus a one-bit correction."""
        src_s, src_r = self.rot_sources
        a = int_from_bits(unpack_bits(self.rng.randbytes((count + 7) // 8),
                                      count))
        b = int_from_bits(unpack_bits(self.rng.randbytes((count + 7) // 8),
                                      count))
        # both parties consume the (first->second) correlation before the
        # (second->first) one, so the pools stay aligned
        if self.me == self.first:
            cross1 = self._cross_sender(src_s, a, count)
            cross2 = self._cross_receiver(src_r, b, count)
        else:
            cross1 = self._cross_receiver(src_r, b, count)
            cross2 = self._cross_sender(src_s, a, count)
        c = (a & b) ^ cross1 ^ cross2
        self._stash(a, b, c, count)

    def _cross_sender(self, source, my_a, count):
        batch = source.take(count, 1)
        r0 = int_from_bits(batch.r0[:, 0] & 1)
        r1 = int_from_bits(batch.r1[:, 0] & 1)
        batch.consume()
        swap = int.from_bytes(self.channel.recv(TAGS["TRIPLE_DERAND"]),
                              "little")
        r0, r1 = r0 ^ (swap & (r0 ^ r1)), r1 ^ (swap & (r0 ^ r1))
        y = r0 ^ r1 ^ my_a
        nbytes = (count + 7) // 8
        self.channel.send(TAGS["TRIPLE_CORR"], y.to_bytes(nbytes, "little"))
        return r0

    def _cross_receiver(self, source, my_b, count):
        batch = source.take(count, 1)
        rb = int_from_bits(batch.rb[:, 0] & 1)
        rand_bits = int_from_bits(batch.bits)
        batch.consume()
        nbytes = (count + 7) // 8
        d = rand_bits ^ my_b
        self.channel.send(TAGS["TRIPLE_DERAND"], d.to_bytes(nbytes, "little"))
        y = int.from_bytes(self.channel.recv(TAGS["TRIPLE_CORR"]), "little")
        return rb ^ (my_b & y)
