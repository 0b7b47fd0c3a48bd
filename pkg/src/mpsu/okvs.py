"""Oblivious key-value store built on random band matrices over GF(2).

Each key hashes (under the table seed) to a start position and a dense
w-bit band; the encoded value of a key is the XOR of the table rows under
its band.  Encoding solves the resulting band-diagonal linear system by
Gaussian elimination; free rows are filled with fresh randomness so the
table itself looks uniform.  Decoding any unprogrammed key therefore
yields a seed-determined pseudorandom value.

Parameters follow the package defaults: expansion rate e = 1.30 and band
width w = 128, which keep the encode failure rate negligible at the batch
sizes used by the membership-test layer.
"""

import hashlib
import math
import struct

from .errors import EncodeSingular, MalformedMessage

RATE = 1.30
BAND_WIDTH = 128
RETRY_LIMIT = 8

# bit offsets of the set bits in every byte value, little-endian bit order
_BITS_OF_BYTE = [tuple(k for k in range(8) if b >> k & 1) for b in range(256)]


class OkvsTable:
    """Encoded table: `rows` is a list of gamma-bit ints."""

    __slots__ = ("seed", "rows", "gamma", "band_width")

    def __init__(self, seed, rows, gamma, band_width=BAND_WIDTH):
        self.seed = seed
        self.rows = rows
        self.gamma = gamma
        self.band_width = band_width

    def __len__(self):
        return len(self.rows)


def _key_band(seed, key, n_rows, band_width):
    """(start, band) for a key: start in [0, n_rows - w], band != 0."""
    d = hashlib.blake2b(key, key=seed, digest_size=8 + band_width // 8)
    digest = d.digest()
    start = int.from_bytes(digest[:8], "little") % (n_rows - band_width + 1)
    band = int.from_bytes(digest[8:], "little")
    if band == 0:
        band = 1
    return start, band


def row_count(n_pairs, band_width=BAND_WIDTH):
    return max(math.ceil(RATE * n_pairs), band_width)


def okvs_encode(pairs, gamma, rng, band_width=BAND_WIDTH,
                retries=RETRY_LIMIT) -> OkvsTable:
    """Encode disjoint (key bytes -> gamma-bit int) pairs.

    Retries with a fresh seed when the linear system is singular; raises
    EncodeSingular once the retry budget is spent.
    """
    n_rows = row_count(len(pairs), band_width)
    mask = (1 << gamma) - 1
    last_err = None
    for _ in range(retries):
        seed = rng.randbytes(16)
        pivots = {}
        ok = True
        for key, value in pairs:
            start, band = _key_band(seed, key, n_rows, band_width)
            row = band << start
            v = value & mask
            while row:
                lead = (row & -row).bit_length() - 1
                hit = pivots.get(lead)
                if hit is None:
                    pivots[lead] = (row, v)
                    break
                row ^= hit[0]
                v ^= hit[1]
            else:
                if v != 0:
                    ok = False
                    break
        if not ok:
            last_err = EncodeSingular(
                f"singular band system for {len(pairs)} pairs")
            continue
        # free rows stay uniformly random so the table passes as noise
        vbytes = (gamma + 7) // 8
        blob = rng.randbytes(n_rows * vbytes)
        rows = [int.from_bytes(blob[i * vbytes:(i + 1) * vbytes], "little")
                & mask for i in range(n_rows)]
        for lead in sorted(pivots, reverse=True):
            row, v = pivots[lead]
            rel = (row >> lead) ^ 1
            acc = v
            base = lead
            for byte in rel.to_bytes((rel.bit_length() + 7) // 8, "little"):
                if byte:
                    for off in _BITS_OF_BYTE[byte]:
                        acc ^= rows[base + off]
                base += 8
            rows[lead] = acc
        return OkvsTable(seed, rows, gamma, band_width)
    raise last_err or EncodeSingular("no retries attempted")


def okvs_decode(table: OkvsTable, key: bytes) -> int:
    start, band = _key_band(table.seed, key, len(table.rows),
                            table.band_width)
    rows = table.rows
    acc = 0
    base = start
    while band:
        byte = band & 0xFF
        if byte:
            for off in _BITS_OF_BYTE[byte]:
                acc ^= rows[base + off]
        band >>= 8
        base += 8
    return acc


def serialize_table(table: OkvsTable) -> bytes:
    vbytes = (table.gamma + 7) // 8
    out = bytearray()
    out += table.seed
    out += struct.pack("<IHH", len(table.rows), table.gamma,
                       table.band_width)
    for row in table.rows:
        out += row.to_bytes(vbytes, "little")
    return bytes(out)


def deserialize_table(data: bytes) -> OkvsTable:
    if len(data) < 24:
        raise MalformedMessage("okvs blob too short")
    seed = data[:16]
    n_rows, gamma, band_width = struct.unpack("<IHH", data[16:24])
    vbytes = (gamma + 7) // 8
    if len(data) != 24 + n_rows * vbytes:
        raise MalformedMessage("okvs blob length mismatch")
    rows = [int.from_bytes(data[24 + i * vbytes:24 + (i + 1) * vbytes],
                           "little") for i in range(n_rows)]
    return OkvsTable(seed, rows, gamma, band_width)
