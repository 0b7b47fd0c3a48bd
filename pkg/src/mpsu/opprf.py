"""Batch oblivious PRF and batch oblivious programmable PRF over B bins.

The OPRF backend is blinded exponentiation on a GroupDesc: per bin i the
sender holds an exponent key k_i; the receiver sends H(x)^r, the sender
raises it to k_i, the receiver unblinds and hashes to gamma bits.  The
programmable layer follows the OPRF-plus-OKVS paradigm: the sender encodes
key -> value XOR F(k_bin, key) into one store spanning all bins, and the
receiver XORs its OPRF output into the decoded word.

Keys inside a bin are the tagged element encodings produced by the binning
layer, so the encoded key set is globally disjoint once prefixed with the
bin index.
"""

import hashlib

from .errors import InvalidConfig
from .okvs import deserialize_table, okvs_decode, okvs_encode, \
    serialize_table
from .runtime.framing import TAGS


def prf_output(gamma: int, point_bytes: bytes) -> int:
    """Hash a group element down to a gamma-bit PRF output."""
    digest = hashlib.blake2b(point_bytes, key=b"mpsu-oprf",
                             digest_size=(gamma + 7) // 8).digest()
    return int.from_bytes(digest, "little") & ((1 << gamma) - 1)


def bin_key(bin_idx: int, key: bytes) -> bytes:
    return bin_idx.to_bytes(4, "little") + key


class OprfKeyBatch:
    """Sender-side per-bin PRF keys, able to evaluate F(k_i, x) anywhere."""

    def __init__(self, group, gamma, keys, h2g_cache=None):
        self.group = group
        self.gamma = gamma
        self.keys = keys
        self._cache = h2g_cache if h2g_cache is not None else {}

    def _point(self, data):
        pt = self._cache.get(data)
        if pt is None:
            pt = self.group.hash_to_group(data)
            self._cache[data] = pt
        return pt

    def evaluate(self, bin_idx: int, data: bytes) -> int:
        point = self.group.exp(self._point(data), self.keys[bin_idx])
        return prf_output(self.gamma, self.group.encode(point))


def batch_oprf_sender(channel, num_bins, gamma, group, rng,
                      h2g_cache=None) -> OprfKeyBatch:
    keys = [group.rand_exponent(rng) for _ in range(num_bins)]
    blob = channel.recv(TAGS["OPRF_QUERY"])
    el = group.elem_len
    if len(blob) != num_bins * el:
        raise InvalidConfig("query batch has wrong size")
    out = bytearray()
    for i in range(num_bins):
        point = group.decode(blob[i * el:(i + 1) * el])
        out += group.encode(group.exp(point, keys[i]))
    channel.send(TAGS["OPRF_RESP"], bytes(out))
    return OprfKeyBatch(group, gamma, keys, h2g_cache)


def batch_oprf_receiver(channel, queries, gamma, group, rng,
                        h2g_cache=None):
    """Evaluate F(k_i, queries[i]) for all bins; len(queries) fixes B."""
    cache = h2g_cache if h2g_cache is not None else {}
    blinds = []
    out = bytearray()
    for q in queries:
        pt = cache.get(q)
        if pt is None:
            pt = group.hash_to_group(q)
            cache[q] = pt
        r = group.rand_exponent(rng)
        blinds.append(r)
        out += group.encode(group.exp(pt, r))
    channel.send(TAGS["OPRF_QUERY"], bytes(out))
    blob = channel.recv(TAGS["OPRF_RESP"])
    el = group.elem_len
    if len(blob) != len(queries) * el:
        raise InvalidConfig("response batch has wrong size")
    values = []
    for i, r in enumerate(blinds):
        point = group.decode(blob[i * el:(i + 1) * el])
        unblinded = group.exp(point, pow(r, -1, group.order))
        values.append(prf_output(gamma, group.encode(unblinded)))
    return values


def batch_opprf_sender(channel, bins, gamma, group, rng,
                       h2g_cache=None) -> OprfKeyBatch:
    """bins[i] is a list of (key bytes, gamma-bit value) pairs; key sets
    must be disjoint across bins once bin-prefixed (the binning layer's
    tagged encoding guarantees that)."""
    keys = batch_oprf_sender(channel, len(bins), gamma, group, rng,
                             h2g_cache)
    pairs = []
    for i, kv in enumerate(bins):
        for key, value in kv:
            pairs.append((bin_key(i, key), value ^ keys.evaluate(i, key)))
    table = okvs_encode(pairs, gamma, rng)
    channel.send(TAGS["OKVS_TABLE"], serialize_table(table))
    return keys


def batch_opprf_receiver(channel, queries, gamma, group, rng,
                         h2g_cache=None):
    """Returns t where t[i] = programmed value if queries[i] was programmed
    in bin i, else a pseudorandom gamma-bit word."""
    f_vals = batch_oprf_receiver(channel, queries, gamma, group, rng,
                                 h2g_cache)
    table = deserialize_table(channel.recv(TAGS["OKVS_TABLE"]))
    return [okvs_decode(table, bin_key(i, q)) ^ f_vals[i]
            for i, q in enumerate(queries)]
