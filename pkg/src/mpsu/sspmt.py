"""Secret-shared equality tests and the batch private membership test.

ssPEQT: two parties hold gamma-bit strings s and t and end with XOR shares
of [s == t].  The circuit XNORs the operand bits (one side flips its
shares for free) and folds them with a balanced AND tree evaluated GMW
style, one Beaver-triple layer per tree level; all B bins run in lockstep
so a layer is a single message exchange.

Batch ssPMT composes batch OPPRF with ssPEQT exactly as the membership
functionality demands: the sender programs every tagged key of bin i to
one random target s_i, the receiver decodes t_i for its (single) query in
bin i, and the equality shares of (s_i, t_i) are the membership shares.
"""

import numpy as np

from .binning import CuckooTable, SimpleTable
from .opprf import batch_opprf_receiver, batch_opprf_sender
from .runtime.framing import TAGS
from .utils import bits_from_int, int_from_bits

PEQT_ROUND_PHASE = "sspeqt"


def _tree_layers(width):
    """Wire counts per AND-tree layer: width -> ... -> 1."""
    layers = []
    while width > 1:
        layers.append(width)
        width = (width + 1) // 2
    return layers


def peqt_layer_count(gamma):
    return len(_tree_layers(gamma))


def _values_to_bits(values, gamma):
    vbytes = (gamma + 7) // 8
    buf = b"".join(v.to_bytes(vbytes, "little") for v in values)
    mat = np.unpackbits(np.frombuffer(buf, dtype=np.uint8),
                        bitorder="little").reshape(len(values), vbytes * 8)
    return mat[:, :gamma].copy()


def sspeqt_batch(channel, role, values, gamma, triples, stats=None):
    """Run B parallel equality tests; returns a B-bit int of share bits.

    `values` holds this party's gamma-bit operand per bin.  `role` is
    "sender" or "receiver"; the sender applies the XNOR negation to its
    own shares.  Consumes (gamma-1)*B Beaver triples.
    """
    num = len(values)
    wires = _values_to_bits(values, gamma)  # (num, width) bit matrix
    if role == "sender":
        wires ^= 1

    for width in _tree_layers(gamma):
        pairs = width // 2
        x = int_from_bits(wires[:, 0:2 * pairs:2].reshape(-1))
        y = int_from_bits(wires[:, 1:2 * pairs:2].reshape(-1))
        bits = pairs * num
        a, b_sh, c = triples.take(bits)
        d_share = x ^ a
        e_share = y ^ b_sh
        blob = (d_share | (e_share << bits)).to_bytes(
            (2 * bits + 7) // 8, "little")
        channel.send(TAGS["GMW_AND_LAYER"], blob)
        other = int.from_bytes(channel.recv(TAGS["GMW_AND_LAYER"]), "little")
        mask = (1 << bits) - 1
        d = d_share ^ (other & mask)
        e = e_share ^ (other >> bits)
        z = c ^ (d & b_sh) ^ (e & a)
        if role == "sender":
            z ^= d & e
        if stats is not None:
            stats.mark_round(PEQT_ROUND_PHASE)
        new_wires = np.empty((num, pairs + width % 2), dtype=np.uint8)
        new_wires[:, :pairs] = bits_from_int(z, bits).reshape(num, pairs)
        if width % 2:
            new_wires[:, pairs] = wires[:, width - 1]
        wires = new_wires
    return int_from_bits(wires[:, 0])


PLACEHOLDER_TAG = 0  # real hash tags are 1..3, so this never collides


def placeholder_query(element_bytes):
    return bytes(element_bytes) + bytes([PLACEHOLDER_TAG])


def tagged_query(element, tag):
    return element + bytes([tag])


def batch_sspmt_sender(channel, table: SimpleTable, params, group, rng,
                       triples, stats=None, h2g_cache=None):
    """Sender side over a SimpleTable; returns a B-bit share int e_S."""
    gamma = params.gamma
    targets = [rng.randbits(gamma) for _ in range(len(table.bins))]
    bins = [[(tagged_query(x, tag), targets[i]) for x, tag in bucket]
            for i, bucket in enumerate(table.bins)]
    batch_opprf_sender(channel, bins, gamma, group, rng, h2g_cache)
    return sspeqt_batch(channel, "sender", targets, gamma, triples, stats)


def batch_sspmt_receiver(channel, table: CuckooTable, params, group, rng,
                         triples, stats=None, h2g_cache=None):
    """Receiver side over a CuckooTable; returns a B-bit share int e_R.

    Empty bins query a reserved placeholder the sender never programs, so
    they reconstruct to 0 except with probability 2^-gamma.
    """
    gamma = params.gamma
    filler = placeholder_query(params.element_bytes)
    queries = [filler if slot is None else tagged_query(slot[0], slot[1])
               for slot in table.bins]
    t_vals = batch_opprf_receiver(channel, queries, gamma, group, rng,
                                  h2g_cache)
    return sspeqt_batch(channel, "receiver", t_vals, gamma, triples, stats)


def reconstruct_bits(share_a: int, share_b: int, count: int):
    """Test helper: XOR two share ints into a bool array."""
    return bits_from_int(share_a ^ share_b, count)
