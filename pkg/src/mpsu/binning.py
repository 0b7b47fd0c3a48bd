"""Hashing input sets to bins: Cuckoo tables (receiver side) and simple
tables (sender side), plus derivation of the session-wide size parameters.

All parties share the same 16-byte hash seed, so an element lands in the
same candidate bins everywhere.  Each stored entry is tagged with the index
of the hash function that placed it; the tag keeps edge cases like
h1(x) = h2(x) unambiguous and makes keys distinct across bins.
"""

import hashlib
import math
from dataclasses import dataclass

from .errors import CuckooFailure, InvalidConfig

NUM_HASHES = 3
SIGMA_DEFAULT = 40
LAMBDA_DEFAULT = 128


@dataclass(frozen=True)
class HashParams:
    seed: bytes
    num_bins: int
    element_bytes: int
    num_hashes: int = NUM_HASHES

    def bin_of(self, index, element):
        """Bin for hash function `index` (1-based) applied to element bytes."""
        h = hashlib.blake2b(bytes([index]) + element, key=self.seed,
                            digest_size=16)
        return int.from_bytes(h.digest(), "little") % self.num_bins


@dataclass(frozen=True)
class ProtocolParams:
    m: int
    n: int
    element_bits: int
    sigma: int
    lam: int
    gamma: int       # OPPRF output bits, byte-rounded
    kappa: int       # payload-hash bits, byte-rounded
    num_bins: int

    @property
    def element_bytes(self):
        return (self.element_bits + 7) // 8

    @property
    def payload_bytes(self):
        """SK payload slot: element || kappa-bit hash."""
        return self.element_bytes + self.kappa // 8


def _round_up_bits(bits):
    return ((bits + 7) // 8) * 8


def derive_params(m, n, element_bits=64, sigma=SIGMA_DEFAULT,
                  lam=LAMBDA_DEFAULT) -> ProtocolParams:
    """Size the bin count and the OPPRF/payload widths.

    B = 1.27n with an n+3 floor so tiny test sets still cuckoo reliably.
    gamma covers all (m^2-m)/2 pairwise membership-test sessions of B bins
    each; kappa covers validating (m-1)B reconstructed payload slots.
    """
    if m < 3:
        raise InvalidConfig("at least 3 parties required")
    if n < 1:
        raise InvalidConfig("set size must be positive")
    num_bins = max(math.ceil(1.27 * n), n + 3)
    sessions = (m * m - m) // 2
    gamma = _round_up_bits(sigma + math.ceil(math.log2(sessions))
                           + math.ceil(math.log2(num_bins)))
    kappa = _round_up_bits(sigma + math.ceil(math.log2(m - 1))
                           + math.ceil(math.log2(n)))
    return ProtocolParams(m=m, n=n, element_bits=element_bits, sigma=sigma,
                          lam=lam, gamma=gamma, kappa=kappa,
                          num_bins=num_bins)


def max_evictions(n):
    return 128 * math.ceil(math.log2(n + 2))


class CuckooTable:
    """B bins, each empty or holding one (element, tag) pair where
    tag identifies the hash function that placed the element there."""

    def __init__(self, params: HashParams, bins):
        self.params = params
        self.bins = bins  # list of None | (bytes, tag)

    def occupied(self):
        return [(b, e, t) for b, slot in enumerate(self.bins)
                if slot is not None for e, t in [slot]]


class SimpleTable:
    """B bins of (element, tag) multisets: every element contributes one
    tagged entry per hash function."""

    def __init__(self, params: HashParams, bins):
        self.params = params
        self.bins = bins  # list of list[(bytes, tag)]

    def total_entries(self):
        return sum(len(b) for b in self.bins)


def cuckoo_insert(params: HashParams, elements) -> CuckooTable:
    """Stash-less Cuckoo insertion with cyclic-tag eviction.

    Elements are processed in sorted order, so the table depends only on
    the set and the seed.  Raises CuckooFailure once the eviction budget
    is spent; callers treat that as a session abort.
    """
    bins = [None] * params.num_bins
    nh = params.num_hashes
    budget = max_evictions(len(elements)) if elements else 0
    evictions = 0
    for x in sorted(elements):
        item, tag = x, 1
        while True:
            placed = False
            for k in range(nh):
                t = (tag - 1 + k) % nh + 1
                b = params.bin_of(t, item)
                if bins[b] is None:
                    bins[b] = (item, t)
                    placed = True
                    break
            if placed:
                break
            b = params.bin_of(tag, item)
            bins[b], (item, tag) = (item, tag), bins[b]
            tag = tag % nh + 1
            evictions += 1
            if evictions > budget:
                raise CuckooFailure(
                    f"exceeded {budget} evictions for {len(elements)} items "
                    f"in {params.num_bins} bins")
    return CuckooTable(params, bins)


def simple_insert(params: HashParams, elements) -> SimpleTable:
    bins = [[] for _ in range(params.num_bins)]
    for x in sorted(elements):
        for tag in range(1, params.num_hashes + 1):
            bins[params.bin_of(tag, x)].append((x, tag))
    return SimpleTable(params, bins)
