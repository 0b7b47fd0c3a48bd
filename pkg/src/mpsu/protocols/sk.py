"""Symmetric-key multi-party private set union.

Phases per party:

1. binning: everyone simple-hashes its set; every non-leader also builds
   a Cuckoo table.
2. membership tests: for every ordered pair (i, j), i < j, party i
   (simple table) and party j (Cuckoo table) run batch ssPMT and end with
   bit-share vectors e_{i,j}, e_{j,i}.
3. payload sharing: per pair and bin, parties min(1,i)..j run one mss-ROT
   where i and j contribute the membership shares as choice bits and
   every party 1..j contributes a fresh delta.  Party j folds its bin
   payload x || H(x) into its own output (a random word for empty bins),
   so the slot reconstructs to the payload exactly when x is new, and to
   delta-masked noise when any earlier set already contains x.
4. shuffle: the per-target slot vectors are concatenated into one
   (m-1)B share vector and run through the m-round secret-shared shuffle.
5. reconstruction: clients send their refreshed shares to the leader,
   who XORs, validates each slot against its payload hash, and unions
   the surviving elements with its own set.
"""

import hashlib

import numpy as np

from ..binning import HashParams, cuckoo_insert, simple_insert
from ..mssrot import MssRotConfig, mss_rot_batch
from ..runtime.framing import TAGS
from ..shuffle import ms_shuffle_party
from ..sspmt import batch_sspmt_receiver, batch_sspmt_sender
from ..utils import bits_from_int, np_bytes


def payload_hash(x: bytes, kappa_bytes: int) -> bytes:
    return hashlib.blake2b(x, key=b"mpsu-payload",
                           digest_size=kappa_bytes).digest()


def make_payload(x: bytes, kappa_bytes: int) -> bytes:
    """Slot encoding x || H(x); the hash lets the leader tell elements
    from masked noise during reconstruction."""
    return x + payload_hash(x, kappa_bytes)


def extract_payload(slot: bytes, elem_bytes: int, kappa_bytes: int):
    x = slot[:elem_bytes]
    return x if slot[elem_bytes:] == payload_hash(x, kappa_bytes) else None


def run_pairwise_sspmt(ctx, simple, cuckoo):
    """Phase 2 for every pair; returns {peer: B-bit share int}."""
    e_bits = {}
    for i in range(ctx.cfg.m):
        for j in range(i + 1, ctx.cfg.m):
            if ctx.me == i:
                e_bits[j] = batch_sspmt_sender(
                    ctx.channels[j], simple, ctx.params, ctx.group, ctx.rng,
                    ctx.triples(j), ctx.stats, ctx.h2g_cache)
            elif ctx.me == j:
                e_bits[i] = batch_sspmt_receiver(
                    ctx.channels[i], cuckoo, ctx.params, ctx.group, ctx.rng,
                    ctx.triples(i), ctx.stats, ctx.h2g_cache)
    return e_bits


def sk_mpsu_party(ctx, elements):
    cfg, params = ctx.cfg, ctx.params
    m, me = cfg.m, ctx.me
    B = params.num_bins
    eb = params.element_bytes
    pay = params.payload_bytes
    kb = pay - eb
    hp = HashParams(cfg.hash_seed, B, eb)

    ctx.set_phase("binning")
    simple = simple_insert(hp, elements)
    cuckoo = cuckoo_insert(hp, elements) if me > 0 else None

    ctx.set_phase("sspmt")
    e_bits = run_pairwise_sspmt(ctx, simple, cuckoo)

    ctx.set_phase("mssrot")
    slot_acc = {}  # target party t -> (B, pay) accumulator
    for i in range(m - 1):
        for j in range(i + 1, m):
            lo = min(1, i)
            if not lo <= me <= j:
                continue
            rot_cfg = MssRotConfig(parties=tuple(range(lo, j + 1)), ch0=i,
                                   ch1=j, j_set=frozenset(range(1, j + 1)),
                                   payload_bytes=pay)
            bits = None
            if me == i:
                bits = bits_from_int(e_bits[j], B)
            elif me == j:
                bits = bits_from_int(e_bits[i], B)
            deltas = None
            if me in rot_cfg.j_set:
                deltas = np_bytes(ctx.rng.randbytes(B * pay), B, pay)
            out = mss_rot_batch(me, rot_cfg, B, ctx.channels, ctx.rot_take,
                                ctx.rng, my_bits=bits, my_deltas=deltas)
            if j in slot_acc:
                slot_acc[j] = slot_acc[j] ^ out
            else:
                slot_acc[j] = out
    if me > 0:
        own = np.empty((B, pay), dtype=np.uint8)
        for b, slot in enumerate(cuckoo.bins):
            if slot is None:
                own[b] = np.frombuffer(ctx.rng.randbytes(pay),
                                       dtype=np.uint8)
            else:
                own[b] = np.frombuffer(make_payload(slot[0], kb),
                                       dtype=np.uint8)
        slot_acc[me] = slot_acc[me] ^ own

    ctx.set_phase("shuffle")
    shares = np.zeros(((m - 1) * B, pay), dtype=np.uint8)
    for t in range(1, m):
        if t in slot_acc:
            shares[(t - 1) * B:t * B] = slot_acc[t]
    shares = ms_shuffle_party(me, m, shares, cfg.resource_mode,
                              ctx.channels, ctx.rng, rot_take=ctx.rot_take,
                              dealer=ctx.dealer, stats=ctx.stats,
                              instance="sk-shuffle", hooks=ctx.hooks)

    ctx.set_phase("reconstruct")
    ctx.stats.mark_round("reconstruct")
    if me > 0:
        ctx.channels[0].send(TAGS["RECON_SHARE"], shares.tobytes())
        return None
    total = shares
    for j in range(1, m):
        total = total ^ np_bytes(ctx.channels[j].recv(TAGS["RECON_SHARE"]),
                                 (m - 1) * B, pay)
    if ctx.hooks is not None:
        ctx.hooks.record("sk_reconstructed", total.copy())
    found = set()
    buf = total.tobytes()
    for k in range((m - 1) * B):
        x = extract_payload(buf[k * pay:(k + 1) * pay], eb, kb)
        if x is not None:
            found.add(x)
    return frozenset(elements) | found
