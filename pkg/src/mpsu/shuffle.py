"""Multi-party secret-shared shuffle.

Building block: permute_share, a two-party protocol where the permuter
holds a private permutation pi and the holder a vector x; they end with
fresh shares a, b satisfying a XOR b = pi(x).  Interactive mode routes pi
through a Waksman network padded to a power of two and pays one
chosen-bit OT per switch (all switches batched into a single round trip,
since the holder can precompute every switch message from its own output
masks).  Dealer mode consumes a share-translation correlation instead and
costs one masked-vector message.

The full shuffle runs m sequential rounds; in round k party k permutes
everyone's current share vector with its own pi_k (pairwise permute_share
with each holder, plus a local permute of its own shares).  The composed
permutation is pi_{m-1} o ... o pi_0, hidden from any m-1 coalition
because each round's permutation is known only to its permuter.

Permutation convention: out[y] = in[perm[y]].
"""

import numpy as np

from .errors import DimensionMismatch, InvalidConfig
from .ot import derandomize_receiver, derandomize_sender
from .runtime.framing import TAGS
from .utils import np_bytes


# -- Waksman network --------------------------------------------------------


def _route(perm):
    """Split an even-size permutation across a Waksman stage.

    Returns (c_in, c_out, top, bottom): control bits per input/output
    switch and the two half-size sub-permutations.  The last output
    switch is fixed straight (classic Waksman saving); free cycles start
    straight too, which keeps routing deterministic.
    """
    n = len(perm)
    half = n // 2
    inv = [0] * n
    for y, x in enumerate(perm):
        inv[x] = y
    c_in = [None] * half
    c_out = [None] * half

    for seed in range(half - 1, -1, -1):
        if c_out[seed] is not None:
            continue
        c_out[seed] = 0
        stack = [seed]
        while stack:
            j = stack.pop()
            for y in (2 * j, 2 * j + 1):
                from_top = (y & 1) == c_out[j]
                x = perm[y]
                i = x // 2
                want_in = (x & 1) if from_top else (x & 1) ^ 1
                if c_in[i] is not None:
                    continue
                c_in[i] = want_in
                x2 = x ^ 1
                partner_top = (x2 & 1) == c_in[i]
                y2 = inv[x2]
                j2 = y2 // 2
                want_out = (y2 & 1) if partner_top else (y2 & 1) ^ 1
                if c_out[j2] is None:
                    c_out[j2] = want_out
                    stack.append(j2)

    top = [0] * half
    bottom = [0] * half
    for y in range(n):
        j = y // 2
        x = perm[y]
        if (y & 1) == c_out[j]:
            top[j] = x // 2
        else:
            bottom[j] = x // 2
    return c_in, c_out, top, bottom


def waksman_switches(perm):
    """Flatten a power-of-two Waksman network for `perm` into an ordered
    list of (pos_a, pos_b, control) conditional swaps over a working
    vector; applying them in order maps v to perm(v)."""
    n = len(perm)
    if n & (n - 1):
        raise InvalidConfig("waksman_switches needs a power-of-two size")
    switches = []

    def rec(sub, idx):
        size = len(sub)
        if size == 1:
            return
        if size == 2:
            switches.append((idx[0], idx[1], sub[0] == 1))
            return
        c_in, c_out, top, bottom = _route(sub)
        half = size // 2
        for i in range(half):
            switches.append((idx[2 * i], idx[2 * i + 1], bool(c_in[i])))
        rec(top, [idx[2 * i] for i in range(half)])
        rec(bottom, [idx[2 * i + 1] for i in range(half)])
        for j in range(half - 1):  # last output switch is fixed straight
            switches.append((idx[2 * j], idx[2 * j + 1], bool(c_out[j])))

    rec(list(perm), list(range(n)))
    return switches


def apply_switches(vec, switches, controls=None):
    """Plain (non-oblivious) evaluation, for oracles and tests."""
    v = list(vec)
    for k, (a, b, ctrl) in enumerate(switches):
        c = ctrl if controls is None else controls[k]
        if c:
            v[a], v[b] = v[b], v[a]
    return v


def pad_permutation(perm, padded):
    """Extend perm over [0, padded) with fixed points above len(perm)."""
    return list(perm) + list(range(len(perm), padded))


def next_pow2(n):
    p = 1
    while p < n:
        p *= 2
    return p


# -- two-party permute + share ---------------------------------------------


def permute_share_permuter(channel, perm, n, payload, mode, rot_take=None,
                           peer=None, me=None, dealer=None, round_id=None):
    """Permuter side; returns its (n, payload) share of perm(x)."""
    if mode == "dealer":
        t = dealer.translation_permuter_view(round_id, me, peer, n, payload,
                                             perm)
        blob = channel.recv(TAGS["SHUF_MASK"])
        if len(blob) != n * payload:
            raise DimensionMismatch("masked vector has wrong size")
        masked = np_bytes(blob, n, payload)
        return masked[np.asarray(perm)] ^ t
    padded = next_pow2(n)
    switches = waksman_switches(pad_permutation(perm, padded))
    controls = np.array([c for _, _, c in switches], dtype=bool)
    batch = rot_take(peer, me, len(switches), 2 * payload)
    rb = derandomize_receiver(batch, channel, controls)
    blob = channel.recv(TAGS["SHUF_SWITCH_OT"])
    e_pair = np_bytes(blob, len(switches), 4 * payload)
    chosen = np.where(controls[:, None], e_pair[:, 2 * payload:],
                      e_pair[:, :2 * payload]) ^ rb
    alpha = np.zeros((padded, payload), dtype=np.uint8)
    for k, (a, b, _) in enumerate(switches):
        da = chosen[k, :payload]
        db = chosen[k, payload:]
        if controls[k]:
            alpha[a], alpha[b] = alpha[b] ^ da, alpha[a] ^ db
        else:
            alpha[a], alpha[b] = alpha[a] ^ da, alpha[b] ^ db
    return alpha[:n]


def permute_share_holder(channel, vec, mode, rot_take=None, peer=None,
                         me=None, dealer=None, round_id=None, rng=None):
    """Holder side; consumes its vector and returns its fresh share."""
    n, payload = vec.shape
    if mode == "dealer":
        r, s = dealer.translation_holder_view(round_id, peer, me, n, payload)
        channel.send(TAGS["SHUF_MASK"], (vec ^ r).tobytes())
        return s
    padded = next_pow2(n)
    switches = waksman_switches(list(range(padded)))  # layout only
    n_sw = len(switches)
    beta = np.zeros((padded, payload), dtype=np.uint8)
    beta[:n] = vec
    batch = rot_take(me, peer, n_sw, 2 * payload)
    m0, m1 = derandomize_sender(batch, channel)
    fresh = np_bytes(rng.randbytes(2 * n_sw * payload), 2 * n_sw, payload)
    out = np.empty((n_sw, 4 * payload), dtype=np.uint8)
    pay = payload
    for k, (a, b, _) in enumerate(switches):
        na = fresh[2 * k]
        nb = fresh[2 * k + 1]
        out[k, :pay] = beta[a] ^ na ^ m0[k, :pay]
        out[k, pay:2 * pay] = beta[b] ^ nb ^ m0[k, pay:]
        out[k, 2 * pay:3 * pay] = beta[b] ^ na ^ m1[k, :pay]
        out[k, 3 * pay:] = beta[a] ^ nb ^ m1[k, pay:]
        beta[a] = na
        beta[b] = nb
    channel.send(TAGS["SHUF_SWITCH_OT"], out.tobytes())
    return beta[:n]


# -- m-party shuffle --------------------------------------------------------


def ms_shuffle_party(me, m, vec, mode, channels, rng, rot_take=None,
                     dealer=None, stats=None, instance="ms", hooks=None):
    """Round-robin shuffle: returns this party's refreshed share vector.

    All m parties call this with equally-shaped (n, payload) vectors.
    In dealer mode the per-round permutations come from the correlation
    store (they are part of the offline material); interactively each
    permuter samples its own.
    """
    vec = np.array(vec, dtype=np.uint8)
    if vec.ndim != 2:
        raise DimensionMismatch("share vector must be (n, payload) bytes")
    n, payload = vec.shape
    if hooks is not None:
        hooks.record("shuffle_in", (me, vec.copy()))
    for k in range(m):
        if stats is not None:
            stats.mark_round("shuffle")
        round_id = f"{instance}/{k}"
        if me == k:
            if mode == "dealer":
                perm = dealer.translation_permutation(round_id, k, n)
            else:
                perm = rng.permutation(n)
            if hooks is not None:
                hooks.record("shuffle_perm", (me, k, list(perm)))
            acc = vec[np.asarray(perm)]
            for peer in range(m):
                if peer == k:
                    continue
                share = permute_share_permuter(
                    channels[peer], perm, n, payload, mode,
                    rot_take=rot_take, peer=peer, me=me, dealer=dealer,
                    round_id=round_id)
                acc = acc ^ share
            vec = acc
        else:
            vec = permute_share_holder(
                channels[k], vec, mode, rot_take=rot_take, peer=k, me=me,
                dealer=dealer, round_id=round_id, rng=rng)
    if hooks is not None:
        hooks.record("shuffle_out", (me, vec.copy()))
    return vec
