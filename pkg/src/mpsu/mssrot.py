"""Multi-party secret-shared random OT (two choice bits).

d parties end with strings r_i such that XOR(r_i) equals
(b0 XOR b1) * XOR(Delta_j over j in J), where the choice bits b0, b1 live
at two designated parties and each party in J contributes a Delta share.

The construction runs pairwise chosen-bit OTs between each choice-bit
holder and each Delta holder; the Delta holder folds its ROT zero-message
into its own output and sends the masked delta u0 XOR u1 XOR Delta, which
rides the same round trip as the derandomization bit.  When a choice-bit
holder is itself in J, its own delta term is folded in locally.  Parties
outside {ch0, ch1} union J get zero-sum padding from every insider so the
output equation spans the whole party list.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .ot import derandomize_receiver, derandomize_sender
from .runtime.framing import TAGS
from .utils import np_bytes


@dataclass(frozen=True)
class MssRotConfig:
    parties: tuple          # all participating party ids, sorted
    ch0: int
    ch1: int
    j_set: frozenset        # delta-contributing party ids
    payload_bytes: int

    def validate(self):
        ps = set(self.parties)
        if self.ch0 == self.ch1:
            raise InvalidConfig("choice-bit holders must differ")
        if self.ch0 not in ps or self.ch1 not in ps:
            raise InvalidConfig("choice-bit holders must participate")
        if not self.j_set or not self.j_set <= ps:
            raise InvalidConfig("J must be a non-empty subset of parties")
        if self.payload_bytes <= 0:
            raise InvalidConfig("payload width must be positive")

    @property
    def insiders(self):
        return sorted({self.ch0, self.ch1} | self.j_set)

    @property
    def outsiders(self):
        return sorted(set(self.parties) - set(self.insiders))


def mss_rot_batch(me, cfg: MssRotConfig, count, channels, rot_take, rng,
                  my_bits=None, my_deltas=None):
    """Run `count` parallel instances as party `me`.

    my_bits: bool array of choice bits (required when me is ch0 or ch1).
    my_deltas: (count, payload) uint8 array (required when me is in J).
    rot_take(sender, receiver, count, nbytes) supplies the ROT batches.
    Returns this party's (count, payload) output array.
    """
    cfg.validate()
    pay = cfg.payload_bytes
    if me in (cfg.ch0, cfg.ch1):
        if my_bits is None:
            raise InvalidConfig("choice-bit holder needs bits")
        my_bits = np.asarray(my_bits, dtype=bool)
    if me in cfg.j_set and my_deltas is None:
        raise InvalidConfig("delta holder needs payloads")

    r = np.zeros((count, pay), dtype=np.uint8)

    # local term when a choice-bit holder contributes its own delta
    for ch, bits in ((cfg.ch0, my_bits), (cfg.ch1, my_bits)):
        if me == ch and ch in cfg.j_set:
            r[bits] ^= my_deltas[bits]

    for ch in (cfg.ch0, cfg.ch1):
        for holder in sorted(cfg.j_set):
            if holder == ch:
                continue
            if me == ch:
                batch = rot_take(holder, ch, count, pay)
                rb = derandomize_receiver(batch, channels[holder], my_bits)
                masked = np_bytes(channels[holder].recv(TAGS["MSSROT_DELTA"]),
                                  count, pay)
                r ^= rb
                r[my_bits] ^= masked[my_bits]
            elif me == holder:
                batch = rot_take(holder, ch, count, pay)
                u0, u1 = derandomize_sender(batch, channels[ch])
                channels[ch].send(TAGS["MSSROT_DELTA"],
                                  (u0 ^ u1 ^ my_deltas).tobytes())
                r ^= u0

    for insider in cfg.insiders:
        for outsider in cfg.outsiders:
            if me == insider:
                pad = np_bytes(rng.randbytes(count * pay), count, pay)
                channels[outsider].send(TAGS["MSSROT_PAD"], pad.tobytes())
                r ^= pad
            elif me == outsider:
                pad = np_bytes(channels[insider].recv(TAGS["MSSROT_PAD"]),
                               count, pay)
                r ^= pad
    return r
