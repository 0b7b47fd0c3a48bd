"""Small byte/bit helpers shared across protocol layers."""

import numpy as np


def np_bytes(buf, count, nbytes):
    """View a flat byte string as a (count, nbytes) uint8 array."""
    return np.frombuffer(bytes(buf), dtype=np.uint8).reshape(count, nbytes)


def np_to_bytes(arr):
    return np.ascontiguousarray(arr, dtype=np.uint8).tobytes()


def pack_bits(bits):
    """Bool/int array -> little-endian packed bytes."""
    return np.packbits(np.asarray(bits, dtype=np.uint8),
                       bitorder="little").tobytes()


def unpack_bits(data, count):
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8),
                         count=count, bitorder="little").astype(bool)


def int_from_bits(bits):
    """Bool array -> int with bit i = bits[i]."""
    return int.from_bytes(pack_bits(bits), "little")


def bits_from_int(value, count):
    nbytes = (count + 7) // 8
    return unpack_bits(value.to_bytes(nbytes, "little"), count)


def xor_bytes(a, b):
    n = len(a)
    return (int.from_bytes(a, "little")
            ^ int.from_bytes(b, "little")).to_bytes(n, "little")


def xor_select(bits, if_zero, if_one):
    """Row-wise select between two (count, nbytes) arrays."""
    bits = np.asarray(bits, dtype=bool)
    return np.where(bits[:, None], if_one, if_zero)
