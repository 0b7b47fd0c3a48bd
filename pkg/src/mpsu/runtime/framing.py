"""Wire format: 1-byte tag, u32 little-endian length, payload.

Every message between two parties travels in one frame.  Unknown tags and
length mismatches raise MalformedMessage rather than crashing a party.
"""

import struct

from ..errors import MalformedMessage

HEADER_LEN = 5
MAX_PAYLOAD = 1 << 30

TAGS = {
    "HELLO": 0x01,
    "OT_BASE_S1": 0x10,
    "OT_BASE_S2": 0x11,
    "OT_DERAND": 0x12,
    "OT_EXT_MATRIX": 0x13,
    "TRIPLE_CORR": 0x18,
    "TRIPLE_DERAND": 0x19,
    "OPRF_QUERY": 0x20,
    "OPRF_RESP": 0x21,
    "OKVS_TABLE": 0x22,
    "GMW_AND_LAYER": 0x28,
    "MSSROT_DELTA": 0x30,
    "MSSROT_PAD": 0x31,
    "SHUF_SWITCH_OT": 0x38,
    "SHUF_MASK": 0x39,
    "PK_PUBKEY": 0x40,
    "PK_CT_PAIR": 0x41,
    "PK_CT_BACK": 0x42,
    "PK_MIX": 0x43,
    "RECON_SHARE": 0x48,
    "PID_RING": 0x50,
    "PID_RESULT": 0x51,
}
TAG_NAMES = {v: k for k, v in TAGS.items()}


def encode_frame(tag: int, payload: bytes) -> bytes:
    if tag not in TAG_NAMES:
        raise MalformedMessage(f"unknown tag 0x{tag:02x}")
    if len(payload) > MAX_PAYLOAD:
        raise MalformedMessage("payload too large")
    return bytes([tag]) + struct.pack("<I", len(payload)) + payload


def decode_frame(data: bytes):
    """Parse one complete frame; returns (tag, payload)."""
    if len(data) < HEADER_LEN:
        raise MalformedMessage("truncated frame header")
    tag = data[0]
    if tag not in TAG_NAMES:
        raise MalformedMessage(f"unknown tag 0x{tag:02x}")
    (length,) = struct.unpack("<I", data[1:5])
    if length > MAX_PAYLOAD:
        raise MalformedMessage("declared payload too large")
    if len(data) != HEADER_LEN + length:
        raise MalformedMessage("frame length mismatch")
    return tag, data[5:]


def frame_len(payload: bytes) -> int:
    return HEADER_LEN + len(payload)
