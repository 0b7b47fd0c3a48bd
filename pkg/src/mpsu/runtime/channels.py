"""Transports and communication metering.

Two transports share one framing layer: in-memory FIFO queues (default,
deterministic, single-process) and length-prefixed TCP over localhost.
Channels are owned by exactly one party thread; a party's channels to
different peers are independent, and delivery per ordered pair is FIFO.

Byte counters tally exact framed bytes (header + payload) per (phase,
peer).  Round counters are advanced explicitly by protocol code at each
synchronisation layer, so "rounds" has one clear meaning everywhere.
"""

import hashlib
import queue
import socket
import struct

from ..errors import ChannelClosed, MalformedMessage, Timeout
from .framing import HEADER_LEN, MAX_PAYLOAD, TAG_NAMES, encode_frame

DEFAULT_TIMEOUT = 60.0


class ChannelStats:
    """Per-party communication meter."""

    def __init__(self):
        self.phase = "setup"
        self.sent = {}      # (phase, peer) -> bytes
        self.recv = {}      # (phase, peer) -> bytes
        self.rounds = {}    # phase -> count
        self.dealer_bytes = 0
        self._transcript = hashlib.blake2b(digest_size=16)

    def set_phase(self, phase):
        self.phase = phase

    def mark_round(self, phase=None):
        ph = phase or self.phase
        self.rounds[ph] = self.rounds.get(ph, 0) + 1

    def add_sent(self, peer, nbytes, tag, payload):
        key = (self.phase, peer)
        self.sent[key] = self.sent.get(key, 0) + nbytes
        self._transcript.update(bytes([tag]) + peer.to_bytes(2, "little"))
        self._transcript.update(payload)

    def add_recv(self, peer, nbytes):
        key = (self.phase, peer)
        self.recv[key] = self.recv.get(key, 0) + nbytes

    @property
    def sent_total(self):
        return sum(self.sent.values())

    @property
    def recv_total(self):
        return sum(self.recv.values())

    def transcript_hash(self):
        """Digest over every (peer, tag, payload) this party sent, in send
        order: equal across runs iff the party behaved identically."""
        return self._transcript.hexdigest()

    def phase_breakdown(self):
        phases = sorted({ph for ph, _ in self.sent}
                        | {ph for ph, _ in self.recv} | set(self.rounds))
        out = {}
        for ph in phases:
            out[ph] = {
                "sent_bytes": sum(v for (p, _), v in self.sent.items() if p == ph),
                "recv_bytes": sum(v for (p, _), v in self.recv.items() if p == ph),
                "rounds": self.rounds.get(ph, 0),
            }
        return out

    def as_dict(self):
        return {
            "sent_bytes": self.sent_total,
            "recv_bytes": self.recv_total,
            "rounds": sum(self.rounds.values()),
            "dealer_bytes": self.dealer_bytes,
            "phase_breakdown": self.phase_breakdown(),
        }


class Channel:
    """One endpoint of a bidirectional framed link to a single peer."""

    def __init__(self, peer, stats: ChannelStats, timeout=DEFAULT_TIMEOUT):
        self.peer = peer
        self.stats = stats
        self.timeout = timeout

    def send(self, tag, payload: bytes):
        frame = encode_frame(tag, bytes(payload))
        self._send_raw(frame)
        self.stats.add_sent(self.peer, len(frame), tag, bytes(payload))

    def recv(self, expect_tag=None) -> bytes:
        tag, payload = self._recv_frame()
        self.stats.add_recv(self.peer, HEADER_LEN + len(payload))
        if expect_tag is not None and tag != expect_tag:
            raise MalformedMessage(
                f"expected {TAG_NAMES.get(expect_tag)} from party "
                f"{self.peer}, got {TAG_NAMES.get(tag, hex(tag))}")
        return payload

    def _send_raw(self, frame):
        raise NotImplementedError

    def _recv_frame(self):
        raise NotImplementedError

    def close(self):
        pass


class MemoryChannel(Channel):
    """Queue-backed endpoint; sends never block, receives may time out."""

    _CLOSE = object()

    def __init__(self, peer, stats, out_q, in_q, timeout=DEFAULT_TIMEOUT):
        super().__init__(peer, stats, timeout)
        self._out = out_q
        self._in = in_q
        self._closed = False

    def _send_raw(self, frame):
        if self._closed:
            raise ChannelClosed(f"channel to {self.peer} is closed")
        self._out.put(frame)

    def _recv_frame(self):
        try:
            frame = self._in.get(timeout=self.timeout)
        except queue.Empty:
            raise Timeout(f"no message from party {self.peer} within "
                          f"{self.timeout}s") from None
        if frame is self._CLOSE:
            self._in.put(frame)  # keep the mark for later receives
            raise ChannelClosed(f"party {self.peer} closed the channel")
        tag = frame[0]
        if tag not in TAG_NAMES:
            raise MalformedMessage(f"unknown tag 0x{tag:02x}")
        return tag, frame[HEADER_LEN:]

    def close(self):
        if not self._closed:
            self._closed = True
            self._out.put(self._CLOSE)


class TcpChannel(Channel):
    """Socket-backed endpoint using the same framing."""

    def __init__(self, peer, stats, sock: socket.socket,
                 timeout=DEFAULT_TIMEOUT):
        super().__init__(peer, stats, timeout)
        self._sock = sock
        self._sock.settimeout(timeout)

    def _send_raw(self, frame):
        try:
            self._sock.sendall(frame)
        except OSError as exc:
            raise ChannelClosed(f"send to {self.peer} failed: {exc}") from None

    def _read_exact(self, n):
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self._sock.recv(n - len(buf))
            except socket.timeout:
                raise Timeout(f"no message from party {self.peer} within "
                              f"{self.timeout}s") from None
            except OSError as exc:
                raise ChannelClosed(str(exc)) from None
            if not chunk:
                raise ChannelClosed(f"party {self.peer} closed the socket")
            buf += chunk
        return bytes(buf)

    def _recv_frame(self):
        header = self._read_exact(HEADER_LEN)
        tag = header[0]
        if tag not in TAG_NAMES:
            raise MalformedMessage(f"unknown tag 0x{tag:02x}")
        (length,) = struct.unpack("<I", header[1:5])
        if length > MAX_PAYLOAD:
            raise MalformedMessage("declared payload too large")
        return tag, self._read_exact(length)

    def close(self):
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def memory_channel_pair(pid_a, pid_b, stats_a, stats_b,
                        timeout=DEFAULT_TIMEOUT):
    q_ab, q_ba = queue.Queue(), queue.Queue()
    ch_a = MemoryChannel(pid_b, stats_a, q_ab, q_ba, timeout)
    ch_b = MemoryChannel(pid_a, stats_b, q_ba, q_ab, timeout)
    return ch_a, ch_b
