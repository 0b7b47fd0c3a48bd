"""Exception hierarchy shared by all protocol layers."""


class MpsuError(Exception):
    """Base class for every error raised by this package."""


class InvalidConfig(MpsuError):
    """Parameters violate a protocol precondition (m < 3, bad widths, ...)."""


class OutOfDictionary(MpsuError):
    """Group element is not in the invertible-encoding dictionary range."""


class CuckooFailure(MpsuError):
    """Cuckoo insertion exceeded the eviction budget; the session aborts."""


class EncodeSingular(MpsuError):
    """Key-value encoding hit an unsolvable linear system after all retries."""


class ChannelClosed(MpsuError):
    """Peer closed the channel (or the transport died) mid-protocol."""


class MalformedMessage(MpsuError):
    """Frame failed to parse: unknown tag, bad length, or truncated payload."""


class Timeout(MpsuError):
    """No message arrived within the channel's receive deadline."""


class PeerCrash(MpsuError):
    """A party died mid-session; carries per-party errors when known."""

    def __init__(self, msg, party_errors=None):
        super().__init__(msg)
        self.party_errors = party_errors or {}


class ConfigMismatch(MpsuError):
    """Session-hello config hashes disagree between two parties."""


class ModeMismatch(MpsuError):
    """Two endpoints disagree on a resource mode (dealer vs interactive)."""


class ReusedCorrelation(MpsuError):
    """A one-time OT correlation was consumed twice."""


class TriplesExhausted(MpsuError):
    """A Beaver-triple store ran out of unconsumed triples."""


class ResourceExhausted(MpsuError):
    """A precomputed resource pool (OTs, correlations) ran dry."""


class DimensionMismatch(MpsuError):
    """Share vectors passed to the shuffle have unequal dimensions."""
