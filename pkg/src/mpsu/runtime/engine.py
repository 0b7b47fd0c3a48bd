"""Session engine: party processes, transports, resources, and dispatch.

A session runs m logical parties, one thread each, connected pairwise by
framed channels (in-memory queues or localhost TCP).  Each party owns a
deterministic rng stream, a communication meter, and (in dealer mode) a
correlation-store endpoint.  There is no global clock; phases synchronise
purely through message availability.

With fixed seeds and the memory transport a session is bit-reproducible:
every party's behaviour is a deterministic function of its rng stream and
its FIFO per-pair inbox.
"""

import hashlib
import socket
import struct
import threading
import time
from dataclasses import dataclass, field

from ..binning import derive_params
from ..errors import ChannelClosed, ConfigMismatch, InvalidConfig, \
    MalformedMessage, MpsuError, PeerCrash, Timeout
from ..group import get_group
from ..ot import DealerRotSource, IknpRotSource, TripleStore
from ..rng import rng_from_seed
from ..runtime.channels import ChannelStats, TcpChannel, memory_channel_pair
from ..runtime.dealer import DealerEndpoint
from ..runtime.framing import TAGS

MAGIC = b"MPSU"
VERSION = 1


class InjectedCrash(RuntimeError):
    """Fault-injection marker used by tests; deliberately not an MpsuError."""


@dataclass
class SessionConfig:
    protocol: str = "sk"            # sk | pk | pid
    m: int = 3
    n: int = 16
    element_bits: int = 64
    group_name: str = "test"
    hash_seed: bytes = b"mpsu-hash-seed-0"
    rng_seeds: tuple = None         # one seed per party; None = OS randomness
    resource_mode: str = "dealer"   # dealer | interactive
    transport: str = "memory"       # memory | tcp
    sigma: int = 40
    lam: int = 128
    timeout_s: float = 60.0
    dealer_seed: bytes = b"mpsu-dealer-seed"
    dict_bound: int = 1 << 20
    # fault injection (tests only): party that dies entering a phase
    crash_party: int = None
    crash_phase: str = None

    def config_hash(self) -> bytes:
        """Digest of everything that must agree across parties; per-party
        rng seeds and fault-injection knobs are excluded."""
        desc = "|".join([
            self.protocol, str(self.m), str(self.n),
            str(self.element_bits), self.group_name,
            self.hash_seed.hex(), self.resource_mode, str(self.sigma),
            str(self.lam), self.dealer_seed.hex(), str(self.dict_bound),
        ])
        return hashlib.blake2b(desc.encode(), digest_size=16).digest()


@dataclass
class UnionResult:
    elements: frozenset
    stats: dict
    extras: dict = field(default_factory=dict)


class PartyCtx:
    """Everything one party needs for one session."""

    def __init__(self, me, cfg, params, group, rng, channels, stats,
                 dealer=None, hooks=None):
        self.me = me
        self.cfg = cfg
        self.params = params
        self.group = group
        self.rng = rng
        self.channels = channels
        self.stats = stats
        self.dealer = dealer
        self.hooks = hooks
        self.h2g_cache = {}
        self._rot_sources = {}
        self._triple_stores = {}

    def set_phase(self, phase):
        if self.cfg.crash_party == self.me and self.cfg.crash_phase == phase:
            raise InjectedCrash(f"party {self.me} crashed entering {phase}")
        self.stats.set_phase(phase)

    def rot_take(self, sender, receiver, count, nbytes):
        """Next `count` ROT correlations on the ordered (sender, receiver)
        direction, as whichever role this party plays."""
        role = "sender" if self.me == sender else "receiver"
        if self.cfg.resource_mode == "dealer":
            return DealerRotSource(self.dealer, sender, receiver,
                                   role).take(count, nbytes)
        src = self._rot_sources.get((sender, receiver))
        if src is None:
            peer = receiver if role == "sender" else sender
            src = IknpRotSource(self.channels[peer], role,
                                self.rng.child(f"iknp/{sender}/{receiver}"),
                                self.group)
            self._rot_sources[(sender, receiver)] = src
        return src.take(count, nbytes)

    def triples(self, peer) -> TripleStore:
        store = self._triple_stores.get(peer)
        if store is None:
            if self.cfg.resource_mode == "dealer":
                store = TripleStore("dealer", self.me, peer,
                                    self.rng.child(f"triple/{peer}"),
                                    dealer=self.dealer)
            else:
                store = TripleStore(
                    "ot_based", self.me, peer,
                    self.rng.child(f"triple/{peer}"),
                    channel=self.channels[peer],
                    rot_sources=(_DirectedSource(self, self.me, peer),
                                 _DirectedSource(self, peer, self.me)))
            self._triple_stores[peer] = store
        return store


class _DirectedSource:
    """Adapter giving TripleStore a take() bound to one OT direction."""

    def __init__(self, ctx, sender, receiver):
        self.ctx = ctx
        self.sender = sender
        self.receiver = receiver

    def take(self, count, nbytes):
        return self.ctx.rot_take(self.sender, self.receiver, count, nbytes)


def _hello_payload(cfg, pid):
    return MAGIC + struct.pack("<H", VERSION) + cfg.config_hash() \
        + struct.pack("<H", pid)


def _check_hello(cfg, expect_pid, payload):
    if len(payload) != 24 or payload[:4] != MAGIC:
        raise MalformedMessage("bad hello")
    (version,) = struct.unpack("<H", payload[4:6])
    if version != VERSION:
        raise MalformedMessage(f"version mismatch: {version}")
    if payload[6:22] != cfg.config_hash():
        raise ConfigMismatch("peer session config differs")
    (pid,) = struct.unpack("<H", payload[22:24])
    if pid != expect_pid:
        raise ConfigMismatch(f"expected party {expect_pid}, got {pid}")


def _exchange_hellos(ctx):
    for i in range(ctx.cfg.m):
        for j in range(i + 1, ctx.cfg.m):
            if ctx.me == i:
                ctx.channels[j].send(TAGS["HELLO"],
                                     _hello_payload(ctx.cfg, ctx.me))
                _check_hello(ctx.cfg, j, ctx.channels[j].recv(TAGS["HELLO"]))
            elif ctx.me == j:
                _check_hello(ctx.cfg, i, ctx.channels[i].recv(TAGS["HELLO"]))
                ctx.channels[i].send(TAGS["HELLO"],
                                     _hello_payload(ctx.cfg, ctx.me))


def _party_main(ctx, elements):
    from ..protocols.pk import pk_mpsu_party
    from ..protocols.private_id import private_id_party
    from ..protocols.sk import sk_mpsu_party

    ctx.set_phase("setup")
    _exchange_hellos(ctx)
    if ctx.cfg.protocol == "sk":
        return sk_mpsu_party(ctx, elements)
    if ctx.cfg.protocol == "pk":
        return pk_mpsu_party(ctx, elements)
    if ctx.cfg.protocol == "pid":
        return private_id_party(ctx, elements)
    raise InvalidConfig(f"unknown protocol {ctx.cfg.protocol!r}")


def _validate_inputs(cfg, params, group, inputs):
    if len(inputs) != cfg.m:
        raise InvalidConfig(f"need {cfg.m} input sets, got {len(inputs)}")
    eb = params.element_bytes
    for pid, elems in enumerate(inputs):
        if len(elems) != cfg.n:
            raise InvalidConfig(
                f"party {pid}: expected {cfg.n} elements, got {len(elems)}")
        if len(set(elems)) != len(elems):
            raise InvalidConfig(f"party {pid}: duplicate elements")
        for x in elems:
            if len(x) != eb:
                raise InvalidConfig(
                    f"party {pid}: element width {len(x)} != {eb}")
            if cfg.protocol == "pk" and \
                    int.from_bytes(x, "little") >= cfg.dict_bound:
                raise InvalidConfig(
                    f"party {pid}: element exceeds the dictionary bound "
                    f"{cfg.dict_bound} required for encryption")


def _build_tcp_channels(m, stats, timeout):
    """Wire a full localhost mesh; returns per-party channel dicts."""
    listeners = []
    ports = []
    for _ in range(m):
        lst = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        lst.bind(("127.0.0.1", 0))
        lst.listen(m)
        listeners.append(lst)
        ports.append(lst.getsockname()[1])
    channels = [{} for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            cli = socket.create_connection(("127.0.0.1", ports[i]))
            cli.sendall(struct.pack("<H", j))
            srv, _ = listeners[i].accept()
            (peer,) = struct.unpack("<H", srv.recv(2))
            assert peer == j
            for sock in (cli, srv):
                sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            channels[i][j] = TcpChannel(j, stats[i], srv, timeout)
            channels[j][i] = TcpChannel(i, stats[j], cli, timeout)
    for lst in listeners:
        lst.close()
    return channels


def run_session(cfg: SessionConfig, inputs, hooks=None) -> UnionResult:
    """Execute one full session; returns the leader's result and stats.

    `inputs` is a list of m element lists (fixed-width byte strings).  On
    failure the most informative party error is raised: protocol errors
    directly, crashes as PeerCrash carrying every party's error.
    """
    group = get_group(cfg.group_name)
    params = derive_params(cfg.m, cfg.n, cfg.element_bits, cfg.sigma,
                           cfg.lam)
    _validate_inputs(cfg, params, group, inputs)
    m = cfg.m
    stats = [ChannelStats() for _ in range(m)]

    if cfg.transport == "memory":
        channels = [{} for _ in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                ch_i, ch_j = memory_channel_pair(i, j, stats[i], stats[j],
                                                 cfg.timeout_s)
                channels[i][j] = ch_i
                channels[j][i] = ch_j
    elif cfg.transport == "tcp":
        channels = _build_tcp_channels(m, stats, cfg.timeout_s)
    else:
        raise InvalidConfig(f"unknown transport {cfg.transport!r}")

    seeds = cfg.rng_seeds or tuple(None for _ in range(m))
    if len(seeds) != m:
        raise InvalidConfig("need one rng seed per party")
    ctxs = []
    for pid in range(m):
        dealer = DealerEndpoint(cfg.dealer_seed, stats[pid]) \
            if cfg.resource_mode == "dealer" else None
        ctxs.append(PartyCtx(pid, cfg, params, group,
                             rng_from_seed(seeds[pid]), channels[pid],
                             stats[pid], dealer=dealer, hooks=hooks))

    results = [None] * m
    errors = [None] * m

    def runner(pid):
        try:
            results[pid] = _party_main(ctxs[pid], inputs[pid])
        except (ChannelClosed, Timeout) as exc:
            errors[pid] = PeerCrash(f"party {pid}: peer died "
                                    f"mid-protocol: {exc}")
        except BaseException as exc:  # noqa: BLE001 - collected below
            errors[pid] = exc
        finally:
            for ch in channels[pid].values():
                ch.close()

    t0 = time.perf_counter()
    threads = [threading.Thread(target=runner, args=(pid,), daemon=True)
               for pid in range(m)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    wall_ms = (time.perf_counter() - t0) * 1e3

    if any(errors):
        party_errors = {pid: err for pid, err in enumerate(errors) if err}
        root = next((e for e in errors
                     if e is not None and isinstance(e, MpsuError)
                     and not isinstance(e, PeerCrash)), None)
        if root is not None:
            raise root
        raise PeerCrash("session failed", party_errors)

    stats_doc = {
        "protocol": cfg.protocol,
        "m": m,
        "n": cfg.n,
        "per_party": [s.as_dict() for s in stats],
        "wall_ms": wall_ms,
        "leader_bytes_total": stats[0].sent_total + stats[0].recv_total,
        "transcripts": [s.transcript_hash() for s in stats],
    }
    extras = {}
    if cfg.protocol == "pid":
        extras["pid_outputs"] = results
        elements = results[0][0]
    else:
        elements = results[0]
    return UnionResult(elements=frozenset(elements), stats=stats_doc,
                       extras=extras)
