"""Test-profile helpers: local multi-party drivers and trapdoor hooks.

Everything in this module is for tests, demos, and benchmarks only.  The
hooks deliberately break the privacy of a run (revealing shares, secret
keys, permutations) so properties can be asserted; nothing here is part
of the secure protocol surface.
"""

import threading

from .runtime.channels import ChannelStats, memory_channel_pair


class TestHooks:
    """Recording sink for protocol internals exposed in test runs."""

    def __init__(self):
        self.records = {}

    def record(self, name, value):
        self.records.setdefault(name, []).append(value)

    def get(self, name):
        return self.records.get(name, [])


class LocalMesh:
    """Fully-connected in-memory mesh for m locally-driven parties."""

    def __init__(self, m, timeout=20.0):
        self.m = m
        self.stats = [ChannelStats() for _ in range(m)]
        self.channels = [{} for _ in range(m)]
        for i in range(m):
            for j in range(i + 1, m):
                ch_i, ch_j = memory_channel_pair(i, j, self.stats[i],
                                                 self.stats[j], timeout)
                self.channels[i][j] = ch_i
                self.channels[j][i] = ch_j

    def close_party(self, pid):
        for ch in self.channels[pid].values():
            ch.close()


def run_parties(party_fns, timeout=20.0, mesh=None):
    """Run one callable per party over a shared memory mesh.

    Each callable gets (pid, channels_dict, stats).  Returns the list of
    per-party results; re-raises the first party exception.
    """
    m = len(party_fns)
    mesh = mesh or LocalMesh(m, timeout)
    results = [None] * m
    errors = [None] * m

    def runner(pid):
        try:
            results[pid] = party_fns[pid](pid, mesh.channels[pid],
                                          mesh.stats[pid])
        except BaseException as exc:  # noqa: BLE001 - surfaced to caller
            errors[pid] = exc
        finally:
            mesh.close_party(pid)

    threads = [threading.Thread(target=runner, args=(pid,), daemon=True)
               for pid in range(m)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    for exc in errors:
        if exc is not None:
            raise exc
    return results


def run_two_party(fn_a, fn_b, timeout=20.0):
    return run_parties([fn_a, fn_b], timeout)
