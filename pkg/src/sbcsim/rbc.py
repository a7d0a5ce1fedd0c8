"""Relaxed and unfair broadcast.

``FRBC`` is the single-message relaxed broadcast machine, ``DolevStrong``
is a signature-chain protocol that realizes it with ``t+1`` rounds of
latency, ``FUBC`` is unfair broadcast and ``PiUBC`` builds it from one
relaxed-broadcast instance per message.
"""

import hashlib

from .crypto import Cert
from .kernel import EntityId, party

DEFAULT = b"\x00default"  # output when a Dolev-Strong run accepted zero or several values
WAKE_UP = b"\x00wake-up"  # outside every message space used by the stacks


class FRBC:
    """One relaxed-broadcast instance (a single message from a single sender)."""

    def __init__(self, sim, name, deliver):
        self.sim = sim
        self.name = name
        self.deliver = deliver  # deliver(m, sender) to every party
        self.output = None
        self.sender = None
        self.halted = False

    def broadcast(self, pid, m):
        if self.halted or self.sender is not None:
            return
        if self.sim.honest(pid):
            self.output, self.sender = m, pid
            self.sim.leak(self.name, "rbc_broadcast", {"msg": m, "sender": pid})
        else:
            self._finish(m, pid)

    def allow(self, m):
        if self.halted or self.sender is None or self.sim.honest(self.sender):
            return False
        self._finish(m, self.sender)
        return True

    def advance(self, pid):
        if not self.halted and self.sender == pid and self.sim.honest(pid):
            self._finish(self.output, pid)

    def _finish(self, m, sender):
        self.halted = True
        self.sim.leak(self.name, "rbc_deliver", {"msg": m, "sender": sender})
        self.deliver(m, sender)


class DolevStrong:
    """Signature-chain broadcast for many concurrent instances.

    An instance id is ``(sender, index, start_round)``.  A chain processed
    ``r`` rounds after the start needs at least ``r`` distinct valid
    signatures, the first by the sender.  New values are countersigned and
    relayed while ``r <= t``; at offset ``t+1`` every party that knows the
    instance outputs the unique accepted value or ``DEFAULT``.
    """

    def __init__(self, sim, t, deliver, name="DS"):
        self.sim = sim
        self.t = t
        self.deliver = deliver  # deliver(pid, m, sender)
        self.name = name
        self.certs = {}
        for pid in sim.pids:
            key = sim.rand_block()
            self.certs[pid] = Cert(pid, key, is_corrupted=lambda p=pid: p in sim.corrupted)
        self.inbox = {pid: [] for pid in sim.pids}
        self.accepted = {pid: {} for pid in sim.pids}  # pid -> iid -> [values]
        self.done = {pid: set() for pid in sim.pids}
        self.counter = {}

    @staticmethod
    def _body(iid, m, chain):
        h = hashlib.sha256()
        h.update(repr(iid).encode())
        h.update(len(m).to_bytes(4, "big") + m)
        for signer, sig in chain:
            h.update(signer.encode() + sig)
        return b"ds" + h.digest()

    def sign(self, pid, iid, m, chain):
        sig = self.certs[pid].sign(self._body(iid, m, chain))
        return list(chain) + [(pid, sig)]

    def new_iid(self, sender):
        k = self.counter.get(sender, 0)
        self.counter[sender] = k + 1
        return (sender, k, self.sim.now)

    def send(self, frm, to, iid, m, chain):
        self.inbox[to].append((self.sim.now + 1, iid, m, list(chain)))

    def send_all(self, frm, iid, m, chain):
        for to in self.sim.pids:
            if to != frm:
                self.send(frm, to, iid, m, chain)

    def broadcast(self, sender, m):
        """Start an instance now; the sender relays at offset 0."""
        iid = self.new_iid(sender)
        chain = self.sign(sender, iid, m, [])
        self.accepted[sender].setdefault(iid, []).append(m)
        self.send_all(sender, iid, m, chain)
        return iid

    def valid(self, iid, m, chain, r):
        if len(chain) < max(r, 1) or chain[0][0] != iid[0]:
            return False
        signers = [s for s, _ in chain]
        if len(set(signers)) != len(signers):
            return False
        for j, (signer, sig) in enumerate(chain):
            cert = self.certs.get(signer)
            if cert is None or not cert.verify(self._body(iid, m, chain[:j]), sig):
                return False
        return True

    def round_end(self, pid):
        now = self.sim.now
        ready = [e for e in self.inbox[pid] if e[0] <= now]
        self.inbox[pid] = [e for e in self.inbox[pid] if e[0] > now]
        for _, iid, m, chain in ready:
            r = now - iid[2]
            if r < 1 or r > self.t + 1 or iid in self.done[pid]:
                continue
            if not self.valid(iid, m, chain, r):
                self.sim.emit(party(pid), "warning", {"what": "invalid chain", "iid": list(map(str, iid))})
                continue
            vals = self.accepted[pid].setdefault(iid, [])
            if m in vals:
                continue
            vals.append(m)
            if r <= self.t and pid not in [s for s, _ in chain]:
                self.send_all(pid, iid, m, self.sign(pid, iid, m, chain))
        for iid, vals in sorted(self.accepted[pid].items(), key=lambda kv: (kv[0][2], kv[0][0], kv[0][1])):
            if iid in self.done[pid] or now - iid[2] < self.t + 1:
                continue
            self.done[pid].add(iid)
            out = vals[0] if len(vals) == 1 else DEFAULT
            self.deliver(pid, out, iid[0])


class FUBC:
    """Unfair broadcast: the adversary sees honest messages early and may
    replace a pending one once its sender is corrupted."""

    def __init__(self, sim, deliver, name="F_UBC"):
        self.sim = sim
        self.name = name
        self.deliver = deliver  # deliver(m) to every party
        self.pend = []  # [tag, m, pid]
        self.flushed = {}  # pid -> round of last flush

    def broadcast(self, pid, m):
        if self.sim.honest(pid):
            tag = self.sim.new_tag()
            self.pend.append([tag, m, pid])
            self.sim.leak(self.name, "ubc_broadcast", {"tag": tag, "msg": m, "sender": pid})
            return tag
        self._send(m, pid)
        return None

    def allow(self, tag, m):
        for i, (t, _, pid) in enumerate(self.pend):
            if t == tag and not self.sim.honest(pid):
                del self.pend[i]
                self._send(m, pid)
                return True
        return False

    def pending_of(self, pid):
        return [(t, m) for t, m, p in self.pend if p == pid]

    def advance(self, pid):
        if not self.sim.honest(pid) or self.flushed.get(pid) == self.sim.now:
            return
        self.flushed[pid] = self.sim.now
        mine = [e for e in self.pend if e[2] == pid]
        self.pend = [e for e in self.pend if e[2] != pid]
        for _, m, p in mine:
            self._send(m, p)

    def _send(self, m, pid):
        self.sim.leak(self.name, "ubc_deliver", {"msg": m, "sender": pid})
        self.deliver(m)


class PiUBC:
    """Unfair broadcast from one relaxed-broadcast instance per message.

    ``rbc`` selects the substrate: ``"ideal"`` uses ``FRBC`` instances,
    ``"dolev_strong"`` runs the signature-chain protocol (outputs then lag
    by ``t+1`` rounds).
    """

    def __init__(self, sim, deliver, rbc="ideal", t=None):
        self.sim = sim
        self.deliver = deliver  # deliver(pid, m)
        self.mode = rbc
        self.total = {pid: 0 for pid in sim.pids}
        self.count = {pid: 0 for pid in sim.pids}
        self.instances = {}
        self.ds = None
        if rbc == "dolev_strong":
            self.ds = DolevStrong(sim, sim.n - 1 if t is None else t,
                                  lambda pid, m, s: self.deliver(pid, m))
        self.ended = {}
        self.queued = {}

    def instance(self, pid, j):
        key = (pid, j)
        if key not in self.instances:
            self.instances[key] = FRBC(self.sim, f"F_RBC[{pid},{j}]", self._fan_out)
        return self.instances[key]

    def _fan_out(self, m, sender):
        for pid in self.sim.pids:
            self.deliver(pid, m)

    def broadcast(self, pid, m):
        self.total[pid] += 1
        self.count[pid] += 1
        if self.ds is not None:
            # signed and sent at round end, like the instance's Advance_Clock
            self.queued.setdefault(pid, []).append(m)
            self.sim.leak("DS", "rbc_broadcast", {"msg": m, "sender": pid})
        else:
            self.instance(pid, self.total[pid]).broadcast(pid, m)

    def round_end(self, pid):
        if self.ended.get(pid) == self.sim.now:
            return
        self.ended[pid] = self.sim.now
        if self.ds is None:
            for j in range(1, self.count[pid] + 1):
                self.instance(pid, self.total[pid] - (self.count[pid] - j)).advance(pid)
        else:
            for m in self.queued.pop(pid, []):
                self.ds.broadcast(pid, m)
            self.ds.round_end(pid)
        self.count[pid] = 0

    def snapshot(self, pid):
        return {"total": self.total[pid], "count": self.count[pid],
                "queued": list(self.queued.get(pid, []))}


def fid(name):
    return EntityId("functionality", name)
