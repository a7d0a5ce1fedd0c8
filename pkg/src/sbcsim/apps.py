"""Applications of simultaneous broadcast: delayed random strings and voting.

``FDURS`` hands out one uniform string, ``delta`` rounds after the first
request (``delta - alpha`` for the adversary).  ``PiDURS`` gets there by
XOR-ing the 32-byte contributions everyone simultaneously broadcast.

``FVS`` is the voting functionality with a casting window and a per-voter
quota; ``PiVote`` casts signed plain ballots over simultaneous broadcast and
tallies the revealed batch locally.
"""

from .crypto import LAMBDA, Cert, xor_bytes
from .kernel import ConfigError, index_of, party, pid_of
from .rbc import FRBC, WAKE_UP

INIT = b"\x00vote-init"


def check_durs_params(phi, delta, alpha):
    if not (delta > phi > 0 and delta - phi >= alpha):
        raise ConfigError(f"need delta > phi > 0 and delta - phi >= alpha; got phi={phi}, delta={delta}, alpha={alpha}")


def combine(batch):
    """XOR of the well-formed (exactly 32-byte) entries."""
    urs = bytes(LAMBDA)
    for rho in batch:
        if isinstance(rho, bytes) and len(rho) == LAMBDA:
            urs = xor_bytes(urs, rho)
    return urs


class FDURS:
    def __init__(self, sim, delta, alpha, deliver, name="F_DURS"):
        self.sim = sim
        self.delta = delta
        self.alpha = alpha
        self.name = name
        self.deliver = deliver  # deliver(pid, urs)
        self.urs = None
        self.t_start = None
        self.wait = set()
        self.seen = {}

    def request(self, pid=None):
        """``pid=None`` is a request from the simulator; returns urs or None."""
        if self.urs is None:
            self.urs = self.sim.rand_block()
        now = self.sim.now
        if pid is not None:
            self.wait.add(pid)
        if self.t_start is None:
            self.t_start = now
            self.sim.leak(self.name, "durs_start", {"party": pid or "S"})
        if pid is None:
            return self.urs if now >= self.t_start + self.delta - self.alpha else None
        ready = self.t_start + self.delta
        if self.sim.honest(pid) and (now > ready or (now == ready and self.seen.get(pid) == now)):
            self.deliver(pid, self.urs)
        return None

    def advance(self, pid):
        now = self.sim.now
        if not self.sim.honest(pid) or self.seen.get(pid) == now:
            return
        self.seen[pid] = now
        if self.t_start is not None and now == self.t_start + self.delta and pid in self.wait:
            self.deliver(pid, self.urs)


class PiDURS:
    """Random string from simultaneously broadcast contributions.

    ``sbc`` must expose ``broadcast(pid, m)`` and ``advance(pid)`` and call
    :meth:`on_batch` on delivery; it is built with window ``phi`` and
    release delay ``delta - phi``.
    """

    def __init__(self, sim, deliver):
        self.sim = sim
        self.deliver = deliver  # deliver(pid, urs)
        self.sbc = None
        self.urs = {p: None for p in sim.pids}
        self.wait = set()
        self.awake = set()
        self.rbc = {p: FRBC(sim, f"F_RBC[{p}]", self.on_wake) for p in sim.pids}
        self.rho = {}

    def request(self, pid):
        if self.urs[pid] is not None:
            self.deliver(pid, self.urs[pid])
            return
        self.wait.add(pid)
        if pid not in self.awake:
            self.rbc[pid].broadcast(pid, WAKE_UP)

    def on_wake(self, m, sender):
        if m != WAKE_UP:
            return
        for pid in self.sim.honest_pids():
            self._wake(pid)

    def _wake(self, pid):
        if pid in self.awake:
            return
        self.awake.add(pid)
        rho = self.sim.rand_block()
        self.rho[pid] = rho
        self.sbc.broadcast(pid, rho)

    def on_batch(self, pid, batch):
        if self.urs[pid] is not None:
            return
        self.sim.emit(party(pid), "recv", {"batch": batch})
        self.urs[pid] = combine(batch)
        if pid in self.wait:
            self.deliver(pid, self.urs[pid])

    def advance(self, pid):
        if pid not in self.awake:
            self.rbc[pid].advance(pid)
        else:
            self.sbc.advance(pid)

    def snapshot(self, pid):
        return {"urs": self.urs[pid], "awake": pid in self.awake,
                "wait": pid in self.wait, "rho": self.rho.get(pid)}


def tally(votes, candidates):
    res = [0] * candidates
    for v in votes:
        res[v] += 1
    return res


def apply_quota(cast, quota):
    """``cast`` is [(voter, vote)] oldest first; keep each voter's latest ``quota``."""
    keep = []
    count = {}
    for voter, v in reversed(cast):
        if count.get(voter, 0) < quota:
            count[voter] = count.get(voter, 0) + 1
            keep.append(v)
    return keep[::-1]


class FVS:
    def __init__(self, sim, phi, delta, alpha, candidates, quota, deliver, name="F_VS"):
        self.sim = sim
        self.phi = phi
        self.delta = delta
        self.alpha = alpha
        self.candidates = candidates
        self.quota = quota
        self.name = name
        self.deliver = deliver  # deliver(pid, res)
        self.cast = []  # [tag, v, V, cl, bit]
        self.t_start = self.t_end = self.t_tally = None
        self.res = None
        self.seen = {}

    def init(self):
        if self.t_start is not None:
            return
        self.t_start = self.sim.now
        self.t_end = self.t_start + self.phi
        self.t_tally = self.t_end + self.delta

    def in_window(self):
        return self.t_start is not None and self.t_start <= self.sim.now < self.t_end

    def valid(self, v):
        return isinstance(v, int) and 0 <= v < self.candidates

    def vote(self, pid, v):
        if not self.in_window() or not self.valid(v):
            return None
        tag = self.sim.new_tag()
        if self.sim.honest(pid):
            self.cast.append([tag, v, pid, self.sim.now, 0])
            self.sim.leak(self.name, "vs_vote", {"tag": tag, "voter": pid})
        else:
            self.cast.append([tag, v, pid, self.sim.now, 1])
            self.sim.leak(self.name, "vs_vote", {"tag": tag, "vote": v, "voter": pid})
        return tag

    def corruption_request(self):
        return [tuple(e) for e in self.cast if e[4] == 0 and not self.sim.honest(e[2])]

    def allow(self, tag, v, pid):
        if not self.in_window() or self.sim.honest(pid) or not self.valid(v):
            return False
        for e in self.cast:
            if e[0] == tag and e[2] == pid and e[4] == 0:
                e[1], e[4] = v, 1
                return True
        return False

    def advance(self, pid):
        now = self.sim.now
        if not self.sim.honest(pid) or self.seen.get(pid) == now:
            return
        self.seen[pid] = now
        if self.t_start is None:
            return
        if now == self.t_tally - self.alpha and self.res is None:
            for e in self.cast:
                if e[4] == 0 and self.sim.honest(e[2]):
                    e[4] = 1
            kept = apply_quota([(e[2], e[1]) for e in self.cast if e[4] == 1], self.quota)
            self.res = tally(kept, self.candidates)
            self.sim.leak(self.name, "vs_result", {"res": self.res})
            if self.sim.adversary is not None:
                self.sim.adversary.on_result(self.res)
        if now == self.t_tally:
            self.deliver(pid, self.res)


def ballot_body(voter, seq, v):
    return b"VOTE" + index_of(voter).to_bytes(2, "big") + seq.to_bytes(4, "big") + bytes([v])


def parse_ballot(data):
    if len(data) != 11 + 32 or data[:4] != b"VOTE":
        return None
    voter = pid_of(int.from_bytes(data[4:6], "big"))
    seq = int.from_bytes(data[6:10], "big")
    return voter, seq, data[10], data[11:]


class PiVote:
    """Plain signed ballots over simultaneous broadcast with a local tally.

    Init is public setup: every voter sees the election open and only casts
    afterwards.  A ballot carries the voter id, a per-voter sequence number,
    one candidate byte and the voter's signature, so the tally can check
    eligibility and apply the quota rule after the batch lost its senders.
    """

    def __init__(self, sim, candidates, quota, deliver):
        self.sim = sim
        self.candidates = candidates
        self.quota = quota
        self.deliver = deliver  # deliver(pid, res)
        self.sbc = None
        self.opened = False
        self.seq = {p: 0 for p in sim.pids}
        self.certs = {p: Cert(p, sim.rand_block(), is_corrupted=lambda p=p: p in sim.corrupted)
                      for p in sim.pids}
        self.res = {}

    def init(self, pid):
        if self.opened:
            return
        self.opened = True
        self.sbc.broadcast(pid, INIT)

    def make_ballot(self, voter, seq, v):
        body = ballot_body(voter, seq, v)
        return body + self.certs[voter].sign(body)

    def vote(self, pid, v):
        if not self.opened:
            self.sim.emit(party(pid), "vote_early", {"vote": v})
            return None
        if not (isinstance(v, int) and 0 <= v < self.candidates):
            self.sim.emit(party(pid), "vote_invalid", {"vote": v})
            return None
        b = self.make_ballot(pid, self.seq[pid], v)
        self.seq[pid] += 1
        return b, self.sbc.broadcast(pid, b)

    def count(self, batch):
        cast = []
        for data in batch:
            p = parse_ballot(data)
            if p is None:
                continue
            voter, seq, v, sig = p
            if voter not in self.certs or v >= self.candidates:
                continue
            if not self.certs[voter].verify(data[:11], sig):
                continue
            cast.append((seq, voter, v))
        cast.sort(key=lambda x: x[0])
        return tally(apply_quota([(voter, v) for _, voter, v in cast], self.quota), self.candidates)

    def on_batch(self, pid, batch):
        self.sim.emit(party(pid), "recv", {"batch": batch})
        self.res[pid] = self.count(batch)
        self.deliver(pid, self.res[pid])

    def advance(self, pid):
        self.sbc.advance(pid)

    def snapshot(self, pid):
        return {"seq": self.seq[pid], "res": self.res.get(pid)}
