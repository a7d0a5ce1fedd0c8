"""Simultaneous broadcast.

``FSBC`` collects messages during a window of ``phi`` rounds opened by the
first broadcast, then reveals the whole batch: to the adversary at
``t_end + delta - alpha`` and to the parties at ``t_end + delta``.
``PiSBC`` realizes it over unfair broadcast and time-lock encryption: a
Wake_Up message fixes the window, each message is masked with ``H(rho)`` and
``rho`` is time-locked until the common release round.
"""

from .crypto import mask_expand, xor_bytes
from .kernel import ConfigError, party
from .rbc import WAKE_UP
from .tle import BOT, INVALID_TIME, MORE_TIME


def check_sbc_params(phi, delta, tle_alpha, tle_delay):
    """Window must outlast ciphertext generation; release must outlast leakage."""
    if not phi > tle_delay:
        raise ConfigError(f"need phi > delay ({phi} <= {tle_delay})")
    if not delta > tle_alpha:
        raise ConfigError(f"need delta > max leak advantage ({delta} <= {tle_alpha})")
    return tle_alpha + 1


def check_realized_sbc(phi, delta, alpha):
    """Gate for the stack built all the way down to (2,2) fair broadcast."""
    if not (phi > 3 and delta > 2 and alpha == 3):
        raise ConfigError(f"realized stack needs phi > 3, delta > 2 and alpha = 3; got {phi}, {delta}, {alpha}")


class FSBC:
    def __init__(self, sim, phi, delta, alpha, deliver, name="F_SBC"):
        if not delta >= alpha >= 0:
            raise ValueError("need delta >= alpha >= 0")
        self.sim = sim
        self.phi = phi
        self.delta = delta
        self.alpha = alpha
        self.name = name
        self.deliver = deliver  # deliver(pid, [msgs])
        self.pend = []  # [tag, m, pid, cl, bit]
        self.t_start = None
        self.t_end = None
        self.seen = {}
        self.round_seen = None
        self.committed = False

    def in_window(self):
        return self.t_start is not None and self.t_start <= self.sim.now < self.t_end

    def broadcast(self, pid, m):
        now = self.sim.now
        if self.t_start is None:
            self.t_start, self.t_end = now, now + self.phi
            self.sim.emit(party(pid), "window", {"source": self.name, "t_start": self.t_start, "t_end": self.t_end})
        if not self.in_window():
            return None
        tag = self.sim.new_tag()
        if self.sim.honest(pid):
            self.pend.append([tag, m, pid, now, 0])
            self.sim.leak(self.name, "sbc_sender", {"tag": tag, "msg": bytes(len(m)), "sender": pid})
        else:
            self.pend.append([tag, m, pid, now, 1])
            self.sim.leak(self.name, "sbc_sender", {"tag": tag, "msg": m, "sender": pid})
        return tag

    def corruption_request(self):
        return [tuple(e) for e in self.pend if e[4] == 0 and not self.sim.honest(e[2])]

    def allow(self, tag, m, pid):
        if not self.in_window() or self.sim.honest(pid):
            return False
        for e in self.pend:
            if e[0] == tag and e[2] == pid and e[4] == 0:
                e[1], e[4] = m, 1
                self.sim.leak(self.name, "sbc_allow_ok", {"tag": tag})
                return True
        return False

    def batch(self):
        return [e[1] for e in self.pend if e[4] == 1]

    def advance(self, pid):
        now = self.sim.now
        if not self.sim.honest(pid) or self.seen.get(pid) == now or self.t_start is None:
            self.seen[pid] = now
            return
        self.seen[pid] = now
        if self.round_seen != now:
            self.round_seen = now
            if now == self.t_end and not self.committed:
                self.committed = True
                for e in self.pend:
                    if e[4] == 0 and self.sim.honest(e[2]):
                        e[4] = 1
                self.pend.sort(key=lambda e: e[1])
            if now == self.t_end + self.delta - self.alpha:
                self.sim.leak(self.name, "sbc_batch",
                              {"batch": [[e[0], e[1]] for e in self.pend if e[4] == 1]})
                if self.sim.adversary is not None:
                    self.sim.adversary.on_sbc_batch([(e[0], e[1], e[2]) for e in self.pend if e[4] == 1])
        if now == self.t_end + self.delta:
            self.deliver(pid, self.batch())


def encode_triple(c, tau, y):
    return b"SBC1" + tau.to_bytes(4, "big") + len(c).to_bytes(4, "big") + c + y


def decode_triple(data):
    if len(data) < 12 or data[:4] != b"SBC1":
        return None
    tau = int.from_bytes(data[4:8], "big")
    n = int.from_bytes(data[8:12], "big")
    if len(data) < 12 + n:
        return None
    return data[12:12 + n], tau, data[12 + n:]


class PartyState:
    def __init__(self):
        self.pend = []  # [rho, M, input index]
        self.rec = []  # [c, y]
        self.t_awake = None
        self.t_end = None
        self.tau_rel = None
        self.first = None
        self.deferred = []


class PiSBC:
    """Simultaneous broadcast over unfair broadcast and time-lock encryption."""

    def __init__(self, sim, ubc, tle, phi, delta, delay, deliver):
        self.sim = sim
        self.ubc = ubc
        self.tle = tle
        self.phi = phi
        self.delta = delta
        self.delay = delay
        self.deliver = deliver  # deliver(pid, [msgs])
        self.st = {p: PartyState() for p in sim.pids}
        self.inputs = {p: 0 for p in sim.pids}
        self.ended = {}

    def broadcast(self, pid, m):
        s = self.st[pid]
        k = self.inputs[pid]
        self.inputs[pid] += 1
        if s.t_awake is None:
            if s.first is None:
                s.first = m
                s.pend.append([self.sim.rand_block(), m, k])
                self.ubc.broadcast(pid, WAKE_UP)
            else:
                s.deferred.append((m, k))
            return
        self._enc(pid, m, k)

    def _enc(self, pid, m, k):
        s = self.st[pid]
        if self.sim.now >= s.t_end - self.delay:
            self.sim.emit(party(pid), "sbc_late", {"input": k, "t_end": s.t_end})
            return
        rho = self.sim.rand_block()
        s.pend.append([rho, m, k])
        self.tle.enc(pid, rho, s.tau_rel)

    def on_ubc(self, pid, data):
        s = self.st[pid]
        now = self.sim.now
        if data == WAKE_UP:
            if s.t_awake is not None:
                return
            s.t_awake, s.t_end = now, now + self.phi
            s.tau_rel = s.t_end + self.delta
            self.sim.emit(party(pid), "window", {"t_awake": s.t_awake, "t_end": s.t_end, "tau_rel": s.tau_rel})
            if s.first is not None:
                rho = s.pend[0][0]
                self.tle.enc(pid, rho, s.tau_rel)
            for m, k in s.deferred:
                self._enc(pid, m, k)
            s.deferred = []
            return
        t = decode_triple(data)
        if t is None:
            self.sim.emit(party(pid), "sbc_drop", {"why": "malformed"})
            return
        c, tau, y = t
        if s.t_awake is None or tau != s.tau_rel or not s.t_awake <= now < s.t_end:
            self.sim.emit(party(pid), "sbc_drop", {"why": "window or release round"})
            return
        if any(c2 == c or y2 == y for c2, y2 in s.rec):
            self.sim.emit(party(pid), "sbc_drop", {"why": "replay"})
            return
        s.rec.append((c, y))

    def snapshot(self, pid):
        s = self.st[pid]
        return {"pend": [[rho, m] for rho, m, _ in s.pend], "t_awake": s.t_awake,
                "tau_rel": s.tau_rel, "received": len(s.rec),
                "deferred": [m for m, _ in s.deferred]}

    def round_end(self, pid):
        now = self.sim.now
        if self.ended.get(pid) == now:
            return
        self.ended[pid] = now
        s = self.st[pid]
        if s.t_awake is not None and s.t_awake <= now < s.t_end:
            for rho, c, tau in self.tle.retrieve(pid):
                match = [e for e in s.pend if e[0] == rho]
                if tau != s.tau_rel or not match:
                    continue
                e = match[0]
                s.pend.remove(e)
                y = xor_bytes(e[1], mask_expand(self.sim.oracle, rho, len(e[1])))
                self.ubc.broadcast(pid, encode_triple(c, s.tau_rel, y))
        if s.tau_rel is not None and now == s.tau_rel:
            out = []
            for c, y in s.rec:
                rho = self.tle.dec(pid, c, s.tau_rel)
                if rho in (None, BOT, MORE_TIME, INVALID_TIME):
                    self.sim.emit(party(pid), "sbc_skip", {"answer": str(rho)})
                    continue
                out.append(xor_bytes(y, mask_expand(self.sim.oracle, rho, len(y))))
            self.deliver(pid, out)
        self.ubc.advance(pid)
