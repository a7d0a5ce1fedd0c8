"""Fair broadcast.

``FFBC`` is the ideal machine with lock semantics: once the adversary asks
for a message's content it is locked and can no longer be replaced.
``PiFBC`` realizes the (2,2) variant over unfair broadcast: each message is
masked with the hash of a random ``rho`` and ``rho`` is time-locked for two
rounds, so nobody learns the message before the lock point.
"""

import hashlib

from .astrolabous import AstCiphertext, ChainSolver, MalformedCiphertext, assemble, ast_dec, sample_puzzle
from .crypto import BudgetExhausted, mask_expand, xor_bytes
from .kernel import party


def cid(c_bytes):
    """Short stable id for a ciphertext in trace payloads."""
    return hashlib.sha256(c_bytes).hexdigest()[:16]


class FFBC:
    def __init__(self, sim, delta, alpha, deliver, name="F_FBC"):
        if not delta >= alpha >= 0:
            raise ValueError("need delta >= alpha >= 0")
        self.sim = sim
        self.delta = delta
        self.alpha = alpha
        self.name = name
        self.deliver = deliver  # deliver(pid, m)
        self.pend = []  # [tag, m, pid, cl]
        self.lock = []
        self.output = None
        self.seen = {}

    def broadcast(self, pid, m):
        """Honest sender, or the adversary on behalf of a corrupted one."""
        tag = self.sim.new_tag()
        self.pend.append([tag, m, pid, self.sim.now])
        self.sim.leak(self.name, "fbc_broadcast", {"tag": tag, "sender": pid})
        return tag

    def _find(self, lst, tag):
        for e in lst:
            if e[0] == tag:
                return e
        return None

    def output_request(self, tag):
        e = self._find(self.pend, tag)
        if e is None or self.sim.now - e[3] != self.delta - self.alpha:
            return None
        self.pend.remove(e)
        self.lock.append(e)
        self.sim.leak(self.name, "fbc_output", {"tag": tag, "msg": e[1], "sender": e[2], "cl": e[3]})
        return tuple(e)

    def corruption_request(self):
        out = [tuple(e) for e in self.pend if not self.sim.honest(e[2])]
        self.sim.leak(self.name, "fbc_corrupted_pending", {"entries": out})
        return out

    def allow(self, tag, m, pid):
        e = self._find(self.pend, tag)
        if e is None or e[2] != pid or self.sim.honest(pid):
            return False
        self.output = m
        if self._find(self.lock, tag) is None:
            self.pend.remove(e)
            self.lock.append([tag, m, pid, e[3]])
        self.sim.leak(self.name, "fbc_allow_ok", {"tag": tag})
        return True

    def advance(self, pid):
        if not self.sim.honest(pid) or self.seen.get(pid) == self.sim.now:
            return
        self.seen[pid] = self.sim.now
        now = self.sim.now
        batch = sorted(self.pend + self.lock, key=lambda e: e[1])
        for _, m, _, cl in batch:
            if now - cl == self.delta:
                self.deliver(pid, m)


def encode_cy(c, y):
    return c.to_bytes() + y


def decode_cy(data, q):
    c, y = AstCiphertext.parse_prefix(data)
    if c.tau_dec != 2 or c.q != q:
        raise MalformedCiphertext(f"expected tau_dec=2 and q={q}")
    return c, y


def open_cy(c, y, witness, oracle):
    rho = ast_dec(c, witness)
    return xor_bytes(y, mask_expand(oracle, rho, len(y)))


def seal(m, q, k, rs, hs, rho, oracle):
    c = assemble(rho, 2, q, k, rs, hs)
    return c, xor_bytes(m, mask_expand(oracle, rho, len(m)))


class PiFBC:
    """Fair broadcast over unfair broadcast and the budgeted star oracle."""

    def __init__(self, sim, ubc, wrapper, deliver):
        self.sim = sim
        self.ubc = ubc
        self.wrapper = wrapper
        self.q = wrapper.q
        self.deliver = deliver  # deliver(pid, m)
        self.pend = {p: [] for p in sim.pids}
        self.wait = {p: [] for p in sim.pids}  # [c, y, cl, solver, raw]
        self.ended = {}

    def broadcast(self, pid, m):
        self.pend[pid].append(m)

    def receive(self, pid, data):
        try:
            c, y = decode_cy(data, self.q)
            solver = ChainSolver(c)
        except MalformedCiphertext as e:
            self.sim.emit(party(pid), "warning", {"what": "malformed fbc ciphertext", "why": str(e)})
            return
        self.wait[pid].append([c, y, self.sim.now, solver, data])

    def snapshot(self, pid):
        return {
            "pend": list(self.pend[pid]),
            "wait": [{"c": w[4], "cl": w[2]} for w in self.wait[pid]],
        }

    def round_end(self, pid):
        now = self.sim.now
        if self.ended.get(pid) == now:
            return
        self.ended[pid] = now
        msgs, self.pend[pid] = self.pend[pid], []
        puzzles = [sample_puzzle(self.sim.rng, 2 * self.q) for _ in msgs]
        w1 = [w for w in self.wait[pid] if w[2] == now - 1]
        w2 = [w for w in self.wait[pid] if w[2] == now - 2]
        solving = w1 + w2
        gen = [r for _, rs in puzzles for r in rs]
        gen_answers = []
        for j in range(self.q):
            batch = (gen if j == 0 else []) + [w[3].pending() for w in solving]
            if not batch:
                continue
            try:
                answers = self.wrapper.evaluate(pid, batch)
            except BudgetExhausted as e:
                self.sim.emit(party(pid), "protocol_fault", {"what": str(e)})
                return
            if j == 0:
                gen_answers, answers = answers[:len(gen)], answers[len(gen):]
            for w, h in zip(solving, answers):
                w[3].feed(h)
        for i, (m, (k, rs)) in enumerate(zip(msgs, puzzles)):
            hs = gen_answers[2 * self.q * i:2 * self.q * (i + 1)]
            rho = self.sim.rand_block()
            c, y = seal(m, self.q, k, rs, hs, rho, self.sim.oracle)
            data = encode_cy(c, y)
            self.sim.emit(party(pid), "fbc_sent", {"cid": cid(data), "inner": cid(m), "links": c.links})
            self.ubc.broadcast(pid, data)
        ready = []
        for w in w2:
            self.wait[pid].remove(w)
            self.sim.emit(party(pid), "witness_ready", {"cid": cid(w[4]), "calls": len(w[3].witness)})
            ready.append(open_cy(w[0], w[1], w[3].witness, self.sim.oracle))
        for m in sorted(ready):
            self.deliver(pid, m)
        self.ubc.advance(pid)

    advance = round_end  # same entry point as FFBC, so PiTLE can run on top
