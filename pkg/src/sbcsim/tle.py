"""Time-lock encryption as a service.

``FTLE`` is the ideal machine parameterized by the adversary's look-ahead
``alpha`` (it may read records with ``tau <= Cl + alpha``) and the
ciphertext generation ``delay``.  ``PiTLE`` realizes it over fair broadcast:
ciphertexts are built at round end, fair-broadcast to everyone, and every
party keeps solving all open puzzles with its per-round budget.

Outer ciphertext layout: Astrolabous bytes of ``rho`` || 4-byte |c2| || c2 || c3,
with ``c2 = M xor mask(rho)`` and ``c3 = H(rho || M)``.
"""

from dataclasses import dataclass

from .astrolabous import AstCiphertext, ChainSolver, MalformedCiphertext, assemble, ast_dec, sample_puzzle
from .crypto import LAMBDA, BudgetExhausted, mask_expand, xor_bytes
from .fbc import cid
from .kernel import party

BOT = "bot"
MORE_TIME = "more_time"
INVALID_TIME = "invalid_time"
ENCRYPTING = "encrypting"


@dataclass
class Outer:
    c1: AstCiphertext
    c2: bytes
    c3: bytes

    def to_bytes(self):
        return self.c1.to_bytes() + len(self.c2).to_bytes(4, "big") + self.c2 + self.c3

    @classmethod
    def from_bytes(cls, data, expect_q=None):
        c1, rest = AstCiphertext.parse_prefix(data)
        if expect_q is not None and c1.q != expect_q:
            raise MalformedCiphertext(f"q={c1.q}, expected {expect_q}")
        if len(rest) < 4:
            raise MalformedCiphertext("missing c2 length")
        n = int.from_bytes(rest[:4], "big")
        if len(rest) != 4 + n + LAMBDA:
            raise MalformedCiphertext("outer ciphertext has the wrong length")
        return cls(c1, bytes(rest[4:4 + n]), bytes(rest[4 + n:]))


def outer_len(msg_len, tau_dec, q):
    return 12 + LAMBDA + (q * tau_dec + 1) * LAMBDA + 4 + msg_len + LAMBDA


def seal(m, rho, c1, oracle):
    c2 = xor_bytes(m, mask_expand(oracle, rho, len(m)))
    c3 = oracle.main(rho + m)
    return Outer(c1, c2, c3)


def open_outer(o, witness, oracle):
    """Return the plaintext, or None when the binding digest does not match."""
    rho = ast_dec(o.c1, witness)
    m = xor_bytes(o.c2, mask_expand(oracle, rho, len(o.c2)))
    if oracle.main(rho + m) != o.c3:
        return None
    return m


def tle_encrypt(m, tau_dec, q, rng, oracle):
    """Stand-alone outer encryption (used by adversaries and tests)."""
    k, rs = sample_puzzle(rng, q * tau_dec)
    hs = [oracle.star(r) for r in rs]
    rho = rng.getrandbits(8 * LAMBDA).to_bytes(LAMBDA, "big")
    return seal(m, rho, assemble(rho, tau_dec, q, k, rs, hs), oracle)


def tle_decrypt(data, oracle, q=None):
    """Solve and open an outer ciphertext; None on any failure."""
    try:
        o = Outer.from_bytes(data, q)
        s = ChainSolver(o.c1)
    except MalformedCiphertext:
        return None
    while not s.done:
        s.feed(oracle.star(s.pending()))
    return open_outer(o, s.witness, oracle)


def encode_ct(c, tau):
    return tau.to_bytes(4, "big") + c


def decode_ct(data):
    if len(data) < 4:
        raise MalformedCiphertext("short fbc payload")
    return data[4:], int.from_bytes(data[:4], "big")


class FTLE:
    def __init__(self, sim, alpha, delay, ct_len=None, name="F_TLE"):
        self.sim = sim
        self.alpha = alpha
        self.delay = delay
        self.name = name
        self.ct_len = ct_len or (lambda m, tau, cl: outer_len(len(m), 1, 1))
        self.rec = []  # [M, c, tau, tag, cl, pid]
        self.leaked = 0

    def leak_time(self, cl):
        return cl + self.alpha

    def enc(self, pid, m, tau):
        if tau < 0:
            return BOT
        tag = self.sim.new_tag()
        self.rec.append([m, None, tau, tag, self.sim.now, pid])
        self.sim.leak(self.name, "tle_enc", {"tau": tau, "tag": tag, "cl": self.sim.now,
                                             "msg": bytes(len(m)), "sender": pid})
        return ENCRYPTING

    def update_bind(self, pairs):
        for c, tag in pairs:
            if c is None:
                continue
            for r in self.rec:
                if r[3] == tag and r[1] is None:
                    r[1] = c

    def update_records(self, triples):
        for c, m, tau in triples:
            self.rec.append([m, c, tau, None, 0, None])

    def retrieve(self, pid):
        now = self.sim.now
        out = []
        for r in self.rec:
            if r[5] == pid and now - r[4] >= self.delay:
                if r[1] is None:
                    n = self.ct_len(r[0], r[2], r[4])
                    r[1] = self.sim.rng.getrandbits(8 * n).to_bytes(n, "big")
                out.append((r[0], r[1], r[2]))
        return out

    def dec(self, pid, c, tau):
        if c is None:
            return None
        if tau < 0:
            return BOT
        now = self.sim.now
        if now < tau:
            return MORE_TIME
        recs = [r for r in self.rec if r[1] == c]
        msgs = {r[0] for r in recs}
        if len(msgs) > 1 and tau >= max(r[2] for r in recs):
            return BOT
        if not recs:
            m = None
            if self.sim.adversary is not None:
                m = self.sim.adversary.tle_dec(c, tau)
            if m is None:
                return BOT
            self.rec.append([m, c, tau, None, 0, None])
            return m
        usable = {r[0] for r in recs if tau >= r[2]}
        if len(usable) == 1:
            return usable.pop()
        if usable:
            return BOT
        tau_dec = min(r[2] for r in recs)
        return MORE_TIME if now < tau_dec else INVALID_TIME

    def leakage(self):
        bound = self.leak_time(self.sim.now)
        out = []
        for r in self.rec:
            if r[2] <= bound or (r[5] is not None and not self.sim.honest(r[5])):
                out.append((r[0], r[1], r[2], r[3], r[4], r[5]))
        if len(out) > self.leaked:
            # only announce when the adversary's view grew
            self.leaked = len(out)
            self.sim.leak(self.name, "tle_leakage", {"records": [[m, c, tau] for m, c, tau, *_ in out]})
        return out


class PiTLE:
    """Time-lock encryption over fair broadcast and the budgeted star oracle.

    ``tau_offset`` is added to the round arithmetic of the difficulty,
    ``tau_dec = tau - (Cl + delta + tau_offset)``; 0 is the default here and
    1 reproduces the original, more generous schedule.
    """

    def __init__(self, sim, fbc, wrapper, delta, tau_offset=0):
        self.sim = sim
        self.fbc = fbc
        self.wrapper = wrapper
        self.q = wrapper.q
        self.delta = delta
        self.tau_offset = tau_offset
        self.rec = {p: [] for p in sim.pids}  # dict(m, c, tau, tag, cl, sent, dead)
        self.puzzle = {p: [] for p in sim.pids}  # dict(tag, c, tau, outer, solver, tstar)
        self.ended = {}

    def tau_dec(self, tau, cl):
        return tau - (cl + self.delta + self.tau_offset)

    def enc(self, pid, m, tau):
        if tau < 0:
            return BOT
        tag = self.sim.new_tag()
        self.rec[pid].append({"m": m, "c": None, "tau": tau, "tag": tag,
                              "cl": self.sim.now, "sent": False, "dead": False})
        return ENCRYPTING

    def receive(self, pid, data):
        try:
            c, tau = decode_ct(data)
            o = Outer.from_bytes(c, self.q)
            solver = ChainSolver(o.c1)
        except MalformedCiphertext as e:
            self.sim.emit(party(pid), "warning", {"what": "malformed tle ciphertext", "why": str(e)})
            return
        self.puzzle[pid].append({"tag": self.sim.new_tag(), "c": c, "tau": tau, "outer": o,
                                 "solver": solver, "tstar": o.c1.tau_dec})

    def retrieve(self, pid):
        now = self.sim.now
        return [(r["m"], r["c"], r["tau"]) for r in self.rec[pid]
                if r["sent"] and now - r["cl"] >= self.delta + 1]

    def dec(self, pid, c, tau):
        if tau < 0:
            return BOT
        now = self.sim.now
        if now < tau:
            return MORE_TIME
        entries = [e for e in self.puzzle[pid] if e["c"] == c]
        # an entry meant for a later round is still running: same answer as the ideal ladder
        if entries and all(tau < e["tau"] and now < e["tau"] for e in entries):
            return MORE_TIME
        solved = [e for e in entries if e["tstar"] == 0]
        if not solved:
            return BOT
        e = solved[0]
        if tau < e["tau"] <= now:
            return INVALID_TIME
        m = open_outer(e["outer"], e["solver"].witness, self.sim.oracle)
        return BOT if m is None else m

    def snapshot(self, pid):
        return {
            "rec": [{"m": r["m"], "tau": r["tau"], "cl": r["cl"], "sent": r["sent"]} for r in self.rec[pid]],
            "puzzles": [{"c": cid(e["c"]), "tau": e["tau"], "tstar": e["tstar"]} for e in self.puzzle[pid]],
        }

    def round_end(self, pid):
        now = self.sim.now
        if self.ended.get(pid) == now:
            return
        self.ended[pid] = now
        self.fbc.advance(pid)  # deliveries land in receive()
        fresh = []
        for r in self.rec[pid]:
            if r["c"] is not None or r["dead"]:
                continue
            td = self.tau_dec(r["tau"], r["cl"])
            if td <= 0:
                r["dead"] = True
                self.sim.emit(party(pid), "tle_rejected", {"tag": r["tag"], "tau": r["tau"], "tau_dec": td})
                continue
            fresh.append((r, td, sample_puzzle(self.sim.rng, self.q * td)))
        active = [e for e in self.puzzle[pid] if e["tstar"] > 0]
        gen = [x for _, _, (_, rs) in fresh for x in rs]
        gen_answers = []
        for j in range(self.q):
            batch = (gen if j == 0 else []) + [e["solver"].pending() for e in active]
            if not batch:
                continue
            try:
                answers = self.wrapper.evaluate(pid, batch)
            except BudgetExhausted as ex:
                self.sim.emit(party(pid), "protocol_fault", {"what": str(ex)})
                return
            if j == 0:
                gen_answers, answers = answers[:len(gen)], answers[len(gen):]
            for e, h in zip(active, answers):
                e["solver"].feed(h)
        for e in active:
            e["tstar"] -= 1
            if e["tstar"] == 0:
                self.sim.emit(party(pid), "witness_ready", {"cid": cid(e["c"]), "tau": e["tau"],
                                                            "calls": len(e["solver"].witness)})
        pos = 0
        for r, td, (k, rs) in fresh:
            hs = gen_answers[pos:pos + len(rs)]
            pos += len(rs)
            rho = self.sim.rand_block()
            o = seal(r["m"], rho, assemble(rho, td, self.q, k, rs, hs), self.sim.oracle)
            r["c"] = o.to_bytes()
        for r in self.rec[pid]:
            if r["c"] is not None and not r["sent"]:
                data = encode_ct(r["c"], r["tau"])
                td = self.tau_dec(r["tau"], r["cl"])
                self.sim.emit(party(pid), "tle_sent", {"cid": cid(r["c"]), "wire": cid(data), "tau": r["tau"],
                                                       "tau_dec": td, "links": self.q * td, "cl": r["cl"]})
                self.fbc.broadcast(pid, data)
                r["sent"] = True
