"""Protocol stacks and their ideal twins, each with its own adversary.

A *world* wires one protocol (or one ideal functionality) to the kernel and
plays the adversary for it.  Protocol worlds run a scripted real-world
adversary; ideal worlds run the matching simulator, which turns the same
script into Allow / Output_Request calls on the functionality.  Both read
the same directives:

``send``       a corrupted party broadcasts ``msg``
``allow``      substitute ``msg`` (or ``vote``) for the ``k``-th broadcast of ``target``
``replay``     a corrupted party re-sends ``target``'s ``k``-th wire message
``malformed``  a corrupted party sends bytes no honest party accepts
``equivocate`` (rbc) a corrupted sender signs two values
``wake``       (durs) a corrupted party opens the round
``vote``       (vote) a corrupted voter casts ``vote``
``tle_enc``    (tle) a corrupted party encrypts ``msg`` for round ``tau``

When a corrupted party's slot comes, the adversary finishes whatever that
party had queued (with substitutes where an ``allow`` asked for one), so a
plain corruption changes nothing observable.  Protocol adversaries also
solve every puzzle they see with the shared corrupted budget and log an
``adv_learned`` event when a message opens.
"""

from .apps import FDURS, FVS, PiDURS, PiVote, check_durs_params, combine, parse_ballot
from .astrolabous import ChainSolver, MalformedCiphertext, assemble, sample_puzzle
from .crypto import LAMBDA, BudgetExhausted, Wrapper, mask_expand, xor_bytes
from .fbc import FFBC, PiFBC, cid, decode_cy, encode_cy, open_cy, seal as fbc_seal
from .kernel import ADV, ENV, ConfigError, EntityId, party, pid_of
from .rbc import DEFAULT, FRBC, FUBC, WAKE_UP, DolevStrong, PiUBC
from .sbc import FSBC, PiSBC, check_realized_sbc, check_sbc_params, decode_triple, encode_triple
from .tle import FTLE, BOT, Outer, PiTLE, decode_ct, encode_ct, open_outer, outer_len, seal as tle_seal, tle_decrypt


def msg_of(d, key="msg"):
    v = d.get(key, "")
    try:
        return bytes.fromhex(v)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{key} must be a hex string, got {v!r}") from e


class Curious:
    """Puzzle solving on the adversary's shared per-round budget."""

    def __init__(self, world, wrapper):
        self.world = world
        self.wrapper = wrapper
        self.items = []  # [solver, on_done, fired]

    def add(self, solver, on_done):
        self.items.append([solver, on_done, False])

    def run(self):
        progress = True
        while progress:
            progress = False
            for it in self.items:
                if it[0].done and not it[2]:
                    it[2] = True
                    it[1](it[0].witness)
                    progress = True
            live = [it for it in self.items if not it[0].done]
            if live and self.wrapper.remaining(Wrapper.CORR) > 0:
                hs = self.wrapper.evaluate("A", [it[0].pending() for it in live], corrupted=True)
                for it, h in zip(live, hs):
                    it[0].feed(h)
                progress = True


class World:
    name = "?"
    latency = 2

    def __init__(self, sim):
        self.sim = sim
        self.p = sim.params
        self.funcs = []
        self.subst = {}  # (pid, k) -> replacement
        self.handles = {pid: [] for pid in sim.pids}  # per broadcast input
        self.learned = []
        sim.adversary = self

    # -- kernel interface ---------------------------------------------------------
    def setup(self):
        self.build()
        info = dict(self.p.to_dict(), stack=self.name, n=self.sim.n)
        info.update(self.info())
        self.sim.emit(ENV, "params", info)

    def build(self):
        pass

    def info(self):
        return {}

    def fn(self, name):
        eid = EntityId("functionality", name)
        self.sim.register(eid)
        self.funcs.append(eid)
        return eid

    def wrapper(self, name="W_q"):
        eid = EntityId("functionality", name)

        def on_batch(caller, key, size, granted):
            self.sim.emit(eid, "ro_batch", {"caller": caller, "key": key, "size": size,
                                            "granted": granted, "wrapper": name})

        return Wrapper(self.sim.oracle, self.p.q, lambda: self.sim.now, on_batch)

    def functionalities(self):
        return self.funcs

    def functionality_tick(self, f):
        pass

    def drain(self):
        return self.latency + 2

    def finish(self):
        pass

    def round_start(self):
        pass

    def round_end(self):
        pass

    def input(self, pid, op):
        fn = getattr(self, "in_" + str(op.get("op")), None)
        if fn is None:
            self.sim.emit(party(pid), "warning", {"what": "unknown input", "op": op.get("op")})
            return
        fn(pid, op)

    def advance(self, pid):
        pass

    def on_corrupt(self, pid):
        return {}

    def corrupt_slot(self, pid):
        pass

    def directive(self, d):
        fn = getattr(self, "do_" + str(d["do"]), None)
        if fn is None:
            self.sim.emit(ADV, "warning", {"what": "directive not supported here", "do": d["do"]})
            return
        if "party" in d and self.sim.honest(pid_of(d["party"])):
            self.sim.emit(ADV, "warning", {"what": "party is not corrupted", "party": pid_of(d["party"])})
            return
        fn(d)

    # -- adversary hooks ----------------------------------------------------------
    def on_leak(self, source, kind, payload):
        pass

    def tle_dec(self, c, tau):
        return None

    def on_sbc_batch(self, batch):
        for _, m, _ in batch:
            self.learn(m, "batch")

    def on_result(self, res):
        self.learn(res, "result")

    def learn(self, m, how):
        if m in self.learned:
            return
        self.learned.append(m)
        self.sim.adv_event("adv_learned", {"msg": m, "how": how})

    def do_allow(self, d):
        key = "vote" if "vote" in d else "msg"
        value = d[key] if key == "vote" else msg_of(d)
        self.subst[(pid_of(d["target"]), d.get("k", 0))] = value

    def pick(self, pid, k, original):
        return self.subst.get((pid, k), original)

    def out(self, pid, payload):
        if self.sim.honest(pid):
            self.sim.output(pid, payload)


# -- relaxed broadcast -------------------------------------------------------------

def ds_threshold(sim):
    t1 = sim.params.t_plus_one_rounds
    return (t1 - 1) if t1 else sim.n - 1


class RbcWorld(World):
    """Dolev-Strong, one instance per broadcast input."""

    name = "rbc"

    def build(self):
        self.t = ds_threshold(self.sim)
        self.latency = self.t + 1
        self.ds = DolevStrong(self.sim, self.t,
                              lambda pid, m, s: self.out(pid, {"msg": m, "sender": s}))
        self.queue = {pid: [] for pid in self.sim.pids}

    def info(self):
        return {"t": self.t}

    def in_broadcast(self, pid, op):
        k = len(self.handles[pid])
        self.handles[pid].append(k)
        self.queue[pid].append((k, msg_of(op)))

    def advance(self, pid):
        for _, m in self.queue[pid]:
            self.ds.broadcast(pid, m)
        self.queue[pid] = []
        self.ds.round_end(pid)

    def on_corrupt(self, pid):
        return {"queued": [m for _, m in self.queue[pid]]}

    def corrupt_slot(self, pid):
        for k, m in self.queue[pid]:
            self.ds.broadcast(pid, self.pick(pid, k, m))
        self.queue[pid] = []

    def _start(self, pid, m, to):
        iid = self.ds.new_iid(pid)
        chain = self.ds.sign(pid, iid, m, [])
        for r in to:
            if r != pid:
                self.ds.send(pid, r, iid, m, chain)
        return iid

    def do_send(self, d):
        pid = pid_of(d["party"])
        to = [pid_of(i) for i in d.get("to", range(self.sim.n))]
        self._start(pid, msg_of(d), to)

    def do_equivocate(self, d):
        pid = pid_of(d["party"])
        iid = self.ds.new_iid(pid)
        split = d.get("split", self.sim.n // 2)
        for m, group in ((msg_of(d), range(split)), (msg_of(d, "msg2"), range(split, self.sim.n))):
            chain = self.ds.sign(pid, iid, m, [])
            for i in group:
                if pid_of(i) != pid:
                    self.ds.send(pid, pid_of(i), iid, m, chain)


class RbcIdeal(World):
    name = "rbc_ideal"
    latency = 0

    def build(self):
        self.fn("F_RBC")
        self.count = 0

    def instance(self):
        self.count += 1
        return FRBC(self.sim, f"F_RBC[{self.count}]", self.fan_out)

    def fan_out(self, m, sender):
        for pid in self.sim.pids:
            self.out(pid, {"msg": m, "sender": sender})

    def in_broadcast(self, pid, op):
        inst = self.instance()
        self.handles[pid].append(inst)
        inst.broadcast(pid, msg_of(op))

    def advance(self, pid):
        for inst in self.handles[pid]:
            inst.advance(pid)

    def corrupt_slot(self, pid):
        for k, inst in enumerate(self.handles[pid]):
            if not inst.halted and inst.sender == pid:
                inst.allow(self.pick(pid, k, inst.output))

    def do_send(self, d):
        self.instance().broadcast(pid_of(d["party"]), msg_of(d))

    def do_equivocate(self, d):
        self.instance().broadcast(pid_of(d["party"]), DEFAULT)


# -- unfair broadcast --------------------------------------------------------------

class UbcWorld(World):
    name = "ubc"
    latency = 0

    def build(self):
        mode = self.p.get("rbc", "ideal")
        if mode not in ("ideal", "dolev_strong"):
            raise ConfigError(f"params.rbc must be ideal or dolev_strong, got {mode!r}")
        t = ds_threshold(self.sim)
        self.ubc = PiUBC(self.sim, lambda pid, m: self.out(pid, {"msg": m}), rbc=mode, t=t)
        if mode == "dolev_strong":
            self.latency = t + 1
        else:
            self.fn("F_RBC")

    def info(self):
        return {"rbc": self.ubc.mode}

    def in_broadcast(self, pid, op):
        self.ubc.broadcast(pid, msg_of(op))
        self.handles[pid].append(self.ubc.total[pid])

    def advance(self, pid):
        self.ubc.round_end(pid)

    def on_corrupt(self, pid):
        return self.ubc.snapshot(pid)

    def corrupt_slot(self, pid):
        if self.ubc.ds is not None:
            queued = self.ubc.queued.pop(pid, [])
            base = len(self.handles[pid]) - len(queued)
            for i, m in enumerate(queued):
                self.ubc.ds.broadcast(pid, self.pick(pid, base + i, m))
            return
        for k, j in enumerate(self.handles[pid]):
            inst = self.ubc.instances.get((pid, j))
            if inst is not None and not inst.halted and inst.sender == pid:
                inst.allow(self.pick(pid, k, inst.output))

    def do_send(self, d):
        pid = pid_of(d["party"])
        if self.ubc.ds is not None:
            self.ubc.ds.broadcast(pid, msg_of(d))
        else:
            self.ubc.broadcast(pid, msg_of(d))


class UbcIdeal(World):
    name = "ubc_ideal"
    latency = 0

    def build(self):
        self.fn("F_UBC")
        self.ubc = FUBC(self.sim, self.fan_out)

    def fan_out(self, m):
        for pid in self.sim.pids:
            self.out(pid, {"msg": m})

    def in_broadcast(self, pid, op):
        self.handles[pid].append(self.ubc.broadcast(pid, msg_of(op)))

    def advance(self, pid):
        self.ubc.advance(pid)

    def corrupt_slot(self, pid):
        pending = dict(self.ubc.pending_of(pid))
        for k, tag in enumerate(self.handles[pid]):
            if tag in pending:
                self.ubc.allow(tag, self.pick(pid, k, pending[tag]))

    def do_send(self, d):
        self.ubc.broadcast(pid_of(d["party"]), msg_of(d))


# -- fair broadcast ----------------------------------------------------------------

class FbcWorld(World):
    """Π_FBC over ideal unfair broadcast."""

    name = "fbc"
    latency = 2

    def build(self):
        self.fn("F_UBC")
        self.w = self.wrapper()
        self.ubc = FUBC(self.sim, self.on_ubc)
        self.fbc = PiFBC(self.sim, self.ubc, self.w, lambda pid, m: self.out(pid, {"msg": m}))
        self.pk = {pid: [] for pid in self.sim.pids}
        self.wire = {pid: [] for pid in self.sim.pids}
        self.curious = Curious(self, self.w)

    def info(self):
        return {"fbc_delta": 2, "fbc_alpha": 2}

    def on_ubc(self, m):
        for pid in self.sim.honest_pids():
            self.fbc.receive(pid, m)

    def in_broadcast(self, pid, op):
        self.pk[pid].append(len(self.handles[pid]))
        self.handles[pid].append(len(self.handles[pid]))
        self.fbc.broadcast(pid, msg_of(op))

    def advance(self, pid):
        self.fbc.round_end(pid)
        self.pk[pid] = []

    def on_corrupt(self, pid):
        return self.fbc.snapshot(pid)

    def corrupt_slot(self, pid):
        for k, m in zip(self.pk[pid], self.fbc.pend[pid]):
            self.adv_send(pid, self.pick(pid, k, m))
        self.fbc.pend[pid] = []
        self.pk[pid] = []

    def adv_send(self, pid, m):
        q = self.p.q
        k, rs = sample_puzzle(self.sim.rng, 2 * q)
        try:
            hs = self.w.evaluate(pid, rs, corrupted=True)
        except BudgetExhausted as e:
            self.sim.adv_event("warning", {"what": str(e)})
            return
        c, y = fbc_seal(m, q, k, rs, hs, self.sim.rand_block(), self.sim.oracle)
        self.ubc.broadcast(pid, encode_cy(c, y))

    def do_send(self, d):
        self.adv_send(pid_of(d["party"]), msg_of(d))

    def do_replay(self, d):
        log = self.wire[pid_of(d["target"])]
        k = d.get("k", 0)
        if k < len(log):
            self.ubc.broadcast(pid_of(d["party"]), log[k])
        else:
            self.sim.adv_event("warning", {"what": "nothing to replay"})

    def do_malformed(self, d):
        self.ubc.broadcast(pid_of(d["party"]), msg_of(d) or b"\x00garbage")

    def on_leak(self, source, kind, payload):
        if kind != "ubc_broadcast":
            return
        data = payload["msg"]
        self.wire[payload["sender"]].append(data)
        try:
            c, y = decode_cy(data, self.p.q)
            solver = ChainSolver(c)
        except MalformedCiphertext:
            return
        self.curious.add(solver, lambda w, c=c, y=y: self.learn(open_cy(c, y, w, self.sim.oracle), "puzzle"))

    def round_end(self):
        if self.p.get("curious", True):
            self.curious.run()


class FbcIdeal(World):
    name = "fbc_ideal"
    latency = 2

    def build(self):
        self.fn("F_FBC")
        self.fbc = FFBC(self.sim, 2, 2, lambda pid, m: self.out(pid, {"msg": m}))
        self.locked = {}

    def info(self):
        return {"fbc_delta": 2, "fbc_alpha": 2}

    def in_broadcast(self, pid, op):
        self.handles[pid].append(self.fbc.broadcast(pid, msg_of(op)))

    def advance(self, pid):
        self.fbc.advance(pid)
        # the protocol's (c, y) goes public now: the simulator locks the message
        for tag in self.handles[pid]:
            e = self.fbc.output_request(tag)
            if e is not None:
                self.locked[tag] = e[1]
                self.learn(e[1], "lock")

    def corrupt_slot(self, pid):
        pending = {e[0]: e[1] for e in self.fbc.pend}
        for k, tag in enumerate(self.handles[pid]):
            if tag in pending:
                self.fbc.allow(tag, self.pick(pid, k, pending[tag]), pid)

    def do_send(self, d):
        self.fbc.broadcast(pid_of(d["party"]), msg_of(d))

    def do_replay(self, d):
        tags = self.handles[pid_of(d["target"])]
        k = d.get("k", 0)
        if k < len(tags) and tags[k] in self.locked:
            self.fbc.broadcast(pid_of(d["party"]), self.locked[tags[k]])
        else:
            self.sim.adv_event("warning", {"what": "nothing to replay"})


# -- time-lock encryption ----------------------------------------------------------

class TleBase(World):
    latency = 0

    def setup_common(self):
        self.delta = self.p.delta
        self.alpha = self.p.alpha
        if not self.delta >= self.alpha >= 0:
            raise ConfigError("need delta >= alpha >= 0")
        self.tau_offset = self.p.get("tau_offset", 0)
        self.known = {pid: [] for pid in self.sim.pids}
        self.adv_cts = []

    def drain(self):
        taus = [a["input"].get("tau", 0) for a in self.sim.script.activations]
        taus += [d.get("tau", 0) for d in self.sim.script.adversary]
        last = self.sim.script.last_round()
        return max([self.delta + 1] + [t - last for t in taus]) + 2

    def info(self):
        return {"fbc_delta": self.delta, "fbc_alpha": self.alpha,
                "tau_offset": self.tau_offset, "tle_delay": self.delta + 1}

    def in_enc(self, pid, op):
        r = self.tle.enc(pid, msg_of(op), op["tau"])
        self.out(pid, {"op": "enc", "status": r})

    def in_retrieve(self, pid, op):
        recs = self.tle.retrieve(pid)
        for _, c, _ in recs:
            if c not in self.known[pid]:
                self.known[pid].append(c)
        self.out(pid, {"op": "retrieve", "records": [[m, tau] for m, _, tau in recs]})

    def resolve(self, op):
        c = None
        if "ref" in op:
            i, k = op["ref"]
            lst = self.known.get(pid_of(i), [])
            c = lst[k] if k < len(lst) else None
        elif "adv" in op:
            k = op["adv"]
            c = self.adv_cts[k] if k < len(self.adv_cts) else None
        if c is not None and op.get("flip"):
            c = c[:-1] + bytes([c[-1] ^ 1])
        return c

    def in_dec(self, pid, op):
        c = self.resolve(op)
        r = BOT if c is None else self.tle.dec(pid, c, op["tau"])
        self.out(pid, {"op": "dec", "result": r})

    def adv_ciphertext(self, m, tau):
        """An honestly formed outer ciphertext, as if encrypted now."""
        q = self.p.q
        td = max(tau - (self.sim.now + self.delta + self.tau_offset), 0)
        k, rs = sample_puzzle(self.sim.rng, q * td)
        try:
            hs = self.w.evaluate("A", rs, corrupted=True) if rs else []
        except BudgetExhausted as e:
            self.sim.adv_event("warning", {"what": str(e)})
            return None
        rho = self.sim.rand_block()
        return tle_seal(m, rho, assemble(rho, td, q, k, rs, hs), self.sim.oracle).to_bytes()


class TleWorld(TleBase):
    """Π_TLE over the ideal fair broadcast F_FBC^{Δ,α}."""

    name = "tle"

    def build(self):
        self.setup_common()
        self.fn("F_FBC")
        self.w = self.wrapper()
        self.fbc = FFBC(self.sim, self.delta, self.alpha, lambda pid, m: self.tle.receive(pid, m))
        self.tle = PiTLE(self.sim, self.fbc, self.w, self.delta, self.tau_offset)
        self.watch = {}
        self.curious = Curious(self, self.w)

    def advance(self, pid):
        self.tle.round_end(pid)

    def on_corrupt(self, pid):
        return self.tle.snapshot(pid)

    def on_leak(self, source, kind, payload):
        if kind == "fbc_broadcast" and self.sim.honest(payload["sender"]):
            self.watch[payload["tag"]] = self.sim.now

    def round_end(self):
        for tag, cl in list(self.watch.items()):
            if self.sim.now - cl == self.delta - self.alpha:
                del self.watch[tag]
                e = self.fbc.output_request(tag)
                if e is None:
                    continue
                try:
                    c, _ = decode_ct(e[1])
                    o = Outer.from_bytes(c, self.p.q)
                    solver = ChainSolver(o.c1)
                except MalformedCiphertext:
                    continue
                self.curious.add(solver, lambda w, o=o: self.learn(open_outer(o, w, self.sim.oracle), "puzzle"))
        if self.p.get("curious", True):
            self.curious.run()

    def do_tle_enc(self, d):
        c = self.adv_ciphertext(msg_of(d), d["tau"])
        if c is not None:
            self.adv_cts.append(c)
            self.fbc.broadcast(pid_of(d["party"]), encode_ct(c, d["tau"]))


class TleIdeal(TleBase):
    name = "tle_ideal"

    def build(self):
        self.setup_common()
        self.fn("F_TLE")
        self.w = self.wrapper()
        q = self.p.q

        def ct_len(m, tau, cl):
            return outer_len(len(m), max(tau - (cl + self.delta + self.tau_offset), 0), q)

        self.tle = FTLE(self.sim, self.alpha, self.delta + 1, ct_len)

    def tle_dec(self, c, tau):
        if self.p.get("unknown_ct", "bot") == "pipeline":
            return tle_decrypt(c, self.sim.oracle, self.p.q)
        return None

    def round_end(self):
        honest = [r for r in self.tle.leakage() if r[5] is not None]
        for r in honest:
            self.learn(r[0], "leakage")

    def do_tle_enc(self, d):
        c = self.adv_ciphertext(msg_of(d), d["tau"])
        if c is not None:
            self.adv_cts.append(c)
            self.tle.update_records([(c, msg_of(d), d["tau"])])


# -- simultaneous broadcast --------------------------------------------------------

class SbcBase(World):
    def sbc_params(self):
        p = self.p
        self.mode = p.get("tle", "ideal")
        if self.mode == "real":
            check_realized_sbc(p.phi, p.delta, p.alpha)
            self.tle_alpha, self.delay = 2, 3
        elif self.mode == "ideal":
            self.tle_alpha = p.get("tle_alpha", p.alpha - 1)
            self.delay = p.get("tle_delay", 3)
            if check_sbc_params(p.phi, p.delta, self.tle_alpha, self.delay) != p.alpha:
                raise ConfigError(f"alpha must be the TLE leak advantage plus one ({self.tle_alpha + 1})")
        else:
            raise ConfigError(f"params.tle must be ideal or real, got {self.mode!r}")
        self.latency = p.phi + p.delta

    def info(self):
        return {"tle": self.mode, "tle_alpha": self.tle_alpha, "tle_delay": self.delay,
                "fbc_delta": 2, "fbc_alpha": 2, "tau_offset": 1 if self.mode == "real" else 0}

    def out_msgs(self, pid, msgs):
        self.out(pid, {"msgs": msgs})


class SbcWorld(SbcBase):
    """Π_SBC over ideal unfair broadcast and TLE (``tle: real`` runs Π_TLE over Π_FBC)."""

    name = "sbc"

    def build(self):
        self.sbc_params()
        sim, p = self.sim, self.p
        self.fn("F_UBC")
        self.ubc = FUBC(sim, self.on_ubc)
        if self.mode == "ideal":
            self.fn("F_TLE")
            self.tle = FTLE(sim, self.tle_alpha, self.delay,
                            lambda m, tau, cl: outer_len(len(m), max(tau - cl - 2, 1), p.q))
        else:
            self.fn("F_UBC[fbc]")
            self.w_fbc = self.wrapper("W_q[fbc]")
            self.w_tle = self.wrapper("W_q[tle]")
            self.inner = FUBC(sim, self.on_inner, name="F_UBC[fbc]")
            self.fbc = PiFBC(sim, self.inner, self.w_fbc, lambda pid, m: self.tle.receive(pid, m))
            self.tle = PiTLE(sim, self.fbc, self.w_tle, 2, tau_offset=1)
            self.curious_fbc = Curious(self, self.w_fbc)
            self.curious_tle = Curious(self, self.w_tle)
        self.sbc = PiSBC(sim, self.ubc, self.tle, p.phi, p.delta, self.delay, self.out_msgs)
        self.window = None  # adversary's view: (t_awake, t_end, tau_rel)
        self.triples = {}  # c -> y, from honest wire messages
        self.rhos = {}  # c -> opened rho
        self.wire = {pid: [] for pid in sim.pids}
        self.apend = {}  # corrupted pid -> [[rho, M, k]]

    def on_ubc(self, m):
        for pid in self.sim.honest_pids():
            self.sbc.on_ubc(pid, m)

    def on_inner(self, m):
        for pid in self.sim.honest_pids():
            self.fbc.receive(pid, m)

    def in_broadcast(self, pid, op):
        self.handles[pid].append(self.sim.now)
        self.sbc.broadcast(pid, msg_of(op))

    def advance(self, pid):
        self.sbc.round_end(pid)
        if self.mode == "real":
            self.tle.round_end(pid)

    def on_corrupt(self, pid):
        s = self.sbc.st[pid]
        self.apend[pid] = [list(e) for e in s.pend] + [[None, m, k] for m, k in s.deferred]
        snap = self.sbc.snapshot(pid)
        if self.mode == "real":
            snap["tle"] = self.tle.snapshot(pid)
        return snap

    def corrupt_slot(self, pid):
        for tag, m in self.ubc.pending_of(pid):
            self.ubc.allow(tag, m)
        if self.window is None or not self.apend.get(pid):
            return
        if self.sim.now < self.window[1]:
            for rho, m, k in self.apend[pid]:
                self.adv_triple(pid, self.pick(pid, k, m), rho)
        self.apend[pid] = []

    def adv_triple(self, pid, m, rho=None):
        if self.mode != "ideal":
            self.sim.adv_event("warning", {"what": "corrupted sends need the ideal TLE"})
            return
        rho = rho or self.sim.rand_block()
        n = outer_len(LAMBDA, 1, self.p.q)
        c = self.sim.rng.getrandbits(8 * n).to_bytes(n, "big")
        tau = self.window[2]
        self.tle.update_records([(c, rho, tau)])
        y = xor_bytes(m, mask_expand(self.sim.oracle, rho, len(m)))
        self.ubc.broadcast(pid, encode_triple(c, tau, y))

    def do_send(self, d):
        pid = pid_of(d["party"])
        if self.window is None:
            self.ubc.broadcast(pid, WAKE_UP)
        if self.sim.now < self.window[1]:
            self.adv_triple(pid, msg_of(d))

    def do_replay(self, d):
        log = self.wire[pid_of(d["target"])]
        k = d.get("k", 0)
        if k < len(log):
            self.ubc.broadcast(pid_of(d["party"]), log[k])
        else:
            self.sim.adv_event("warning", {"what": "nothing to replay"})

    def do_malformed(self, d):
        pid = pid_of(d["party"])
        if d.get("kind") == "tau" and self.window is not None:
            self.ubc.broadcast(pid, encode_triple(b"\x01" * 64, self.window[2] + 1, msg_of(d) or b"\x02" * 16))
        else:
            self.ubc.broadcast(pid, msg_of(d) or b"\x00garbage")

    def on_leak(self, source, kind, payload):
        if source == "F_UBC" and kind == "ubc_deliver" and payload["msg"] == WAKE_UP and self.window is None:
            t = self.sim.now
            self.window = (t, t + self.p.phi, t + self.p.phi + self.p.delta)
        elif source == "F_UBC" and kind == "ubc_broadcast" and payload["msg"] != WAKE_UP:
            self.wire[payload["sender"]].append(payload["msg"])
            t = decode_triple(payload["msg"])
            if t is not None:
                self.triples[t[0]] = t[2]
                if t[0] in self.rhos:
                    self.unmask(t[0], self.rhos[t[0]])
        elif source == "F_UBC[fbc]" and kind == "ubc_broadcast":
            try:
                c, y = decode_cy(payload["msg"], self.p.q)
                solver = ChainSolver(c)
            except MalformedCiphertext:
                return
            self.curious_fbc.add(solver, lambda w, c=c, y=y: self.inner_open(open_cy(c, y, w, self.sim.oracle)))

    def inner_open(self, data):
        try:
            c, _ = decode_ct(data)
            o = Outer.from_bytes(c, self.p.q)
            solver = ChainSolver(o.c1)
        except MalformedCiphertext:
            return
        self.curious_tle.add(solver, lambda w, c=c, o=o: self.unmask(c, open_outer(o, w, self.sim.oracle)))

    def unmask(self, c, rho):
        if not isinstance(rho, bytes):
            return
        self.rhos[c] = rho
        y = self.triples.get(c)
        if y is None:
            return
        self.learn(xor_bytes(y, mask_expand(self.sim.oracle, rho, len(y))), "unmask")

    def round_end(self):
        if self.mode == "ideal":
            for rho, c, *_ in self.tle.leakage():
                if c in self.triples:
                    self.unmask(c, rho)
        elif self.p.get("curious", True):
            self.curious_fbc.run()
            self.curious_tle.run()


class SbcIdeal(SbcBase):
    name = "sbc_ideal"

    def build(self):
        self.sbc_params()
        self.fn("F_SBC")
        self.sbc = FSBC(self.sim, self.p.phi, self.p.delta, self.p.alpha, self.out_msgs)
        self.advanced = {}
        self.slot_due = {}  # corrupted pid -> [(k, tag)] the protocol had not sent yet

    def in_broadcast(self, pid, op):
        self.handles[pid].append((self.sbc.broadcast(pid, msg_of(op)), self.sim.now))

    def advance(self, pid):
        self.sbc.advance(pid)
        self.advanced[pid] = self.sim.now

    def on_corrupt(self, pid):
        now = self.sim.now
        due = []
        originals = {e[0]: e[1] for e in self.sbc.pend}
        for k, (tag, r) in enumerate(self.handles[pid]):
            if tag is None:
                continue
            sent_at = r + self.delay
            sent = sent_at < now or (sent_at == now and self.advanced.get(pid) == now)
            if sent and sent_at < self.sbc.t_end:
                self.sbc.allow(tag, originals[tag], pid)
            else:
                due.append((k, tag))
        self.slot_due[pid] = due
        return {}

    def corrupt_slot(self, pid):
        originals = {e[0]: e[1] for e in self.sbc.pend}
        for k, tag in self.slot_due.pop(pid, []):
            self.sbc.allow(tag, self.pick(pid, k, originals[tag]), pid)

    def do_send(self, d):
        self.sbc.broadcast(pid_of(d["party"]), msg_of(d))


# -- applications ------------------------------------------------------------------

class DursWorld(World):
    """Π_DURS over F_SBC^{Φ,Δ-Φ,α} and one F_RBC per party."""

    name = "durs"

    def build(self):
        p = self.p
        check_durs_params(p.phi, p.delta, p.alpha)
        self.latency = p.delta
        self.fn("F_SBC")
        self.fn("F_RBC")
        self.durs = PiDURS(self.sim, lambda pid, urs: self.out(pid, {"urs": urs}))
        self.sbc = FSBC(self.sim, p.phi, p.delta - p.phi, p.alpha, self.durs.on_batch)
        self.durs.sbc = self.sbc

    def in_urs(self, pid, op):
        self.durs.request(pid)

    def advance(self, pid):
        self.durs.advance(pid)

    def on_corrupt(self, pid):
        return self.durs.snapshot(pid)

    def corrupt_slot(self, pid):
        rbc = self.durs.rbc[pid]
        if not rbc.halted and rbc.sender == pid:
            rbc.allow(rbc.output)
        for tag, m, owner, _, _ in self.sbc.corruption_request():
            if owner == pid:
                self.sbc.allow(tag, self.pick(pid, 0, m), pid)

    def do_wake(self, d):
        pid = pid_of(d["party"])
        self.durs.rbc[pid].broadcast(pid, WAKE_UP)

    def do_send(self, d):
        self.sbc.broadcast(pid_of(d["party"]), msg_of(d))

    def on_sbc_batch(self, batch):
        self.learn(combine([m for _, m, _ in batch]), "batch")


class DursIdeal(World):
    name = "durs_ideal"

    def build(self):
        p = self.p
        check_durs_params(p.phi, p.delta, p.alpha)
        self.latency = p.delta
        self.fn("F_DURS")
        self.durs = FDURS(self.sim, p.delta, p.alpha, lambda pid, urs: self.out(pid, {"urs": urs}))

    def in_urs(self, pid, op):
        self.durs.request(pid)

    def advance(self, pid):
        self.durs.advance(pid)

    def do_wake(self, d):
        self.durs.request(None)

    def round_end(self):
        if self.durs.t_start is not None:
            r = self.durs.request(None)
            if r is not None:
                self.learn(r, "request")


class VoteBase(World):
    def vote_params(self):
        p = self.p
        self.candidates = p.get("candidates", 3)
        self.quota = p.get("quota", 1)
        if self.candidates < 1 or self.quota < 1:
            raise ConfigError("candidates and quota must be positive")
        if not p.delta >= p.alpha >= 0:
            raise ConfigError("need delta >= alpha >= 0")
        corrupted = {c["party"] for c in self.sim.script.corruptions}
        if len(corrupted) >= self.sim.n:
            raise ConfigError("voting needs at least one voter that stays honest")
        self.latency = p.phi + p.delta

    def drain(self):
        return self.latency + 2


class VoteWorld(VoteBase):
    """Signed plain ballots over F_SBC^{Φ,Δ,α}."""

    name = "vote"

    def build(self):
        self.vote_params()
        p = self.p
        self.fn("F_SBC")
        self.vote = PiVote(self.sim, self.candidates, self.quota, lambda pid, res: self.out(pid, {"res": res}))
        self.sbc = FSBC(self.sim, p.phi, p.delta, p.alpha, self.vote.on_batch)
        self.vote.sbc = self.sbc
        self.aseq = {}

    def in_init(self, pid, op):
        self.vote.init(pid)

    def in_vote(self, pid, op):
        r = self.vote.vote(pid, op.get("vote"))
        self.handles[pid].append(None if r is None else r[1])

    def advance(self, pid):
        self.vote.advance(pid)

    def on_corrupt(self, pid):
        self.aseq[pid] = self.vote.seq[pid]
        return self.vote.snapshot(pid)

    def corrupt_slot(self, pid):
        for tag, b, owner, _, _ in self.sbc.corruption_request():
            if owner != pid:
                continue
            k = self.handles[pid].index(tag)
            _, seq, v, _ = parse_ballot(b)
            v2 = self.pick(pid, k, v)
            self.sbc.allow(tag, b if v2 == v else self.vote.make_ballot(pid, seq, v2), pid)

    def do_vote(self, d):
        pid = pid_of(d["party"])
        if not self.vote.opened:
            self.sim.adv_event("warning", {"what": "election not open"})
            return
        seq = self.aseq.get(pid, 0)
        self.aseq[pid] = seq + 1
        self.sbc.broadcast(pid, self.vote.make_ballot(pid, seq, d["vote"]))

    def on_sbc_batch(self, batch):
        self.learn(self.vote.count([m for _, m, _ in batch]), "batch")


class VoteIdeal(VoteBase):
    name = "vote_ideal"

    def build(self):
        self.vote_params()
        p = self.p
        self.fn("F_VS")
        self.vs = FVS(self.sim, p.phi, p.delta, p.alpha, self.candidates, self.quota,
                      lambda pid, res: self.out(pid, {"res": res}))

    def in_init(self, pid, op):
        self.vs.init()

    def in_vote(self, pid, op):
        self.handles[pid].append(self.vs.vote(pid, op.get("vote")))

    def advance(self, pid):
        self.vs.advance(pid)

    def corrupt_slot(self, pid):
        for tag, v, owner, _, _ in self.vs.corruption_request():
            if owner == pid:
                k = self.handles[pid].index(tag)
                self.vs.allow(tag, self.pick(pid, k, v), pid)

    def do_vote(self, d):
        self.vs.vote(pid_of(d["party"]), d["vote"])


WORLDS = {w.name: w for w in (RbcWorld, RbcIdeal, UbcWorld, UbcIdeal, FbcWorld, FbcIdeal,
                               TleWorld, TleIdeal, SbcWorld, SbcIdeal, DursWorld, DursIdeal,
                               VoteWorld, VoteIdeal)}


def make_stack(name, sim):
    if name not in WORLDS:
        raise ConfigError(f"unknown stack {name!r}")
    return WORLDS[name](sim)
