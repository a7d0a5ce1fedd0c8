"""Deterministic round-based execution kernel.

The kernel owns the global clock, the PRNG, the random oracle, the trace and
the set of corrupted parties.  A *stack* (see :mod:`sbcsim.stacks`) plugs in
the functionalities or protocols under test; the kernel only drives rounds:

* scripted environment inputs run in script order,
* then every party gets its Advance_Clock slot in index order (corrupted
  parties hand the slot to the adversary),
* corruptions and adversary directives fire just before the delivery step
  they name, so ``(round 5, step 2)`` lands after step 1 of round 5,
* the adversary gets a last look at the round (``stack.round_end``),
* registered functionalities signal last and the clock ticks.
"""

import json
import random
from dataclasses import asdict, dataclass, field

from .crypto import RandomOracle

STACKS = ("rbc", "ubc", "fbc", "tle", "sbc", "durs", "vote")
ALL_STACKS = STACKS + tuple(s + "_ideal" for s in STACKS)


class ConfigError(Exception):
    """Bad scenario or parameters.  The CLI maps this to exit code 2."""


@dataclass(frozen=True, order=True)
class EntityId:
    kind: str  # party, functionality, adversary, environment
    pid: str
    sid: str = "sid0"

    def as_dict(self):
        return {"kind": self.kind, "pid": self.pid, "sid": self.sid}


ENV = EntityId("environment", "Z")
ADV = EntityId("adversary", "A")


def party(pid):
    return EntityId("party", pid)


def jsonable(x):
    """Bytes become hex strings, tuples become lists, recursively."""
    if isinstance(x, (bytes, bytearray)):
        return bytes(x).hex()
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, EntityId):
        return x.as_dict()
    return x


@dataclass
class TraceEvent:
    seq: int
    round: int
    actor: dict
    label: str
    payload: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line):
        return cls(**json.loads(line))


class Clock:
    """Global clock: ticks once every honest party and functionality signalled."""

    def __init__(self):
        self.cl = 0
        self.members = {}
        self.corrupted = set()
        self.adv = set()

    def register(self, eid):
        if eid in self.members:
            raise ValueError(f"{eid} already registered")
        self.members[eid] = True

    def corrupt(self, eid):
        self.corrupted.add(eid)
        self.adv.discard(eid)

    def quorum(self):
        return {e for e in self.members if e not in self.corrupted}

    def read(self, eid=None):
        return self.cl

    def advance(self, eid):
        """Record a signal; return True if the round advanced."""
        if eid not in self.members:
            raise ValueError(f"{eid} is not registered")
        if eid in self.corrupted:
            return False
        self.adv.add(eid)
        if self.adv >= self.quorum():
            self.cl += 1
            self.adv = set()
            return True
        return False


@dataclass
class Params:
    phi: int = 4
    delta: int = 2
    alpha: int = 2
    q: int = 2
    t_plus_one_rounds: int = 0  # 0 means n (t = n-1)
    oracle_mode: str = "concrete"
    rounds: int = 0  # 0 means: last scripted round + drain horizon
    extra: dict = field(default_factory=dict)

    FIELDS = ("phi", "delta", "alpha", "q", "t_plus_one_rounds", "oracle_mode", "rounds")

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        kw = {k: d.pop(k) for k in cls.FIELDS if k in d}
        p = cls(**kw, extra=d)
        for k in ("phi", "delta", "alpha", "q", "t_plus_one_rounds", "rounds"):
            v = getattr(p, k)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"params.{k} must be a non-negative integer, got {v!r}")
        if p.q < 1:
            raise ConfigError("params.q must be at least 1")
        if p.oracle_mode not in ("concrete", "simulated"):
            raise ConfigError(f"params.oracle_mode must be concrete or simulated, got {p.oracle_mode!r}")
        return p

    def get(self, key, default=None):
        return self.extra.get(key, default)

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.FIELDS}
        d.update(self.extra)
        return d


@dataclass
class ScenarioScript:
    seed: int
    n: int
    stack: str
    params: Params = field(default_factory=Params)
    corruptions: list = field(default_factory=list)
    activations: list = field(default_factory=list)
    adversary: list = field(default_factory=list)
    name: str = ""
    description: str = ""
    tags: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("scenario must be a JSON object")
        for key in ("seed", "n", "stack"):
            if key not in d:
                raise ConfigError(f"scenario is missing {key!r}")
        known = {"seed", "n", "stack", "params", "corruptions", "activations",
                 "adversary", "name", "description", "tags"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown scenario fields: {sorted(unknown)}")
        s = cls(
            seed=d["seed"], n=d["n"], stack=d["stack"],
            params=Params.from_dict(d.get("params")),
            corruptions=list(d.get("corruptions", [])),
            activations=list(d.get("activations", [])),
            adversary=list(d.get("adversary", [])),
            name=d.get("name", ""), description=d.get("description", ""),
            tags=list(d.get("tags", [])),
        )
        s.validate()
        return s

    def to_dict(self):
        return {
            "name": self.name, "description": self.description, "tags": self.tags,
            "seed": self.seed, "n": self.n, "stack": self.stack,
            "params": self.params.to_dict(), "corruptions": self.corruptions,
            "activations": self.activations, "adversary": self.adversary,
        }

    def with_stack(self, stack):
        d = self.to_dict()
        d["stack"] = stack
        return ScenarioScript.from_dict(d)

    def with_seed(self, seed):
        d = self.to_dict()
        d["seed"] = seed
        return ScenarioScript.from_dict(d)

    def validate(self):
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError("n must be a positive integer")
        if self.stack not in ALL_STACKS:
            raise ConfigError(f"unknown stack {self.stack!r}; expected one of {', '.join(ALL_STACKS)}")
        last = 0
        for i, a in enumerate(self.activations):
            if not isinstance(a, dict) or "round" not in a or "party" not in a or "input" not in a:
                raise ConfigError(f"activation {i} needs round, party and input")
            if a["round"] < last:
                raise ConfigError(f"activation {i}: rounds must be non-decreasing")
            last = a["round"]
            self._check_party(a["party"], f"activation {i}")
            if not isinstance(a["input"], dict) or "op" not in a["input"]:
                raise ConfigError(f"activation {i}: input needs an op")
        for i, c in enumerate(self.corruptions):
            if not isinstance(c, dict) or "round" not in c or "party" not in c:
                raise ConfigError(f"corruption {i} needs round and party")
            self._check_party(c["party"], f"corruption {i}")
        for i, d in enumerate(self.adversary):
            if not isinstance(d, dict) or "round" not in d or "do" not in d:
                raise ConfigError(f"adversary directive {i} needs round and do")
            for key in ("party", "target"):
                if key in d:
                    self._check_party(d[key], f"adversary directive {i}")

    def _check_party(self, p, where):
        if not isinstance(p, int) or not 0 <= p < self.n:
            raise ConfigError(f"{where}: party {p!r} out of range for n={self.n}")

    def last_round(self):
        rounds = [a["round"] for a in self.activations]
        rounds += [c["round"] for c in self.corruptions]
        rounds += [d["round"] for d in self.adversary]
        return max(rounds, default=0)


def load_scenario(path):
    """Read a scenario file; malformed JSON raises ConfigError with line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    return parse_scenario(text, str(path))


def parse_scenario(text, where="<scenario>"):
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{where}: line {e.lineno} column {e.colno}: {e.msg}") from e
    return ScenarioScript.from_dict(d)


def pid_of(i):
    return f"p{i}"


def index_of(pid):
    return int(pid[1:])


class Sim:
    """One simulation run.  Not thread-safe; build one per thread."""

    def __init__(self, script, stack=None):
        from .stacks import make_stack

        self.script = script
        self.params = script.params
        self.rng = random.Random(script.seed)
        self.trace = []
        self.clock = Clock()
        self.oracle = RandomOracle(self.params.oracle_mode, self.rng)
        self.n = script.n
        self.pids = [pid_of(i) for i in range(script.n)]
        self.corrupted = set()
        self.step = 0
        self.tags = set()
        self.adversary = None
        for pid in self.pids:
            self.register(party(pid))
        self.stack = make_stack(stack or script.stack, self)
        self.stack.setup()

    # -- time and randomness -------------------------------------------------
    @property
    def now(self):
        return self.clock.cl

    def new_tag(self):
        tag = self.rng.getrandbits(128).to_bytes(16, "big")
        if tag in self.tags:
            raise RuntimeError("tag collision")
        self.tags.add(tag)
        return tag

    def rand_block(self):
        return self.rng.getrandbits(256).to_bytes(32, "big")

    # -- bookkeeping ------------------------------------------------------------
    def register(self, eid):
        self.clock.register(eid)
        self.emit(eid, "register", {})

    def emit(self, actor, label, payload=None):
        ev = TraceEvent(
            seq=len(self.trace), round=self.clock.cl,
            actor=actor.as_dict() if isinstance(actor, EntityId) else actor,
            label=label, payload=jsonable(payload or {}),
        )
        self.trace.append(ev)
        return ev

    def leak(self, source, kind, payload):
        """Adversary-visible leakage from a functionality; the adversary sees it at once."""
        self.emit(EntityId("functionality", source), "leak", dict(payload, kind=kind))
        if self.adversary is not None:
            self.adversary.on_leak(source, kind, payload)

    def adv_event(self, label, payload):
        """Something the adversary learned or did on its own."""
        self.emit(ADV, label, payload)

    def honest(self, pid):
        return pid not in self.corrupted

    def honest_pids(self):
        return [p for p in self.pids if p not in self.corrupted]

    def output(self, pid, payload):
        """Deliver an environment output from an honest party."""
        if pid in self.corrupted:
            self.emit(party(pid), "adv_output", payload)
        else:
            self.emit(party(pid), "output", payload)

    def signal(self, eid):
        self.emit(eid, "advance_clock", {})
        before = self.clock.cl
        if self.clock.advance(eid):
            self.emit(ENV, "round_advanced", {"from": before, "to": self.clock.cl})

    def corrupt(self, pid):
        if pid in self.corrupted:
            self.emit(ADV, "warning", {"what": "already corrupted", "party": pid})
            return None
        self.corrupted.add(pid)
        self.clock.corrupt(party(pid))
        snapshot = self.stack.on_corrupt(pid)
        self.emit(ADV, "corrupt", {"party": pid, "step": self.step, "state": snapshot or {}})
        return snapshot

    # -- driver -----------------------------------------------------------------
    def horizon(self):
        if self.params.rounds:
            return self.params.rounds
        return self.script.last_round() + self.stack.drain() + 1

    def run(self):
        s = self.script
        acts = {}
        for a in s.activations:
            acts.setdefault(a["round"], []).append(a)
        events = {}
        for c in s.corruptions:
            events.setdefault((c["round"], c.get("step", 0)), []).append(("corrupt", c))
        for d in s.adversary:
            events.setdefault((d["round"], d.get("step", 0)), []).append(("adv", d))

        for r in range(self.horizon()):
            if self.clock.cl != r:
                raise RuntimeError(f"clock at {self.clock.cl}, expected {r}")
            self.step = 0
            self.stack.round_start()
            items = [("input", a) for a in acts.get(r, [])]
            items += [("advance", pid) for pid in self.pids]
            for step, item in enumerate(items):
                self.step = step
                self._fire(events.pop((r, step), []))
                kind, what = item
                if kind == "input":
                    pid = pid_of(what["party"])
                    if pid in self.corrupted:
                        self.emit(party(pid), "input_ignored", what["input"])
                        continue
                    self.emit(party(pid), "input", what["input"])
                    self.stack.input(pid, what["input"])
                else:
                    if what in self.corrupted:
                        self.stack.corrupt_slot(what)
                    else:
                        self.stack.advance(what)
                        self.signal(party(what))
            self.step = len(items)
            late = sorted(k for k in events if k[0] == r)
            for k in late:
                self._fire(events.pop(k))
            self.stack.round_end()
            for f in self.stack.functionalities():
                self.stack.functionality_tick(f)
                self.signal(f)
            if self.clock.cl == r:
                # every honest party may have been corrupted; the round still ends
                self.clock.cl += 1
                self.clock.adv = set()
                self.emit(ENV, "round_advanced", {"from": r, "to": self.clock.cl, "forced": True})
        self.stack.finish()
        return self.trace

    def _fire(self, evs):
        for kind, e in evs:
            if kind == "corrupt":
                self.corrupt(pid_of(e["party"]))
            else:
                self.emit(ADV, "directive", e)
                self.stack.directive(e)


def run_scenario(script, stack=None):
    sim = Sim(script, stack)
    sim.run()
    return sim


def write_trace(trace, path):
    with open(path, "w", encoding="utf-8") as fh:
        for ev in trace:
            fh.write(ev.to_json() + "\n")


def read_trace(path):
    events = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                events.append(TraceEvent.from_json(line))
            except (json.JSONDecodeError, TypeError) as e:
                raise ConfigError(f"{path}: line {i}: not a trace event ({e})") from e
    return events
