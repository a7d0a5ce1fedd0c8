"""Verification harness: equivalence, budget audit and sampling statistics.

``compare`` runs a script on a protocol stack and on its ideal twin and
checks that honest parties hand the environment the same outputs.  Outputs
are projected per party as ``(round, payload)`` pairs, shifted by the
stack's fixed latency difference, and compared either as ordered sequences
or, where ordering is not part of the guarantee, as per-round multisets.

``audit`` reads a trace and checks two things: no budget key ever got more
than ``q`` oracle batches in a round, and no honest ciphertext could be
opened before its designated round, even by an adversary that spends its
whole shared budget on it from the moment it sees it.
"""

import json
import math
import os
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from .kernel import ConfigError, Sim, TraceEvent, jsonable

# stacks whose guarantee is a batch or an unordered set per round
MULTISET = {"rbc", "sbc"}


def base(stack):
    return stack[:-6] if stack.endswith("_ideal") else stack


def params_of(trace):
    for ev in trace:
        if ev.label == "params":
            return ev.payload
    raise ConfigError("trace has no params event")


def parties_of(trace):
    return sorted(ev.actor["pid"] for ev in trace if ev.label == "register" and ev.actor["kind"] == "party")


def shift_of(info):
    """Rounds by which the protocol lags its ideal twin."""
    stack = info["stack"]
    if stack == "rbc" or (stack == "ubc" and info.get("rbc") == "dolev_strong"):
        return info.get("t_plus_one_rounds") or info["n"]
    return 0


def _canon(x):
    return json.dumps(x, sort_keys=True, separators=(",", ":"))


def corruptions_of(trace):
    """pid -> (round, seq) of its corruption."""
    return {ev.payload["party"]: (ev.round, ev.seq) for ev in trace if ev.label == "corrupt"}


def project(trace, cut=None, span=0):
    """Per-party list of ``(round, key, seq)`` for honest environment outputs.

    ``cut`` maps a pid to its corruption round; with a latency gap ``span``
    between the two worlds only outputs projected before ``round - span`` are
    kept, so a late delivery in one world is not compared against a party
    the other world had already lost.  Without a gap, outputs in the
    corruption round itself count if they came before the corruption.
    """
    info = params_of(trace)
    stack = base(info["stack"])
    shift = shift_of(info)
    cut = cut or {}
    mine = corruptions_of(trace)
    labels = {}
    out = defaultdict(list)
    for ev in trace:
        if ev.label != "output" or ev.actor["kind"] != "party":
            continue
        pid = ev.actor["pid"]
        r = ev.round - shift
        if pid in cut:
            c = cut[pid] - span
            if not (r < c or (span == 0 and r == c and ev.seq < mine.get(pid, (0, len(trace)))[1])):
                continue
        payload = dict(ev.payload)
        if stack == "durs":
            # the string is random in both worlds; what must match is who agrees with whom
            payload["urs"] = labels.setdefault(payload["urs"], f"urs#{len(labels)}")
        if stack == "sbc":
            payload["msgs"] = sorted(payload["msgs"])
        out[pid].append((r, _canon(payload), ev.seq))
    if stack in MULTISET:
        for pid in out:
            out[pid].sort(key=lambda x: (x[0], x[1]))
    return dict(out)


@dataclass
class EquivalenceReport:
    script: str
    stacks: list
    verdict: str
    shift: int = 0
    projections: dict = field(default_factory=dict)
    divergence: dict = None
    notes: list = field(default_factory=list)

    def to_dict(self):
        return jsonable(asdict(self))


def compare_traces(a, b, script=""):
    pa, pb = parties_of(a), parties_of(b)
    if pa != pb:
        raise ValueError(f"party sets differ: {pa} vs {pb}")
    ia, ib = params_of(a), params_of(b)
    span = abs(shift_of(ia) - shift_of(ib))
    cut = {}
    for trace in (a, b):
        for pid, (r, _) in corruptions_of(trace).items():
            cut[pid] = min(cut.get(pid, r), r)
    ja, jb = project(a, cut, span), project(b, cut, span)
    report = EquivalenceReport(script=script, stacks=[ia["stack"], ib["stack"]], verdict="equal",
                               shift=shift_of(ia) - shift_of(ib))
    report.projections = {pid: {"a": [[r, json.loads(k)] for r, k, _ in ja.get(pid, [])],
                                "b": [[r, json.loads(k)] for r, k, _ in jb.get(pid, [])]} for pid in pa}
    for pid in pa:
        xa, xb = ja.get(pid, []), jb.get(pid, [])
        for i in range(max(len(xa), len(xb))):
            ea = xa[i] if i < len(xa) else None
            eb = xb[i] if i < len(xb) else None
            if ea is None or eb is None or ea[:2] != eb[:2]:
                report.verdict = "diverge"
                report.divergence = {
                    "party": pid, "index": i,
                    "seq_a": ea[2] if ea else None, "seq_b": eb[2] if eb else None,
                    "a": [ea[0], json.loads(ea[1])] if ea else None,
                    "b": [eb[0], json.loads(eb[1])] if eb else None,
                }
                return report
    if base(ib["stack"]) == "sbc":
        for ev in b:
            if ev.label == "output" and ev.payload.get("msgs") != sorted(ev.payload.get("msgs", [])):
                report.verdict = "diverge"
                report.notes.append(f"ideal batch at seq {ev.seq} is not sorted")
                return report
    return report


def compare(script):
    """Run the protocol stack and its ideal twin on ``script``."""
    proto = base(script.stack)
    a = Sim(script, proto)
    a.run()
    b = Sim(script, proto + "_ideal")
    b.run()
    return compare_traces(a.trace, b.trace, script.name)


# -- audit ---------------------------------------------------------------------

@dataclass
class AuditReport:
    budget: list = field(default_factory=list)  # [wrapper, key, round, batches]
    ciphertexts: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    def to_dict(self):
        return jsonable(asdict(self))

    @property
    def clean(self):
        return not self.violations


def audit(trace):
    info = params_of(trace)
    q = info["q"]
    rep = AuditReport()

    used = Counter()
    for ev in trace:
        if ev.label == "ro_batch" and ev.payload["granted"]:
            used[(ev.payload["wrapper"], ev.payload["key"], ev.round)] += 1
    for (w, key, rnd), n in sorted(used.items(), key=lambda kv: (kv[0][0], str(kv[0][1]), kv[0][2])):
        rep.budget.append([w, key, rnd, n])
        if n > q:
            rep.violations.append({"kind": "budget", "wrapper": w, "key": key, "round": rnd, "batches": n})

    ready = defaultdict(list)
    for ev in trace:
        if ev.label == "witness_ready":
            ready[ev.payload["cid"]].append((ev.actor["pid"], ev.round, ev.payload["calls"]))

    corrupted = {ev.payload["party"] for ev in trace if ev.label == "corrupt"}
    fbc_delta = info.get("fbc_delta", 2)
    fbc_alpha = info.get("fbc_alpha", 2)
    fbc_by_inner = {}
    entries = []
    for ev in trace:
        if ev.label == "fbc_sent":
            r = ev.round
            links = ev.payload["links"]
            # the adversary sees (c, y) on the wire in the sending round
            v = r
            entry = {"kind": "fbc", "cid": ev.payload["cid"], "sender": ev.actor["pid"], "sent": r,
                     "due": r + 2, "visible": v, "links": links, "alpha": 2,
                     "adv_done": v + math.ceil(links / q) - 1}
            fbc_by_inner[ev.payload["inner"]] = entry
            entries.append(entry)
    for ev in trace:
        if ev.label == "tle_sent":
            r = ev.round
            links = ev.payload["links"]
            carrier = fbc_by_inner.get(ev.payload["wire"])
            # through the ideal channel the content shows up at the output-request point;
            # through the real one it shows up when the carrying puzzle can be opened
            v = carrier["adv_done"] if carrier else r + fbc_delta - fbc_alpha
            entries.append({"kind": "tle", "cid": ev.payload["cid"], "sender": ev.actor["pid"], "sent": r,
                            "due": ev.payload["tau"], "visible": v, "links": links, "alpha": fbc_alpha,
                            "adv_done": v + math.ceil(links / q) - 1})
    for e in entries:
        e["adv_usable"] = e["adv_done"] + 1
        e["honest"] = []
        if e["adv_usable"] < e["due"] - e["alpha"]:
            rep.violations.append({"kind": "adversary_early", **e})
        for pid, rnd, calls in ready.get(e["cid"], []):
            e["honest"].append([pid, rnd, calls])
            if pid in corrupted:
                continue
            if calls != e["links"]:
                rep.violations.append({"kind": "calls", "cid": e["cid"], "party": pid, "calls": calls,
                                       "links": e["links"]})
            if rnd + 1 < e["due"]:
                rep.violations.append({"kind": "honest_early", "cid": e["cid"], "party": pid, "round": rnd,
                                       "due": e["due"]})
        rep.ciphertexts.append(e)
    return rep


# -- sampling statistics -----------------------------------------------------------

def threads():
    try:
        n = int(os.environ.get("SBC_SIM_THREADS", "0"))
    except ValueError:
        n = 0
    return max(1, n or min(8, os.cpu_count() or 1))


def trial_seed(seed, i):
    return (seed * 1_000_003 + i * 0x9E3779B97F4A7C15) % 2**64


def run_trial(script, i):
    sim = Sim(script.with_seed(trial_seed(script.seed, i)))
    sim.run()
    return [ev for ev in sim.trace if ev.label in ("output", "corrupt", "adv_learned")]


def run_trials(script, trials, workers=None):
    workers = workers or threads()
    if workers == 1:
        return [run_trial(script, i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda i: run_trial(script, i), range(trials)))


def bit_frequencies(values, bits=256):
    import numpy as np

    arr = np.array([[(int.from_bytes(bytes.fromhex(v), "big") >> (bits - 1 - j)) & 1 for j in range(bits)]
                    for v in values], dtype=float)
    return arr.mean(axis=0)


def stats(script, trials, workers=None):
    """Repeat ``script`` under derived seeds and summarize the honest outputs."""
    from scipy.stats import binomtest

    results = run_trials(script, trials, workers)
    report = {"script": script.name, "stack": script.stack, "trials": trials}
    agree = 0
    for evs in results:
        outs = defaultdict(list)
        for ev in evs:
            if ev.label == "output":
                outs[ev.actor["pid"]].append(_canon(ev.payload))
        if len({tuple(v) for v in outs.values()}) <= 1:
            agree += 1
    report["agreement"] = agree / trials if trials else 1.0
    if base(script.stack) == "durs":
        urs = []
        for evs in results:
            first = next((ev.payload["urs"] for ev in evs if ev.label == "output"), None)
            if first is not None:
                urs.append(first)
        report["samples"] = len(urs)
        if urs:
            freq = bit_frequencies(urs)
            k = [int(round(f * len(urs))) for f in freq]
            pvals = [binomtest(x, len(urs), 0.5).pvalue for x in k]
            report["bit_frequency"] = [round(float(f), 4) for f in freq]
            report["max_deviation"] = float(max(abs(f - 0.5) for f in freq))
            report["min_pvalue"] = float(min(pvals))
    if base(script.stack) == "vote":
        res = Counter()
        for evs in results:
            first = next((ev.payload["res"] for ev in evs if ev.label == "output"), None)
            res[_canon(first)] += 1
        report["results"] = dict(res)
    return report


def load_trace_events(lines):
    return [TraceEvent.from_json(line) for line in lines if line.strip()]
