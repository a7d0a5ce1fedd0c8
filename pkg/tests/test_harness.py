import copy
import json
import subprocess
import sys

import pytest
from conftest import run, script

from sbcsim import cli
from sbcsim.corpus import bundled, generate, msg, path_of
from sbcsim.harness import audit, compare_traces, stats, threads
from sbcsim.kernel import TraceEvent, read_trace

B = lambda r, p, t: (r, p, {"op": "broadcast", "msg": msg(t)})  # noqa: E731


def fbc_trace(**kw):
    return run("fbc", [B(0, 0, "a"), B(1, 1, "b")], **kw).trace


def test_compare_is_reflexive():
    t = fbc_trace()
    assert compare_traces(t, t).verdict == "equal"


def test_flipped_byte_found_at_its_seq():
    a = fbc_trace()
    b = copy.deepcopy(a)
    ev = [e for e in b if e.label == "output"][3]
    m = ev.payload["msg"]
    ev.payload["msg"] = m[:-1] + ("0" if m[-1] != "0" else "1")
    rep = compare_traces(a, b)
    assert rep.verdict == "diverge"
    assert rep.divergence["seq_b"] == ev.seq


def test_party_sets_must_match():
    with pytest.raises(ValueError):
        compare_traces(fbc_trace(), run("fbc", [], n=3).trace)


def test_sbc_ideal_order_checked():
    acts = [B(0, 0, "z"), B(0, 1, "a")]
    a = run("sbc", acts, phi=6, delta=3, alpha=3).trace
    b = copy.deepcopy(run("sbc_ideal", acts, phi=6, delta=3, alpha=3).trace)
    for ev in b:
        if ev.label == "output":
            ev.payload["msgs"] = list(reversed(ev.payload["msgs"]))
    rep = compare_traces(a, b)
    assert rep.verdict == "diverge" and rep.notes


def test_audit_flags_budget_overrun():
    t = fbc_trace()
    extra = [e for e in t if e.label == "ro_batch" and e.payload["granted"]][0]
    t = t + [copy.deepcopy(extra) for _ in range(3)]
    kinds = [v["kind"] for v in audit(t).violations]
    assert "budget" in kinds


def test_audit_flags_early_witness():
    t = copy.deepcopy(fbc_trace())
    for ev in t:
        if ev.label == "witness_ready":
            ev.round -= 2  # one round early is still on time
            break
    assert [v["kind"] for v in audit(t).violations] == ["honest_early"]


def test_audit_rows_for_fbc():
    rep = audit(fbc_trace())
    assert [(c["kind"], c["due"], c["links"]) for c in rep.ciphertexts] == [("fbc", 2, 4), ("fbc", 3, 4)]
    assert rep.clean


def test_trace_schema():
    keys = {"seq": int, "round": int, "actor": dict, "label": str, "payload": dict}
    for s in bundled()[::7]:
        for ev in run(s.stack, [(a["round"], a["party"], a["input"]) for a in s.activations],
                      n=s.n, corruptions=s.corruptions, adversary=s.adversary, **s.params.to_dict()).trace:
            d = json.loads(ev.to_json())
            assert {k: type(d[k]) for k in keys} == keys
            assert set(d["actor"]) == {"kind", "pid", "sid"}


def test_corpus_is_current():
    on_disk = {s.name: s.to_dict() for s in bundled()}
    fresh = {d["name"]: d for d in generate()}
    assert set(on_disk) == set(fresh)
    for name, d in fresh.items():
        assert on_disk[name]["activations"] == d["activations"], name


def test_corpus_coverage():
    tags = {}
    for s in bundled():
        tags.setdefault(s.stack, set()).update(s.tags)
    need = {"honest", "static", "adaptive", "late", "replay", "malformed"}
    for stack in ("rbc", "ubc", "fbc", "tle", "sbc", "durs", "vote"):
        assert len(bundled(stack)) >= 12
        assert need <= tags[stack] | {"malformed"} and "mid-round" in tags[stack], stack


def test_stats_independent_of_thread_count(monkeypatch):
    s = next(x for x in bundled("durs") if x.name == "durs_basic")
    a = stats(s, 30, workers=1)
    b = stats(s, 30, workers=4)
    assert a == b and a["samples"] == 30 and a["agreement"] == 1.0
    monkeypatch.setenv("SBC_SIM_THREADS", "3")
    assert threads() == 3


def test_stats_vote_results():
    s = next(x for x in bundled("vote") if x.name == "vote_basic")
    rep = stats(s, 5)
    assert rep["results"] == {"[1,2,0]": 5}


# -- command line --------------------------------------------------------------------

def test_cli_run_fbc_basic(tmp_path):
    out = tmp_path / "trace.jsonl"
    assert cli.main(["run", "--scenario", str(path_of("fbc_basic")), "--out", str(out)]) == 0
    trace = read_trace(out)
    sent = {ev.payload["msg"]: ev.round for ev in trace if ev.label == "input"}
    got = [(ev.round, ev.payload["msg"]) for ev in trace if ev.label == "output"]
    assert got and all(r == sent[m] + 2 for r, m in got)
    assert cli.main(["audit", "--trace", str(out)]) == 0


def test_cli_compare_ubc_adaptive(capsys):
    assert cli.main(["compare", "--scenario", str(path_of("ubc_adaptive"))]) == 0
    assert json.loads(capsys.readouterr().out)["verdict"] == "equal"


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": 1,\n  "n": 3,\n  "stack": }')
    assert cli.main(["run", "--scenario", str(bad)]) == 2
    assert "line 3 column" in capsys.readouterr().err
    assert cli.main(["compare", "--scenario", str(tmp_path / "missing.json")]) == 2
    gap = tmp_path / "gap.json"
    gap.write_text(json.dumps(script("sbc", [B(0, 0, "a"), B(4, 1, "b")], phi=6, delta=3, alpha=3).to_dict()))
    assert cli.main(["compare", "--scenario", str(gap)]) == 1
    assert cli.main(["stats", "--scenario", str(path_of("durs_basic")), "--trials", "0"]) == 2
    t = tmp_path / "t.jsonl"
    cli.main(["run", "--scenario", str(path_of("fbc_basic")), "--out", str(t)])
    lines = t.read_text().splitlines()
    ev = TraceEvent.from_json(lines[-1])
    ev.label, ev.payload = "ro_batch", {"wrapper": "W_q", "key": "p0", "granted": True, "caller": "p0", "size": 1}
    t.write_text("\n".join(lines + [ev.to_json()] * 5) + "\n")
    assert cli.main(["audit", "--trace", str(t)]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "sbcsim", "stats", "--scenario", str(path_of("durs_basic")),
                        "--trials", "4"], capture_output=True, text=True)
    assert r.returncode == 0
    assert json.loads(r.stdout)["samples"] == 4
