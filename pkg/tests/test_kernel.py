import pytest
from conftest import outputs, run, script

from sbcsim.corpus import msg
from sbcsim.kernel import (Clock, ConfigError, EntityId, Params, ScenarioScript, TraceEvent, parse_scenario,
                           party, read_trace, write_trace)


def test_params_defaults_and_extra():
    p = Params.from_dict({"phi": 5, "rbc": "dolev_strong"})
    assert (p.phi, p.delta, p.alpha, p.q) == (5, 2, 2, 2)
    assert p.get("rbc") == "dolev_strong"
    assert p.to_dict()["rbc"] == "dolev_strong"


@pytest.mark.parametrize("bad", [{"q": 0}, {"phi": -1}, {"delta": "2"}, {"oracle_mode": "magic"}, {"alpha": True}])
def test_params_rejected(bad):
    with pytest.raises(ConfigError):
        Params.from_dict(bad)


def test_malformed_json_reports_position():
    with pytest.raises(ConfigError, match="line 2 column"):
        parse_scenario('{"seed": 1,\n "n": }')


@pytest.mark.parametrize("d", [
    {"seed": 1, "n": 2},
    {"seed": 1, "n": 2, "stack": "nope"},
    {"seed": -1, "n": 2, "stack": "fbc"},
    {"seed": 1, "n": 0, "stack": "fbc"},
    {"seed": 1, "n": 2, "stack": "fbc", "colour": "red"},
    {"seed": 1, "n": 2, "stack": "fbc", "activations": [{"round": 0, "party": 5, "input": {"op": "x"}}]},
    {"seed": 1, "n": 2, "stack": "fbc", "activations": [{"round": 2, "party": 0, "input": {"op": "x"}},
                                                         {"round": 1, "party": 0, "input": {"op": "x"}}]},
    {"seed": 1, "n": 2, "stack": "fbc", "corruptions": [{"round": 0}]},
    {"seed": 1, "n": 2, "stack": "fbc", "adversary": [{"round": 0, "do": "send", "party": 9}]},
])
def test_script_validation(d):
    with pytest.raises(ConfigError):
        ScenarioScript.from_dict(d)


def test_script_roundtrip():
    s = script("fbc", [(0, 0, {"op": "broadcast", "msg": "aa"})], seed=9)
    assert ScenarioScript.from_dict(s.to_dict()) == s
    assert s.with_seed(3).seed == 3 and s.with_stack("fbc_ideal").stack == "fbc_ideal"


def test_clock_waits_for_every_honest_member():
    c = Clock()
    a, b = party("p0"), party("p1")
    c.register(a)
    c.register(b)
    assert not c.advance(a)
    assert not c.advance(a)
    assert c.advance(b) and c.cl == 1
    c.corrupt(b)
    assert c.advance(a) and c.cl == 2
    with pytest.raises(ValueError):
        c.advance(EntityId("party", "p9"))


def test_trace_event_json_roundtrip(tmp_path):
    sim = run("ubc", [(0, 0, {"op": "broadcast", "msg": msg("a")})])
    p = tmp_path / "t.jsonl"
    write_trace(sim.trace, p)
    assert read_trace(p) == sim.trace
    ev = sim.trace[3]
    assert TraceEvent.from_json(ev.to_json()) == ev


def test_read_trace_rejects_garbage(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"seq": 0}\nnot json\n')
    with pytest.raises(ConfigError, match="line 1"):
        read_trace(p)


def test_seq_and_rounds_monotone():
    sim = run("fbc", [(0, 0, {"op": "broadcast", "msg": msg("a")}), (1, 1, {"op": "broadcast", "msg": msg("b")})])
    assert [ev.seq for ev in sim.trace] == list(range(len(sim.trace)))
    rounds = [ev.round for ev in sim.trace]
    assert rounds == sorted(rounds)


def test_corruption_fires_before_named_step():
    sim = run("ubc", [(0, 0, {"op": "broadcast", "msg": msg("a")})],
              corruptions=[{"round": 0, "party": 2, "step": 2}])
    labels = [(ev.label, ev.actor["pid"]) for ev in sim.trace if ev.round == 0 and ev.label in ("advance_clock", "corrupt")]
    assert labels[:3] == [("advance_clock", "p0"), ("corrupt", "A"), ("advance_clock", "p1")]
    assert ("advance_clock", "p2") not in labels


def test_inputs_to_corrupted_party_are_ignored():
    sim = run("ubc", [(1, 0, {"op": "broadcast", "msg": msg("a")})], corruptions=[{"round": 0, "party": 0}])
    assert any(ev.label == "input_ignored" for ev in sim.trace)
    assert outputs(sim) == []


def test_round_ends_when_everyone_is_corrupted():
    sim = run("ubc", [], n=2, corruptions=[{"round": 0, "party": 0}, {"round": 0, "party": 1}], rounds=3)
    assert sim.now == 3
    assert [ev.payload["to"] for ev in sim.trace if ev.label == "round_advanced"] == [1, 2, 3]


def test_double_corruption_warns():
    sim = run("ubc", [], corruptions=[{"round": 0, "party": 0}, {"round": 1, "party": 0}])
    assert any(ev.payload.get("what") == "already corrupted" for ev in sim.trace)


def test_unknown_input_and_directive_warn():
    sim = run("fbc", [(0, 0, {"op": "dance"})], corruptions=[{"round": 0, "party": 1}],
              adversary=[{"round": 1, "do": "dance", "party": 1}, {"round": 1, "do": "send", "party": 2, "msg": "aa"}])
    whats = [ev.payload.get("what") for ev in sim.trace if ev.label == "warning"]
    assert "unknown input" in whats
    assert "directive not supported here" in whats
    assert "party is not corrupted" in whats


def test_params_event_describes_the_stack():
    sim = run("tle_ideal", [], delta=3, alpha=1)
    info = sim.trace[[ev.label for ev in sim.trace].index("params")].payload
    assert info["stack"] == "tle_ideal" and info["tle_delay"] == 4 and info["n"] == 4
