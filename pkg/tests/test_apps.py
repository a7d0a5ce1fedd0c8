import pytest
from conftest import outputs, run, script
from hypothesis import given
from hypothesis import strategies as st

from sbcsim.apps import apply_quota, ballot_body, check_durs_params, combine, parse_ballot, tally
from sbcsim.harness import compare
from sbcsim.kernel import ConfigError

D = dict(phi=2, delta=4, alpha=2)
V = dict(phi=4, delta=2, alpha=2)


def urs(r, p):
    return (r, p, {"op": "urs"})


def vote(r, p, v):
    return (r, p, {"op": "vote", "vote": v})


@given(st.lists(st.binary(min_size=32, max_size=32), max_size=6))
def test_combine_order_free(parts):
    assert combine(parts) == combine(list(reversed(parts)))
    assert combine(parts + parts) == bytes(32)


def test_combine_skips_bad_lengths():
    a = bytes(range(32))
    assert combine([a, b"short", a * 2]) == a


def test_durs_gate():
    check_durs_params(2, 4, 2)
    for bad in ((2, 2, 0), (0, 3, 1), (2, 3, 2)):
        with pytest.raises(ConfigError):
            check_durs_params(*bad)
    with pytest.raises(ConfigError):
        run("durs", [], phi=2, delta=3, alpha=2)


def test_durs_everyone_agrees_at_delta():
    for st_ in ("durs", "durs_ideal"):
        out = outputs(run(st_, [urs(0, 0), urs(1, 1), urs(2, 3)], **D))
        assert {r for r, _, _ in out} == {4}
        assert len({p["urs"] for _, _, p in out}) == 1


def test_durs_is_xor_of_batch():
    sim = run("durs", [urs(0, 0)], **D)
    batch = [ev.payload["batch"] for ev in sim.trace if ev.label == "recv"][0]
    assert len(batch) == 4
    assert outputs(sim)[0][2]["urs"] == combine([bytes.fromhex(b) for b in batch]).hex()


def test_durs_adversary_sees_string_alpha_early():
    for st_ in ("durs", "durs_ideal"):
        sim = run(st_, [urs(0, 0)], **D)
        learned = [ev.round for ev in sim.trace if ev.label == "adv_learned"]
        assert learned == [2]


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2)), max_size=12), st.integers(1, 3))
def test_quota_keeps_latest(cast, quota):
    kept = apply_quota(cast, quota)
    # independent check: mark each voter's last ``quota`` positions
    last = {}
    for i, (voter, _) in enumerate(cast):
        last.setdefault(voter, []).append(i)
    keep = sorted(i for idx in last.values() for i in idx[-quota:])
    assert kept == [cast[i][1] for i in keep]
    assert sum(tally(kept, 3)) == len(kept)


def test_ballot_format():
    body = ballot_body("p2", 5, 1)
    assert len(body) == 11
    assert parse_ballot(body + bytes(32)) == ("p2", 5, 1, bytes(32))
    assert parse_ballot(body) is None


def test_double_vote_latest_wins():
    acts = [(0, 0, {"op": "init"}), vote(1, 0, 0), vote(1, 1, 2), vote(2, 0, 1), vote(2, 2, 2)]
    for st_ in ("vote", "vote_ideal"):
        assert {tuple(p["res"]) for _, _, p in outputs(run(st_, acts, n=3, **V))} == {(0, 1, 2)}


def test_votes_outside_window_not_counted():
    acts = [vote(0, 1, 2), (1, 0, {"op": "init"}), vote(2, 0, 1), vote(5, 2, 0), vote(6, 2, 2)]
    for st_ in ("vote", "vote_ideal"):
        assert {tuple(p["res"]) for _, _, p in outputs(run(st_, acts, n=3, **V))} == {(0, 1, 0)}


def test_vote_needs_an_honest_voter():
    with pytest.raises(ConfigError):
        run("vote", [], n=2, corruptions=[{"round": 0, "party": 0}, {"round": 0, "party": 1}], **V)


def test_forged_ballot_rejected():
    # a corrupted voter cannot cast for an honest one: the signature check fails
    sim = run("vote", [(0, 0, {"op": "init"}), vote(1, 0, 1)], n=3, corruptions=[{"round": 0, "party": 2}], **V)
    world = sim.stack
    forged = ballot_body("p1", 0, 2) + bytes(32)
    assert world.vote.count([forged]) == [0, 0, 0]


@given(st.lists(st.tuples(st.integers(1, 3), st.integers(0, 2), st.integers(0, 2)), max_size=6))
def test_vote_matches_ideal(cast):
    acts = [(0, 0, {"op": "init"})] + [vote(r, p, v) for r, p, v in sorted(cast)]
    assert compare(script("vote", acts, n=3, **V)).verdict == "equal"
