"""The bundled scenario corpus and the generator that writes it.

Run ``python3 -m sbcsim.corpus`` to regenerate ``scenarios/*.json``.  Each
stack gets at least a dozen scripts spread over honest runs, static and
adaptive corruption (before and after the message is fixed, and between two
parties' slots of one round), late inputs, replays and malformed traffic.
"""

import json
from importlib import resources
from pathlib import Path

from .kernel import ScenarioScript, parse_scenario

HERE = Path(__file__).parent / "scenarios"


def msg(tag, size=16):
    """Readable deterministic payload: ``tag`` repeated, as hex."""
    raw = (tag.encode() * size)[:size]
    return raw.hex()


class Script:
    def __init__(self, name, stack, description, tags, n=4, seed=7, **params):
        self.d = {"name": name, "description": description, "tags": tags, "seed": seed, "n": n,
                  "stack": stack, "params": params, "corruptions": [], "activations": [], "adversary": []}

    def act(self, rnd, p, **op):
        self.d["activations"].append({"round": rnd, "party": p, "input": op})
        return self

    def slot(self, rnd, p):
        """Step index of party ``p``'s clock slot in round ``rnd``."""
        return sum(1 for a in self.d["activations"] if a["round"] == rnd) + p

    def corrupt(self, rnd, p, step=0):
        self.d["corruptions"].append({"round": rnd, "party": p, "step": step})
        return self

    def adv(self, rnd, do, step=0, **kw):
        self.d["adversary"].append(dict({"round": rnd, "do": do, "step": step}, **kw))
        return self


def bcast(s, rnd, p, tag):
    return s.act(rnd, p, op="broadcast", msg=msg(tag))


# -- per stack ----------------------------------------------------------------------

def broadcast_suite(stack, extra=None, prefix=None):
    """Shared shapes for rbc, ubc and fbc."""
    extra = extra or {}
    pre = prefix or stack
    out = []

    s = Script(f"{pre}_basic", stack, "Two honest senders in consecutive rounds.", ["honest"], **extra)
    bcast(s, 0, 0, "a")
    bcast(s, 1, 1, "b")
    out.append(s)

    s = Script(f"{pre}_all_send", stack, "Every party broadcasts in the same round.", ["honest"], **extra)
    for p in range(4):
        bcast(s, 0, p, "abcd"[p])
    out.append(s)

    s = Script(f"{pre}_burst", stack, "One party broadcasts three messages in one round.", ["honest"], **extra)
    for t in "xyz":
        bcast(s, 1, 2, t)
    out.append(s)

    s = Script(f"{pre}_static", stack, "Party 3 is corrupted from the start and sends its own message.",
               ["static"], **extra)
    s.corrupt(0, 3)
    bcast(s, 0, 0, "a")
    s.adv(1, "send", party=3, msg=msg("E"))
    out.append(s)

    s = Script(f"{pre}_static_silent", stack, "A statically corrupted party ignores its input.", ["static"], **extra)
    s.corrupt(0, 1)
    bcast(s, 0, 1, "a")
    bcast(s, 1, 2, "b")
    out.append(s)

    s = Script(f"{pre}_adaptive", stack,
               "The sender is corrupted right after its input and swaps the message before its slot.",
               ["adaptive", "pre-lock"], **extra)
    bcast(s, 1, 0, "c")
    bcast(s, 1, 2, "d")
    s.adv(1, "allow", step=s.slot(1, 0), target=0, k=0, msg=msg("F"))
    s.corrupt(1, 0, step=s.slot(1, 0))
    out.append(s)

    s = Script(f"{pre}_post_lock", stack,
               "The sender is corrupted one round after broadcasting and tries to swap the message.",
               ["adaptive", "post-lock"], **extra)
    bcast(s, 0, 1, "h")
    s.corrupt(1, 1)
    s.adv(1, "allow", target=1, k=0, msg=msg("F"))
    out.append(s)

    s = Script(f"{pre}_mid_round", stack,
               "Party 2 is corrupted between party 1's and party 2's slots of the round it broadcast in.",
               ["adaptive", "mid-round"], **extra)
    bcast(s, 2, 2, "m")
    bcast(s, 2, 3, "n")
    s.adv(2, "allow", step=s.slot(2, 2), target=2, k=0, msg=msg("G"))
    s.corrupt(2, 2, step=s.slot(2, 2))
    out.append(s)

    s = Script(f"{pre}_mid_round_bystander", stack,
               "A party that never sends is corrupted in the middle of a busy round.",
               ["adaptive", "mid-round"], **extra)
    bcast(s, 0, 0, "a")
    bcast(s, 0, 2, "b")
    s.corrupt(0, 1, step=s.slot(0, 1))
    out.append(s)

    s = Script(f"{pre}_late", stack, "Messages arrive late in the run, one from each of two parties.",
               ["late"], **extra)
    bcast(s, 6, 0, "l")
    bcast(s, 7, 3, "k")
    out.append(s)

    s = Script(f"{pre}_replay", stack, "A corrupted party re-sends an honest party's message.", ["replay"], **extra)
    s.corrupt(0, 3)
    bcast(s, 0, 0, "r")
    s.adv(3, "send", party=3, msg=msg("r"))
    out.append(s)

    s = Script(f"{pre}_after_corruption", stack,
               "Inputs keep coming for the other parties after one of them is corrupted.",
               ["adaptive", "post-lock"], **extra)
    bcast(s, 0, 0, "a")
    s.corrupt(2, 0)
    bcast(s, 2, 1, "b")
    bcast(s, 3, 2, "c")
    out.append(s)
    return out


def rbc_suite():
    out = broadcast_suite("rbc")
    s = Script("rbc_equivocate", "rbc", "A corrupted sender shows different messages to two halves.",
               ["static", "malformed"])
    s.corrupt(0, 3)
    s.adv(0, "equivocate", party=3, msg=msg("P"), msg2=msg("Q"), split=2)
    out.append(s)
    s = Script("rbc_small_t", "rbc", "Dolev-Strong with t = 1 (two rounds), honest traffic.",
               ["honest"], t_plus_one_rounds=2)
    bcast(s, 0, 0, "a")
    bcast(s, 0, 1, "b")
    out.append(s)
    return out


def ubc_suite():
    out = broadcast_suite("ubc")
    s = Script("ubc_adaptive_ds", "ubc",
               "Unfair broadcast over Dolev-Strong; the sender is corrupted before its slot.",
               ["adaptive", "pre-lock"], rbc="dolev_strong")
    bcast(s, 0, 1, "s")
    bcast(s, 0, 2, "t")
    s.adv(0, "allow", step=s.slot(0, 1), target=1, k=0, msg=msg("F"))
    s.corrupt(0, 1, step=s.slot(0, 1))
    out.append(s)
    s = Script("ubc_ds_basic", "ubc", "Unfair broadcast over Dolev-Strong, honest traffic.",
               ["honest"], rbc="dolev_strong")
    bcast(s, 0, 0, "a")
    bcast(s, 1, 3, "b")
    out.append(s)
    s = Script("ubc_empty", "ubc", "A zero-length message.", ["malformed"])
    s.act(0, 0, op="broadcast", msg="")
    out.append(s)
    return out


def fbc_suite():
    out = broadcast_suite("fbc")
    s = Script("fbc_replay_wire", "fbc", "A corrupted party replays an honest party's (c, y) pair.", ["replay"])
    s.corrupt(0, 3)
    bcast(s, 0, 0, "w")
    s.adv(1, "replay", party=3, target=0, k=0)
    out.append(s)
    s = Script("fbc_malformed", "fbc", "A corrupted party sends bytes that do not parse as (c, y).",
               ["malformed"])
    s.corrupt(0, 2)
    bcast(s, 0, 0, "a")
    s.adv(0, "malformed", party=2, msg="00ff00ff")
    out.append(s)
    s = Script("fbc_q4", "fbc", "Budget q = 4 per round.", ["honest"], q=4)
    bcast(s, 0, 0, "a")
    bcast(s, 0, 1, "b")
    out.append(s)
    return out


def tle_suite():
    out = []

    def enc(s, rnd, p, tag, tau):
        return s.act(rnd, p, op="enc", msg=msg(tag), tau=tau)

    def retrieve(s, rnd, p):
        return s.act(rnd, p, op="retrieve")

    def dec(s, rnd, p, ref, tau, **kw):
        return s.act(rnd, p, op="dec", ref=ref, tau=tau, **kw)

    s = Script("tle_basic", "tle", "Encrypt for round 8, retrieve, decrypt on time.", ["honest"])
    enc(s, 0, 0, "a", 8)
    retrieve(s, 4, 0)
    dec(s, 8, 0, [0, 0], 8)
    out.append(s)

    s = Script("tle_early", "tle", "Decrypting before the release round says more time is needed.", ["honest"])
    enc(s, 0, 1, "b", 9)
    retrieve(s, 4, 1)
    dec(s, 5, 1, [1, 0], 9)
    dec(s, 9, 1, [1, 0], 9)
    out.append(s)

    s = Script("tle_wrong_tau", "tle", "Asking with a smaller release round than the one encrypted for.",
               ["late"])
    enc(s, 0, 0, "c", 7)
    retrieve(s, 4, 0)
    dec(s, 7, 0, [0, 0], 6)
    dec(s, 8, 0, [0, 0], 7)
    out.append(s)

    s = Script("tle_two_senders", "tle", "Two parties encrypt in different rounds.", ["honest"])
    enc(s, 0, 0, "a", 8)
    enc(s, 1, 2, "b", 10)
    retrieve(s, 5, 0)
    retrieve(s, 5, 2)
    dec(s, 10, 1, [0, 0], 8)
    dec(s, 10, 1, [2, 0], 10)
    out.append(s)

    s = Script("tle_static", "tle", "A statically corrupted party's inputs are ignored.", ["static"])
    s.corrupt(0, 3)
    enc(s, 0, 0, "a", 8)
    enc(s, 0, 3, "z", 8)
    retrieve(s, 4, 0)
    dec(s, 8, 1, [0, 0], 8)
    out.append(s)

    s = Script("tle_pre_lock", "tle", "The encrypting party is corrupted before its slot.",
               ["adaptive", "pre-lock"])
    enc(s, 0, 0, "a", 8)
    enc(s, 0, 1, "b", 8)
    s.corrupt(0, 1, step=s.slot(0, 1))
    retrieve(s, 4, 0)
    dec(s, 8, 0, [0, 0], 8)
    out.append(s)

    s = Script("tle_post_lock", "tle", "The encrypting party is corrupted after its ciphertext is out.",
               ["adaptive", "post-lock"])
    enc(s, 0, 2, "c", 9)
    retrieve(s, 4, 2)
    s.corrupt(5, 2)
    dec(s, 9, 0, [2, 0], 9)
    out.append(s)

    s = Script("tle_mid_round", "tle", "A bystander is corrupted between two slots of a busy round.",
               ["adaptive", "mid-round"])
    enc(s, 1, 0, "a", 9)
    enc(s, 1, 3, "d", 9)
    s.corrupt(1, 2, step=s.slot(1, 2))
    retrieve(s, 5, 0)
    retrieve(s, 5, 3)
    dec(s, 9, 1, [0, 0], 9)
    dec(s, 9, 1, [3, 0], 9)
    out.append(s)

    s = Script("tle_late_dec", "tle", "Decrypting long after the release round.", ["late"])
    enc(s, 0, 0, "a", 7)
    retrieve(s, 4, 0)
    dec(s, 12, 3, [0, 0], 7)
    out.append(s)

    s = Script("tle_malformed", "tle", "Decrypting a ciphertext with one flipped byte.", ["malformed"])
    enc(s, 0, 0, "a", 8)
    retrieve(s, 4, 0)
    dec(s, 8, 0, [0, 0], 8, flip=True)
    dec(s, 8, 0, [0, 0], 8)
    out.append(s)

    s = Script("tle_replay", "tle", "Several parties decrypt the same retrieved ciphertext.", ["replay"])
    enc(s, 0, 1, "a", 8)
    retrieve(s, 4, 1)
    dec(s, 8, 0, [1, 0], 8)
    dec(s, 8, 2, [1, 0], 8)
    dec(s, 9, 3, [1, 0], 8)
    out.append(s)

    s = Script("tle_adversary_ct", "tle", "A corrupted party publishes its own well-formed ciphertext.",
               ["static"])
    s.corrupt(0, 3)
    s.adv(0, "tle_enc", party=3, msg=msg("E"), tau=8)
    enc(s, 0, 0, "a", 8)
    retrieve(s, 4, 0)
    dec(s, 8, 0, [0, 0], 8)
    out.append(s)
    return out


SBC_PARAMS = {"phi": 6, "delta": 3, "alpha": 3}


def sbc_suite():
    out = []

    def S(name, desc, tags, **kw):
        return Script(name, "sbc", desc, tags, **dict(SBC_PARAMS, **kw))

    s = S("sbc_basic", "Two honest senders inside the window.", ["honest"])
    bcast(s, 0, 0, "a")
    bcast(s, 1, 1, "b")
    out.append(s)

    s = S("sbc_all_send", "Everyone sends in the first round.", ["honest"])
    for p in range(4):
        bcast(s, 0, p, "dcba"[p])
    out.append(s)

    s = S("sbc_two_each", "A party sends two messages; the second waits for the window.", ["honest"])
    bcast(s, 0, 0, "a")
    bcast(s, 0, 0, "b")
    bcast(s, 2, 3, "c")
    out.append(s)

    s = S("sbc_realized", "Fully realized stack down to fair broadcast, honest traffic.", ["honest"],
          phi=5, delta=3, alpha=3, tle="real")
    bcast(s, 0, 0, "a")
    bcast(s, 1, 1, "b")
    out.append(s)

    s = S("sbc_static", "Party 3 is corrupted from the start and contributes its own message.", ["static"])
    s.corrupt(0, 3)
    bcast(s, 0, 0, "a")
    s.adv(1, "send", party=3, msg=msg("E"))
    out.append(s)

    s = S("sbc_pre_lock", "A sender is corrupted before its slot and substitutes its message.",
          ["adaptive", "pre-lock"])
    bcast(s, 0, 0, "a")
    bcast(s, 1, 1, "b")
    s.adv(1, "allow", step=s.slot(1, 1), target=1, k=0, msg=msg("F"))
    s.corrupt(1, 1, step=s.slot(1, 1))
    out.append(s)

    s = S("sbc_post_lock", "A sender is corrupted after its triple went out; the swap is ignored.",
          ["adaptive", "post-lock"])
    bcast(s, 0, 0, "a")
    bcast(s, 0, 1, "b")
    s.adv(4, "allow", target=1, k=0, msg=msg("F"))
    s.corrupt(4, 1)
    out.append(s)

    s = S("sbc_mid_round", "A sender is corrupted between two slots, after its own slot.",
          ["adaptive", "mid-round"])
    bcast(s, 0, 0, "a")
    bcast(s, 1, 2, "b")
    s.corrupt(3, 2, step=s.slot(3, 3))
    out.append(s)

    s = S("sbc_late", "A message sent after the window closed is not part of the batch.", ["late"])
    bcast(s, 0, 0, "a")
    bcast(s, 7, 2, "z")
    out.append(s)

    s = S("sbc_replay", "A corrupted party replays an honest triple.", ["replay"])
    s.corrupt(0, 3)
    bcast(s, 0, 0, "a")
    s.adv(4, "replay", party=3, target=0, k=0)
    out.append(s)

    s = S("sbc_malformed", "A corrupted party sends garbage and a triple for the wrong release round.",
          ["malformed"])
    s.corrupt(0, 3)
    bcast(s, 0, 0, "a")
    s.adv(1, "malformed", party=3, msg="0011")
    s.adv(2, "malformed", party=3, kind="tau")
    out.append(s)

    s = S("sbc_adversary_wakes", "The adversary opens the window; honest parties join in.", ["static"])
    s.corrupt(0, 2)
    s.adv(0, "send", party=2, msg=msg("W"))
    bcast(s, 1, 0, "a")
    out.append(s)
    return out


DURS_PARAMS = {"phi": 2, "delta": 4, "alpha": 2}


def durs_suite():
    out = []

    def S(name, desc, tags, **kw):
        return Script(name, "durs", desc, tags, **dict(DURS_PARAMS, **kw))

    def urs(s, rnd, p):
        return s.act(rnd, p, op="urs")

    s = S("durs_basic", "Two requests one round apart.", ["honest"])
    urs(s, 0, 0)
    urs(s, 1, 1)
    out.append(s)

    s = S("durs_all", "Everyone requests in the first round.", ["honest"])
    for p in range(4):
        urs(s, 0, p)
    out.append(s)

    s = S("durs_wide", "Wider window and longer delay.", ["honest"], phi=3, delta=7, alpha=3)
    urs(s, 0, 2)
    urs(s, 2, 0)
    out.append(s)

    s = S("durs_static", "A statically corrupted party contributes a chosen value.", ["static"])
    s.corrupt(0, 3)
    urs(s, 0, 0)
    s.adv(1, "send", party=3, msg="11" * 32)
    out.append(s)

    s = S("durs_pre_lock", "A party is corrupted before its slot in the wake-up round.",
          ["adaptive", "pre-lock"])
    urs(s, 0, 0)
    s.corrupt(1, 2, step=s.slot(1, 2))
    out.append(s)

    s = S("durs_post_lock", "A party is corrupted after its contribution is fixed.",
          ["adaptive", "post-lock"])
    urs(s, 0, 0)
    s.corrupt(3, 1)
    out.append(s)

    s = S("durs_mid_round", "A party is corrupted between two slots of the last round.",
          ["adaptive", "mid-round"])
    urs(s, 0, 1)
    s.corrupt(3, 2, step=s.slot(3, 2))
    out.append(s)

    s = S("durs_late", "A request after the string is out returns the same string.", ["late"])
    urs(s, 0, 0)
    urs(s, 9, 1)
    out.append(s)

    s = S("durs_replay", "A corrupted party copies a byte string it saw earlier.", ["replay"])
    s.corrupt(0, 2)
    urs(s, 0, 0)
    s.adv(1, "send", party=2, msg="00" * 32)
    out.append(s)

    s = S("durs_malformed", "A corrupted party contributes a short value, which is ignored.", ["malformed"])
    s.corrupt(0, 3)
    urs(s, 0, 1)
    s.adv(1, "send", party=3, msg="abcd")
    out.append(s)

    s = S("durs_adversary_wakes", "The adversary starts the protocol by itself.", ["static"])
    s.corrupt(0, 0)
    s.adv(0, "wake", party=0)
    urs(s, 3, 1)
    out.append(s)

    s = S("durs_repeat", "The same party asks twice.", ["honest"])
    urs(s, 0, 0)
    urs(s, 2, 0)
    urs(s, 5, 0)
    out.append(s)
    return out


VOTE_PARAMS = {"phi": 4, "delta": 2, "alpha": 2, "candidates": 3, "quota": 1}


def vote_suite():
    out = []

    def S(name, desc, tags, n=3, **kw):
        return Script(name, "vote", desc, tags, n=n, **dict(VOTE_PARAMS, **kw))

    def vote(s, rnd, p, v):
        return s.act(rnd, p, op="vote", vote=v)

    s = S("vote_basic", "Three voters, one ballot each.", ["honest"])
    s.act(0, 0, op="init")
    vote(s, 1, 0, 1)
    vote(s, 1, 1, 1)
    vote(s, 2, 2, 0)
    out.append(s)

    s = S("vote_double", "One voter votes twice; with quota 1 only the later ballot counts.", ["honest"])
    s.act(0, 0, op="init")
    vote(s, 1, 0, 0)
    vote(s, 1, 1, 2)
    vote(s, 2, 0, 1)
    vote(s, 2, 2, 2)
    out.append(s)

    s = S("vote_quota2", "Quota 2: each voter's two latest ballots count.", ["honest"], quota=2)
    s.act(0, 1, op="init")
    vote(s, 0, 0, 0)
    vote(s, 1, 0, 1)
    vote(s, 2, 0, 2)
    vote(s, 1, 1, 1)
    out.append(s)

    s = S("vote_out_of_window", "Ballots before init and after the window are not counted.", ["late"])
    vote(s, 0, 1, 2)
    s.act(1, 0, op="init")
    vote(s, 2, 0, 1)
    vote(s, 6, 2, 2)
    out.append(s)

    s = S("vote_invalid", "A ballot for a candidate that does not exist.", ["malformed"])
    s.act(0, 0, op="init")
    vote(s, 1, 0, 7)
    vote(s, 1, 1, 2)
    out.append(s)

    s = S("vote_static", "A statically corrupted voter casts its own ballot.", ["static"], n=4)
    s.corrupt(0, 3)
    s.act(0, 0, op="init")
    vote(s, 1, 0, 1)
    s.adv(2, "vote", party=3, vote=2)
    out.append(s)

    s = S("vote_pre_lock", "A voter is corrupted before its slot and changes its ballot.",
          ["adaptive", "pre-lock"], n=4)
    s.act(0, 0, op="init")
    vote(s, 1, 0, 0)
    vote(s, 1, 1, 0)
    s.adv(1, "allow", step=s.slot(1, 1), target=1, k=0, vote=2)
    s.corrupt(1, 1, step=s.slot(1, 1))
    out.append(s)

    s = S("vote_post_window", "A voter is corrupted after the window closed; its ballot stands.",
          ["adaptive", "post-lock"], n=4)
    s.act(0, 0, op="init")
    vote(s, 1, 2, 1)
    vote(s, 2, 0, 1)
    s.corrupt(7, 2)
    out.append(s)

    s = S("vote_mid_round", "A bystander is corrupted between slots while ballots are cast.",
          ["adaptive", "mid-round"], n=4)
    s.act(0, 0, op="init")
    vote(s, 1, 0, 2)
    vote(s, 1, 3, 0)
    s.corrupt(1, 2, step=s.slot(1, 2))
    out.append(s)

    s = S("vote_replay", "A corrupted voter re-casts a choice it saw elsewhere.", ["replay"], n=4)
    s.corrupt(0, 1)
    s.act(0, 0, op="init")
    vote(s, 1, 0, 1)
    s.adv(2, "vote", party=1, vote=1)
    s.adv(3, "vote", party=1, vote=1)
    out.append(s)

    s = S("vote_reinit", "A second init is ignored.", ["honest"])
    s.act(0, 0, op="init")
    s.act(2, 1, op="init")
    vote(s, 3, 1, 2)
    out.append(s)

    s = S("vote_five", "Five voters, two candidates.", ["honest"], n=5, candidates=2)
    s.act(0, 4, op="init")
    for p in range(5):
        vote(s, 1 + p % 2, p, p % 2)
    out.append(s)
    return out


SUITES = {"rbc": rbc_suite, "ubc": ubc_suite, "fbc": fbc_suite, "tle": tle_suite,
          "sbc": sbc_suite, "durs": durs_suite, "vote": vote_suite}


def generate():
    out = []
    for fn in SUITES.values():
        out.extend(s.d for s in fn())
    for d in out:
        d["activations"].sort(key=lambda a: a["round"])
    for d in out:
        ScenarioScript.from_dict(d)  # every script must validate
    return out


def write(dest=HERE):
    dest = Path(dest)
    dest.mkdir(parents=True, exist_ok=True)
    for old in dest.glob("*.json"):
        old.unlink()
    for d in generate():
        (dest / f"{d['name']}.json").write_text(json.dumps(d, indent=2) + "\n", encoding="utf-8")


def bundled(stack=None):
    """Bundled scripts, sorted by name; ``stack`` filters by base stack."""
    root = resources.files("sbcsim") / "scenarios"
    out = []
    for f in sorted(root.iterdir(), key=lambda f: f.name):
        if not f.name.endswith(".json"):
            continue
        s = parse_scenario(f.read_text(encoding="utf-8"), f.name)
        if stack is None or s.stack == stack:
            out.append(s)
    return out


def path_of(name):
    return Path(str(resources.files("sbcsim") / "scenarios" / f"{name}.json"))


if __name__ == "__main__":
    write()
    print(f"wrote {len(generate())} scenarios to {HERE}")
