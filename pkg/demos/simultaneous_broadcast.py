"""
Simultaneous broadcast: a batch nobody could peek into
======================================================

Several parties broadcast during a window.  All honest parties receive
one sorted batch at the end, and the adversary learns the contents no
earlier than the release round.
"""

import json

from sbcsim import run_scenario
from sbcsim.corpus import bundled

script = next(s for s in bundled("sbc") if s.name == "sbc_basic")
trace = run_scenario(script, "sbc").trace
window = next(ev.payload for ev in trace if ev.label == "window")
print("window", window)

sent = [ev.payload["msg"] for ev in trace if ev.label == "input" and ev.payload.get("op") == "broadcast"]
for m in sent:
    # first round in which an adversary-visible event mentions this message
    seen = [ev.round for ev in trace
            if (ev.actor["kind"] == "adversary" or ev.label == "leak") and m in json.dumps(ev.payload)]
    print(m[:8], "visible from round", min(seen) if seen else None)

batches = {json.dumps(ev.payload["msgs"]) for ev in trace if ev.label == "output"}
print(len(batches), "distinct batch(es) among honest parties")
