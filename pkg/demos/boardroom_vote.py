"""
Self-tallying vote
==================

Voters send signed ballots through simultaneous broadcast, so no ballot
can depend on another.  Every honest voter computes the same tally;
with a quota of one, only a voter's last ballot counts.
"""

from sbcsim import run_scenario
from sbcsim.corpus import bundled

for s in bundled("vote")[:4]:
    for stack in ("vote", "vote_ideal"):
        res = {tuple(ev.payload["res"]) for ev in run_scenario(s, stack).trace if ev.label == "output"}
        print(f"{s.name:24s} {stack:11s} {sorted(res)}")
