"""
Fair broadcast: nobody can swap a message after seeing it
==========================================================

A sender fair-broadcasts a value in round 0.  Every honest party gets it
in round 2.  The adversary corrupts the sender in round 1 and tries to
replace the value, but the puzzle is already locked and the swap is
ignored.
"""

from sbcsim import compare, run_scenario
from sbcsim.corpus import bundled

script = next(s for s in bundled("fbc") if s.name == "fbc_post_lock")
print(script.description)

# run the puzzle-based protocol and print what honest parties received
trace = run_scenario(script, "fbc").trace
for ev in trace:
    if ev.label == "output":
        print(ev.round, ev.actor["pid"], ev.payload["msg"][:16])

# the ideal channel hands the environment exactly the same outputs
print(compare(script).verdict)
