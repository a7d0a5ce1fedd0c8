"""
A shared random string from simultaneous broadcast
==================================================

Each party contributes a random block and the result is the XOR of the
batch.  Over many seeds each output bit should be a fair coin.
"""

import numpy as np

from sbcsim import stats
from sbcsim.corpus import bundled

script = next(s for s in bundled("durs") if s.name == "durs_basic")
rep = stats(script, 500)
freq = np.array(rep["bit_frequency"])

print("agreement", rep["agreement"])
print("mean bit frequency %.4f" % freq.mean())
print("max deviation %.4f, min p-value %.4f" % (rep["max_deviation"], rep["min_pvalue"]))
