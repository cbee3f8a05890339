"""Why the two-state HMM in the gallery has no finite NOOM twin.

Run with ``python demos/hmm_outside_noom.py``.
"""

import numpy as np

from tnseq import appendix_hmm, filter_sequence
from tnseq.gallery import noom_search_evidence

instance = appendix_hmm()
states = [s.state.real for s in filter_sequence(instance.model, (1, 1))]
for t, x in enumerate(states):
    print(f"x{t} = {np.round(x, 12)}")

# The third state is a convex mixture of the first two.  A NOOM state is a
# unit vector that evolves linearly, so it cannot land on such a mixture.
mix = 0.6 * states[0] + 0.4 * states[1]
print("x2 - (0.6 x0 + 0.4 x1) =", np.linalg.norm(states[2] - mix))

for fact, actual, ok in instance.verify():
    print(f"{'ok ' if ok else 'BAD'} {fact.description}")

# Bounded numerical search: the best 2-dim NOOM still misses at length 3.
print("best 2-dim NOOM deviation up to length 3:",
      noom_search_evidence(dim=2, max_len=3, trials=40, polish=2))
