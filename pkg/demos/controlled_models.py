"""A random quantum POMDP, its IO-HQMM embedding, and belief filtering."""

import itertools
import math

from tnseq import controlled_filter, controlled_filter_init, controlled_joint, qomdp_to_iohqmm, random_model
from tnseq.controlled import controlled_joint_vectorized

q = random_model("qomdp", 2, 2, seed=3, actions=2)
io = qomdp_to_iohqmm(q)

pairs = list(itertools.product(range(2), range(2)))
worst = 0.0
for seq in itertools.product(pairs, repeat=2):
    p = controlled_joint(q, seq)
    worst = max(worst, abs(p - controlled_joint_vectorized(q, seq)), abs(p - controlled_joint(io, seq)))
print("largest disagreement across forms:", worst)

history = [(0, 1), (1, 0), (1, 1)]
st = controlled_filter_init(q)
for a, y in history:
    st = controlled_filter(q, st, a, y)
    rho = st.state.reshape(2, 2, order="F")
    print(f"after action {a}, observation {y}: P(history) = {math.exp(st.log_prob):.4f}")
    print(rho.round(4))
