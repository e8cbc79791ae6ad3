"""
Pure states always decouple, mixed states sometimes
===================================================

Every pure Gaussian state can be stripped of its q-p correlations by passive
optics.  Mixed states need not be, and the numerical oracle cross-checks the
verdicts.
"""

# %%
from collections import Counter

from qpdecouple import decouple, oracle_agreement, random_pure_state, random_state

verdicts = Counter(decouple(random_pure_state(1 + k % 4, k)).verdict.value for k in range(100))
print("pure states:", dict(verdicts))

# %%
for k in range(6):
    state = random_state(2 + k % 2, k, decouplable=k % 2 == 0)
    a = oracle_agreement(state, seed=k)
    print(f"seed {k}: {a.status:24s} oracle floor {a.oracle_residual:.2e}")
