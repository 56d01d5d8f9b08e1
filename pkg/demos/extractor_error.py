"""Worst-case error of small extractors over flat sources.

A strong extractor must make ``(E(X,Y), Y)`` close to uniform for every
source of min-entropy ``k``.  Flat sources are the extreme points, so at
desk scale the worst case is found by enumeration.
"""

# %%
from qbsm import extract

# %% Inner product on 2 and 4 bits.
for n in (2, 4):
    e = extract.ip_extractor(n)
    for k in range(n + 1):
        w = extract.worst_case_epsilon(e, k)
        print(f"ip n={n} k={k}: eps = {w.epsilon:.6f} ({w.mode}), worst support {w.support}")

# %% The error never grows with k: fewer, larger flat sources.
e = extract.pair_xor(4)
print("pair_xor n=4:", [round(extract.worst_case_epsilon(e, k).epsilon, 6) for k in range(5)])

# %% At these sizes every one-bit bound 3 sqrt(eps) is at least 3/4, so the
# end-to-end guarantees are vacuous; the checks still exercise them.
