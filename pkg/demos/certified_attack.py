"""An end-to-end check of the one-bit guarantee.

Pick an extractor and min-entropy, compute its exact error, build a
memory encoding, depolarise it until the guessing-entropy hypothesis is
certified, then compare the exact attack value with the bound.
"""

# %%
import math

import numpy as np

from qbsm import adversary as adv
from qbsm import extract, povm, theorems

e = extract.ip_extractor(4)
k = 1
eps = theorems.exhaustive_epsilon(e, k)
tau = k + math.log2(1 / eps)
print(f"ip n=4, k={k}: eps = {eps}, need H_guess(X|Q) >= {tau:.4f} bits")

# %% Orthogonal two-qubit encoding, mixed with noise until certified.
# ``depolarize(enc, t)`` keeps weight ``t`` on the encoding; bisect for the largest t.
px = np.full(e.num_sources, 1 / e.num_sources)
base = adv.orthogonal_encoder(e.num_sources, 2)
lo, hi = 0.0, 1.0
for _ in range(30):
    mid = 0.5 * (lo + hi)
    rho = adv.depolarize(base, mid).cq_state(px)
    ok = povm.guessing_prob_bracket(rho, target=2.0 ** -tau).p_hi <= 2.0 ** -tau
    lo, hi = (mid, hi) if ok else (lo, mid)
enc = adv.depolarize(base, lo)
br = theorems.certify(enc.cq_state(px), tau)
print(f"largest certified weight t = {lo:.6f}, p_hi = {br.p_hi:.6f} <= {2.0 ** -tau:.6f}")

# %% Exact attack value against the bound.
value = adv.quantum_attack_eval(e, px, enc).value
print(f"attack value {value:.6f} <= 3 sqrt(eps) = {3 * math.sqrt(eps):.6f}")

# %% The same pipeline through the check registry, with rejection of
# cases whose hypothesis cannot be certified.
case = theorems.gen_case("B2", 0, seed=5)
print(case.params)
print(theorems.run_check("B2", case))
