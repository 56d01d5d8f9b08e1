"""Measured trace norms under mutually unbiased bases, and parameter plans.

Measuring all ``d + 1`` mutually unbiased bases loses at most a factor
``d + 1`` in trace norm.  The planner then evaluates the seed-length
formulas with explicit constants.
"""

# %%
import numpy as np

from qbsm import opalg, povm
from qbsm.harness.config import PlannerParams
from qbsm.harness.planner import plan

# %% Worst observed ratio ||A|| / ||F(A)|| over random Hermitian A.
rng = np.random.default_rng(3)
for d in (2, 3, 5, 7):
    M = povm.mub_povm(d)
    ratios = [opalg.trace_norm(a) / povm.measured_trace_norm(M, a)
              for a in (opalg.random_hermitian(d, rng) for _ in range(200))]
    print(f"d={d}: max ratio {max(ratios):.4f} <= {d + 1}")

a = np.diag([0.5, -0.5])
print("sigma_z / 2:", opalg.trace_norm(a), 3 * povm.measured_trace_norm(povm.mub_povm(2), a))

# %% Privacy amplification against 10 qubits, 5 output bits, eps = 2^-10.
out = plan(PlannerParams(n=2**20, m=5, eps=2.0**-10, d=10, alpha=0.5, beta=0.25))
print({k: out["hashing"][k] for k in ("h_min_required", "t_without_log_n", "satisfied")})
print("local extractor:", out["local_extractor"])
