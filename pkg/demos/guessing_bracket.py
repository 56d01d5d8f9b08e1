"""How well can the label of a quantum ensemble be guessed?

Walks through the trine ensemble, a random ensemble and a two-state
ensemble, showing the sound bracket ``p_lo <= p_guess <= p_hi``.
"""

# %%
import numpy as np

from qbsm import opalg, povm
from qbsm.cqstate import CqState, random_cq_state

# %% Trine states: three real qubit states 120 degrees apart.
angles = 2 * np.pi * np.arange(3) / 3
trine = np.stack([opalg.projector(np.array([np.cos(a / 2), np.sin(a / 2)])) for a in angles])
ens = CqState.from_ensemble(np.full(3, 1 / 3), trine)
br = povm.guessing_prob_bracket(ens)
print(f"trine: PGM = {povm.success_probability(ens, povm.pgm(ens)):.6f}, "
      f"bracket = [{br.p_lo:.10f}, {br.p_hi:.10f}] (optimum 2/3)")

# %% A random ensemble of 6 labels in dimension 3.
rng = np.random.default_rng(7)
rho = random_cq_state(rng, 6, 3)
br = povm.guessing_prob_bracket(rho)
print(f"random: p_lo = {br.p_lo:.10f}, p_hi = {br.p_hi:.10f}, gap = {br.p_hi - br.p_lo:.2e}")
print(f"        H_guess >= {br.h_guess_lower:.6f} bits")

# %% Two labels: the Helstrom measurement is optimal and PGM >= Helstrom^2.
r0, r1 = opalg.random_density(2, rng), opalg.random_density(2, rng)
hel, _ = povm.helstrom(0.3, r0, 0.7, r1)
pair = CqState.from_ensemble([0.3, 0.7], np.stack([r0, r1]))
pg = povm.success_probability(pair, povm.pgm(pair))
print(f"two labels: Helstrom = {hel:.6f}, PGM = {pg:.6f}, Helstrom^2 = {hel**2:.6f}")
