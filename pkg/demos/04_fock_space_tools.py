"""
Fock-space building blocks
==========================

Truncated coherent states, the two-mode SU(2) rotation, and the reduced
states and distances used by the numerical checks.
"""

# %%
import math

import numpy as np

from lambda_ecs import CoherentPair, coherent_vector, partial_trace, su2_disentangle_check
from lambda_ecs.fock import default_n_max, field_vector, fidelity, truncation_deficit

# %% [markdown]
# How many photons to keep: the cutoff is the smallest ``n_max`` whose
# discarded Poisson weight is below ``1e-8``.

# %%
print("n_max for (1, 1.5):", default_n_max(1.0, 1.5))
for n in (8, 12, 16):
    print(f"  weight lost from |1.5> at n_max={n}: {truncation_deficit(1.5, n):.1e}")

# %% [markdown]
# The beam-splitter-like rotation ``exp(i theta (a1^dag a2 + a1 a2^dag))``
# computed directly and from its normal-ordered factorization.

# %%
psi = field_vector(CoherentPair(1.0, 1.5), 20)
for theta in (0.3, math.pi / 4, 1.2):
    direct, factored = su2_disentangle_check(theta, psi, 20)
    print(f"theta={theta:.3f}: |direct - factored| = {np.linalg.norm(direct - factored):.1e}")

# %% [markdown]
# Overlap of coherent states and a reduced state of one mode.

# %%
vac, one = coherent_vector(0, 30), coherent_vector(1, 30)
print("|<0|1>|^2 =", round(fidelity(vac, one), 12), "vs exp(-1) =", round(math.exp(-1), 12))
two_mode = field_vector(CoherentPair(0.5, 0.2), 10)
rho1 = partial_trace(np.outer(two_mode, two_mode.conj()), (11, 11), [0])
print("purity of one mode of a product state:", round(np.trace(rho1 @ rho1).real, 10))
