"""
How good are the approximations?
================================

The working Hamiltonian comes from two steps: eliminating the far-detuned
level ``|c>`` and dropping fast terms under a strong drive.  Both are
checked here against the less approximate models.
"""

# %%
import math
import warnings

from lambda_ecs import CoherentPair, HamiltonianSpec, SystemParams, adiabatic_elimination_check
from lambda_ecs import fidelity, propagate, rotating_frame
from lambda_ecs.exceptions import RegimeWarning
from lambda_ecs.fock import product_state

initial = CoherentPair(1.0, 1.5)

# %% [markdown]
# Strong driving: the effective two-level model, viewed in the frame of the
# drive, approaches the reduced model as ``Omega_eff / g_eff`` grows.

# %%
rwa = HamiltonianSpec.from_rates("rwa", 1.0, 18)
psi0 = product_state("g", initial, rwa.hilbert)
reference = propagate(rwa, psi0, math.pi)
for ratio in (10, 30, 100):
    eff = HamiltonianSpec.from_rates("effective", 1.0, 18, omega_eff=ratio)
    psi = rotating_frame(propagate(eff, psi0, math.pi), ratio, math.pi)
    print(f"Omega_eff/g_eff={ratio:4d}: 1-F = {1 - fidelity(reference, psi):.2e}")

# %% [markdown]
# Large detuning: the population of ``|c>`` stays small and falls
# quadratically with the coupling-to-detuning ratios.  The evolution time
# is shortened here to keep the demo quick.

# %%
for ratio in (0.1, 0.05, 0.025):
    params = SystemParams(
        g1=ratio, g2=ratio, omega1_rabi=2 * ratio, omega2_rabi=2 * ratio, delta=1.0, delta_prime=2.0
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        rep = adiabatic_elimination_check(params, None, 200.0, initial=initial)
    print(f"ratio {ratio}: max |c> population {rep.max_c_population:.4f}")
