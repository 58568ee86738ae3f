"""
Equilibrium flows per perturbation family
=========================================
"""


# %%
# Imports
# ~~~~~~~
from PyPURC import load_scenario
from PyPURC.tools.utils import get_perturbation_sweep

# %%
# Solving the equilibrium under several perturbation configurations
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
# The last row is the largest deviation from published flows of this network
problem = load_scenario('two_od_example').get_equilibrium_problem()

reference_flows = [27.127, 7.873, 11.446, 9.233, 6.448, 0.000, 5.767, 13.552]

frame = get_perturbation_sweep(
    problem,
    configurations=['entropic:one', 'entropic:t0', 'quadratic:one', 'quadratic:t0'],
    reference_flows=reference_flows
)

print(frame.round(3))

# -
