"""
Route choice Jacobian
=====================
"""


# %%
# Imports
# ~~~~~~~
import numpy
import pandas

from PyPURC import load_network, PurcProblem, PerturbationSpec
from PyPURC.perturbation import get_scale
from PyPURC.sensitivity import purc_jacobian
from PyPURC.analysis import substitution_report

# %%
# Solving the route choice problem
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
network = load_network('complementarity_example')
perturbation = PerturbationSpec(family='quadratic', scale=get_scale({'constant': 0.5}, network))
problem = PurcProblem.from_od(network, numpy.ones(network.n_links), '1', '3', perturbation, demand_scale=4.0)

solution = problem.solve()

# %%
# Flow Jacobian with respect to the link costs
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
jacobian = purc_jacobian(solution)

frame = pandas.DataFrame(jacobian.matrix, index=jacobian.link_ids, columns=jacobian.link_ids)
print(frame.round(4))

# %%
# Links 5-4 and 2-3 are complements: a dearer 2-3 also lowers the flow on 5-4
report = substitution_report(jacobian)

for pair in report.complements:
    print(f"{pair.flow_link} / {pair.cost_link}: {pair.value:+.4f}")

# -
