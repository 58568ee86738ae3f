"""
Flow uncertainty vs capacity uncertainty
========================================
"""


# %%
# Imports
# ~~~~~~~
import numpy
from MPSPlots.render2D import SceneList

from PyPURC import load_scenario
from PyPURC.analysis import (
    ParameterSpec,
    equilibrium_cost_jacobian,
    equilibrium_flow_jacobian,
    independent_uncertainty,
    propagate_uncertainty
)

# %%
# Equilibrium and its capacity Jacobian
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
problem = load_scenario('two_od_example').get_equilibrium_problem()
network = problem.network
eq = problem.solve()

jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, ParameterSpec('kappa')))

# %%
# Propagating independent capacity uncertainty
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
cv_list = numpy.linspace(0.05, 0.5, 10)
std = []

for cv in cv_list:
    input = independent_uncertainty(problem.cost_function.capacity, cv=cv, level=0.90)
    std.append(propagate_uncertainty(jacobians, input).std)

std = numpy.asarray(std)

result = propagate_uncertainty(jacobians, independent_uncertainty(problem.cost_function.capacity, cv=0.3))
print(result.to_frame(network.link_ids).round(3))

# %%
# Preparing the figure
figure = SceneList(title='Standard deviation of the equilibrium flows')

ax = figure.append_ax(
    show_legend=True,
    x_label='Coefficient of variation of the capacities',
    y_label='Flow standard deviation'
)

for link_id in ['1-2', '2-3', '2-5', '3-5']:
    ax.add_line(x=cv_list, y=std[:, network.link_index[link_id]], label=link_id, line_width=2)

figure.show()

# -
