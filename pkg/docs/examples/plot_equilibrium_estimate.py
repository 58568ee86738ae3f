"""
Estimated vs exact equilibrium flows
====================================
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
    estimate_shifted_solution,
    shift_vector
)

# %%
# Solving the equilibrium of the two traveler type network
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
problem = load_scenario('two_od_example').get_equilibrium_problem()
network = problem.network
eq = problem.solve()

spec = ParameterSpec('kappa')
jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, spec))

# %%
# Shifting the capacity of link 1-2
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
shift_list = numpy.linspace(-30, 30, 13)
estimated, exact = [], []

for amount in shift_list:
    shift = shift_vector([f'kappa:1-2:{amount:+}%'], spec, problem.cost_function, network)
    estimated.append(estimate_shifted_solution(eq, jacobians, shift).flows)

    capacity = problem.cost_function.parameter('kappa') + shift
    shifted = problem.with_cost_function(problem.cost_function.replace('kappa', capacity))
    exact.append(shifted.solve(initial_costs=eq.costs).flows)

estimated, exact = numpy.asarray(estimated), numpy.asarray(exact)

# %%
# Preparing the figure
figure = SceneList(title='Flows after a capacity shift on link 1-2')

ax = figure.append_ax(
    show_legend=True,
    x_label='Capacity shift [%]',
    y_label='Link flow'
)

for link_id in ['1-2', '2-3', '3-5']:
    index = network.link_index[link_id]
    ax.add_line(x=shift_list, y=exact[:, index], label=f'{link_id} exact', line_width=2)
    ax.add_scatter(x=shift_list, y=estimated[:, index], label=f'{link_id} estimate', marker_size=20)

figure.show()

# -
