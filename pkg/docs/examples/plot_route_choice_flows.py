"""
Route choice flows vs link cost
===============================
"""


# %%
# Imports
# ~~~~~~~
import numpy
from MPSPlots.render2D import SceneList

from PyPURC import load_network, PurcProblem, PerturbationSpec
from PyPURC.perturbation import get_scale

# %%
# Loading the network
# ~~~~~~~~~~~~~~~~~~~
# Seven links, four travelers from node 1 to node 3 and a quadratic perturbation
network = load_network('complementarity_example')
perturbation = PerturbationSpec(family='quadratic', scale=get_scale({'constant': 0.5}, network))

# %%
# Sweeping the cost of link 2-3
# ~~~~~~~~~~~~~~~~~~~~~~~~~~~~~
link_costs = numpy.linspace(0.5, 4.0, 60)
cost = numpy.ones(network.n_links)
flows = []
potentials = None

for value in link_costs:
    cost[network.link_index['2-3']] = value
    problem = PurcProblem.from_od(network, cost, '1', '3', perturbation, demand_scale=4.0)
    solution = problem.solve(initial_potentials=potentials)
    potentials = solution.potentials
    flows.append(solution.flows)

flows = numpy.asarray(flows)

# %%
# Preparing the figure
figure = SceneList(title='Link flows vs cost of link 2-3')

ax = figure.append_ax(
    show_legend=True,
    x_label='Cost of link 2-3',
    y_label='Link flow'
)

for link_id in ['2-3', '2-4', '4-3', '5-4', '5-3']:
    ax.add_line(
        x=link_costs,
        y=flows[:, network.link_index[link_id]],
        label=link_id,
        line_width=2
    )

figure.show()

# -
