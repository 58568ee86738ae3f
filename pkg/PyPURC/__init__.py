from PyPURC.network import Network, Link, load_network, unit_demand
from PyPURC.perturbation import PerturbationSpec
from PyPURC.link_cost import LinkCostFunction
from PyPURC.purc import PurcOptions, PurcProblem, PurcSolution
from PyPURC.equilibrium import EquilibriumOptions, EquilibriumProblem, EquilibriumSolution, TravelerType
from PyPURC.factory import NetworkFactory
from PyPURC.scenario import Scenario, load_scenario


__all__ = [
    'Network',
    'Link',
    'load_network',
    'unit_demand',
    'PerturbationSpec',
    'LinkCostFunction',
    'PurcOptions',
    'PurcProblem',
    'PurcSolution',
    'EquilibriumOptions',
    'EquilibriumProblem',
    'EquilibriumSolution',
    'TravelerType',
    'NetworkFactory',
    'Scenario',
    'load_scenario',
]
