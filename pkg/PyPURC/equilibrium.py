#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy
from dataclasses import dataclass, field

from PyPURC.network import Network, unit_demand, validate_reachable
from PyPURC.perturbation import PerturbationSpec, eval_F
from PyPURC.link_cost import LinkCostFunction, bpr_eval, bpr_integral
from PyPURC.purc import PurcOptions, PurcProblem


@dataclass(frozen=True)
class TravelerType(object):
    origin: str
    """ Origin node """
    destination: str
    """ Destination node """
    demand: float = 1.0
    """ Number of travelers q^w """

    def __post_init__(self):
        object.__setattr__(self, 'origin', str(self.origin))
        object.__setattr__(self, 'destination', str(self.destination))

        if not self.demand > 0:
            raise ValueError(f"Demand of type {self.name} must be strictly positive, got {self.demand}")

    @property
    def name(self) -> str:
        return f"{self.origin}->{self.destination}"


def _default_purc_options() -> PurcOptions:
    return PurcOptions(feasibility_tolerance=1e-12)


@dataclass
class EquilibriumOptions(object):
    tolerance: float = 1e-8
    """ Bound on the fixed-point residual |zeta^-1(c) - x*(c)|_inf """
    max_iterations: int = 1000
    """ Maximum number of outer iterations """
    damping: float = 0.5
    """ Initial damping of the cost update """
    minimum_damping: float = 1e-4
    """ Below this damping a step is accepted even without residual decrease """
    anderson_depth: int = 5
    """ Number of stored iterates for Anderson acceleration, 0 disables it """
    threads: int = None
    """ Worker threads for the per-type solves, None lets the executor decide """
    purc: PurcOptions = field(default_factory=_default_purc_options)
    """ Options of the per-type solves """


@dataclass(eq=False)
class EquilibriumProblem(object):
    network: Network
    """ The network """
    types: tuple
    """ Traveler types """
    perturbation: PerturbationSpec
    """ Perturbation shared by all types """
    cost_function: LinkCostFunction = None
    """ Link cost functions, BPR on the network attributes when omitted """
    options: EquilibriumOptions = field(default_factory=EquilibriumOptions)
    """ Solver options """

    def __post_init__(self):
        self.types = tuple(self.types)

        if len(self.types) == 0:
            raise ValueError("An equilibrium problem needs at least one traveler type")

        if self.cost_function is None:
            self.cost_function = LinkCostFunction.from_network(self.network)

        if self.cost_function.n_links != self.network.n_links:
            raise ValueError(f"Cost function has {self.cost_function.n_links} links, network has {self.network.n_links}")

        if self.perturbation.scale.size != self.network.n_links:
            raise ValueError(f"Perturbation has {self.perturbation.scale.size} scales, network has {self.network.n_links} links")

        for traveler_type in self.types:
            if not validate_reachable(self.network, traveler_type.origin, traveler_type.destination):
                raise ValueError(f"Destination of type {traveler_type.name} is unreachable from its origin")

    @property
    def demands(self) -> numpy.ndarray:
        return numpy.asarray([traveler_type.demand for traveler_type in self.types])

    def purc_problem(self, traveler_type: TravelerType, cost: numpy.ndarray) -> PurcProblem:
        """
        Unit-demand route choice problem of one type at the given link costs.
        """
        return PurcProblem(
            network=self.network,
            cost=cost,
            demand=unit_demand(self.network, traveler_type.origin, traveler_type.destination),
            perturbation=self.perturbation,
            demand_scale=1.0,
            options=self.options.purc
        )

    def with_cost_function(self, cost_function: LinkCostFunction) -> 'EquilibriumProblem':
        return EquilibriumProblem(
            network=self.network,
            types=self.types,
            perturbation=self.perturbation,
            cost_function=cost_function,
            options=self.options
        )

    def with_demand_factor(self, factor: float) -> 'EquilibriumProblem':
        types = [TravelerType(t.origin, t.destination, t.demand * factor) for t in self.types]
        return EquilibriumProblem(
            network=self.network,
            types=types,
            perturbation=self.perturbation,
            cost_function=self.cost_function,
            options=self.options
        )

    def solve(self, initial_costs: numpy.ndarray = None) -> 'EquilibriumSolution':
        from PyPURC.fundamentals import solve_equilibrium

        return solve_equilibrium(self, initial_costs=initial_costs)


@dataclass(eq=False)
class EquilibriumSolution(object):
    problem: EquilibriumProblem
    """ The solved problem """
    costs: numpy.ndarray
    """ Equilibrium link costs c* """
    type_solutions: tuple
    """ Unit-demand route choice solution of every type at c* """
    flows: numpy.ndarray
    """ Aggregate flows sum_w q^w x^w* """
    residual: float
    """ |zeta^-1(c*) - x*(c*)|_inf """
    iterations: int
    """ Outer iterations """
    converged: bool
    """ True when the residual met the tolerance """

    @property
    def network(self) -> Network:
        return self.problem.network

    @property
    def type_flows(self) -> numpy.ndarray:
        """ Unit-demand flows, one row per type """
        return numpy.vstack([solution.flows for solution in self.type_solutions])

    @property
    def demands(self) -> numpy.ndarray:
        return self.problem.demands

    def to_dict(self) -> dict:
        return dict(
            link_ids=self.network.link_ids,
            costs=self.costs.tolist(),
            flows=self.flows.tolist(),
            types=[
                dict(
                    origin=t.origin,
                    destination=t.destination,
                    demand=t.demand,
                    flows=solution.flows.tolist(),
                    converged=solution.converged,
                    feasibility_residual=solution.feasibility_residual,
                ) for t, solution in zip(self.problem.types, self.type_solutions)
            ],
            residual=self.residual,
            iterations=self.iterations,
            converged=self.converged,
            objective=equilibrium_objective(self.problem, self),
        )


def aggregate_flows(per_type_flows, q) -> numpy.ndarray:
    """
    Aggregate link flows sum_w q^w x^w.

    :param      per_type_flows:  Flows, one row per type
    :type       per_type_flows:  array-like
    :param      q:               Demand of each type
    :type       q:               array-like

    :returns:   The aggregate flows.
    :rtype:     numpy.ndarray
    """
    per_type_flows = numpy.atleast_2d(numpy.asarray(per_type_flows, dtype=float))
    q = numpy.atleast_1d(numpy.asarray(q, dtype=float))

    if per_type_flows.shape[0] != q.size:
        raise ValueError(f"{per_type_flows.shape[0]} flow vectors for {q.size} demands")

    return q @ per_type_flows


def equilibrium_objective(problem: EquilibriumProblem, solution: EquilibriumSolution) -> float:
    """
    Value of the convex equilibrium program: the cost integrals of the aggregate flows plus
    the demand-weighted perturbations of every type.
    """
    congestion = numpy.sum(bpr_integral(problem.cost_function, solution.flows))
    perturbation = sum(
        q * eval_F(problem.perturbation, flows)
        for q, flows in zip(problem.demands, solution.type_flows)
    )
    return float(congestion + perturbation)


def total_system_travel_time(problem: EquilibriumProblem, solution: EquilibriumSolution) -> float:
    return float(solution.flows @ bpr_eval(problem.cost_function, solution.flows))

# -
