#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy
from dataclasses import dataclass, field

from PyPURC.network import Network, DemandVector, unit_demand
from PyPURC.perturbation import PerturbationSpec, eval_F, grad_F


@dataclass
class PurcOptions(object):
    feasibility_tolerance: float = 1e-10
    """ Bound on |A x - q b|_inf, scaled by max(1, q) """
    stationarity_tolerance: float = 1e-8
    """ Bound on the projected first-order condition residual """
    max_iterations: int = 200
    """ Maximum number of Newton iterations """
    activity_tolerance: float = 1e-9
    """ Relative flow threshold for the active set """
    regularization: float = 1e-12
    """ Constant part of the Levenberg-Marquardt term added to the Newton matrix """
    armijo_parameter: float = 1e-4
    """ Sufficient increase constant of the line search """
    max_backtracking: int = 60
    """ Maximum number of step halvings per iteration """
    constraint_form: str = 'potential'
    """ 'potential' grounds the destination node, 'reduced' uses the rank-reduced constraints """

    def __post_init__(self):
        if self.constraint_form not in ('potential', 'reduced'):
            raise ValueError(f"constraint_form must be 'potential' or 'reduced', got {self.constraint_form!r}")


@dataclass(eq=False)
class PurcProblem(object):
    network: Network
    """ The network """
    cost: numpy.ndarray
    """ Link costs c > 0 """
    demand: DemandVector
    """ Unit demand vector b """
    perturbation: PerturbationSpec
    """ The perturbation F """
    demand_scale: float = 1.0
    """ Demand q, the flows satisfy A x = q b """
    options: PurcOptions = field(default_factory=PurcOptions)
    """ Solver options """

    def __post_init__(self):
        self.cost = numpy.asarray(self.cost, dtype=float)

        if self.cost.shape != (self.network.n_links,):
            raise ValueError(f"Cost vector has shape {self.cost.shape}, expected ({self.network.n_links},)")

        if numpy.any(~numpy.isfinite(self.cost)) or numpy.any(self.cost <= 0):
            raise ValueError("Link costs must be finite and strictly positive")

        if self.demand_scale <= 0:
            raise ValueError(f"Demand scale must be strictly positive, got {self.demand_scale}")

        if self.perturbation.scale.size != self.network.n_links:
            raise ValueError(f"Perturbation has {self.perturbation.scale.size} scales, network has {self.network.n_links} links")

    @classmethod
    def from_od(cls, network: Network, cost, origin, destination, perturbation: PerturbationSpec, **kwargs) -> 'PurcProblem':
        return cls(
            network=network,
            cost=cost,
            demand=unit_demand(network, origin, destination),
            perturbation=perturbation,
            **kwargs
        )

    @property
    def rhs(self) -> numpy.ndarray:
        return self.demand_scale * self.demand.vector

    def objective(self, x: numpy.ndarray) -> float:
        return float(self.cost @ x + eval_F(self.perturbation, x))

    def solve(self, initial_potentials: numpy.ndarray = None) -> 'PurcSolution':
        from PyPURC.fundamentals import solve_purc

        return solve_purc(self, initial_potentials=initial_potentials)


@dataclass(eq=False)
class PurcSolution(object):
    problem: PurcProblem
    """ The solved problem """
    flows: numpy.ndarray
    """ Optimal link flows x* """
    potentials: numpy.ndarray
    """ Node potentials eta*, zero at the destination, NaN where the destination is unreachable """
    active: numpy.ndarray
    """ Links with flow above the activity threshold """
    objective: float
    """ c.x* + F(x*) """
    feasibility_residual: float
    """ |A x* - q b|_inf """
    stationarity_residual: float
    """ Projected first-order condition residual """
    kkt_residual: float
    """ |B*(c + grad F(x*) + A^T eta*)|_inf """
    iterations: int
    """ Newton iterations """
    converged: bool
    """ True when both tolerances were met """

    @property
    def network(self) -> Network:
        return self.problem.network

    @property
    def cost(self) -> numpy.ndarray:
        return self.problem.cost

    @property
    def perturbation(self) -> PerturbationSpec:
        return self.problem.perturbation

    @property
    def activity_threshold(self) -> float:
        return self.problem.options.activity_tolerance * max(1.0, float(numpy.abs(self.flows).max(initial=0.0)))

    def to_dict(self) -> dict:
        """
        Serializable form carrying everything needed to rebuild the solution.
        """
        problem = self.problem
        return dict(
            network=problem.network.to_dict(),
            origin=problem.demand.origin,
            destination=problem.demand.destination,
            demand_scale=problem.demand_scale,
            cost=problem.cost.tolist(),
            perturbation=problem.perturbation.to_dict(),
            link_ids=problem.network.link_ids,
            node_ids=list(problem.network.nodes),
            flows=self.flows.tolist(),
            potentials=[None if numpy.isnan(value) else float(value) for value in self.potentials],
            active=self.active.tolist(),
            objective=self.objective,
            feasibility_residual=self.feasibility_residual,
            stationarity_residual=self.stationarity_residual,
            kkt_residual=self.kkt_residual,
            iterations=self.iterations,
            converged=self.converged,
        )

    @classmethod
    def from_dict(cls, data: dict, options: PurcOptions = None) -> 'PurcSolution':
        network = Network.from_dict(data['network'])

        perturbation = PerturbationSpec.from_config(data['perturbation'], network)

        problem = PurcProblem.from_od(
            network=network,
            cost=data['cost'],
            origin=data['origin'],
            destination=data['destination'],
            perturbation=perturbation,
            demand_scale=data['demand_scale'],
            options=options or PurcOptions()
        )

        potentials = numpy.asarray([numpy.nan if value is None else value for value in data['potentials']], dtype=float)

        return cls(
            problem=problem,
            flows=numpy.asarray(data['flows'], dtype=float),
            potentials=potentials,
            active=numpy.asarray(data['active'], dtype=bool),
            objective=data['objective'],
            feasibility_residual=data['feasibility_residual'],
            stationarity_residual=data['stationarity_residual'],
            kkt_residual=data['kkt_residual'],
            iterations=data['iterations'],
            converged=data['converged'],
        )


def value_function(problem: PurcProblem, solution: PurcSolution) -> float:
    """
    Value function W(-c) = -(c.x* + F(x*)). Its gradient with respect to -c is x*.

    :param      problem:   The problem
    :type       problem:   PurcProblem
    :param      solution:  Its solution
    :type       solution:  PurcSolution

    :returns:   The value function.
    :rtype:     float
    """
    return -problem.objective(solution.flows)


def projected_foc_residual(solution: PurcSolution) -> float:
    """
    Infinity norm of P*(c + grad F(x*)), with P* the projection onto the flow-conserving
    directions supported on the active links.

    :param      solution:  The solution
    :type       solution:  PurcSolution

    :returns:   The residual.
    :rtype:     float
    """
    from PyPURC.sensitivity import project

    gradient = solution.cost + grad_F(solution.perturbation, solution.flows)

    projected = project(solution.network.incidence, solution.active, gradient)

    return float(numpy.abs(projected).max(initial=0.0))

# -
