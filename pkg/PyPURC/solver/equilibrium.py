#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy
from contextlib import nullcontext
from dataclasses import dataclass
from concurrent.futures import ThreadPoolExecutor

from PyPURC.solver.base_solver import BaseSolver
from PyPURC.fundamentals import solve_purc
from PyPURC.link_cost import bpr_eval, bpr_inverse
from PyPURC.equilibrium import EquilibriumProblem, EquilibriumSolution, aggregate_flows


@dataclass
class Iterate(object):
    costs: numpy.ndarray
    solutions: list
    flows: numpy.ndarray
    residual: float
    update: numpy.ndarray
    """ zeta(x*(c)) - c """


class EquilibriumSolver(BaseSolver):
    """
    Fixed-point solver of the stochastic traffic equilibrium in link costs,

        zeta^-1(c*) = sum_w q^w x^w*(c*),

    by damped cost iterations c <- c + gamma (zeta(x*(c)) - c) with Anderson acceleration.
    The damping is halved whenever neither the accelerated nor the damped step reduces
    the fixed-point residual.
    """

    def __init__(self, problem: EquilibriumProblem):
        self.problem = problem
        self.options = problem.options
        self.cost_function = problem.cost_function
        self.free_flow_time = problem.cost_function.free_flow_time
        self.potentials = [None] * len(problem.types)
        self.executor = None

    def project(self, costs: numpy.ndarray, zero_flow: numpy.ndarray) -> numpy.ndarray:
        """
        Keeps costs at or above free flow. Links without flow, and links within rounding of
        free flow, are set to free flow exactly.
        """
        costs = numpy.maximum(costs, self.free_flow_time)
        snap = zero_flow | (costs - self.free_flow_time <= 1e-14 * self.free_flow_time)
        costs[snap] = self.free_flow_time[snap]
        return costs

    def solve_type(self, index: int, costs: numpy.ndarray):
        traveler_type = self.problem.types[index]
        problem = self.problem.purc_problem(traveler_type, costs)
        return solve_purc(problem, initial_potentials=self.potentials[index])

    def evaluate(self, costs: numpy.ndarray) -> Iterate:
        indices = range(len(self.problem.types))

        if self.executor is None:
            solutions = [self.solve_type(index, costs) for index in indices]
        else:
            solutions = list(self.executor.map(self.solve_type, indices, [costs] * len(indices)))

        flows = aggregate_flows([solution.flows for solution in solutions], self.problem.demands)
        inverse, _ = bpr_inverse(self.cost_function, costs)

        return Iterate(
            costs=costs,
            solutions=solutions,
            flows=flows,
            residual=float(numpy.abs(inverse - flows).max()),
            update=bpr_eval(self.cost_function, flows) - costs
        )

    def anderson_candidate(self, history: list, damping: float) -> numpy.ndarray:
        costs = numpy.column_stack([iterate.costs for iterate in history])
        updates = numpy.column_stack([iterate.update for iterate in history])

        delta_costs = numpy.diff(costs, axis=1)
        delta_updates = numpy.diff(updates, axis=1)

        current = history[-1]
        weights, *_ = numpy.linalg.lstsq(delta_updates, current.update, rcond=None)

        return current.costs + damping * current.update - (delta_costs + damping * delta_updates) @ weights

    def accept(self, iterate: Iterate) -> None:
        self.potentials = [solution.potentials for solution in iterate.solutions]

    def solve(self, initial_costs: numpy.ndarray = None) -> EquilibriumSolution:
        options = self.options

        if initial_costs is None:
            initial_costs = self.free_flow_time.copy()

        initial_costs = numpy.asarray(initial_costs, dtype=float)
        if initial_costs.shape != self.free_flow_time.shape:
            raise ValueError(f"Initial costs have shape {initial_costs.shape}, expected {self.free_flow_time.shape}")

        use_threads = options.threads is None or options.threads > 1

        with ThreadPoolExecutor(max_workers=options.threads) if use_threads else nullcontext() as executor:
            self.executor = executor if use_threads else None
            try:
                return self._iterate(initial_costs)
            finally:
                self.executor = None

    def _iterate(self, initial_costs: numpy.ndarray) -> EquilibriumSolution:
        options = self.options

        current = self.evaluate(self.project(initial_costs.copy(), numpy.zeros(initial_costs.size, dtype=bool)))
        self.accept(current)

        history = [current]
        damping = options.damping
        converged = current.residual <= options.tolerance

        iteration = 0
        while not converged and iteration < options.max_iterations:
            iteration += 1
            zero_flow = current.flows == 0
            no_snap = numpy.zeros_like(zero_flow)
            damped = current.costs + damping * current.update

            candidates = []
            if options.anderson_depth > 0 and len(history) >= 2:
                candidates.append(('anderson', self.anderson_candidate(history, damping), zero_flow))
            candidates.append(('damped', damped, zero_flow))
            if numpy.any(zero_flow):
                candidates.append(('damped', damped, no_snap))

            accepted = None
            for kind, candidate, snap in candidates:
                trial = self.evaluate(self.project(candidate, snap))
                if trial.residual < current.residual:
                    accepted = trial
                    break

            if accepted is None:
                damping *= 0.5
                history = [current]
                self.logger.debug(f"iteration {iteration}: no decrease, damping reduced to {damping:.2e}")

                if damping >= options.minimum_damping:
                    continue

                damping = options.minimum_damping
                accepted = trial
                kind = 'forced'
            elif kind == 'damped':
                damping = min(options.damping, 2 * damping)

            current = accepted
            self.accept(current)
            history = (history + [current])[-(options.anderson_depth + 1):]

            converged = current.residual <= options.tolerance

            self.logger.debug(f"iteration {iteration}: {kind} step, residual {current.residual:.3e}, damping {damping:.2e}")

        if converged:
            self.logger.info(f"Equilibrium converged in {iteration} iterations, residual {current.residual:.2e}")
        else:
            self.logger.warning(f"Equilibrium did not converge in {iteration} iterations, residual {current.residual:.2e}")

        return EquilibriumSolution(
            problem=self.problem,
            costs=current.costs,
            type_solutions=tuple(current.solutions),
            flows=current.flows,
            residual=current.residual,
            iterations=iteration,
            converged=converged
        )

# -
