#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy
import scipy.linalg
from scipy import sparse
from scipy.sparse.linalg import spsolve

from PyPURC.solver.base_solver import BaseSolver, get_shortest_distances
from PyPURC.network import reduce_constraints, relevant_links
from PyPURC.perturbation import PerturbationSpec, inv_grad, hess_diag_F, grad_F, conjugate
from PyPURC.purc import PurcProblem, PurcSolution, projected_foc_residual


class PurcSolver(BaseSolver):
    """
    Dual semismooth Newton solver of the perturbed utility route choice program

        min c.x + F(x)  s.t.  A x = q b, x >= 0.

    Flows are parametrised by the node potentials, x_ij = (F'_ij)^-1(eta_i - eta_j - c_ij),
    and the potentials are driven to satisfy flow conservation.
    """

    def __init__(self, problem: PurcProblem):
        self.problem = problem
        self.options = problem.options

        network = problem.network
        demand = problem.demand

        self.link_mask = relevant_links(network, demand.origin, demand.destination)

        if not numpy.any(self.link_mask):
            raise ValueError(
                f"Destination {demand.destination} is unreachable from origin {demand.origin} in network {network.name!r}"
            )

        node_mask = numpy.zeros(network.n_nodes, dtype=bool)
        node_mask[network.tails[self.link_mask]] = True
        node_mask[network.heads[self.link_mask]] = True

        self.node_indices = numpy.flatnonzero(node_mask)
        self.link_indices = numpy.flatnonzero(self.link_mask)

        local = numpy.full(network.n_nodes, -1)
        local[self.node_indices] = numpy.arange(self.node_indices.size)

        self.tails = local[network.tails[self.link_indices]]
        self.heads = local[network.heads[self.link_indices]]
        self.destination = local[network.get_node_index(demand.destination)]

        self.incidence = network.incidence[self.node_indices][:, self.link_indices].tocsr()
        self.rhs = problem.rhs[self.node_indices]
        self.cost = problem.cost[self.link_indices]
        self.perturbation = problem.perturbation.restrict(self.link_mask)

        self.grounded = numpy.flatnonzero(numpy.arange(self.node_indices.size) != self.destination)

        self.reduced = None
        if self.options.constraint_form == 'reduced':
            self.reduced = reduce_constraints(self.incidence, self.rhs)

    def initial_potentials(self) -> numpy.ndarray:
        """
        Shortest distances to the destination, so that no link starts with positive flow
        and the shortest-path links sit on the kink.
        """
        return get_shortest_distances(
            n_nodes=self.node_indices.size,
            tails=self.tails,
            heads=self.heads,
            weights=self.cost,
            sources=numpy.asarray([self.destination])
        )

    def link_argument(self, potentials: numpy.ndarray) -> numpy.ndarray:
        return potentials[self.tails] - potentials[self.heads] - self.cost

    def dual_objective(self, argument: numpy.ndarray, potentials: numpy.ndarray) -> float:
        return -float(numpy.sum(conjugate(self.perturbation, argument))) - float(self.rhs @ potentials)

    def evaluate(self, potentials: numpy.ndarray) -> tuple:
        argument = self.link_argument(potentials)
        flows = inv_grad(self.perturbation, argument)
        gradient = self.incidence @ flows - self.rhs
        return argument, flows, gradient

    def newton_direction(self, argument: numpy.ndarray, flows: numpy.ndarray, gradient: numpy.ndarray, damping: float) -> numpy.ndarray:
        """
        Solves (K D K^T + mu I) d = K x - k, D being the generalized derivative of the
        flows with respect to their argument: 1/F'' on the nonnegative side of the kink
        and 0 on the other side.
        """
        weight = numpy.where(argument >= 0, 1 / hess_diag_F(self.perturbation, flows), 0.0)

        if self.reduced is None:
            K = self.incidence[self.grounded]
            matrix = K @ sparse.diags(weight) @ K.T + damping * sparse.identity(self.grounded.size)
            step = spsolve(matrix.tocsc(), gradient[self.grounded])

            direction = numpy.zeros(self.node_indices.size)
            direction[self.grounded] = numpy.atleast_1d(step)
            return direction

        K = self.reduced.matrix
        matrix = (K * weight) @ K.T + damping * numpy.eye(self.reduced.rank)
        step = scipy.linalg.solve(matrix, self.reduced.basis.T @ gradient, assume_a='pos')
        return self.reduced.basis @ step

    def solve(self, initial_potentials: numpy.ndarray = None) -> PurcSolution:
        options = self.options
        problem = self.problem
        tolerance = options.feasibility_tolerance * max(1.0, problem.demand_scale)

        potentials = self.initial_potentials()
        if initial_potentials is not None:
            warm = numpy.asarray(initial_potentials, dtype=float)[self.node_indices]
            if numpy.all(numpy.isfinite(warm)):
                potentials = warm - warm[self.destination]

        argument, flows, gradient = self.evaluate(potentials)
        norm = numpy.abs(gradient).max()

        iteration = 0
        for iteration in range(1, options.max_iterations + 1):
            if norm <= tolerance:
                iteration -= 1
                break

            damping = options.regularization + min(1.0, norm)
            direction = self.newton_direction(argument, flows, gradient, damping)

            if not numpy.all(numpy.isfinite(direction)):
                if self.reduced is not None:
                    self.logger.warning("Newton system could not be solved, stopping")
                    break
                self.logger.info("Singular grounded Newton system, switching to reduced constraints")
                self.reduced = reduce_constraints(self.incidence, self.rhs)
                continue

            merit = self.dual_objective(argument, potentials)
            slope = float(gradient @ direction)

            def trial(step: float) -> tuple:
                state = potentials + step * direction
                trial_argument, trial_flows, trial_gradient = self.evaluate(state)
                trial_merit = self.dual_objective(trial_argument, state)
                return trial_merit, numpy.abs(trial_gradient).max(), (state, trial_argument, trial_flows, trial_gradient)

            step, state = self.backtrack(
                evaluate=trial,
                current_merit=merit,
                current_norm=norm,
                slope=slope,
                armijo_parameter=options.armijo_parameter,
                max_backtracking=options.max_backtracking
            )

            if step is None:
                self.logger.warning(f"Line search failed at iteration {iteration}, residual {norm:.3e}")
                break

            potentials, argument, flows, gradient = state
            norm = numpy.abs(gradient).max()

            self.logger.debug(f"iteration {iteration}: residual {norm:.3e}, step {step:.3e}")

        potentials = potentials - potentials[self.destination]

        return self.build_solution(potentials=potentials, flows=flows, iterations=iteration)

    def extend_potentials(self, local_potentials: numpy.ndarray, local_flows: numpy.ndarray) -> numpy.ndarray:
        """
        Node potentials on the whole network. Nodes carrying flow keep their Newton
        potentials; any other node gets the cheapest cost-plus-potential over paths to a
        node carrying flow. Nodes that cannot reach one get NaN.
        """
        network = self.problem.network
        positive = local_flows > 0

        throughput = numpy.zeros(self.node_indices.size, dtype=bool)
        throughput[self.tails[positive]] = True
        throughput[self.heads[positive]] = True
        throughput[self.destination] = True

        sources = self.node_indices[throughput]

        potentials = get_shortest_distances(
            n_nodes=network.n_nodes,
            tails=network.tails,
            heads=network.heads,
            weights=self.problem.cost,
            sources=sources,
            source_offsets=local_potentials[throughput]
        )

        potentials[sources] = local_potentials[throughput]
        potentials[~numpy.isfinite(potentials)] = numpy.nan

        return potentials

    def build_solution(self, potentials: numpy.ndarray, flows: numpy.ndarray, iterations: int) -> PurcSolution:
        problem = self.problem
        network = problem.network
        options = self.options

        full_flows = numpy.zeros(network.n_links)
        full_flows[self.link_indices] = flows

        full_potentials = self.extend_potentials(potentials, flows)

        threshold = options.activity_tolerance * max(1.0, float(full_flows.max(initial=0.0)))
        active = full_flows > threshold

        feasibility = float(numpy.abs(network.incidence @ full_flows - problem.rhs).max())

        with numpy.errstate(invalid='ignore'):
            reduced_cost = (
                problem.cost + grad_F(problem.perturbation, full_flows)
                + full_potentials[network.heads] - full_potentials[network.tails]
            )
        kkt = float(numpy.abs(reduced_cost[active]).max(initial=0.0))

        solution = PurcSolution(
            problem=problem,
            flows=full_flows,
            potentials=full_potentials,
            active=active,
            objective=problem.objective(full_flows),
            feasibility_residual=feasibility,
            stationarity_residual=numpy.nan,
            kkt_residual=kkt,
            iterations=iterations,
            converged=False
        )

        solution.stationarity_residual = projected_foc_residual(solution)

        solution.converged = (
            feasibility <= options.feasibility_tolerance * max(1.0, problem.demand_scale)
            and solution.stationarity_residual <= options.stationarity_tolerance
        )

        if solution.converged:
            self.logger.info(f"PURC {problem.demand.origin}->{problem.demand.destination} converged in {iterations} iterations, feasibility {feasibility:.2e}")
        else:
            self.logger.warning(
                f"PURC {problem.demand.origin}->{problem.demand.destination} did not converge: "
                f"feasibility {feasibility:.2e}, stationarity {solution.stationarity_residual:.2e}, iterations {iterations}"
            )

        return solution

# -
