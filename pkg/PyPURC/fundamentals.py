#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy


def solve_purc(problem, initial_potentials: numpy.ndarray = None):
    """
    Solves one perturbed utility route choice problem.

    :param      problem:             The problem to solve
    :type       problem:             PurcProblem
    :param      initial_potentials:  Node potentials to warm start from
    :type       initial_potentials:  numpy.ndarray

    :returns:   The solution.
    :rtype:     PurcSolution
    """
    from PyPURC import solver

    purc_solver = solver.PurcSolver(problem=problem)

    return purc_solver.solve(initial_potentials=initial_potentials)


def solve_equilibrium(problem, initial_costs: numpy.ndarray = None):
    """
    Solves the stochastic traffic equilibrium of all traveler types.

    :param      problem:        The problem to solve
    :type       problem:        EquilibriumProblem
    :param      initial_costs:  Link costs to start the fixed-point iteration from
    :type       initial_costs:  numpy.ndarray

    :returns:   The solution.
    :rtype:     EquilibriumSolution
    """
    from PyPURC import solver

    equilibrium_solver = solver.EquilibriumSolver(problem=problem)

    return equilibrium_solver.solve(initial_costs=initial_costs)

# -
