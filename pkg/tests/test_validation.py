#!/usr/bin/env python
# -*- coding: utf-8 -*-

import pytest
import numpy

from PyPURC.network import load_network
from PyPURC.perturbation import PerturbationSpec, get_scale
from PyPURC.purc import PurcProblem
from PyPURC.scenario import load_scenario
from PyPURC.sensitivity import purc_jacobian
from PyPURC.analysis import (
    ParameterSpec,
    equilibrium_cost_jacobian,
    equilibrium_flow_jacobian,
    estimate_shifted_solution,
    shift_vector,
    independent_uncertainty,
    propagate_uncertainty,
    confidence_intervals
)
from PyPURC.tools.utils import get_perturbation_sweep

# Published reference values of the two traveler type network, links ordered
# 1-2, 1-3, 2-3, 2-4, 2-5, 3-2, 3-4, 3-5
reference_flows = [27.127, 7.873, 11.446, 9.233, 6.448, 0.000, 5.767, 13.552]

reference_shifts = {
    'kappa': dict(exact=[27.631, 7.370, 11.790, 9.324, 6.517, 0.000, 5.676, 13.483],
                  estimate=[27.662, 7.339, 11.813, 9.329, 6.520, 0.000, 5.671, 13.480]),
    't0': dict(exact=[25.633, 9.367, 10.405, 8.973, 6.255, 0.000, 6.027, 13.744],
               estimate=[25.661, 9.339, 10.440, 8.971, 6.250, 0.000, 6.030, 13.750]),
}

reference_capacity_jacobian = numpy.asarray([
    [0.356, -0.004, 0.083, 0.046, 0.010, 0.000, -0.006, -0.128],
    [-0.356, 0.004, -0.083, -0.046, -0.010, 0.000, 0.006, 0.128],
    [0.245, -0.003, 0.164, -0.096, -0.022, 0.000, 0.012, 0.286],
    [0.064, -0.001, -0.045, 0.150, -0.002, 0.000, -0.018, 0.030],
    [0.048, -0.001, -0.036, -0.008, 0.034, 0.000, 0.001, -0.444],
    [0.000, 0.000, 0.000, 0.000, 0.000, 0.000, 0.000, 0.000],
    [-0.064, 0.001, 0.045, -0.150, 0.002, 0.000, 0.018, -0.030],
    [-0.048, 0.001, 0.036, 0.008, -0.034, 0.000, -0.001, 0.444],
])

reference_time_jacobian = numpy.asarray([
    [-9.775, 8.891, -6.405, -1.626, -1.204, 0.000, 1.597, 1.317],
    [9.775, -8.891, 6.405, 1.626, 1.204, 0.000, -1.597, -1.317],
    [-6.706, 6.099, -12.731, 3.406, 2.700, 0.000, -3.345, -2.954],
    [-1.751, 1.593, 3.503, -5.319, 0.283, 0.000, 5.224, -0.309],
    [-1.318, 1.198, 2.823, 0.287, -4.186, 0.000, -0.282, 4.581],
    [0.000, 0.000, 0.000, 0.000, 0.000, 0.000, 0.000, 0.000],
    [1.751, -1.593, -3.503, 5.319, -0.283, 0.000, -5.224, 0.309],
    [1.318, -1.198, -2.823, -0.287, 4.186, 0.000, 0.282, -4.581],
])

reference_std = [3.287, 3.287, 2.692, 0.922, 2.057, 0.000, 0.922, 2.06]

reference_interval = dict(
    lower=[21.721, 2.467, 7.017, 7.717, 3.065, 0.000, 4.251, 10.169],
    upper=[32.534, 13.280, 15.875, 10.749, 9.831, 0.000, 7.283, 16.936]
)


@pytest.fixture(scope='module')
def two_od_equilibrium():
    problem = load_scenario('two_od_example').get_equilibrium_problem()
    problem.options.tolerance = 1e-10

    return problem.solve()


def test_complementarity_jacobian():
    """ Route choice Jacobian of the seven-link network with quadratic perturbation and demand 4 """
    network = load_network('complementarity_example')
    perturbation = PerturbationSpec(family='quadratic', scale=get_scale({'constant': 0.5}, network))
    solution = PurcProblem.from_od(network, numpy.ones(network.n_links), '1', '3', perturbation, demand_scale=4.0).solve()

    jacobian = purc_jacobian(solution).matrix
    index = network.link_index

    assert numpy.isclose(jacobian[index['5-4'], index['2-3']], -1 / 24, atol=1e-6)
    assert numpy.isclose(jacobian[index['2-3'], index['5-4']], -1 / 24, atol=1e-6)
    assert numpy.isclose(jacobian[index['4-3'], index['4-3']], -1 / 2, atol=1e-6)
    assert numpy.isclose(jacobian[index['1-2'], index['1-5']], 1 / 3, atol=1e-6)


def test_equilibrium_flows(two_od_equilibrium):
    eq = two_od_equilibrium

    assert eq.network.link_ids == ['1-2', '1-3', '2-3', '2-4', '2-5', '3-2', '3-4', '3-5']
    assert numpy.allclose(eq.flows, reference_flows, atol=1e-2)


@pytest.mark.parametrize('parameter', ['kappa', 't0'])
def test_shifted_equilibrium(parameter, two_od_equilibrium):
    eq = two_od_equilibrium
    problem = eq.problem
    spec = ParameterSpec(parameter)

    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, spec))
    shift = shift_vector([f'{parameter}:1-2:+5%'], spec, problem.cost_function, eq.network)

    estimate = estimate_shifted_solution(eq, jacobians, shift)

    values = problem.cost_function.parameter(parameter) + shift
    exact = problem.with_cost_function(problem.cost_function.replace(parameter, values)).solve(initial_costs=eq.costs)

    assert numpy.allclose(exact.flows, reference_shifts[parameter]['exact'], atol=1e-2)
    assert numpy.allclose(estimate.flows, reference_shifts[parameter]['estimate'], atol=1e-2)


@pytest.mark.parametrize('parameter', ['kappa', 't0'])
def test_equilibrium_jacobian(parameter, two_od_equilibrium):
    eq = two_od_equilibrium
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, ParameterSpec(parameter)))

    if parameter == 'kappa':
        numpy.testing.assert_allclose(jacobians.flow_jacobian, reference_capacity_jacobian, atol=2e-3)
    else:
        numpy.testing.assert_allclose(jacobians.flow_jacobian, reference_time_jacobian, rtol=5e-3, atol=2e-2)


def test_capacity_uncertainty(two_od_equilibrium):
    eq = two_od_equilibrium
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, ParameterSpec('kappa')))

    input = independent_uncertainty(eq.problem.cost_function.capacity, cv=0.3, level=0.9)
    result = propagate_uncertainty(jacobians, input)

    assert numpy.allclose(result.std, reference_std, atol=1e-2)
    assert numpy.allclose(result.lower, reference_interval['lower'], atol=3e-2)
    assert numpy.allclose(result.upper, reference_interval['upper'], atol=3e-2)


def test_published_interval():
    lower, upper = confidence_intervals(27.127, 3.287, level=0.90)

    assert numpy.isclose(lower, 21.721, atol=1e-2)
    assert numpy.isclose(upper, 32.534, atol=1e-2)


def test_perturbation_sweep():
    problem = load_scenario('two_od_example').get_equilibrium_problem()

    frame = get_perturbation_sweep(problem, ['entropic:one', 'quadratic:one'], reference_flows=reference_flows)

    assert list(frame.columns) == ['entropic:one', 'quadratic:one']
    assert frame.shape == (9, 2)
    assert frame.loc['max deviation', 'entropic:one'] < 1e-2

    quadratic = frame['quadratic:one']
    assert numpy.isclose(quadratic['1-2'] + quadratic['1-3'], 35, atol=1e-6)

# -
