#!/usr/bin/env python
# -*- coding: utf-8 -*-

import pytest
import numpy

from PyPURC.network import Network, Link, load_network
from PyPURC.perturbation import PerturbationSpec, get_scale
from PyPURC.purc import PurcOptions, PurcProblem
from PyPURC.scenario import load_scenario
from PyPURC.equilibrium import TravelerType, EquilibriumOptions, EquilibriumProblem
from PyPURC.sensitivity import purc_jacobian
from PyPURC.tools.utils import get_central_difference
from PyPURC.analysis import (
    ParameterSpec,
    UncertaintyInput,
    equilibrium_cost_jacobian,
    equilibrium_flow_jacobian,
    parse_shift,
    shift_vector,
    estimate_shifted_solution,
    confidence_intervals,
    propagate_uncertainty,
    independent_uncertainty,
    substitution_report,
    aggregate_directional_sensitivity,
    sample_parameters,
    monte_carlo_uncertainty
)


parameter_list = ['t0', 'kappa']


def get_single_link_equilibrium():
    network = Network(
        nodes=['1', '2'],
        links=[Link(id='1-2', tail='1', head='2', free_flow_time=3.0, capacity=30.0)]
    )
    problem = EquilibriumProblem(
        network=network,
        types=[TravelerType('1', '2', 30.0)],
        perturbation=PerturbationSpec(family='entropic', scale=[1.0])
    )
    return problem.solve()


def get_two_od_problem(tolerance: float = 1e-8) -> EquilibriumProblem:
    problem = load_scenario('two_od_example').get_equilibrium_problem()
    problem.options.tolerance = tolerance
    problem.options.purc = PurcOptions(feasibility_tolerance=1e-14)
    return problem


def get_parallel_problem() -> EquilibriumProblem:
    links = [
        Link(id=name, tail='1', head='2', free_flow_time=t0, capacity=10.0)
        for name, t0 in zip('abc', [1.0, 1.2, 1.5])
    ]
    network = Network(nodes=['1', '2'], links=links)

    return EquilibriumProblem(
        network=network,
        types=[TravelerType('1', '2', 15.0)],
        perturbation=PerturbationSpec(family='entropic', scale=numpy.ones(3)),
        options=EquilibriumOptions(threads=1)
    )


def get_outside_option_problem() -> EquilibriumProblem:
    """
    Two congested links next to an uncongested outside option. The outside option pins the
    equilibrium cost, so the congested links run at a fixed volume to capacity ratio and their
    flows follow the capacities almost linearly.
    """
    links = [
        Link(id='a', tail='1', head='2', free_flow_time=1.0, capacity=10.0),
        Link(id='b', tail='1', head='2', free_flow_time=1.0, capacity=10.0),
        Link(id='c', tail='1', head='2', free_flow_time=2.0, capacity=1000.0),
    ]
    network = Network(nodes=['1', '2'], links=links)

    return EquilibriumProblem(
        network=network,
        types=[TravelerType('1', '2', 80.0)],
        perturbation=PerturbationSpec(family='entropic', scale=numpy.full(3, 2.0)),
        options=EquilibriumOptions(threads=1, max_iterations=5000)
    )


@pytest.fixture(scope='module')
def two_od_equilibrium():
    return get_two_od_problem(tolerance=1e-10).solve()


def test_single_link_cost_jacobian():
    eq = get_single_link_equilibrium()

    t0 = equilibrium_cost_jacobian(eq, ParameterSpec('t0'))
    kappa = equilibrium_cost_jacobian(eq, ParameterSpec('kappa'))

    assert numpy.isclose(t0.matrix[0, 0], 1.15, atol=1e-6), "Cost scales with the free-flow time at fixed flow."
    assert numpy.isclose(kappa.matrix[0, 0], -4 * 0.45 / 30, atol=1e-6)
    assert not t0.free_flow[0]

    flow = equilibrium_flow_jacobian(eq, t0)
    assert numpy.allclose(flow.flow_jacobian, 0, atol=1e-12), "A single route keeps all of its demand."


@pytest.mark.parametrize('parameter', parameter_list, ids=parameter_list)
def test_cost_jacobian_against_finite_differences(parameter, two_od_equilibrium):
    eq = two_od_equilibrium
    problem = eq.problem
    spec = ParameterSpec(parameter)

    cost_jacobian = equilibrium_cost_jacobian(eq, spec)
    flow_jacobian = equilibrium_flow_jacobian(eq, cost_jacobian)

    assert not cost_jacobian.near_boundary

    def get_costs_and_flows(values):
        shifted = problem.with_cost_function(problem.cost_function.replace(parameter, values))
        solution = shifted.solve(initial_costs=eq.costs)
        return numpy.concatenate([solution.costs, solution.flows])

    n_links = eq.network.n_links
    values = problem.cost_function.parameter(parameter)
    for index in range(values.size):
        column = get_central_difference(get_costs_and_flows, values, index=index, step=1e-3 * values[index])

        numpy.testing.assert_allclose(cost_jacobian.matrix[:, index], column[:n_links], rtol=1e-3, atol=1e-6)
        numpy.testing.assert_allclose(flow_jacobian.flow_jacobian[:, index], column[n_links:], rtol=1e-3, atol=1e-6)


def test_free_flow_links(two_od_equilibrium):
    eq = two_od_equilibrium
    network = eq.network
    index = network.link_index['3-2']

    t0 = equilibrium_cost_jacobian(eq, ParameterSpec('t0'))
    kappa = equilibrium_cost_jacobian(eq, ParameterSpec('kappa'))

    assert t0.free_flow[index]
    assert t0.matrix[index, index] == 1
    assert numpy.all(numpy.delete(t0.matrix[index], index) == 0)
    assert numpy.all(kappa.matrix[index] == 0)
    assert t0.condition_number >= 1


def test_conservation_of_demand(two_od_equilibrium):
    eq = two_od_equilibrium
    network = eq.network
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, ParameterSpec('kappa')))
    rows = {link_id: jacobians.flow_jacobian[network.link_index[link_id]] for link_id in network.link_ids}

    assert numpy.allclose(rows['2-4'] + rows['3-4'], 0, atol=1e-8)
    assert numpy.allclose(rows['2-5'] + rows['3-5'], 0, atol=1e-8)
    assert numpy.allclose(rows['1-2'] + rows['1-3'], 0, atol=1e-8)
    assert numpy.all(rows['3-2'] == 0)

    column = network.link_index['1-2']
    assert rows['1-2'][column] > 0, "More capacity must attract flow."
    assert rows['1-3'][column] < 0

    for type_jacobian in jacobians.type_flow_jacobians:
        assert numpy.allclose(network.incidence @ type_jacobian, 0, atol=1e-9)


def test_parameter_order(two_od_equilibrium):
    eq = two_od_equilibrium
    link_ids = list(reversed(eq.network.link_ids))

    default = equilibrium_cost_jacobian(eq, ParameterSpec('kappa'))
    reordered = equilibrium_cost_jacobian(eq, ParameterSpec('capacity', link_ids=link_ids))

    assert reordered.parameter_spec.parameter == 'kappa'
    assert numpy.allclose(reordered.matrix, default.matrix[:, ::-1])

    jacobians = equilibrium_flow_jacobian(eq, reordered)
    assert jacobians.column_ids == tuple(link_ids)

    with pytest.raises(ValueError):
        ParameterSpec('speed')

    with pytest.raises(ValueError):
        ParameterSpec('t0', link_ids=link_ids[1:]).column_order(eq.network)


def test_plain_matrix_input(two_od_equilibrium):
    eq = two_od_equilibrium
    cost_jacobian = equilibrium_cost_jacobian(eq, ParameterSpec('kappa'))

    from_object = equilibrium_flow_jacobian(eq, cost_jacobian)
    from_matrix = equilibrium_flow_jacobian(eq, cost_jacobian.matrix, spec=ParameterSpec('kappa'))

    assert numpy.allclose(from_object.flow_jacobian, from_matrix.flow_jacobian, atol=1e-12)

    with pytest.raises(ValueError):
        equilibrium_flow_jacobian(eq, numpy.ones((3, 3)))


def test_parse_shift():
    shift = parse_shift('kappa:1-2:+5%')
    assert shift.parameter == 'kappa' and shift.link_id == '1-2'
    assert numpy.isclose(shift.amount, 0.05) and shift.relative

    shift = parse_shift('t0:2-3:-0.5')
    assert shift.amount == -0.5 and not shift.relative

    assert parse_shift('capacity:a:1e-2').parameter == 'kappa'

    for text in ['kappa:1-2', 'speed:1-2:+5%', 'kappa:1-2:five']:
        with pytest.raises(ValueError):
            parse_shift(text)


def test_shift_vector():
    network = load_network('two_od_example')
    cost_function = get_two_od_problem().cost_function
    spec = ParameterSpec('kappa')

    vector = shift_vector(['kappa:1-2:+5%', 'kappa:2-3:-1'], spec, cost_function, network)

    expected = numpy.zeros(network.n_links)
    expected[network.link_index['1-2']] = 1.5
    expected[network.link_index['2-3']] = -1.0
    assert numpy.allclose(vector, expected)

    with pytest.raises(ValueError):
        shift_vector(['t0:1-2:+5%'], spec, cost_function, network)

    with pytest.raises(ValueError):
        shift_vector(['kappa:9-9:+5%'], spec, cost_function, network)


def test_taylor_estimate(two_od_equilibrium):
    eq = two_od_equilibrium
    problem = eq.problem
    network = eq.network
    spec = ParameterSpec('kappa')
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, spec))

    unchanged = estimate_shifted_solution(eq, jacobians, numpy.zeros(network.n_links))
    assert numpy.array_equal(unchanged.flows, eq.flows)
    assert not unchanged.any_clamped

    errors = []
    for amount in ['+5%', '+2.5%']:
        shift = shift_vector([f'kappa:1-2:{amount}'], spec, problem.cost_function, network)
        estimate = estimate_shifted_solution(eq, jacobians, shift)

        values = problem.cost_function.parameter('kappa') + shift
        exact = problem.with_cost_function(problem.cost_function.replace('kappa', values)).solve(initial_costs=eq.costs)

        demand = sum(q * solution.problem.demand.vector for q, solution in zip(eq.demands, eq.type_solutions))
        assert numpy.abs(network.incidence @ estimate.flows - demand).max() <= 1e-8, "Estimates must conserve flow."

        errors.append(numpy.abs(estimate.flows - exact.flows).max())

    ratio = errors[0] / errors[1]
    assert 3 <= ratio <= 5, f"Estimation error must shrink quadratically with the shift, got ratio {ratio}"


def test_clamped_estimate(two_od_equilibrium):
    eq = two_od_equilibrium
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, ParameterSpec('kappa')))

    shift = numpy.zeros(eq.network.n_links)
    shift[eq.network.link_index['1-2']] = -1e6

    estimate = estimate_shifted_solution(eq, jacobians, shift)

    assert estimate.any_clamped
    assert numpy.all(estimate.flows >= 0)

    with pytest.raises(ValueError):
        estimate_shifted_solution(eq, jacobians, numpy.zeros(2))


def test_confidence_intervals():
    """ Mean and standard deviation of link 1-2 in the two traveler type demonstration """
    lower, upper = confidence_intervals(27.127, 3.287, level=0.90)

    assert numpy.isclose(lower, 21.721, atol=1e-2)
    assert numpy.isclose(upper, 32.534, atol=1e-2)

    lower, upper = confidence_intervals(27.127, 3.287, level=0.95)

    assert numpy.isclose(lower, 20.68, atol=1e-2)
    assert numpy.isclose(upper, 33.57, atol=1e-2)

    lower, upper = confidence_intervals(5.0, 0.0)
    assert lower == upper == 5.0

    with pytest.raises(ValueError):
        confidence_intervals(1.0, 1.0, level=1.0)


def test_scalar_uncertainty():
    input = UncertaintyInput(mean=[10.0], covariance=[[9.0]])

    result = propagate_uncertainty(numpy.asarray([[2.0]]), input, mean_flows=[4.0])

    assert numpy.isclose(result.variance[0, 0], 36.0)
    assert numpy.isclose(result.std[0], 6.0)
    assert numpy.isclose(result.cv[0], 1.5)
    assert numpy.isclose(result.correlation[0, 0], 1.0)
    assert numpy.isclose(result.covariance[0, 0], 18.0)

    with pytest.raises(ValueError):
        propagate_uncertainty(numpy.asarray([[2.0]]), input)


def test_zero_parameter_variance(two_od_equilibrium):
    eq = two_od_equilibrium
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, ParameterSpec('kappa')))
    kappa = eq.problem.cost_function.capacity

    result = propagate_uncertainty(jacobians, UncertaintyInput(mean=kappa, covariance=numpy.zeros((8, 8))))

    assert numpy.all(result.variance == 0)
    assert numpy.array_equal(result.lower, eq.flows)
    assert numpy.array_equal(result.upper, eq.flows)


def test_delta_method(two_od_equilibrium):
    eq = two_od_equilibrium
    network = eq.network
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, ParameterSpec('kappa')))
    input = independent_uncertainty(eq.problem.cost_function.capacity, cv=0.3, level=0.9)

    result = propagate_uncertainty(jacobians, input)
    J = jacobians.flow_jacobian

    assert numpy.allclose(result.variance, J @ input.covariance @ J.T)
    assert numpy.allclose(result.variance, result.variance.T)
    assert numpy.linalg.eigvalsh(result.variance).min() >= -1e-9

    correlation = result.correlation[numpy.isfinite(result.correlation)]
    assert numpy.all(numpy.abs(correlation) <= 1)

    index = network.link_index['3-2']
    assert numpy.isnan(result.cv[index])
    assert numpy.all(numpy.isnan(result.correlation[index]))

    frame = result.to_frame(network.link_ids)
    assert list(frame.columns) == ['mean', 'std', 'cv', 'lower', 'upper']
    assert frame.index.name == 'link'


def test_invalid_uncertainty_inputs():
    with pytest.raises(ValueError):
        UncertaintyInput(mean=[1.0, 1.0], covariance=[[1.0, 0.5], [0.0, 1.0]])

    with pytest.raises(ValueError):
        UncertaintyInput(mean=[1.0, 1.0], covariance=[[1.0, 2.0], [2.0, 1.0]])

    with pytest.raises(ValueError):
        UncertaintyInput(mean=[1.0], covariance=[[1.0]], level=0.0)

    with pytest.raises(ValueError):
        UncertaintyInput(mean=[1.0], covariance=numpy.eye(2))


def test_parameter_sampling():
    input = independent_uncertainty([10.0, 20.0], cv=0.8)

    samples, n_resampled = sample_parameters(input, n_samples=200, seed=3)

    assert samples.shape == (200, 2)
    assert numpy.all(samples >= 0)
    assert n_resampled > 0

    again, _ = sample_parameters(input, n_samples=200, seed=3)
    assert numpy.array_equal(samples, again)


@pytest.mark.parametrize(
    'n_samples',
    [4000, pytest.param(100_000, marks=pytest.mark.slow)],
    ids=['4000 samples', '100000 samples']
)
def test_monte_carlo_agrees_with_delta_method(n_samples):
    problem = get_outside_option_problem()
    eq = problem.solve()
    spec = ParameterSpec('kappa')

    assert eq.converged
    assert numpy.all(eq.flows > 10), "Every link must carry flow."

    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, spec))
    input = independent_uncertainty(problem.cost_function.capacity, cv=0.3)

    delta = propagate_uncertainty(jacobians, input)
    simulation = monte_carlo_uncertainty(problem, spec, input, n_samples=n_samples, seed=0, initial_costs=eq.costs)

    assert simulation.n_unconverged == 0
    numpy.testing.assert_allclose(simulation.mean, eq.flows, rtol=0.02)
    numpy.testing.assert_allclose(simulation.variance, numpy.diag(delta.variance), rtol=0.10)

    correlation = delta.correlation[numpy.isfinite(delta.correlation)]
    assert numpy.all(numpy.abs(correlation) <= 1 + 1e-12)


def test_monte_carlo_is_thread_independent():
    problem = get_parallel_problem()
    spec = ParameterSpec('kappa')
    input = independent_uncertainty(problem.cost_function.capacity, cv=0.05)

    sequential = monte_carlo_uncertainty(problem, spec, input, n_samples=20, seed=1, threads=1)
    pooled = monte_carlo_uncertainty(problem, spec, input, n_samples=20, seed=1, threads=4)

    assert numpy.allclose(sequential.samples, pooled.samples, atol=1e-10)


def test_substitution_of_route_choice():
    network = load_network('complementarity_example')
    perturbation = PerturbationSpec(family='quadratic', scale=get_scale({'constant': 0.5}, network))
    solution = PurcProblem.from_od(network, numpy.ones(network.n_links), '1', '3', perturbation, demand_scale=4.0).solve()

    report = substitution_report(purc_jacobian(solution))

    assert report.relation('5-4', '2-3') == 'complement'
    assert report.relation('1-2', '1-5') == 'substitute'
    assert report.relation('4-3', '1-2') == 'independent'
    assert len(report.pairs) == network.n_links * (network.n_links - 1)
    assert ('5-4', '2-3') in [(pair.flow_link, pair.cost_link) for pair in report.complements]

    frame = report.to_frame()
    assert list(frame.columns) == ['flow_link', 'cost_link', 'value', 'relation']

    with pytest.raises(KeyError):
        report.relation('1-2', '1-2')


def test_substitution_of_simple_networks():
    parallel = substitution_report(numpy.asarray([[-0.25, 0.25], [0.25, -0.25]]), link_ids=['a', 'b'])
    series = substitution_report(numpy.zeros((2, 2)), link_ids=['a', 'b'])

    assert parallel.relation('a', 'b') == 'substitute'
    assert series.relation('a', 'b') == 'independent'


def test_substitution_of_capacities(two_od_equilibrium):
    eq = two_od_equilibrium
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, ParameterSpec('kappa')))

    report = substitution_report(jacobians)

    assert report.relation('1-3', '1-2') == 'substitute', "Capacity added to 1-2 draws flow away from 1-3."


def test_aggregate_directional_sensitivity(two_od_equilibrium):
    eq = two_od_equilibrium
    rng = numpy.random.default_rng(0)
    delta = rng.normal(size=eq.network.n_links)

    dense = sum(q * purc_jacobian(solution).matrix @ delta for q, solution in zip(eq.demands, eq.type_solutions))

    assert numpy.allclose(aggregate_directional_sensitivity(eq, delta), dense, atol=1e-8)

# -
