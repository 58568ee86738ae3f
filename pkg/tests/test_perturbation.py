#!/usr/bin/env python
# -*- coding: utf-8 -*-

import pytest
import numpy

from PyFinitDiff.finite_difference_1D import get_function_derivative

from PyPURC.network import load_network
from PyPURC.perturbation import (
    FAMILIES,
    PerturbationSpec,
    get_scale,
    eval_F,
    grad_F,
    hess_diag_F,
    inv_grad,
    conjugate
)


family_list = list(FAMILIES)

flow_list = [0.05, 0.5, 1.0, 3.0, 10.0]


def evaluate_family(x, family: str, scale: float):
    return FAMILIES[family].evaluate(x, scale)


def gradient_family(x, family: str, scale: float):
    return FAMILIES[family].gradient(x, scale)


@pytest.mark.parametrize('family', family_list, ids=family_list)
@pytest.mark.parametrize('scale', [0.5, 1.0, 2.0])
def test_derivatives_against_finite_differences(family, scale):
    kwargs = dict(family=family, scale=scale)

    for x in flow_list:
        gradient = get_function_derivative(
            function=evaluate_family,
            x_eval=x,
            derivative=1,
            accuracy=4,
            delta=1e-4,
            function_kwargs=kwargs
        )

        hessian = get_function_derivative(
            function=gradient_family,
            x_eval=x,
            derivative=1,
            accuracy=4,
            delta=1e-4,
            function_kwargs=kwargs
        )

        assert numpy.isclose(gradient, FAMILIES[family].gradient(x, scale), rtol=1e-6), f"{family} gradient mismatch at x={x}"
        assert numpy.isclose(hessian, FAMILIES[family].hessian(x, scale), rtol=1e-6), f"{family} hessian mismatch at x={x}"


@pytest.mark.parametrize('family', family_list, ids=family_list)
def test_normalisation(family):
    implementation = FAMILIES[family]

    assert implementation.evaluate(0.0, 1.0) == 0
    assert implementation.gradient(0.0, 1.0) == 0
    assert numpy.all(implementation.hessian(numpy.asarray(flow_list), 1.0) > 0)


@pytest.mark.parametrize('family', family_list, ids=family_list)
def test_inverse_gradient(family):
    scale = numpy.asarray([0.5, 1.0, 2.0, 4.0, 1.0])
    spec = PerturbationSpec(family=family, scale=scale)
    x = numpy.asarray(flow_list)

    assert numpy.allclose(inv_grad(spec, grad_F(spec, x)), x, rtol=1e-12)

    negative = inv_grad(spec, -numpy.ones(5))
    assert numpy.all(negative == 0), "Negative arguments must map to zero flow."


@pytest.mark.parametrize('family', family_list, ids=family_list)
def test_conjugate(family):
    spec = PerturbationSpec(family=family, scale=numpy.full(5, 1.5))
    y = numpy.asarray([-1.0, 0.0, 0.3, 1.0, 2.5])

    x = inv_grad(spec, y)
    expected = y * x - spec.implementation.evaluate(x, spec.scale)

    assert numpy.allclose(conjugate(spec, y), expected, atol=1e-12)
    assert numpy.all(conjugate(spec, y) >= 0)


@pytest.mark.parametrize('family', family_list, ids=family_list)
def test_convexity(family):
    spec = PerturbationSpec(family=family, scale=numpy.full(3, 2.0))
    rng = numpy.random.default_rng(1)

    for _ in range(50):
        a, b = rng.uniform(0, 5, size=(2, 3))
        t = rng.uniform()
        mixed = eval_F(spec, t * a + (1 - t) * b)

        assert mixed <= t * eval_F(spec, a) + (1 - t) * eval_F(spec, b) + 1e-12


def test_entropic_values():
    spec = PerturbationSpec(family='entropic', scale=[1.0])

    assert numpy.isclose(eval_F(spec, [1.0]), 0.386294, atol=1e-6)

    spec = PerturbationSpec(family='entropic', scale=[2.0])

    assert numpy.isclose(grad_F(spec, [1.0])[0], 2 * numpy.log(2))
    assert numpy.isclose(hess_diag_F(spec, [1.0])[0], 1.0)


def test_quadratic_values():
    spec = PerturbationSpec(family='quadratic', scale=[0.5, 1.0])

    assert numpy.isclose(eval_F(spec, [2.0, 1.0]), 3.0)
    assert numpy.allclose(hess_diag_F(spec, [2.0, 1.0]), [1.0, 2.0])


def test_invalid_specs():
    with pytest.raises(ValueError):
        PerturbationSpec(family='logit', scale=[1.0])

    with pytest.raises(ValueError):
        PerturbationSpec(family='entropic', scale=[1.0, 0.0])

    spec = PerturbationSpec(family='entropic', scale=[1.0])
    with pytest.raises(ValueError):
        eval_F(spec, [-1.0])


def test_scale_configurations():
    network = load_network('two_od_example')

    assert numpy.array_equal(get_scale('one', network), numpy.ones(network.n_links))
    assert numpy.array_equal(get_scale('t0', network), network.free_flow_times)
    assert numpy.array_equal(get_scale('length', network), network.lengths)
    assert numpy.array_equal(get_scale({'constant': 0.5}, network), numpy.full(network.n_links, 0.5))
    assert numpy.array_equal(get_scale(2, network), numpy.full(network.n_links, 2.0))

    per_link = numpy.arange(1, network.n_links + 1)
    assert numpy.array_equal(get_scale({'per_link': per_link.tolist()}, network), per_link)

    with pytest.raises(ValueError):
        get_scale({'per_link': [1.0]}, network)

    with pytest.raises(ValueError):
        get_scale('speed', network)


def test_spec_from_config():
    network = load_network('two_od_example')

    spec = PerturbationSpec.from_config({'family': 'quadratic', 'scale': 't0'}, network)
    assert spec.family == 'quadratic'
    assert numpy.array_equal(spec.scale, network.free_flow_times)

    short = PerturbationSpec.from_config('entropic:one', network)
    assert short.family == 'entropic'
    assert numpy.all(short.scale == 1)

    restored = PerturbationSpec.from_config(spec.to_dict(), network)
    assert numpy.array_equal(restored.scale, spec.scale)

    restricted = spec.restrict(numpy.arange(network.n_links) < 3)
    assert restricted.scale.size == 3

# -
