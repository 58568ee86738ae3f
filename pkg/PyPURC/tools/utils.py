#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy
import pandas

from PyPURC.perturbation import PerturbationSpec


def get_central_difference(function, x: numpy.ndarray, index: int, step: float) -> numpy.ndarray:
    """
    Central difference of a vector valued function along one coordinate.

    :param      function:  The function
    :type       function:  callable
    :param      x:         The evaluation point
    :type       x:         numpy.ndarray
    :param      index:     The coordinate to differentiate along
    :type       index:     int
    :param      step:      The step
    :type       step:      float

    :returns:   (f(x + h e) - f(x - h e)) / 2h
    :rtype:     numpy.ndarray
    """
    x = numpy.asarray(x, dtype=float)
    forward, backward = x.copy(), x.copy()
    forward[index] += step
    backward[index] -= step

    return (numpy.asarray(function(forward)) - numpy.asarray(function(backward))) / (2 * step)


def get_perturbation_sweep(problem, configurations: list, reference_flows: numpy.ndarray = None) -> pandas.DataFrame:
    """
    Solves an equilibrium problem once per perturbation configuration and collects the
    aggregate flows, one column per configuration. With reference flows, the last row
    holds the largest absolute deviation from them.

    :param      problem:          The equilibrium problem
    :type       problem:          EquilibriumProblem
    :param      configurations:   Perturbation configurations, e.g. ["entropic:one", "quadratic:t0"]
    :type       configurations:   list
    :param      reference_flows:  Flows to compare against
    :type       reference_flows:  numpy.ndarray

    :returns:   The flows of every configuration.
    :rtype:     pandas.DataFrame
    """
    network = problem.network
    data_dict = {}

    for configuration in configurations:
        label = configuration if isinstance(configuration, str) else f"{configuration['family']}:{configuration['scale']}"

        perturbation = PerturbationSpec.from_config(configuration, network)

        sweep_problem = problem.__class__(
            network=network,
            types=problem.types,
            perturbation=perturbation,
            cost_function=problem.cost_function,
            options=problem.options
        )

        data_dict[label] = sweep_problem.solve().flows

    frame = pandas.DataFrame(data_dict, index=pandas.Index(network.link_ids, name='link'))

    if reference_flows is not None:
        deviation = (frame.sub(numpy.asarray(reference_flows, dtype=float), axis=0)).abs().max()
        frame.loc['max deviation'] = deviation

    return frame

# -
