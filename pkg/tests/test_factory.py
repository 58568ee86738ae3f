#!/usr/bin/env python
# -*- coding: utf-8 -*-

import pytest
import numpy

from PyPURC import NetworkFactory
from PyPURC.network import validate_reachable, validate_connected
from PyPURC.factory import get_grid_network, get_random_network


def test_network_factory():
    factory = NetworkFactory(nodes=['1', '2', '3'], name='braess')

    factory.add_link('1', '2', capacity=numpy.linspace(10, 50, 5))
    factory.add_link('2', '3', free_flow_time=[1.0, 2.0])
    factory.add_link(1, 3, length=2.0, link_id='bypass')

    assert len(factory) == 10

    networks = list(factory)
    assert len(networks) == 10

    network = factory[3]
    assert network.link_ids == ['1-2', '2-3', 'bypass']
    assert network.name == 'braess'
    assert numpy.isclose(network.capacities[0], 20.0)
    assert numpy.isclose(network.free_flow_times[1], 2.0)
    assert numpy.isclose(network.lengths[2], 2.0)


def test_factory_appends_nodes():
    factory = NetworkFactory()
    factory.add_link('a', 'b')
    factory.add_link('b', 'c')

    network = factory[0]

    assert factory.nodes == ['a', 'b', 'c']
    assert validate_reachable(network, 'a', 'c')
    assert not validate_reachable(network, 'c', 'a')


@pytest.mark.parametrize('size', [(2, 2), (3, 5), (21, 21), (51, 51)])
def test_grid_network(size):
    n_rows, n_columns = size
    network = get_grid_network(n_rows, n_columns)

    assert network.n_nodes == n_rows * n_columns
    assert network.n_links == 2 * (n_rows * (n_columns - 1) + n_columns * (n_rows - 1))
    assert validate_connected(network, strong=True).connected


def test_invalid_grid():
    with pytest.raises(ValueError):
        get_grid_network(1, 1)

    with pytest.raises(ValueError):
        get_grid_network(0, 4)


@pytest.mark.parametrize('seed', range(5))
def test_random_network(seed):
    network = get_random_network(n_nodes=8, n_links=20, seed=seed)

    assert network.n_links == 20
    assert len(set(network.link_ids)) == 20
    assert validate_reachable(network, '0', '7')
    assert numpy.all((network.capacities >= 10) & (network.capacities <= 50))

    again = get_random_network(n_nodes=8, n_links=20, seed=seed)
    assert again.link_ids == network.link_ids
    assert numpy.array_equal(again.free_flow_times, network.free_flow_times)


def test_invalid_random_network():
    with pytest.raises(ValueError):
        get_random_network(n_nodes=1, n_links=0)

    with pytest.raises(ValueError):
        get_random_network(n_nodes=4, n_links=2)

    with pytest.raises(ValueError):
        get_random_network(n_nodes=4, n_links=13)

# -
