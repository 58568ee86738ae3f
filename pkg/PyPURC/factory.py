#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy
from itertools import product
from dataclasses import dataclass

from PyPURC.network import Network, Link


@dataclass
class ProxyLink():
    id: str
    tail: str
    head: str
    length: list
    free_flow_time: list
    capacity: list

    def __post_init__(self):
        self.length = numpy.atleast_1d(self.length)
        self.free_flow_time = numpy.atleast_1d(self.free_flow_time)
        self.capacity = numpy.atleast_1d(self.capacity)

    def get_generator(self):
        return product([self.id], self.length, self.free_flow_time, self.capacity)


class NetworkFactory(object):
    """
    NetworkFactory is used to instantiate a :py:class:`~PyPURC.network.Network` or a
    series of Network objects.

    All networks built from a given factory share nodes and link topology; the link
    attributes may be given as arrays, and the factory iterates through every
    combination of them.
    """
    def __init__(self, nodes: list = None, name: str = ''):
        self.nodes = [str(node) for node in nodes] if nodes is not None else []
        self.links_list = []
        self.name = name

    def add_link(
            self,
            tail,
            head,
            length: float = 1.0,
            free_flow_time: float = 1.0,
            capacity: float = 1.0,
            link_id: str = None) -> None:
        """
        Insert a new link in the factory. Unknown end nodes are appended to the node list.

        :param      tail:            Tail node
        :type       tail:            str
        :param      head:            Head node
        :type       head:            str
        :param      length:          Length, or array of lengths to iterate over
        :type       length:          float
        :param      free_flow_time:  Free-flow time, or array of them
        :type       free_flow_time:  float
        :param      capacity:        Capacity, or array of them
        :type       capacity:        float
        :param      link_id:         Link identifier, "tail-head" when omitted
        :type       link_id:         str
        """
        tail, head = str(tail), str(head)

        for node in (tail, head):
            if node not in self.nodes:
                self.nodes.append(node)

        link = ProxyLink(
            id=link_id if link_id is not None else f"{tail}-{head}",
            tail=tail,
            head=head,
            length=length,
            free_flow_time=free_flow_time,
            capacity=capacity
        )

        self.links_list.append(link)

    def get_overall_generator(self):
        """
        Return a generator of all combination of link attributes.

        :returns:   Generator
        :rtype:     object
        """
        list_of_generator = [link.get_generator() for link in self.links_list]

        return product(*list_of_generator)

    def __len__(self) -> int:
        return int(numpy.prod([
            link.length.size * link.free_flow_time.size * link.capacity.size for link in self.links_list
        ]))

    def build_network(self, structure: tuple) -> Network:
        links = []
        for proxy, (link_id, length, free_flow_time, capacity) in zip(self.links_list, structure):
            links.append(
                Link(
                    id=link_id,
                    tail=proxy.tail,
                    head=proxy.head,
                    length=float(length),
                    free_flow_time=float(free_flow_time),
                    capacity=float(capacity)
                )
            )

        return Network(nodes=self.nodes, links=links, name=self.name)

    def __getitem__(self, index: int) -> Network:
        """
        Of all the attribute combination, returns the network associated to the given index.

        :returns:   Return the associated network
        :rtype:     Network
        """
        structure = list(self.get_overall_generator())[index]

        return self.build_network(structure)

    def __iter__(self) -> Network:
        """
        Iterate through all combination of networks.

        :returns:   Yield the next network
        :rtype:     Network
        """
        for structure in self.get_overall_generator():
            yield self.build_network(structure)


def get_grid_network(
        n_rows: int,
        n_columns: int,
        length: float = 1.0,
        free_flow_time: float = 1.0,
        capacity: float = 1.0) -> Network:
    """
    Rectangular grid with a link in both directions between horizontal and vertical
    neighbours. Node "r.c" sits at row r and column c; links are named "tail-head".

    :param      n_rows:     Number of rows
    :type       n_rows:     int
    :param      n_columns:  Number of columns
    :type       n_columns:  int

    :returns:   The grid network.
    :rtype:     Network
    """
    if n_rows < 1 or n_columns < 1 or n_rows * n_columns < 2:
        raise ValueError(f"A grid needs at least two nodes, got {n_rows}x{n_columns}")

    nodes = [f"{row}.{column}" for row in range(n_rows) for column in range(n_columns)]

    links = []
    for row, column in product(range(n_rows), range(n_columns)):
        for d_row, d_column in [(0, 1), (1, 0)]:
            other_row, other_column = row + d_row, column + d_column
            if other_row >= n_rows or other_column >= n_columns:
                continue

            first, second = f"{row}.{column}", f"{other_row}.{other_column}"
            for tail, head in [(first, second), (second, first)]:
                links.append(
                    Link(
                        id=f"{tail}-{head}",
                        tail=tail,
                        head=head,
                        length=length,
                        free_flow_time=free_flow_time,
                        capacity=capacity
                    )
                )

    return Network(nodes=nodes, links=links, name=f'grid {n_rows}x{n_columns}')


def get_random_network(n_nodes: int, n_links: int, seed: int = 0) -> Network:
    """
    Random directed network on nodes "0", ..., "n_nodes - 1". A path 0 -> 1 -> ... -> n_nodes - 1
    is always included, so the last node is reachable from the first one; the remaining links
    join distinct random node pairs. Lengths, free-flow times and capacities are drawn uniformly
    from [0.5, 2], [1, 5] and [10, 50].

    :param      n_nodes:  Number of nodes
    :type       n_nodes:  int
    :param      n_links:  Number of links, at least n_nodes - 1
    :type       n_links:  int
    :param      seed:     Seed of the generator
    :type       seed:     int

    :returns:   The network.
    :rtype:     Network
    """
    if n_nodes < 2:
        raise ValueError(f"A random network needs at least two nodes, got {n_nodes}")

    max_links = n_nodes * (n_nodes - 1)
    if not n_nodes - 1 <= n_links <= max_links:
        raise ValueError(f"Number of links must lie in [{n_nodes - 1}, {max_links}], got {n_links}")

    rng = numpy.random.default_rng(seed)

    pairs = [(node, node + 1) for node in range(n_nodes - 1)]
    path = set(pairs)
    candidates = [
        (tail, head) for tail, head in product(range(n_nodes), repeat=2)
        if tail != head and (tail, head) not in path
    ]
    extra = rng.choice(len(candidates), size=n_links - len(pairs), replace=False)
    pairs += [candidates[index] for index in sorted(extra)]

    lengths = rng.uniform(0.5, 2.0, size=n_links)
    free_flow_times = rng.uniform(1.0, 5.0, size=n_links)
    capacities = rng.uniform(10.0, 50.0, size=n_links)

    links = [
        Link(
            id=f"{tail}-{head}",
            tail=str(tail),
            head=str(head),
            length=float(length),
            free_flow_time=float(free_flow_time),
            capacity=float(capacity)
        ) for (tail, head), length, free_flow_time, capacity in zip(pairs, lengths, free_flow_times, capacities)
    ]

    return Network(nodes=[str(node) for node in range(n_nodes)], links=links, name=f'random {seed}')

# -
