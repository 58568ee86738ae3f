#!/usr/bin/env python
# -*- coding: utf-8 -*-

import logging
import numpy

from scipy import sparse
from scipy.sparse import csgraph


class NotConvergedError(RuntimeError):
    """
    Raised when an iterative computation cannot return a usable result.
    """
    pass


class BaseSolver(object):
    """
    Generic class for the iterative solvers of the package.
    """

    logger = logging.getLogger(__name__)

    def solve(self, *args, **kwargs):
        raise NotImplementedError()

    def backtrack(
            self,
            evaluate,
            current_merit: float,
            current_norm: float,
            slope: float,
            armijo_parameter: float = 1e-4,
            max_backtracking: int = 60) -> tuple:
        """
        Armijo backtracking for a maximisation. A trial step is accepted on sufficient
        increase of the merit or on a decrease of the residual norm.

        :param      evaluate:          Maps a step length t to (merit, residual norm, state)
        :type       evaluate:          callable
        :param      current_merit:     Merit at t = 0
        :type       current_merit:     float
        :param      current_norm:      Residual norm at t = 0
        :type       current_norm:      float
        :param      slope:             Directional derivative of the merit at t = 0
        :type       slope:             float
        :param      armijo_parameter:  Sufficient increase constant
        :type       armijo_parameter:  float
        :param      max_backtracking:  Maximum number of halvings
        :type       max_backtracking:  int

        :returns:   (step length, state) or (None, None) if no step was accepted.
        :rtype:     tuple
        """
        step = 1.0
        for _ in range(max_backtracking):
            merit, norm, state = evaluate(step)

            if merit >= current_merit + armijo_parameter * step * slope or norm < current_norm:
                return step, state

            step *= 0.5

        return None, None


def get_shortest_distances(
        n_nodes: int,
        tails: numpy.ndarray,
        heads: numpy.ndarray,
        weights: numpy.ndarray,
        sources: numpy.ndarray,
        source_offsets: numpy.ndarray = None) -> numpy.ndarray:
    """
    Shortest distances from every node to the nearest of the sources along directed links,
    each source being charged its offset. Parallel links keep their cheapest weight.

    :returns:   Distances, inf where no source is reachable.
    :rtype:     numpy.ndarray
    """
    sources = numpy.atleast_1d(sources)
    offsets = numpy.zeros(sources.size) if source_offsets is None else numpy.asarray(source_offsets, dtype=float)

    # reversed graph, so distances to the sources become distances from them
    rows, columns, data = heads.copy(), tails.copy(), numpy.asarray(weights, dtype=float).copy()

    order = numpy.lexsort((data, columns, rows))
    rows, columns, data = rows[order], columns[order], data[order]
    keep = numpy.ones(rows.size, dtype=bool)
    keep[1:] = (rows[1:] != rows[:-1]) | (columns[1:] != columns[:-1])
    rows, columns, data = rows[keep], columns[keep], data[keep]

    # super source charged with the offsets; stored weights must stay positive
    shift = 1.0 - offsets.min()
    super_source = n_nodes
    rows = numpy.concatenate([rows, numpy.full(sources.size, super_source)])
    columns = numpy.concatenate([columns, sources])
    data = numpy.concatenate([data, offsets + shift])

    graph = sparse.csr_matrix((data, (rows, columns)), shape=(n_nodes + 1, n_nodes + 1))

    distances = csgraph.dijkstra(graph, directed=True, indices=super_source)

    return distances[:n_nodes] - shift

# -
