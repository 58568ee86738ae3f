#!/usr/bin/env python
# -*- coding: utf-8 -*-

import logging
import numpy
from dataclasses import dataclass

from PyPURC.network import Network

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LinkCostFunction(object):
    r"""
    BPR link performance function

    .. math::
        \zeta(x) = t_0 \left(1 + \alpha (x / \kappa)^\beta\right)

    with one free-flow time and one capacity per link.
    """
    free_flow_time: numpy.ndarray
    """ Free-flow travel times t0 """
    capacity: numpy.ndarray
    """ Capacities kappa """
    alpha: float = 0.15
    """ Scale of the congestion term """
    beta: float = 4.0
    """ Exponent of the congestion term """

    def __post_init__(self):
        free_flow_time = numpy.atleast_1d(numpy.asarray(self.free_flow_time, dtype=float)).copy()
        capacity = numpy.atleast_1d(numpy.asarray(self.capacity, dtype=float)).copy()

        if free_flow_time.shape != capacity.shape:
            raise ValueError(f"t0 and capacity sizes differ: {free_flow_time.size} vs {capacity.size}")

        if numpy.any(free_flow_time <= 0) or numpy.any(capacity <= 0):
            raise ValueError("BPR free-flow times and capacities must be strictly positive")

        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError(f"BPR alpha and beta must be positive, got {self.alpha}, {self.beta}")

        free_flow_time.setflags(write=False)
        capacity.setflags(write=False)
        object.__setattr__(self, 'free_flow_time', free_flow_time)
        object.__setattr__(self, 'capacity', capacity)

    @property
    def n_links(self) -> int:
        return self.free_flow_time.size

    @classmethod
    def from_network(cls, network: Network, alpha: float = 0.15, beta: float = 4.0) -> 'LinkCostFunction':
        return cls(
            free_flow_time=network.free_flow_times,
            capacity=network.capacities,
            alpha=alpha,
            beta=beta
        )

    def replace(self, parameter: str, values: numpy.ndarray) -> 'LinkCostFunction':
        """
        Copy of the function with the t0 or kappa vector replaced.
        """
        match parameter:
            case 't0':
                return LinkCostFunction(values, self.capacity, self.alpha, self.beta)
            case 'kappa':
                return LinkCostFunction(self.free_flow_time, values, self.alpha, self.beta)
            case _:
                raise ValueError(f"Unknown BPR parameter {parameter!r}, expected 't0' or 'kappa'")

    def parameter(self, parameter: str) -> numpy.ndarray:
        match parameter:
            case 't0':
                return self.free_flow_time.copy()
            case 'kappa':
                return self.capacity.copy()
            case _:
                raise ValueError(f"Unknown BPR parameter {parameter!r}, expected 't0' or 'kappa'")


def _as_flows(x) -> numpy.ndarray:
    x = numpy.asarray(x, dtype=float)
    if numpy.any(x < 0):
        raise ValueError(f"BPR functions are evaluated for nonnegative flows only, got min {x.min()}")
    return x


def bpr_eval(fn: LinkCostFunction, x: numpy.ndarray) -> numpy.ndarray:
    """
    Link costs at the given flows.

    :param      fn:   The cost function
    :type       fn:   LinkCostFunction
    :param      x:    Nonnegative link flows
    :type       x:    numpy.ndarray

    :returns:   Link costs.
    :rtype:     numpy.ndarray
    """
    x = _as_flows(x)
    return fn.free_flow_time * (1 + fn.alpha * (x / fn.capacity)**fn.beta)


def bpr_derivative(fn: LinkCostFunction, x: numpy.ndarray) -> numpy.ndarray:
    x = _as_flows(x)
    return fn.free_flow_time * fn.alpha * fn.beta * x**(fn.beta - 1) / fn.capacity**fn.beta


def bpr_parameter_derivatives(fn: LinkCostFunction, x: numpy.ndarray) -> tuple[numpy.ndarray, numpy.ndarray]:
    """
    Derivatives of the cost with respect to t0 and kappa at fixed flow.

    :returns:   (d zeta / d t0, d zeta / d kappa)
    :rtype:     tuple
    """
    x = _as_flows(x)
    congestion = fn.alpha * (x / fn.capacity)**fn.beta
    d_t0 = 1 + congestion
    d_kappa = -fn.free_flow_time * fn.beta * congestion / fn.capacity
    return d_t0, d_kappa


def bpr_integral(fn: LinkCostFunction, x: numpy.ndarray) -> numpy.ndarray:
    """
    Integral of the cost from 0 to x, per link.
    """
    x = _as_flows(x)
    congestion = fn.alpha * x**(fn.beta + 1) / ((fn.beta + 1) * fn.capacity**fn.beta)
    return fn.free_flow_time * (x + congestion)


def bpr_inverse(fn: LinkCostFunction, c: numpy.ndarray) -> tuple[numpy.ndarray, numpy.ndarray]:
    """
    Flows that produce the given costs. Costs below free flow map to zero flow and are flagged.

    :param      fn:   The cost function
    :type       fn:   LinkCostFunction
    :param      c:    Link costs
    :type       c:    numpy.ndarray

    :returns:   (flows, below free-flow mask)
    :rtype:     tuple
    """
    c = numpy.asarray(c, dtype=float)
    below_free_flow = c < fn.free_flow_time

    excess = numpy.maximum(c - fn.free_flow_time, 0.0)
    flows = fn.capacity * (excess / (fn.alpha * fn.free_flow_time))**(1 / fn.beta)

    return flows, below_free_flow


def bpr_inverse_derivs(fn: LinkCostFunction, c: numpy.ndarray) -> tuple[numpy.ndarray, numpy.ndarray, numpy.ndarray]:
    """
    Derivatives of the inverse cost function with respect to the cost, t0 and kappa.
    At or below free flow the cost derivative is infinite; such links are reported
    as singular.

    :param      fn:   The cost function
    :type       fn:   LinkCostFunction
    :param      c:    Link costs
    :type       c:    numpy.ndarray

    :returns:   (d inverse / d c, d inverse / d t0, d inverse / d kappa)
    :rtype:     tuple
    """
    c = numpy.asarray(c, dtype=float)
    flows, _ = bpr_inverse(fn, c)
    excess = c - fn.free_flow_time
    singular = excess <= 0

    if numpy.any(singular):
        logger.warning(f"{numpy.count_nonzero(singular)} links at free flow, inverse cost derivative is infinite there")

    with numpy.errstate(divide='ignore', invalid='ignore'):
        d_cost = numpy.where(singular, numpy.inf, flows / (fn.beta * excess))
        d_t0 = numpy.where(singular, -numpy.inf, -d_cost * c / fn.free_flow_time)

    d_kappa = flows / fn.capacity

    return d_cost, d_t0, d_kappa

# -
