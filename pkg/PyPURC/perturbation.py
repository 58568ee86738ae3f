#!/usr/bin/env python
# -*- coding: utf-8 -*-

import numpy
from dataclasses import dataclass

from PyPURC.network import Network

EXPONENT_LIMIT = 700.0


class PerturbationFamily(object):
    """
    Generic link-separable perturbation F_ij(x) = s_ij f(x) with f(0) = f'(0) = 0,
    f strictly convex and increasing on x >= 0. Subclasses supply f, its first two
    derivatives, the inverse of the scaled derivative and the convex conjugate.
    """
    name: str = None

    @staticmethod
    def evaluate(x: numpy.ndarray, scale: numpy.ndarray) -> numpy.ndarray:
        raise NotImplementedError()

    @staticmethod
    def gradient(x: numpy.ndarray, scale: numpy.ndarray) -> numpy.ndarray:
        raise NotImplementedError()

    @staticmethod
    def hessian(x: numpy.ndarray, scale: numpy.ndarray) -> numpy.ndarray:
        raise NotImplementedError()

    @staticmethod
    def inverse_gradient(y: numpy.ndarray, scale: numpy.ndarray) -> numpy.ndarray:
        raise NotImplementedError()

    @staticmethod
    def conjugate(y: numpy.ndarray, scale: numpy.ndarray) -> numpy.ndarray:
        raise NotImplementedError()


class EntropicFamily(PerturbationFamily):
    r"""
    Entropy-based perturbation :math:`F(x) = s\left((1+x)\ln(1+x) - x\right)`.
    """
    name = 'entropic'

    @staticmethod
    def evaluate(x, scale):
        return scale * ((1 + x) * numpy.log1p(x) - x)

    @staticmethod
    def gradient(x, scale):
        return scale * numpy.log1p(x)

    @staticmethod
    def hessian(x, scale):
        return scale / (1 + x)

    @staticmethod
    def inverse_gradient(y, scale):
        ratio = numpy.minimum(numpy.maximum(y, 0.0) / scale, EXPONENT_LIMIT)
        return numpy.expm1(ratio)

    @staticmethod
    def conjugate(y, scale):
        positive = numpy.maximum(y, 0.0)
        ratio = numpy.minimum(positive / scale, EXPONENT_LIMIT)
        return scale * numpy.expm1(ratio) - positive


class QuadraticFamily(PerturbationFamily):
    r"""
    Quadratic perturbation :math:`F(x) = s x^2`.
    """
    name = 'quadratic'

    @staticmethod
    def evaluate(x, scale):
        return scale * x**2

    @staticmethod
    def gradient(x, scale):
        return 2 * scale * x

    @staticmethod
    def hessian(x, scale):
        return 2 * scale * numpy.ones_like(x)

    @staticmethod
    def inverse_gradient(y, scale):
        return numpy.maximum(y, 0.0) / (2 * scale)

    @staticmethod
    def conjugate(y, scale):
        positive = numpy.maximum(y, 0.0)
        return positive**2 / (4 * scale)


FAMILIES = {
    family.name: family for family in [EntropicFamily, QuadraticFamily]
}


@dataclass(frozen=True, eq=False)
class PerturbationSpec(object):
    family: str
    """ Name of the perturbation family, 'entropic' or 'quadratic' """
    scale: numpy.ndarray
    """ Per-link scale s_ij > 0 """

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"Unknown perturbation family {self.family!r}, expected one of {list(FAMILIES)}")

        scale = numpy.atleast_1d(numpy.asarray(self.scale, dtype=float)).copy()
        if numpy.any(~numpy.isfinite(scale)) or numpy.any(scale <= 0):
            raise ValueError("Perturbation scales must be finite and strictly positive")

        scale.setflags(write=False)
        object.__setattr__(self, 'scale', scale)

    def __repr__(self) -> str:
        return f"PerturbationSpec(family={self.family!r}, n_links={self.scale.size})"

    @property
    def implementation(self) -> PerturbationFamily:
        return FAMILIES[self.family]

    def restrict(self, mask: numpy.ndarray) -> 'PerturbationSpec':
        """
        Perturbation restricted to a subset of links.
        """
        return PerturbationSpec(family=self.family, scale=self.scale[mask])

    def to_dict(self) -> dict:
        return dict(family=self.family, scale={'per_link': self.scale.tolist()})

    @classmethod
    def from_config(cls, config: dict | str, network: Network) -> 'PerturbationSpec':
        """
        Builds a spec from a scenario perturbation block, e.g.
        {"family": "entropic", "scale": "length"} or the short form "entropic:length".

        :param      config:   The perturbation block
        :type       config:   dict | str
        :param      network:  The network providing lengths and free-flow times
        :type       network:  Network

        :returns:   The perturbation spec.
        :rtype:     PerturbationSpec
        """
        if isinstance(config, str):
            family, _, scale = config.partition(':')
            config = dict(family=family, scale=scale or 'length')

        family = config.get('family', 'entropic')
        scale = config.get('scale', 'length')

        return cls(family=family, scale=get_scale(scale, network))


def get_scale(scale: str | dict | float, network: Network) -> numpy.ndarray:
    match scale:
        case 'length':
            return network.lengths.copy()
        case 'one':
            return numpy.ones(network.n_links)
        case 't0':
            return network.free_flow_times.copy()
        case {'per_link': values}:
            values = numpy.asarray(values, dtype=float)
            if values.shape != (network.n_links,):
                raise ValueError(f"per_link scale has {values.size} entries, network has {network.n_links} links")
            return values
        case {'constant': value}:
            return numpy.full(network.n_links, float(value))
        case float() | int():
            return numpy.full(network.n_links, float(scale))
        case _:
            raise ValueError(f"Unexpected perturbation scale: {scale!r}")


def _as_flows(x) -> numpy.ndarray:
    x = numpy.asarray(x, dtype=float)
    if numpy.any(x < 0):
        raise ValueError(f"Perturbation functions are defined for nonnegative flows, got min {x.min()}")
    return x


def eval_F(spec: PerturbationSpec, x: numpy.ndarray) -> float:
    """
    Evaluates the total perturbation F(x) = sum_ij F_ij(x_ij).

    :param      spec:  The perturbation
    :type       spec:  PerturbationSpec
    :param      x:     Nonnegative link flows
    :type       x:     numpy.ndarray

    :returns:   The perturbation value.
    :rtype:     float
    """
    return float(numpy.sum(spec.implementation.evaluate(_as_flows(x), spec.scale)))


def grad_F(spec: PerturbationSpec, x: numpy.ndarray) -> numpy.ndarray:
    return spec.implementation.gradient(_as_flows(x), spec.scale)


def hess_diag_F(spec: PerturbationSpec, x: numpy.ndarray) -> numpy.ndarray:
    return spec.implementation.hessian(_as_flows(x), spec.scale)


def inv_grad(spec: PerturbationSpec, y: numpy.ndarray) -> numpy.ndarray:
    """
    Inverse of the link derivatives, extended by 0 for negative arguments.

    :param      spec:  The perturbation
    :type       spec:  PerturbationSpec
    :param      y:     Any real vector
    :type       y:     numpy.ndarray

    :returns:   Nonnegative flows.
    :rtype:     numpy.ndarray
    """
    return spec.implementation.inverse_gradient(numpy.asarray(y, dtype=float), spec.scale)


def conjugate(spec: PerturbationSpec, y: numpy.ndarray) -> numpy.ndarray:
    """
    Link-wise convex conjugate sup_{x >= 0} (y x - F_ij(x)).
    """
    return spec.implementation.conjugate(numpy.asarray(y, dtype=float), spec.scale)

# -
