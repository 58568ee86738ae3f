#!/usr/bin/env python
# -*- coding: utf-8 -*-

import re
import logging
import numpy
import pandas
import scipy.linalg
from scipy import stats
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor

from PyPURC.equilibrium import EquilibriumProblem, EquilibriumSolution
from PyPURC.link_cost import LinkCostFunction, bpr_inverse_derivs, bpr_parameter_derivatives
from PyPURC.sensitivity import PurcJacobian, purc_jacobian, directional_sensitivity

logger = logging.getLogger(__name__)

PARAMETERS = ('t0', 'kappa')


@dataclass(frozen=True)
class ParameterSpec(object):
    parameter: str
    """ Varying link-cost parameter, 't0' or 'kappa' """
    link_ids: tuple = None
    """ Order of the parameter coordinates, the network link order when omitted """

    def __post_init__(self):
        parameter = 'kappa' if self.parameter == 'capacity' else self.parameter
        if parameter not in PARAMETERS:
            raise ValueError(f"Unknown parameter {self.parameter!r}, expected one of {PARAMETERS}")
        object.__setattr__(self, 'parameter', parameter)

        if self.link_ids is not None:
            object.__setattr__(self, 'link_ids', tuple(str(link_id) for link_id in self.link_ids))

    def column_order(self, network) -> numpy.ndarray:
        """
        Link index of every parameter coordinate.
        """
        if self.link_ids is None:
            return numpy.arange(network.n_links)

        if sorted(self.link_ids) != sorted(network.link_ids):
            raise ValueError("ParameterSpec link list must contain every network link exactly once")

        return numpy.asarray([network.link_index[link_id] for link_id in self.link_ids])

    def values(self, cost_function: LinkCostFunction, network) -> numpy.ndarray:
        return cost_function.parameter(self.parameter)[self.column_order(network)]


@dataclass(frozen=True, eq=False)
class CostJacobian(object):
    matrix: numpy.ndarray
    """ Jacobian of the equilibrium costs with respect to the parameters """
    parameter_spec: ParameterSpec
    """ Parameter family and column order """
    type_jacobians: tuple
    """ Unit-demand route choice Jacobians of every type at c* """
    free_flow: numpy.ndarray
    """ Links resting at free flow """
    condition_number: float
    """ Condition number of the linear system on the congested links """
    near_boundary: bool
    """ True if any type is close to a change of its active set """


@dataclass(frozen=True, eq=False)
class EquilibriumJacobians(object):
    parameter_spec: ParameterSpec
    """ Parameter family and column order """
    cost_jacobian: numpy.ndarray
    """ d c* / d theta """
    type_flow_jacobians: tuple
    """ d x^w* / d theta for every type, unit demand """
    flow_jacobian: numpy.ndarray
    """ d x* / d theta of the aggregate flows """
    flows: numpy.ndarray
    """ Aggregate equilibrium flows the Jacobians are evaluated at """
    link_ids: tuple
    """ Row labels """
    column_ids: tuple
    """ Column labels """
    near_boundary: bool = False
    """ Inherited from the per-type route choice Jacobians """


@dataclass(frozen=True, eq=False)
class ShiftEstimate(object):
    flows: numpy.ndarray
    """ First-order estimate of the shifted equilibrium flows """
    clamped: numpy.ndarray
    """ Links whose negative estimate was clamped to zero """

    @property
    def any_clamped(self) -> bool:
        return bool(numpy.any(self.clamped))


@dataclass(frozen=True)
class Shift(object):
    parameter: str
    link_id: str
    amount: float
    relative: bool


@dataclass(frozen=True, eq=False)
class UncertaintyInput(object):
    mean: numpy.ndarray
    """ Mean of the parameters """
    covariance: numpy.ndarray
    """ Covariance matrix of the parameters """
    level: float = 0.90
    """ Confidence level of the reported intervals """

    def __post_init__(self):
        mean = numpy.atleast_1d(numpy.asarray(self.mean, dtype=float))
        covariance = numpy.atleast_2d(numpy.asarray(self.covariance, dtype=float))

        if covariance.shape != (mean.size, mean.size):
            raise ValueError(f"Covariance has shape {covariance.shape}, expected ({mean.size}, {mean.size})")

        if numpy.abs(covariance - covariance.T).max(initial=0.0) > 1e-12:
            raise ValueError("Parameter covariance must be symmetric")

        if numpy.linalg.eigvalsh(covariance).min(initial=0.0) < -1e-10:
            raise ValueError("Parameter covariance must be positive semidefinite")

        if not 0 < self.level < 1:
            raise ValueError(f"Confidence level must lie in (0, 1), got {self.level}")

        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'covariance', covariance)

    @property
    def std(self) -> numpy.ndarray:
        return numpy.sqrt(numpy.clip(numpy.diag(self.covariance), 0, None))


@dataclass(frozen=True, eq=False)
class UncertaintyResult(object):
    mean: numpy.ndarray
    """ Mean equilibrium flows """
    variance: numpy.ndarray
    """ Var[X*] """
    covariance: numpy.ndarray
    """ Cov[X*, Theta] """
    correlation: numpy.ndarray
    """ Corr[X*, Theta], NaN where a standard deviation is zero """
    std: numpy.ndarray
    """ Standard deviation of the flows """
    cv: numpy.ndarray
    """ Coefficient of variation, NaN where the mean flow is zero """
    lower: numpy.ndarray
    """ Lower confidence bound """
    upper: numpy.ndarray
    """ Upper confidence bound """
    level: float
    """ Confidence level """

    def to_frame(self, link_ids) -> pandas.DataFrame:
        return pandas.DataFrame(
            dict(mean=self.mean, std=self.std, cv=self.cv, lower=self.lower, upper=self.upper),
            index=pandas.Index(list(link_ids), name='link')
        )


@dataclass(frozen=True)
class SubstitutionPair(object):
    flow_link: str
    """ Link whose flow responds """
    cost_link: str
    """ Link whose cost (or parameter) changes """
    value: float
    """ Jacobian entry """
    relation: str
    """ 'substitute', 'complement' or 'independent' """


@dataclass(frozen=True)
class SubstitutionReport(object):
    pairs: tuple
    tolerance: float = 1e-6

    def relation(self, flow_link: str, cost_link: str) -> str:
        for pair in self.pairs:
            if pair.flow_link == str(flow_link) and pair.cost_link == str(cost_link):
                return pair.relation
        raise KeyError(f"No pair ({flow_link}, {cost_link})")

    @property
    def complements(self) -> list:
        return [pair for pair in self.pairs if pair.relation == 'complement']

    def to_frame(self) -> pandas.DataFrame:
        return pandas.DataFrame(
            [(p.flow_link, p.cost_link, p.value, p.relation) for p in self.pairs],
            columns=['flow_link', 'cost_link', 'value', 'relation']
        )


@dataclass(frozen=True, eq=False)
class MonteCarloResult(object):
    mean: numpy.ndarray
    """ Sample mean of the equilibrium flows """
    covariance: numpy.ndarray
    """ Sample covariance of the equilibrium flows """
    samples: numpy.ndarray = field(repr=False)
    """ Equilibrium flows, one row per sample """
    n_resampled: int = 0
    """ Number of parameter draws replaced because of negative entries """
    n_unconverged: int = 0
    """ Number of samples whose equilibrium did not converge """

    @property
    def variance(self) -> numpy.ndarray:
        return numpy.diag(self.covariance)


def get_type_jacobians(eq: EquilibriumSolution, boundary_tolerance: float = 1e-7) -> tuple:
    return tuple(
        purc_jacobian(solution, boundary_tolerance=boundary_tolerance) for solution in eq.type_solutions
    )


def equilibrium_cost_jacobian(
        eq: EquilibriumSolution,
        spec: ParameterSpec,
        boundary_tolerance: float = 1e-7) -> CostJacobian:
    """
    Sensitivity of the equilibrium link costs to the link-cost parameters, from the
    implicit equilibrium condition zeta^-1(c*; theta) = x*(c*):

        d c* / d theta = -[grad_c zeta^-1 - grad x*(c*)]^-1 grad_theta zeta^-1.

    Links resting at free flow have an infinite inverse-cost derivative; their cost moves
    with the parameter only, d c / d theta = d zeta / d theta at zero flow. The system on the
    remaining links is positive definite and solved by Cholesky factorization.

    :param      eq:                  Converged equilibrium
    :type       eq:                  EquilibriumSolution
    :param      spec:                Parameter family and order
    :type       spec:                ParameterSpec
    :param      boundary_tolerance:  Tolerance of the per-type boundary checks
    :type       boundary_tolerance:  float

    :returns:   The cost Jacobian.
    :rtype:     CostJacobian
    """
    network = eq.network
    cost_function = eq.problem.cost_function
    n_links = network.n_links

    type_jacobians = get_type_jacobians(eq, boundary_tolerance=boundary_tolerance)
    near_boundary = any(jacobian.near_boundary for jacobian in type_jacobians)

    if near_boundary:
        logger.warning("Equilibrium cost Jacobian evaluated near an activation boundary, result may be unreliable")

    flow_cost_jacobian = sum(q * jacobian.matrix for q, jacobian in zip(eq.demands, type_jacobians))

    d_cost, d_t0, d_kappa = bpr_inverse_derivs(cost_function, eq.costs)
    d_parameter = d_t0 if spec.parameter == 't0' else d_kappa

    free_flow = ~numpy.isfinite(d_cost) | (eq.costs <= cost_function.free_flow_time)
    congested = ~free_flow

    zeta_t0, zeta_kappa = bpr_parameter_derivatives(cost_function, numpy.zeros(n_links))
    zeta_parameter = zeta_t0 if spec.parameter == 't0' else zeta_kappa

    matrix = numpy.zeros((n_links, n_links))
    matrix[free_flow, free_flow] = zeta_parameter[free_flow]

    condition_number = 1.0
    if numpy.any(congested):
        system = numpy.diag(d_cost[congested]) - flow_cost_jacobian[numpy.ix_(congested, congested)]
        system = 0.5 * (system + system.T)

        rhs = -numpy.diag(d_parameter)[congested] + flow_cost_jacobian[numpy.ix_(congested, free_flow)] @ matrix[free_flow]

        try:
            factor = scipy.linalg.cho_factor(system)
        except numpy.linalg.LinAlgError as error:
            raise ValueError(
                "Equilibrium sensitivity system is not positive definite; "
                "the equilibrium is not converged or the cost functions are not increasing"
            ) from error

        matrix[congested] = scipy.linalg.cho_solve(factor, rhs)
        condition_number = float(numpy.linalg.cond(system))

    logger.info(f"Equilibrium cost Jacobian for {spec.parameter}: {numpy.count_nonzero(free_flow)} free-flow links, condition number {condition_number:.3e}")

    return CostJacobian(
        matrix=matrix[:, spec.column_order(network)],
        parameter_spec=spec,
        type_jacobians=type_jacobians,
        free_flow=free_flow,
        condition_number=condition_number,
        near_boundary=near_boundary
    )


def equilibrium_flow_jacobian(eq: EquilibriumSolution, cost_jacobian: CostJacobian | numpy.ndarray, spec: ParameterSpec = None) -> EquilibriumJacobians:
    """
    Chain rule from the cost Jacobian to the per-type and aggregate flow Jacobians,
    d x^w* / d theta = grad x^w*(c*) d c* / d theta, d x* / d theta = sum_w q^w d x^w* / d theta.

    :param      eq:             Converged equilibrium
    :type       eq:             EquilibriumSolution
    :param      cost_jacobian:  Output of equilibrium_cost_jacobian, or a plain matrix
    :type       cost_jacobian:  CostJacobian | numpy.ndarray
    :param      spec:           Parameter spec, required with a plain matrix
    :type       spec:           ParameterSpec

    :returns:   The flow Jacobians.
    :rtype:     EquilibriumJacobians
    """
    network = eq.network

    if isinstance(cost_jacobian, CostJacobian):
        matrix = cost_jacobian.matrix
        spec = cost_jacobian.parameter_spec
        type_jacobians = cost_jacobian.type_jacobians
        near_boundary = cost_jacobian.near_boundary
    else:
        matrix = numpy.asarray(cost_jacobian, dtype=float)
        spec = spec or ParameterSpec('kappa')
        type_jacobians = get_type_jacobians(eq)
        near_boundary = any(jacobian.near_boundary for jacobian in type_jacobians)

    if matrix.ndim != 2 or matrix.shape[0] != network.n_links:
        raise ValueError(f"Cost Jacobian has shape {matrix.shape}, expected ({network.n_links}, n_parameters)")

    type_flow_jacobians = tuple(jacobian.matrix @ matrix for jacobian in type_jacobians)
    flow_jacobian = sum(q * jacobian for q, jacobian in zip(eq.demands, type_flow_jacobians))

    column_ids = tuple(numpy.asarray(network.link_ids, dtype=object)[spec.column_order(network)])

    return EquilibriumJacobians(
        parameter_spec=spec,
        cost_jacobian=matrix,
        type_flow_jacobians=type_flow_jacobians,
        flow_jacobian=flow_jacobian,
        flows=eq.flows.copy(),
        link_ids=tuple(network.link_ids),
        column_ids=column_ids,
        near_boundary=near_boundary
    )


def parse_shift(text: str) -> Shift:
    """
    Parses a parameter shift such as 'kappa:1-2:+5%' (relative) or 't0:1-2:-0.5' (absolute).
    """
    match = re.fullmatch(r'\s*(t0|kappa|capacity):([^:]+):([+-]?[0-9.eE+-]+)(%?)\s*', text)
    if match is None:
        raise ValueError(f"Malformed shift {text!r}, expected e.g. 'kappa:1-2:+5%'")

    parameter, link_id, amount, percent = match.groups()
    try:
        amount = float(amount)
    except ValueError as error:
        raise ValueError(f"Malformed shift amount in {text!r}") from error

    return Shift(
        parameter='kappa' if parameter == 'capacity' else parameter,
        link_id=link_id,
        amount=amount / 100 if percent else amount,
        relative=bool(percent)
    )


def shift_vector(shifts: list, spec: ParameterSpec, cost_function: LinkCostFunction, network) -> numpy.ndarray:
    """
    Parameter shift epsilon_theta in the coordinates of spec.
    """
    values = spec.values(cost_function, network)
    column_ids = [network.link_ids[index] for index in spec.column_order(network)]
    vector = numpy.zeros(values.size)

    for shift in shifts:
        shift = parse_shift(shift) if isinstance(shift, str) else shift

        if shift.parameter != spec.parameter:
            raise ValueError(f"Shift on {shift.parameter} does not match Jacobian parameter {spec.parameter}")

        if shift.link_id not in column_ids:
            raise ValueError(f"Unknown link {shift.link_id} in shift")

        column = column_ids.index(shift.link_id)
        vector[column] += shift.amount * values[column] if shift.relative else shift.amount

    return vector


def estimate_shifted_solution(eq: EquilibriumSolution, jac: EquilibriumJacobians, shift: numpy.ndarray) -> ShiftEstimate:
    """
    First-order estimate x*(theta + epsilon) ~ x*(theta) + grad x*(theta) epsilon. Negative
    estimates are clamped to zero and flagged.

    :param      eq:     Unperturbed equilibrium
    :type       eq:     EquilibriumSolution
    :param      jac:    Flow Jacobians at the equilibrium
    :type       jac:    EquilibriumJacobians
    :param      shift:  Parameter shift in the Jacobian's coordinates
    :type       shift:  numpy.ndarray

    :returns:   The estimate.
    :rtype:     ShiftEstimate
    """
    shift = numpy.asarray(shift, dtype=float)
    if shift.shape != (jac.flow_jacobian.shape[1],):
        raise ValueError(f"Shift has shape {shift.shape}, expected ({jac.flow_jacobian.shape[1]},)")

    flows = eq.flows + jac.flow_jacobian @ shift
    clamped = flows < 0

    if numpy.any(clamped):
        logger.warning(f"Clamped {numpy.count_nonzero(clamped)} negative flow estimates to zero")
        flows = numpy.where(clamped, 0.0, flows)

    return ShiftEstimate(flows=flows, clamped=clamped)


def confidence_intervals(mean, std, level: float = 0.90) -> tuple[numpy.ndarray, numpy.ndarray]:
    """
    Two-sided normal confidence intervals mean -+ z std.

    :param      mean:   Means
    :type       mean:   array-like
    :param      std:    Standard deviations
    :type       std:    array-like
    :param      level:  Confidence level in (0, 1)
    :type       level:  float

    :returns:   (lower, upper)
    :rtype:     tuple
    """
    if not 0 < level < 1:
        raise ValueError(f"Confidence level must lie in (0, 1), got {level}")

    coverage_factor = stats.norm.ppf(0.5 + level / 2)
    mean = numpy.asarray(mean, dtype=float)
    std = numpy.asarray(std, dtype=float)

    return mean - coverage_factor * std, mean + coverage_factor * std


def propagate_uncertainty(
        jac: EquilibriumJacobians | numpy.ndarray,
        input: UncertaintyInput,
        mean_flows: numpy.ndarray = None) -> UncertaintyResult:
    """
    Multivariate delta method: Var[X*] = J K J^T, Cov[X*, Theta] = J K and
    Corr[X*, Theta] = Cov / (sigma_X sigma_Theta).

    :param      jac:         Flow Jacobians at the parameter mean, or a plain matrix
    :type       jac:         EquilibriumJacobians | numpy.ndarray
    :param      input:       Parameter mean and covariance
    :type       input:       UncertaintyInput
    :param      mean_flows:  Flows at the parameter mean, taken from jac when omitted
    :type       mean_flows:  numpy.ndarray

    :returns:   The propagated moments and intervals.
    :rtype:     UncertaintyResult
    """
    if isinstance(jac, EquilibriumJacobians):
        matrix = jac.flow_jacobian
        mean_flows = jac.flows if mean_flows is None else mean_flows
    else:
        matrix = numpy.atleast_2d(numpy.asarray(jac, dtype=float))

    if mean_flows is None:
        raise ValueError("Mean flows are required with a plain Jacobian matrix")

    mean_flows = numpy.atleast_1d(numpy.asarray(mean_flows, dtype=float))

    if matrix.shape[1] != input.mean.size:
        raise ValueError(f"Jacobian has {matrix.shape[1]} columns, parameter vector has {input.mean.size} entries")

    variance = matrix @ input.covariance @ matrix.T
    variance = 0.5 * (variance + variance.T)
    cross_covariance = matrix @ input.covariance

    std = numpy.sqrt(numpy.clip(numpy.diag(variance), 0, None))
    parameter_std = input.std

    with numpy.errstate(divide='ignore', invalid='ignore'):
        scale = numpy.outer(std, parameter_std)
        correlation = numpy.where(scale > 0, cross_covariance / scale, numpy.nan)
        correlation = numpy.clip(correlation, -1, 1)
        cv = numpy.where(mean_flows != 0, std / mean_flows, numpy.nan)

    lower, upper = confidence_intervals(mean_flows, std, input.level)

    return UncertaintyResult(
        mean=mean_flows,
        variance=variance,
        covariance=cross_covariance,
        correlation=correlation,
        std=std,
        cv=cv,
        lower=lower,
        upper=upper,
        level=input.level
    )


def independent_uncertainty(mean, cv: float, level: float = 0.90) -> UncertaintyInput:
    """
    Independent parameters sharing one coefficient of variation.
    """
    mean = numpy.asarray(mean, dtype=float)
    return UncertaintyInput(mean=mean, covariance=numpy.diag((cv * mean)**2), level=level)


def substitution_report(
        jacobian: PurcJacobian | EquilibriumJacobians | numpy.ndarray,
        tolerance: float = 1e-6,
        link_ids=None) -> SubstitutionReport:
    """
    Classifies every ordered pair (a, b), a != b, from the sign of d x_a / d c_b: a positive
    entry means flow moves onto a when b becomes dearer (substitutes), a negative entry means
    flow leaves a as well (complements). For capacity Jacobians the sign is flipped since a
    capacity increase lowers the cost.

    :param      jacobian:   Route choice or equilibrium Jacobian
    :type       jacobian:   PurcJacobian | EquilibriumJacobians | numpy.ndarray
    :param      tolerance:  Entries within the tolerance of zero are independent
    :type       tolerance:  float
    :param      link_ids:   Row and column labels for a plain matrix
    :type       link_ids:   list

    :returns:   The classified pairs.
    :rtype:     SubstitutionReport
    """
    if isinstance(jacobian, PurcJacobian):
        matrix = jacobian.matrix
        row_ids = column_ids = jacobian.link_ids
    elif isinstance(jacobian, EquilibriumJacobians):
        sign = -1.0 if jacobian.parameter_spec.parameter == 'kappa' else 1.0
        matrix = sign * jacobian.flow_jacobian
        row_ids, column_ids = jacobian.link_ids, jacobian.column_ids
    else:
        matrix = numpy.asarray(jacobian, dtype=float)
        link_ids = link_ids if link_ids is not None else [str(index) for index in range(matrix.shape[0])]
        row_ids = column_ids = tuple(str(link_id) for link_id in link_ids)

    pairs = []
    for row, flow_link in enumerate(row_ids):
        for column, cost_link in enumerate(column_ids):
            if flow_link == cost_link:
                continue

            value = float(matrix[row, column])
            if value > tolerance:
                relation = 'substitute'
            elif value < -tolerance:
                relation = 'complement'
            else:
                relation = 'independent'

            pairs.append(SubstitutionPair(flow_link=flow_link, cost_link=cost_link, value=value, relation=relation))

    report = SubstitutionReport(pairs=tuple(pairs), tolerance=tolerance)

    for pair in report.complements:
        logger.info(f"Links {pair.flow_link} and {pair.cost_link} are complements ({pair.value:.4g})")

    return report


def aggregate_directional_sensitivity(eq: EquilibriumSolution, delta: numpy.ndarray) -> numpy.ndarray:
    """
    Summed link-flow change of all types for a cost perturbation at fixed equilibrium costs,
    sum_w q^w grad x^w*(c*) delta, without forming any Jacobian.
    """
    return sum(
        directional_sensitivity(solution, delta, demand_weight=q)
        for q, solution in zip(eq.demands, eq.type_solutions)
    )


def sample_parameters(input: UncertaintyInput, n_samples: int, seed: int = 0) -> tuple[numpy.ndarray, int]:
    """
    Draws parameters from N(mean, K), redrawing every sample with a negative entry. Any
    redraw makes the samples a truncated normal, so callers should report the count.

    :returns:   (samples, number of redrawn samples)
    :rtype:     tuple
    """
    rng = numpy.random.default_rng(seed)
    samples = rng.multivariate_normal(input.mean, input.covariance, size=n_samples, method='eigh')

    n_resampled = 0
    for _ in range(1000):
        negative = numpy.any(samples < 0, axis=1)
        if not numpy.any(negative):
            break
        n_resampled += int(numpy.count_nonzero(negative))
        samples[negative] = rng.multivariate_normal(input.mean, input.covariance, size=int(negative.sum()), method='eigh')
    else:
        raise ValueError("Could not draw nonnegative parameter samples, the coefficient of variation is too large")

    if n_resampled:
        logger.warning(f"Redrew {n_resampled} parameter samples with negative entries")

    return samples, n_resampled


def monte_carlo_uncertainty(
        problem: EquilibriumProblem,
        spec: ParameterSpec,
        input: UncertaintyInput,
        n_samples: int = 1000,
        seed: int = 0,
        threads: int = None,
        initial_costs: numpy.ndarray = None) -> MonteCarloResult:
    """
    Simulation oracle for propagate_uncertainty: samples the parameters, re-solves the
    equilibrium for every sample and returns the sample moments of the flows. Samples are
    drawn up front, so results do not depend on the number of threads.

    :param      problem:        Equilibrium problem at the parameter mean
    :type       problem:        EquilibriumProblem
    :param      spec:           Sampled parameter family and order
    :type       spec:           ParameterSpec
    :param      input:          Parameter mean and covariance
    :type       input:          UncertaintyInput
    :param      n_samples:      Number of samples
    :type       n_samples:      int
    :param      seed:           Seed of the generator
    :type       seed:           int
    :param      threads:        Worker threads over samples
    :type       threads:        int
    :param      initial_costs:  Costs to start every equilibrium from
    :type       initial_costs:  numpy.ndarray

    :returns:   The sample moments.
    :rtype:     MonteCarloResult
    """
    network = problem.network
    order = spec.column_order(network)
    samples, n_resampled = sample_parameters(input, n_samples=n_samples, seed=seed)

    options = replace(problem.options, threads=1)

    def solve_sample(parameters: numpy.ndarray) -> EquilibriumSolution:
        values = problem.cost_function.parameter(spec.parameter)
        values[order] = parameters
        sample_problem = EquilibriumProblem(
            network=network,
            types=problem.types,
            perturbation=problem.perturbation,
            cost_function=problem.cost_function.replace(spec.parameter, values),
            options=options
        )
        return sample_problem.solve(initial_costs=initial_costs)

    with ThreadPoolExecutor(max_workers=threads) as executor:
        solutions = list(executor.map(solve_sample, samples))

    n_unconverged = sum(not solution.converged for solution in solutions)
    if n_unconverged:
        logger.warning(f"{n_unconverged} of {n_samples} sampled equilibria did not converge")

    flows = numpy.vstack([solution.flows for solution in solutions])

    return MonteCarloResult(
        mean=flows.mean(axis=0),
        covariance=numpy.atleast_2d(numpy.cov(flows, rowvar=False)),
        samples=flows,
        n_resampled=n_resampled,
        n_unconverged=n_unconverged
    )

# -
