#!/usr/bin/env python
# -*- coding: utf-8 -*-

import logging
import numpy
import scipy.linalg
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import cg
from dataclasses import dataclass

from PyPURC.purc import PurcSolution
from PyPURC.perturbation import PerturbationSpec, hess_diag_F
from PyPURC.solver.base_solver import NotConvergedError

logger = logging.getLogger(__name__)

DENSE_LIMIT = 5000
PROJECTION_DENSE_LIMIT = 500
PSEUDOINVERSE_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class ActiveSet(object):
    mask: numpy.ndarray
    """ True on links with flow above the threshold """
    threshold: float = 0.0
    """ Flow threshold used to build the mask """

    @property
    def n_active(self) -> int:
        return int(numpy.count_nonzero(self.mask))

    @property
    def indices(self) -> numpy.ndarray:
        return numpy.flatnonzero(self.mask)

    @property
    def matrix(self) -> sparse.dia_matrix:
        """ Diagonal selection matrix B* """
        return sparse.diags(self.mask.astype(float))


@dataclass(frozen=True, eq=False)
class Projection(object):
    matrix: numpy.ndarray
    """ Dense projector P* (n_links x n_links) """
    active_set: ActiveSet
    """ Active set the projection was built for """
    rank: int
    """ Rank of A B* """

    @property
    def nullity(self) -> int:
        return self.active_set.n_active - self.rank


@dataclass(frozen=True, eq=False)
class BoundaryDiagnostic(object):
    near_boundary: bool
    """ True when the cost point is close to a change of the active set """
    vanishing_links: tuple = ()
    """ Active links whose flow is below the tolerance """
    activating_links: tuple = ()
    """ Inactive links whose reduced cost is within the tolerance of zero """
    tolerance: float = 1e-7

    def __bool__(self) -> bool:
        return not self.near_boundary


@dataclass(frozen=True, eq=False)
class PurcJacobian(object):
    matrix: numpy.ndarray
    """ Dense Jacobian of the optimal flows with respect to the link costs """
    active_set: ActiveSet
    """ Active set at the solution """
    boundary: BoundaryDiagnostic
    """ Boundary proximity of the cost point """
    link_ids: tuple = ()
    """ Row and column labels """

    @property
    def near_boundary(self) -> bool:
        return self.boundary.near_boundary


def active_mask(solution: PurcSolution, threshold: float = None) -> ActiveSet:
    """
    Links carrying flow above the threshold; by default the solver's relative threshold
    activity_tolerance * max(1, |x*|_inf).

    :param      solution:   The solution
    :type       solution:   PurcSolution
    :param      threshold:  Absolute flow threshold
    :type       threshold:  float

    :returns:   The active set.
    :rtype:     ActiveSet
    """
    if threshold is None:
        threshold = solution.activity_threshold

    return ActiveSet(mask=solution.flows > threshold, threshold=threshold)


def _as_mask(active_set: ActiveSet | numpy.ndarray) -> numpy.ndarray:
    if isinstance(active_set, ActiveSet):
        return active_set.mask
    return numpy.asarray(active_set, dtype=bool)


def _local_projection(block: numpy.ndarray) -> tuple[numpy.ndarray, int]:
    pseudo_inverse, rank = scipy.linalg.pinv(block, rtol=PSEUDOINVERSE_RTOL, return_rank=True)

    if rank == block.shape[1]:
        return numpy.zeros((rank, rank)), int(rank)

    local = numpy.eye(block.shape[1]) - pseudo_inverse @ block
    return 0.5 * (local + local.T), int(rank)


def projection(incidence, active_set: ActiveSet | numpy.ndarray) -> Projection:
    """
    Orthogonal projector onto {x : A x = 0, B* x = x}, P* = B* - (A B*)^+ A B*.

    :param      incidence:   The incidence matrix A
    :type       incidence:   sparse.spmatrix | numpy.ndarray
    :param      active_set:  The active set B*
    :type       active_set:  ActiveSet | numpy.ndarray

    :returns:   The projection.
    :rtype:     Projection
    """
    mask = _as_mask(active_set)
    if not isinstance(active_set, ActiveSet):
        active_set = ActiveSet(mask=mask)

    n_links = mask.size
    indices = numpy.flatnonzero(mask)
    matrix = numpy.zeros((n_links, n_links))

    if indices.size == 0:
        return Projection(matrix=matrix, active_set=active_set, rank=0)

    local, rank = _local_projection(sparse.csr_matrix(incidence)[:, indices].toarray())
    matrix[numpy.ix_(indices, indices)] = local

    return Projection(matrix=matrix, active_set=active_set, rank=int(rank))


get_projection = projection


def solve_on_active_links(
        incidence,
        mask: numpy.ndarray,
        weights: numpy.ndarray,
        vector: numpy.ndarray,
        tolerance: float = 1e-12,
        max_iterations: int = None) -> numpy.ndarray:
    """
    Returns y = W (v - A_a^T lambda) with W = diag(weights) on the active links and lambda
    solving the weighted Laplacian system (A_a W A_a^T) lambda = A_a W v, grounded at one
    node per connected group of active links. y is the W-weighted projection of v onto the
    flow-conserving directions; W = I gives P* v.

    :returns:   y on the active links.
    :rtype:     numpy.ndarray
    """
    block = sparse.csr_matrix(incidence)[:, mask].tocsr()
    local = numpy.asarray(vector, dtype=float)[mask]

    adjacency = (abs(block) @ abs(block).T).tocsr()
    touched = numpy.flatnonzero(adjacency.diagonal() > 0)

    _, labels = csgraph.connected_components(adjacency[touched][:, touched], directed=False)
    _, first = numpy.unique(labels, return_index=True)
    grounded = numpy.delete(touched, first)

    if grounded.size == 0:
        return weights * local

    reduced_block = block[grounded]
    laplacian = (reduced_block @ sparse.diags(weights) @ reduced_block.T).tocsr()
    rhs = reduced_block @ (weights * local)

    multipliers, info = cg(
        laplacian,
        rhs,
        rtol=tolerance,
        atol=0.0,
        maxiter=max_iterations or 10 * grounded.size,
        M=sparse.diags(1 / laplacian.diagonal())
    )

    if info != 0:
        raise NotConvergedError(f"Conjugate gradient solve did not converge (info={info})")

    return weights * (local - reduced_block.T @ multipliers)


def project(incidence, active_set: ActiveSet | numpy.ndarray, vector: numpy.ndarray) -> numpy.ndarray:
    """
    Applies P* to a vector. Dense for small active sets, iterative otherwise.
    """
    mask = _as_mask(active_set)
    vector = numpy.asarray(vector, dtype=float)

    result = numpy.zeros_like(vector)

    if not numpy.any(mask):
        return result

    if numpy.count_nonzero(mask) <= PROJECTION_DENSE_LIMIT:
        local, _ = _local_projection(sparse.csr_matrix(incidence)[:, mask].toarray())
        result[mask] = local @ vector[mask]
        return result

    result[mask] = solve_on_active_links(incidence, mask, numpy.ones(numpy.count_nonzero(mask)), vector)
    return result


def boundary_check(solution: PurcSolution, tolerance: float = 1e-7) -> BoundaryDiagnostic:
    """
    Flags cost points close to the activation boundary: active links with a flow below the
    tolerance, and inactive links leaving a node that carries flow whose reduced cost
    eta_i - eta_j - c_ij is within the tolerance of zero.

    :param      solution:   The solution
    :type       solution:   PurcSolution
    :param      tolerance:  Proximity tolerance
    :type       tolerance:  float

    :returns:   The diagnostic.
    :rtype:     BoundaryDiagnostic
    """
    network = solution.network
    flows = solution.flows
    potentials = solution.potentials

    vanishing = (flows > 0) & (flows < tolerance)

    throughput = numpy.zeros(network.n_nodes, dtype=bool)
    positive = flows > 0
    throughput[network.tails[positive]] = True
    throughput[network.heads[positive]] = True
    throughput[network.get_node_index(solution.problem.demand.origin)] = True

    with numpy.errstate(invalid='ignore'):
        reduced_cost = potentials[network.tails] - potentials[network.heads] - solution.cost

    activating = (
        (flows == 0)
        & throughput[network.tails]
        & (numpy.abs(numpy.nan_to_num(reduced_cost, nan=numpy.inf)) < tolerance)
    )

    link_ids = numpy.asarray(network.link_ids, dtype=object)
    diagnostic = BoundaryDiagnostic(
        near_boundary=bool(numpy.any(vanishing) or numpy.any(activating)),
        vanishing_links=tuple(link_ids[vanishing]),
        activating_links=tuple(link_ids[activating]),
        tolerance=tolerance
    )

    if diagnostic.near_boundary:
        logger.warning(
            f"Cost point is near the activation boundary: vanishing {diagnostic.vanishing_links}, "
            f"activating {diagnostic.activating_links}"
        )

    return diagnostic


def purc_jacobian(
        solution: PurcSolution,
        projection: Projection = None,
        perturbation: PerturbationSpec = None,
        boundary_tolerance: float = 1e-7) -> PurcJacobian:
    """
    Jacobian of the optimal flows with respect to the link costs,
    J = -(P* H P*)^+ with H = diag(F''(x*)).

    :param      solution:            The solution
    :type       solution:            PurcSolution
    :param      projection:          Precomputed projection, built from the solution when omitted
    :type       projection:          Projection
    :param      perturbation:        Perturbation, the solution's when omitted
    :type       perturbation:        PerturbationSpec
    :param      boundary_tolerance:  Tolerance of the boundary check
    :type       boundary_tolerance:  float

    :returns:   The Jacobian.
    :rtype:     PurcJacobian
    """
    perturbation = perturbation or solution.perturbation

    if projection is None:
        active_set = active_mask(solution)
        if active_set.n_active > DENSE_LIMIT:
            raise ValueError(
                f"Dense Jacobians are limited to {DENSE_LIMIT} active links, got {active_set.n_active}; "
                "use directional_sensitivity instead"
            )
        projection = get_projection(solution.network.incidence, active_set)

    active_set = projection.active_set
    indices = active_set.indices
    n_links = solution.network.n_links
    matrix = numpy.zeros((n_links, n_links))

    if projection.nullity > 0:
        local_projection = projection.matrix[numpy.ix_(indices, indices)]
        hessian = hess_diag_F(perturbation, solution.flows[indices])

        reduced_hessian = local_projection @ (hessian[:, None] * local_projection)
        reduced_hessian = 0.5 * (reduced_hessian + reduced_hessian.T)

        local = -scipy.linalg.pinvh(reduced_hessian, rtol=PSEUDOINVERSE_RTOL)
        matrix[numpy.ix_(indices, indices)] = 0.5 * (local + local.T)

    return PurcJacobian(
        matrix=matrix,
        active_set=active_set,
        boundary=boundary_check(solution, tolerance=boundary_tolerance),
        link_ids=tuple(solution.network.link_ids)
    )


def directional_sensitivity(
        solution: PurcSolution,
        delta: numpy.ndarray,
        demand_weight: float = 1.0,
        tolerance: float = 1e-12,
        max_iterations: int = None) -> numpy.ndarray:
    """
    Flow change demand_weight * J delta without forming J. With H the diagonal of F'' on the
    active links, J delta = -y where y = H^-1 (delta - A^T lambda) and lambda solves the
    grounded weighted Laplacian system (A H^-1 A^T) lambda = A H^-1 delta by conjugate gradients.

    :param      solution:        The solution
    :type       solution:        PurcSolution
    :param      delta:           Cost perturbation
    :type       delta:           numpy.ndarray
    :param      demand_weight:   Scale applied to the result
    :type       demand_weight:   float
    :param      tolerance:       Relative tolerance of the conjugate gradient solve
    :type       tolerance:       float
    :param      max_iterations:  Iteration cap of the conjugate gradient solve
    :type       max_iterations:  int

    :returns:   The flow change.
    :rtype:     numpy.ndarray
    """
    network = solution.network
    delta = numpy.asarray(delta, dtype=float)

    if delta.shape != (network.n_links,):
        raise ValueError(f"delta has shape {delta.shape}, expected ({network.n_links},)")

    active_set = active_mask(solution)
    indices = active_set.indices
    result = numpy.zeros(network.n_links)

    if indices.size == 0 or not numpy.any(delta[indices]):
        return result

    inverse_hessian = 1 / hess_diag_F(solution.perturbation, solution.flows[indices])

    local = solve_on_active_links(
        incidence=network.incidence,
        mask=active_set.mask,
        weights=inverse_hessian,
        vector=delta,
        tolerance=tolerance,
        max_iterations=max_iterations
    )

    result[indices] = -demand_weight * local

    return result

# -
