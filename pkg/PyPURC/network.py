#!/usr/bin/env python
# -*- coding: utf-8 -*-

import json
import logging
import numpy
import pandas
from pathlib import Path
from typing import Union
from functools import cached_property
from dataclasses import dataclass

import scipy.linalg
from scipy import sparse
from scipy.sparse import csgraph
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, field_validator

logger = logging.getLogger(__name__)

NodeId = Union[str, int]


class LinkRecord(BaseModel):
    """
    Schema of one link entry of a network file.
    """
    model_config = ConfigDict(extra='forbid', populate_by_name=True)

    id: str = Field(..., description="Unique link identifier")
    tail: str = Field(..., alias='from', description="Tail node of the link")
    head: str = Field(..., alias='to', description="Head node of the link")
    length: PositiveFloat = Field(..., description="Link length")
    t0: PositiveFloat = Field(..., description="Free-flow travel time")
    capacity: PositiveFloat = Field(..., description="Link capacity")

    @field_validator('id', 'tail', 'head', mode='before')
    @classmethod
    def _as_string(cls, value):
        return str(value)


class NetworkRecord(BaseModel):
    """
    Schema of a network file.
    """
    model_config = ConfigDict(extra='forbid')

    name: str | None = None
    description: str | None = None
    nodes: list[str]
    links: list[LinkRecord]

    @field_validator('nodes', mode='before')
    @classmethod
    def _as_strings(cls, value):
        return [str(node) for node in value]


@dataclass(frozen=True)
class Link(object):
    id: str
    """ Link identifier, unique within a network """
    tail: str
    """ Node the link leaves """
    head: str
    """ Node the link enters """
    length: float = 1.0
    """ Length of the link """
    free_flow_time: float = 1.0
    """ Free-flow travel time t0 """
    capacity: float = 1.0
    """ Capacity kappa """

    def __post_init__(self):
        object.__setattr__(self, 'id', str(self.id))
        object.__setattr__(self, 'tail', str(self.tail))
        object.__setattr__(self, 'head', str(self.head))

        if self.tail == self.head:
            raise ValueError(f"Link {self.id} is a self-loop on node {self.tail}")

        for name in ['length', 'free_flow_time', 'capacity']:
            value = getattr(self, name)
            if not numpy.isfinite(value) or value <= 0:
                raise ValueError(f"Link {self.id}: {name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class DemandVector(object):
    vector: numpy.ndarray
    """ -1 at the origin, +1 at the destination, 0 elsewhere """
    origin: str
    """ Origin node """
    destination: str
    """ Destination node """


@dataclass(frozen=True)
class ReducedConstraints(object):
    matrix: numpy.ndarray
    """ Full row rank matrix C """
    vector: numpy.ndarray
    """ Right-hand side d """
    rank: int
    """ Number of retained singular values """
    basis: numpy.ndarray
    """ Left singular vectors U_r, maps reduced multipliers back to node potentials """

    def is_satisfied(self, x: numpy.ndarray, tolerance: float = 1e-9) -> bool:
        return bool(numpy.abs(self.matrix @ x - self.vector).max(initial=0.0) <= tolerance)


@dataclass(frozen=True)
class ConnectivityReport(object):
    connected: bool
    """ Connectivity verdict for the requested notion (strong or weak) """
    strong: bool
    """ True if the verdict is for strong connectivity """
    n_components: int
    """ Number of components for the requested notion """
    unreachable_pairs: tuple = ()
    """ Ordered node pairs (i, j) with no directed path from i to j """
    n_unreachable: int = 0
    """ Total number of unreachable ordered pairs, also when the listing is truncated """

    def __bool__(self) -> bool:
        return self.connected


@dataclass(frozen=True, eq=False)
class Network(object):
    nodes: tuple
    """ Ordered node identifiers """
    links: tuple
    """ Ordered links, defining the column order of every link vector """
    name: str = ''
    """ Optional label """

    def __post_init__(self):
        object.__setattr__(self, 'nodes', tuple(str(node) for node in self.nodes))
        object.__setattr__(self, 'links', tuple(self.links))

        if len(self.nodes) == 0 or len(self.links) == 0:
            raise ValueError("A network needs at least one node and one link")

        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("Duplicate node identifiers in network")

        _ = self.incidence

    def __repr__(self) -> str:
        return f"Network(name={self.name!r}, n_nodes={self.n_nodes}, n_links={self.n_links})"

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @cached_property
    def node_index(self) -> dict:
        return {node: index for index, node in enumerate(self.nodes)}

    @cached_property
    def link_index(self) -> dict:
        return {link.id: index for index, link in enumerate(self.links)}

    @cached_property
    def link_ids(self) -> list:
        return [link.id for link in self.links]

    @cached_property
    def tails(self) -> numpy.ndarray:
        return numpy.asarray([self.node_index[link.tail] for link in self.links], dtype=int)

    @cached_property
    def heads(self) -> numpy.ndarray:
        return numpy.asarray([self.node_index[link.head] for link in self.links], dtype=int)

    @cached_property
    def lengths(self) -> numpy.ndarray:
        return numpy.asarray([link.length for link in self.links], dtype=float)

    @cached_property
    def free_flow_times(self) -> numpy.ndarray:
        return numpy.asarray([link.free_flow_time for link in self.links], dtype=float)

    @cached_property
    def capacities(self) -> numpy.ndarray:
        return numpy.asarray([link.capacity for link in self.links], dtype=float)

    @cached_property
    def incidence(self) -> sparse.csr_matrix:
        """
        Node-link incidence matrix, built once per network.

        :returns:   The incidence matrix.
        :rtype:     sparse.csr_matrix
        """
        return build_incidence(self)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        data = numpy.ones(self.n_links)
        adjacency = sparse.coo_matrix((data, (self.tails, self.heads)), shape=(self.n_nodes, self.n_nodes))
        adjacency = adjacency.tocsr()
        adjacency.data[:] = 1.0
        return adjacency

    def get_link(self, link_id: str) -> Link:
        return self.links[self.link_index[str(link_id)]]

    def get_node_index(self, node: NodeId) -> int:
        node = str(node)
        if node not in self.node_index:
            raise ValueError(f"Node {node} not found in network {self.name!r}")
        return self.node_index[node]

    def reachable_from(self, node: NodeId) -> numpy.ndarray:
        """
        Boolean mask of the nodes reachable from a node by a directed path (the node included).
        """
        order = csgraph.breadth_first_order(
            self.adjacency,
            i_start=self.get_node_index(node),
            directed=True,
            return_predecessors=False
        )
        mask = numpy.zeros(self.n_nodes, dtype=bool)
        mask[order] = True
        return mask

    def reaching(self, node: NodeId) -> numpy.ndarray:
        """
        Boolean mask of the nodes from which a node can be reached (the node included).
        """
        order = csgraph.breadth_first_order(
            self.adjacency.T.tocsr(),
            i_start=self.get_node_index(node),
            directed=True,
            return_predecessors=False
        )
        mask = numpy.zeros(self.n_nodes, dtype=bool)
        mask[order] = True
        return mask

    def to_dict(self) -> dict:
        return dict(
            name=self.name,
            nodes=list(self.nodes),
            links=[
                {
                    'id': link.id,
                    'from': link.tail,
                    'to': link.head,
                    'length': link.length,
                    't0': link.free_flow_time,
                    'capacity': link.capacity
                } for link in self.links
            ]
        )

    @classmethod
    def from_dict(cls, data: dict) -> 'Network':
        record = NetworkRecord.model_validate(data)
        return network_from_record(record)


def network_from_record(record: NetworkRecord) -> Network:
    links = [
        Link(
            id=entry.id,
            tail=entry.tail,
            head=entry.head,
            length=entry.length,
            free_flow_time=entry.t0,
            capacity=entry.capacity
        ) for entry in record.links
    ]

    return Network(nodes=record.nodes, links=links, name=record.name or '')


def build_incidence(network: Network) -> sparse.csr_matrix:
    """
    Builds the node-link incidence matrix A with -1 at the tail row and +1 at the head row
    of every link column.

    :param      network:  The network
    :type       network:  Network

    :returns:   Sparse matrix of shape (n_nodes, n_links).
    :rtype:     sparse.csr_matrix
    """
    seen = set()
    for link in network.links:
        if link.id in seen:
            raise ValueError(f"Duplicate link id: {link.id}")
        seen.add(link.id)

        for node in (link.tail, link.head):
            if node not in network.node_index:
                raise ValueError(f"Link {link.id} references unknown node {node}")

    columns = numpy.arange(network.n_links)
    rows = numpy.concatenate([network.tails, network.heads])
    data = numpy.concatenate([-numpy.ones(network.n_links), numpy.ones(network.n_links)])

    incidence = sparse.coo_matrix(
        (data, (rows, numpy.concatenate([columns, columns]))),
        shape=(network.n_nodes, network.n_links)
    )

    return incidence.tocsr()


def unit_demand(network: Network, origin: NodeId, destination: NodeId) -> DemandVector:
    """
    Encodes one unit of demand from origin to destination.

    :param      network:      The network
    :type       network:      Network
    :param      origin:       The origin node
    :type       origin:       NodeId
    :param      destination:  The destination node
    :type       destination:  NodeId

    :returns:   The demand vector.
    :rtype:     DemandVector
    """
    origin, destination = str(origin), str(destination)

    if origin == destination:
        raise ValueError(f"Origin and destination must differ, got {origin} twice")

    vector = numpy.zeros(network.n_nodes)
    vector[network.get_node_index(origin)] = -1.0
    vector[network.get_node_index(destination)] = +1.0

    vector.setflags(write=False)

    return DemandVector(vector=vector, origin=origin, destination=destination)


def validate_reachable(network: Network, origin: NodeId, destination: NodeId) -> bool:
    return bool(network.reachable_from(origin)[network.get_node_index(destination)])


def relevant_links(network: Network, origin: NodeId, destination: NodeId) -> numpy.ndarray:
    """
    Mask of the links lying on at least one directed walk from origin to destination.
    Every other link carries zero flow for this origin-destination pair.

    :returns:   Boolean mask over links.
    :rtype:     numpy.ndarray
    """
    forward = network.reachable_from(origin)
    backward = network.reaching(destination)

    return forward[network.tails] & backward[network.heads]


def validate_connected(network: Network, strong: bool = False, max_pairs: int = 1000) -> ConnectivityReport:
    """
    Checks connectivity of the network. The verdict is weak connectivity by default and
    strong connectivity when requested; the diagnostic always lists the ordered node pairs
    that no directed path joins.

    :param      network:    The network
    :type       network:    Network
    :param      strong:     Use strong connectivity for the verdict
    :type       strong:     bool
    :param      max_pairs:  Maximum number of unreachable pairs listed
    :type       max_pairs:  int

    :returns:   The connectivity report.
    :rtype:     ConnectivityReport
    """
    connection = 'strong' if strong else 'weak'
    n_components, _ = csgraph.connected_components(network.adjacency, directed=True, connection=connection)

    unreachable_pairs = []
    n_unreachable = 0
    for index, node in enumerate(network.nodes):
        reachable = network.reachable_from(node)
        missing = numpy.flatnonzero(~reachable)
        n_unreachable += missing.size
        for target in missing:
            if len(unreachable_pairs) < max_pairs:
                unreachable_pairs.append((node, network.nodes[target]))

    if n_unreachable > 0:
        logger.info(f"{n_unreachable} ordered node pairs are not joined by a directed path")

    return ConnectivityReport(
        connected=n_components == 1,
        strong=strong,
        n_components=int(n_components),
        unreachable_pairs=tuple(unreachable_pairs),
        n_unreachable=int(n_unreachable)
    )


def reduce_constraints(
        incidence: sparse.spmatrix | numpy.ndarray,
        demand: DemandVector | numpy.ndarray,
        tolerance: float = 1e-10) -> ReducedConstraints:
    """
    Replaces A x = b by an equivalent full row rank system C x = d using the compact
    singular value decomposition A = U_r D_r V_r^T, C = D_r V_r^T and d = U_r^T b.

    :param      incidence:  The incidence matrix A
    :type       incidence:  sparse.spmatrix | numpy.ndarray
    :param      demand:     The demand vector b
    :type       demand:     DemandVector | numpy.ndarray
    :param      tolerance:  Relative singular value cutoff
    :type       tolerance:  float

    :returns:   The reduced constraints.
    :rtype:     ReducedConstraints
    """
    matrix = incidence.toarray() if sparse.issparse(incidence) else numpy.asarray(incidence, dtype=float)
    vector = demand.vector if isinstance(demand, DemandVector) else numpy.asarray(demand, dtype=float)

    U, singular_values, Vt = scipy.linalg.svd(matrix, full_matrices=False)

    cutoff = tolerance * singular_values.max(initial=0.0)
    rank = int(numpy.count_nonzero(singular_values > cutoff))

    if rank < min(matrix.shape) - 1:
        logger.info(f"Constraint matrix has rank {rank} for {matrix.shape[0]} nodes")

    basis = U[:, :rank]
    reduced_matrix = singular_values[:rank, None] * Vt[:rank]

    return ReducedConstraints(
        matrix=reduced_matrix,
        vector=basis.T @ vector,
        rank=rank,
        basis=basis
    )


def load_network_json(path: str | Path) -> Network:
    with open(path, 'r') as f:
        data = json.load(f)

    return Network.from_dict(data)


def load_network_csv(path: str | Path) -> Network:
    """
    Loads a link-list CSV with header id,from,to,length,t0,capacity. Nodes are ordered by
    first appearance.
    """
    frame = pandas.read_csv(path, dtype={'id': str, 'from': str, 'to': str, 'length': float, 't0': float, 'capacity': float})

    expected = ['id', 'from', 'to', 'length', 't0', 'capacity']
    missing = [column for column in expected if column not in frame.columns]
    if missing:
        raise ValueError(f"CSV network {path} is missing columns {missing}")

    unknown = [column for column in frame.columns if column not in expected]
    if unknown:
        raise ValueError(f"CSV network {path} has unknown columns {unknown}")

    nodes = list(dict.fromkeys(numpy.ravel(frame[['from', 'to']].to_numpy()).tolist()))

    record = NetworkRecord(
        name=Path(path).stem,
        nodes=nodes,
        links=[LinkRecord.model_validate(row) for row in frame.to_dict(orient='records')]
    )

    return network_from_record(record)


def load_network(network_name: str) -> Network:
    """
    Loads one of the networks shipped with the package, or a network file when a path is given.

    :param      network_name:  The network name or file path
    :type       network_name:  str

    :returns:   The network.
    :rtype:     Network
    """
    from PyPURC.tools.directories import networks_path

    path = Path(network_name)
    if not path.exists():
        path = networks_path.joinpath(f'{network_name}.json')

    if not path.exists():
        available = sorted(p.stem for p in networks_path.glob('*.json'))
        raise ValueError(f"Unknown network {network_name!r}, available: {available}")

    if path.suffix == '.csv':
        return load_network_csv(path)

    return load_network_json(path)


def load_pace_parameters() -> dict:
    """
    Loads the shipped pace/dummy link cost parameter table of the large-scale road network demonstration.
    """
    from PyPURC.tools.directories import data_path

    with open(data_path.joinpath('pace_parameters.json'), 'r') as f:
        return json.load(f)

# -
