#!/usr/bin/env python
# -*- coding: utf-8 -*-

import json
import logging
from pathlib import Path
from typing import Literal, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, PrivateAttr, field_validator

from PyPURC.network import Network, load_network, unit_demand
from PyPURC.perturbation import PerturbationSpec, get_scale
from PyPURC.link_cost import LinkCostFunction
from PyPURC.purc import PurcOptions, PurcProblem
from PyPURC.equilibrium import EquilibriumOptions, EquilibriumProblem, TravelerType

logger = logging.getLogger(__name__)

ScaleConfig = Union[Literal['length', 'one', 't0'], PositiveFloat, dict]


class DemandRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    origin: str
    destination: str
    q: PositiveFloat = 1.0

    @field_validator('origin', 'destination', mode='before')
    @classmethod
    def _as_string(cls, value):
        return str(value)


class PerturbationRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    family: Literal['entropic', 'quadratic'] = 'entropic'
    scale: ScaleConfig = 'length'


class BprRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    alpha: PositiveFloat = 0.15
    beta: PositiveFloat = 4.0


class UncertaintyRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    cv: PositiveFloat = 0.30
    level: float = Field(0.90, gt=0, lt=1)


class AnalysisRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    parameter: Literal['t0', 'kappa'] = 'kappa'
    shifts: list[str] = Field(default_factory=list)
    uncertainty: UncertaintyRecord = Field(default_factory=UncertaintyRecord)
    substitution_tolerance: PositiveFloat = 1e-6


class TolerancesRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    feasibility: PositiveFloat = 1e-10
    stationarity: PositiveFloat = 1e-8
    activity: PositiveFloat = 1e-9
    boundary: PositiveFloat = 1e-7
    equilibrium: PositiveFloat = 1e-8
    purc_max_iterations: PositiveInt = 200
    equilibrium_max_iterations: PositiveInt = 1000


class Scenario(BaseModel):
    """
    Schema of a scenario file. Unknown keys are rejected.
    """
    model_config = ConfigDict(extra='forbid')

    network: str = Field(..., description="Network file, relative to the scenario file, or the name of a shipped network")
    demands: list[DemandRecord] = Field(default_factory=list)
    perturbation: PerturbationRecord = Field(default_factory=PerturbationRecord)
    cost: ScaleConfig = Field('t0', description="Static link costs of single route choice problems")
    bpr: BprRecord = Field(default_factory=BprRecord)
    analysis: AnalysisRecord = Field(default_factory=AnalysisRecord)
    output_directory: str | None = None
    tolerances: TolerancesRecord = Field(default_factory=TolerancesRecord)
    threads: PositiveInt | None = None
    seed: int = 0

    _base_path: Path | None = PrivateAttr(None)

    def get_network(self) -> Network:
        """
        Loads the scenario network. Relative paths are taken from the scenario file location.
        """
        path = Path(self.network)
        if self._base_path is not None and not path.is_absolute() and self._base_path.joinpath(path).exists():
            path = self._base_path.joinpath(path)

        return load_network(str(path))

    def get_perturbation(self, network: Network) -> PerturbationSpec:
        return PerturbationSpec.from_config(self.perturbation.model_dump(), network)

    def get_cost(self, network: Network):
        return get_scale(self.cost, network)

    def get_cost_function(self, network: Network) -> LinkCostFunction:
        return LinkCostFunction.from_network(network, alpha=self.bpr.alpha, beta=self.bpr.beta)

    def get_purc_options(self) -> PurcOptions:
        return PurcOptions(
            feasibility_tolerance=self.tolerances.feasibility,
            stationarity_tolerance=self.tolerances.stationarity,
            activity_tolerance=self.tolerances.activity,
            max_iterations=self.tolerances.purc_max_iterations
        )

    def get_equilibrium_options(self) -> EquilibriumOptions:
        purc = self.get_purc_options()
        purc.feasibility_tolerance = min(purc.feasibility_tolerance, 1e-12)

        return EquilibriumOptions(
            tolerance=self.tolerances.equilibrium,
            max_iterations=self.tolerances.equilibrium_max_iterations,
            threads=self.threads,
            purc=purc
        )

    def get_purc_problem(self, network: Network = None, index: int = 0) -> PurcProblem:
        """
        Single route choice problem of one demand entry at the static costs.
        """
        network = network or self.get_network()

        if not self.demands:
            raise ValueError("Scenario has no demand entry")

        demand = self.demands[index]

        return PurcProblem(
            network=network,
            cost=self.get_cost(network),
            demand=unit_demand(network, demand.origin, demand.destination),
            perturbation=self.get_perturbation(network),
            demand_scale=demand.q,
            options=self.get_purc_options()
        )

    def get_equilibrium_problem(self, network: Network = None) -> EquilibriumProblem:
        network = network or self.get_network()

        if not self.demands:
            raise ValueError("Scenario has no demand entry")

        return EquilibriumProblem(
            network=network,
            types=[TravelerType(d.origin, d.destination, d.q) for d in self.demands],
            perturbation=self.get_perturbation(network),
            cost_function=self.get_cost_function(network),
            options=self.get_equilibrium_options()
        )


def load_scenario(path: str | Path) -> Scenario:
    """
    Reads and validates a scenario file. A name without a file is looked up among the
    shipped scenarios.

    :param      path:  The scenario file or name
    :type       path:  str | Path

    :returns:   The validated scenario.
    :rtype:     Scenario
    """
    from PyPURC.tools.directories import scenarios_path

    path = Path(path)
    if not path.exists():
        shipped = scenarios_path.joinpath(f'{path.stem}.json')
        if not shipped.exists():
            raise FileNotFoundError(f"Scenario file {path} not found")
        path = shipped

    with open(path, 'r') as f:
        data = json.load(f)

    scenario = Scenario.model_validate(data)
    scenario._base_path = path.parent

    logger.info(f"Loaded scenario {path} with {len(scenario.demands)} demand entries")

    return scenario

# -
