#!/usr/bin/env python
# -*- coding: utf-8 -*-

import os
import sys
import json
import time
import logging
import argparse
import numpy
import pandas
from pathlib import Path
from dataclasses import dataclass

from pydantic import ValidationError

from PyPURC.network import Network, validate_connected, validate_reachable
from PyPURC.purc import PurcSolution
from PyPURC.scenario import Scenario, load_scenario
from PyPURC.sensitivity import purc_jacobian, directional_sensitivity
from PyPURC.analysis import (
    ParameterSpec,
    equilibrium_cost_jacobian,
    equilibrium_flow_jacobian,
    estimate_shifted_solution,
    independent_uncertainty,
    monte_carlo_uncertainty,
    parse_shift,
    propagate_uncertainty,
    shift_vector,
    substitution_report
)
from PyPURC.report import ReportBundle, emit_frame, emit_json, emit_table
from PyPURC.solver.base_solver import NotConvergedError

logger = logging.getLogger(__name__)

LOG_LEVEL_VARIABLE = 'PYPURC_LOG_LEVEL'

EXIT_SUCCESS, EXIT_INPUT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


@dataclass
class Context(object):
    args: argparse.Namespace
    scenario: Scenario
    network: Network
    bundle: ReportBundle

    def output(self, default_name: str) -> Path:
        """ Path of the main report: --out when given, else default_name in the output directory """
        if self.args.out is not None:
            return Path(self.args.out)
        return self.bundle.path(default_name)

    def record(self, name: str, **entries) -> None:
        self.bundle.log.setdefault(name, {}).update(entries)

    def timed(self, name: str, function, *args, **kwargs):
        start = time.perf_counter()
        result = function(*args, **kwargs)
        if self.args.record_timings:
            self.bundle.log.setdefault('timings', {})[name] = time.perf_counter() - start
        return result


class ArgumentParser(argparse.ArgumentParser):
    """
    Exits with the input error code on malformed command lines.
    """
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def get_parser() -> ArgumentParser:
    common = ArgumentParser(add_help=False)

    inputs = common.add_argument_group('inputs')
    inputs.add_argument('--scenario', help="Scenario JSON file, or the name of a shipped scenario")
    inputs.add_argument('--network', help="Network JSON/CSV file, or the name of a shipped network; overrides the scenario's")
    inputs.add_argument('--od', help="Single origin-destination pair ORIGIN:DESTINATION; replaces the scenario demands")
    inputs.add_argument('--demand', action='append', help="Traveler type ORIGIN:DESTINATION:Q, repeatable; replaces the scenario demands")
    inputs.add_argument('--q', type=float, default=None, help="Demand of the --od pair (default 1)")
    inputs.add_argument('--perturbation', help="Perturbation FAMILY:SCALE, e.g. entropic:length or quadratic:0.5")
    inputs.add_argument('--cost-column', choices=['t0', 'length', 'one'], help="Static link costs of single route choice solves")

    outputs = common.add_argument_group('outputs')
    outputs.add_argument('--out', help="Main output file; other reports are written next to it")
    outputs.add_argument('--output-directory', help="Directory of the reports (default: scenario setting or current directory)")
    outputs.add_argument('--record-timings', action='store_true', help="Add wall-clock timings to the run log")
    outputs.add_argument('--log-level', default=os.environ.get(LOG_LEVEL_VARIABLE, 'WARNING'), help=f"Logging level (default: ${LOG_LEVEL_VARIABLE} or WARNING)")

    numerics = common.add_argument_group('numerics')
    numerics.add_argument('--threads', type=int, help="Maximum number of worker threads")
    numerics.add_argument('--seed', type=int, help="Seed of the Monte Carlo sampler")
    numerics.add_argument('--feasibility-tolerance', type=float, help="Route choice flow conservation tolerance")
    numerics.add_argument('--stationarity-tolerance', type=float, help="Route choice projected first-order condition tolerance")
    numerics.add_argument('--activity-tolerance', type=float, help="Relative flow threshold of the active set")
    numerics.add_argument('--boundary-tolerance', type=float, help="Activation boundary proximity tolerance")
    numerics.add_argument('--equilibrium-tolerance', type=float, help="Equilibrium fixed-point residual tolerance")
    numerics.add_argument('--max-iterations', type=int, help="Maximum number of equilibrium iterations")

    parser = ArgumentParser(
        prog='pypurc',
        description="Perturbed utility route choice, stochastic traffic equilibrium and their sensitivities."
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    subparsers.add_parser('solve', parents=[common], help="Solve one route choice problem at static costs")
    subparsers.add_parser('equilibrium', parents=[common], help="Solve the stochastic traffic equilibrium")

    jacobian = subparsers.add_parser('jacobian', parents=[common], help="Route choice flow Jacobian with respect to link costs")
    jacobian.add_argument('--solution', help="Solution JSON written by 'solve'; solved from the inputs when omitted")

    jvp = subparsers.add_parser('jvp', parents=[common], help="Flow change J delta without forming J")
    jvp.add_argument('--solution', help="Solution JSON written by 'solve'; solved from the inputs when omitted")
    jvp.add_argument('--delta', required=True, help="JSON file with the cost perturbation, {link id: value} or a list in link order")
    jvp.add_argument('--demand-weight', type=float, default=1.0, help="Scale applied to the flow change")

    for name, help_text in [
            ('eq-jacobian', "Equilibrium cost and flow Jacobians with respect to t0 or kappa"),
            ('estimate', "First-order estimate of the equilibrium flows after parameter shifts"),
            ('uncertainty', "Delta-method propagation of independent parameter uncertainty")]:
        subparser = subparsers.add_parser(name, parents=[common], help=help_text)
        subparser.add_argument('--param', choices=['t0', 'kappa'], help="Parameter family (default: scenario setting)")

        if name == 'estimate':
            subparser.add_argument('--shift', action='append', help="Parameter shift, e.g. kappa:1-2:+5%%; repeatable")
            subparser.add_argument('--exact', action='store_true', help="Also re-solve the shifted equilibrium")

        if name == 'uncertainty':
            subparser.add_argument('--cv', type=float, help="Coefficient of variation of the parameters")
            subparser.add_argument('--level', type=float, help="Confidence level of the intervals")
            subparser.add_argument('--monte-carlo', type=int, default=0, metavar='N', help="Also run an N-sample simulation")

    substitution = subparsers.add_parser('substitution', parents=[common], help="Classify link pairs as substitutes or complements")
    substitution.add_argument('--solution', help="Solution JSON written by 'solve'")
    substitution.add_argument('--param', choices=['t0', 'kappa'], help="Classify the equilibrium flow Jacobian of this parameter instead")
    substitution.add_argument('--tolerance', type=float, help="Entries within the tolerance of zero are independent")

    validate = subparsers.add_parser('validate', parents=[common], help="Check scenario, network connectivity and OD reachability")
    validate.add_argument('--strong', action='store_true', help="Require strong instead of weak connectivity")

    return parser


def parse_perturbation(text: str) -> dict:
    family, _, scale = text.partition(':')
    scale = scale or 'length'
    try:
        scale = float(scale)
    except ValueError:
        pass
    return dict(family=family, scale=scale)


def parse_demand(text: str, q: float = None) -> dict:
    parts = text.split(':')
    if len(parts) == 2 and q is not None:
        parts.append(q)
    if len(parts) == 2:
        parts.append(1.0)
    if len(parts) != 3:
        raise ValueError(f"Malformed demand {text!r}, expected ORIGIN:DESTINATION[:Q]")
    origin, destination, q = parts
    return dict(origin=origin, destination=destination, q=float(q))


def build_scenario(args: argparse.Namespace) -> Scenario:
    """
    Scenario from the --scenario file with the command-line overrides applied.
    """
    base_path = None
    if args.scenario is not None:
        scenario = load_scenario(args.scenario)
        base_path = scenario._base_path
        data = scenario.model_dump()
    elif args.network is not None:
        data = dict(network=args.network)
    else:
        raise ValueError("Either --scenario or --network is required")

    if args.network is not None:
        network_path = Path(args.network)
        data['network'] = str(network_path.resolve()) if network_path.exists() else args.network

    if args.od is not None:
        data['demands'] = [parse_demand(args.od, q=args.q)]
    if args.demand:
        data['demands'] = [parse_demand(text) for text in args.demand]
    if args.perturbation is not None:
        data['perturbation'] = parse_perturbation(args.perturbation)
    if args.cost_column is not None:
        data['cost'] = args.cost_column
    if args.output_directory is not None:
        data['output_directory'] = args.output_directory
    if args.threads is not None:
        data['threads'] = args.threads
    if args.seed is not None:
        data['seed'] = args.seed

    tolerances = data.setdefault('tolerances', {})
    for flag, key in [
            ('feasibility_tolerance', 'feasibility'),
            ('stationarity_tolerance', 'stationarity'),
            ('activity_tolerance', 'activity'),
            ('boundary_tolerance', 'boundary'),
            ('equilibrium_tolerance', 'equilibrium'),
            ('max_iterations', 'equilibrium_max_iterations')]:
        if getattr(args, flag) is not None:
            tolerances[key] = getattr(args, flag)

    scenario = Scenario.model_validate(data)
    scenario._base_path = base_path
    return scenario


def get_output_directory(args: argparse.Namespace, scenario: Scenario) -> Path:
    if args.out is not None:
        return Path(args.out).parent
    return Path(scenario.output_directory or '.')


def require_converged(converged: bool, what: str) -> None:
    if not converged:
        raise NotConvergedError(f"{what} did not converge")


def get_solution(ctx: Context) -> PurcSolution:
    """
    Route choice solution from --solution, or solved from the scenario's first demand entry.
    """
    path = getattr(ctx.args, 'solution', None)
    if path is not None:
        with open(path, 'r') as f:
            data = json.load(f)
        try:
            solution = PurcSolution.from_dict(data, options=ctx.scenario.get_purc_options())
        except KeyError as error:
            raise ValueError(f"Solution file {path} misses the entry {error}") from error
        ctx.record('solution', source=str(path), converged=solution.converged)
        return solution

    if len(ctx.scenario.demands) > 1:
        logger.info("Scenario has several demand entries, using the first one")

    problem = ctx.scenario.get_purc_problem(network=ctx.network)
    solution = ctx.timed('solve', problem.solve)

    ctx.record(
        'solution',
        origin=problem.demand.origin,
        destination=problem.demand.destination,
        demand_scale=problem.demand_scale,
        iterations=solution.iterations,
        feasibility_residual=solution.feasibility_residual,
        stationarity_residual=solution.stationarity_residual,
        kkt_residual=solution.kkt_residual,
        converged=solution.converged
    )
    return solution


def get_equilibrium(ctx: Context):
    problem = ctx.scenario.get_equilibrium_problem(network=ctx.network)
    eq = ctx.timed('equilibrium', problem.solve)

    ctx.record('equilibrium', residual=eq.residual, iterations=eq.iterations, converged=eq.converged)
    ctx.bundle.add('equilibrium', emit_json(eq.to_dict(), ctx.bundle.path('equilibrium.json')))

    require_converged(eq.converged, "Equilibrium")
    return eq


def get_parameter(ctx: Context) -> str:
    return ctx.args.param or ctx.scenario.analysis.parameter


def cmd_solve(ctx: Context) -> None:
    solution = get_solution(ctx)
    ctx.bundle.add('solution', emit_json(solution.to_dict(), ctx.output('solution.json')))
    require_converged(solution.converged, "Route choice solve")


def cmd_equilibrium(ctx: Context) -> None:
    problem = ctx.scenario.get_equilibrium_problem(network=ctx.network)
    eq = ctx.timed('equilibrium', problem.solve)

    ctx.record('equilibrium', residual=eq.residual, iterations=eq.iterations, converged=eq.converged)
    ctx.bundle.add('equilibrium', emit_json(eq.to_dict(), ctx.output('equilibrium.json')))

    frame = pandas.DataFrame(
        dict(cost=eq.costs, flow=eq.flows),
        index=pandas.Index(ctx.network.link_ids, name='link')
    )
    for traveler_type, flows in zip(problem.types, eq.type_flows):
        frame[f'flow {traveler_type.name}'] = traveler_type.demand * flows

    ctx.bundle.add('flows', emit_frame(frame, ctx.bundle.path('flows.csv')))
    require_converged(eq.converged, "Equilibrium")


def cmd_jacobian(ctx: Context) -> None:
    solution = get_solution(ctx)
    require_converged(solution.converged, "Route choice solve")

    jacobian = ctx.timed('jacobian', purc_jacobian, solution, boundary_tolerance=ctx.scenario.tolerances.boundary)

    ctx.record(
        'jacobian',
        n_active=jacobian.active_set.n_active,
        near_boundary=jacobian.near_boundary,
        vanishing_links=list(jacobian.boundary.vanishing_links),
        activating_links=list(jacobian.boundary.activating_links)
    )
    ctx.bundle.add('jacobian', emit_table(jacobian.matrix, jacobian.link_ids, jacobian.link_ids, ctx.output('jacobian.csv')))


def load_delta(path: str, network: Network) -> numpy.ndarray:
    with open(path, 'r') as f:
        data = json.load(f)

    if isinstance(data, dict) and 'delta' in data:
        data = data['delta']

    if isinstance(data, list):
        delta = numpy.asarray(data, dtype=float)
        if delta.shape != (network.n_links,):
            raise ValueError(f"delta list has {delta.size} entries, network has {network.n_links} links")
        return delta

    delta = numpy.zeros(network.n_links)
    for link_id, value in data.items():
        if str(link_id) not in network.link_index:
            raise ValueError(f"Unknown link {link_id} in delta")
        delta[network.link_index[str(link_id)]] = float(value)
    return delta


def cmd_jvp(ctx: Context) -> None:
    solution = get_solution(ctx)
    require_converged(solution.converged, "Route choice solve")

    delta = load_delta(ctx.args.delta, solution.network)
    change = ctx.timed('jvp', directional_sensitivity, solution, delta, demand_weight=ctx.args.demand_weight)

    frame = pandas.DataFrame(
        dict(delta=delta, flow=solution.flows, flow_change=change),
        index=pandas.Index(solution.network.link_ids, name='link')
    )
    ctx.bundle.add('jvp', emit_frame(frame, ctx.output('jvp.csv')))


def cmd_eq_jacobian(ctx: Context) -> None:
    eq = get_equilibrium(ctx)
    spec = ParameterSpec(get_parameter(ctx))

    cost_jacobian = ctx.timed(
        'cost_jacobian', equilibrium_cost_jacobian, eq, spec, boundary_tolerance=ctx.scenario.tolerances.boundary
    )
    jacobians = equilibrium_flow_jacobian(eq, cost_jacobian)

    ctx.record(
        'eq_jacobian',
        parameter=spec.parameter,
        condition_number=cost_jacobian.condition_number,
        free_flow_links=[link_id for link_id, free in zip(ctx.network.link_ids, cost_jacobian.free_flow) if free],
        near_boundary=cost_jacobian.near_boundary
    )

    link_ids, column_ids = jacobians.link_ids, jacobians.column_ids
    bundle = ctx.bundle

    bundle.add('flow_jacobian', emit_table(jacobians.flow_jacobian, link_ids, column_ids, ctx.output(f'flow_jacobian_{spec.parameter}.csv')))
    bundle.add('cost_jacobian', emit_table(jacobians.cost_jacobian, link_ids, column_ids, bundle.path(f'cost_jacobian_{spec.parameter}.csv')))

    for traveler_type, matrix in zip(eq.problem.types, jacobians.type_flow_jacobians):
        name = f'flow_jacobian_{spec.parameter}_{traveler_type.origin}-{traveler_type.destination}'
        bundle.add(name, emit_table(traveler_type.demand * matrix, link_ids, column_ids, bundle.path(f'{name}.csv')))


def cmd_estimate(ctx: Context) -> None:
    shifts = [parse_shift(text) for text in (ctx.args.shift or ctx.scenario.analysis.shifts)]
    if not shifts:
        raise ValueError("No parameter shift given, use --shift or the scenario's analysis.shifts")

    parameters = {shift.parameter for shift in shifts}
    if len(parameters) != 1:
        raise ValueError(f"All shifts must act on one parameter family, got {sorted(parameters)}")

    eq = get_equilibrium(ctx)
    spec = ParameterSpec(parameters.pop())
    cost_function = eq.problem.cost_function

    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, spec))
    epsilon = shift_vector(shifts, spec, cost_function, ctx.network)
    estimate = estimate_shifted_solution(eq, jacobians, epsilon)

    frame = pandas.DataFrame(
        dict(flow=eq.flows, estimate=estimate.flows, change=estimate.flows - eq.flows, clamped=estimate.clamped.astype(int)),
        index=pandas.Index(ctx.network.link_ids, name='link')
    )

    if ctx.args.exact:
        shifted = cost_function.replace(spec.parameter, spec.values(cost_function, ctx.network) + epsilon)
        exact = ctx.timed('exact', eq.problem.with_cost_function(shifted).solve, initial_costs=eq.costs)
        ctx.record('exact', residual=exact.residual, iterations=exact.iterations, converged=exact.converged)
        frame['exact'] = exact.flows
        frame['error'] = estimate.flows - exact.flows

    ctx.record('estimate', parameter=spec.parameter, shifts=[str(shift) for shift in shifts], clamped=estimate.any_clamped)
    ctx.bundle.add('estimate', emit_frame(frame, ctx.output('estimate.csv')))

    if ctx.args.exact:
        require_converged(exact.converged, "Shifted equilibrium")


def cmd_uncertainty(ctx: Context) -> None:
    settings = ctx.scenario.analysis.uncertainty
    cv = ctx.args.cv if ctx.args.cv is not None else settings.cv
    level = ctx.args.level if ctx.args.level is not None else settings.level

    eq = get_equilibrium(ctx)
    spec = ParameterSpec(get_parameter(ctx))
    jacobians = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, spec))

    uncertainty_input = independent_uncertainty(spec.values(eq.problem.cost_function, ctx.network), cv=cv, level=level)
    result = propagate_uncertainty(jacobians, uncertainty_input)

    link_ids, column_ids = jacobians.link_ids, jacobians.column_ids
    bundle = ctx.bundle

    ctx.record('uncertainty', parameter=spec.parameter, cv=cv, level=level)
    bundle.add('uncertainty', emit_frame(result.to_frame(link_ids), ctx.output('uncertainty.csv')))
    bundle.add('variance', emit_table(result.variance, link_ids, link_ids, bundle.path('variance.csv')))
    bundle.add('covariance', emit_table(result.covariance, link_ids, column_ids, bundle.path('covariance.csv')))
    bundle.add('correlation', emit_table(result.correlation, link_ids, column_ids, bundle.path('correlation.csv')))

    if ctx.args.monte_carlo > 0:
        simulation = ctx.timed(
            'monte_carlo',
            monte_carlo_uncertainty,
            eq.problem,
            spec,
            uncertainty_input,
            n_samples=ctx.args.monte_carlo,
            seed=ctx.scenario.seed,
            threads=ctx.scenario.threads,
            initial_costs=eq.costs
        )
        frame = pandas.DataFrame(
            dict(
                delta_mean=result.mean,
                simulated_mean=simulation.mean,
                delta_variance=numpy.diag(result.variance),
                simulated_variance=simulation.variance
            ),
            index=pandas.Index(link_ids, name='link')
        )
        summary = dict(
            n_samples=ctx.args.monte_carlo,
            n_resampled=simulation.n_resampled,
            n_unconverged=simulation.n_unconverged,
            truncated=simulation.n_resampled > 0
        )
        ctx.record('monte_carlo', **summary)
        bundle.add('monte_carlo', emit_frame(frame, bundle.path('monte_carlo.csv')))
        bundle.add('monte_carlo_summary', emit_json(summary, bundle.path('monte_carlo_summary.json')))


def cmd_substitution(ctx: Context) -> None:
    if ctx.args.tolerance is not None:
        tolerance = ctx.args.tolerance
    else:
        tolerance = ctx.scenario.analysis.substitution_tolerance

    if tolerance < 0:
        raise ValueError(f"Substitution tolerance must be nonnegative, got {tolerance}")

    if ctx.args.param is not None:
        eq = get_equilibrium(ctx)
        spec = ParameterSpec(ctx.args.param)
        jacobian = equilibrium_flow_jacobian(eq, equilibrium_cost_jacobian(eq, spec))
    else:
        solution = get_solution(ctx)
        require_converged(solution.converged, "Route choice solve")
        jacobian = purc_jacobian(solution, boundary_tolerance=ctx.scenario.tolerances.boundary)

    report = substitution_report(jacobian, tolerance=tolerance)

    ctx.record(
        'substitution',
        tolerance=tolerance,
        complements=[f'{pair.flow_link}/{pair.cost_link}' for pair in report.complements]
    )
    ctx.bundle.add('substitution', emit_frame(report.to_frame().set_index('flow_link'), ctx.output('substitution.csv')))


def cmd_validate(ctx: Context) -> None:
    network = ctx.network
    connectivity = validate_connected(network, strong=ctx.args.strong)

    demands = [
        dict(origin=d.origin, destination=d.destination, q=d.q, reachable=validate_reachable(network, d.origin, d.destination))
        for d in ctx.scenario.demands
    ]

    data = dict(
        network=network.name,
        n_nodes=network.n_nodes,
        n_links=network.n_links,
        connected=connectivity.connected,
        strong=connectivity.strong,
        n_components=connectivity.n_components,
        n_unreachable_pairs=connectivity.n_unreachable,
        unreachable_pairs=[list(pair) for pair in connectivity.unreachable_pairs],
        demands=demands
    )

    ctx.record('validate', connected=connectivity.connected, demands_reachable=all(d['reachable'] for d in demands))
    ctx.bundle.add('validation', emit_json(data, ctx.output('validation.json')))

    if not connectivity.connected:
        raise ValueError(f"Network {network.name!r} is not {'strongly' if connectivity.strong else 'weakly'} connected")

    unreachable = [f"{d['origin']}->{d['destination']}" for d in demands if not d['reachable']]
    if unreachable:
        raise ValueError(f"Destinations unreachable for {unreachable}")


COMMAND_FUNCTIONS = {
    'solve': cmd_solve,
    'equilibrium': cmd_equilibrium,
    'jacobian': cmd_jacobian,
    'jvp': cmd_jvp,
    'eq-jacobian': cmd_eq_jacobian,
    'estimate': cmd_estimate,
    'uncertainty': cmd_uncertainty,
    'substitution': cmd_substitution,
    'validate': cmd_validate,
}


def run_arguments(args: argparse.Namespace) -> tuple[ReportBundle, int]:
    bundle = ReportBundle(output_directory=Path(args.out).parent if args.out else Path('.'))

    try:
        scenario = build_scenario(args)
        bundle.output_directory = get_output_directory(args, scenario)
        bundle.log.update(command=args.command, scenario=args.scenario, network=scenario.network)

        network = scenario.get_network()
        ctx = Context(args=args, scenario=scenario, network=network, bundle=bundle)

        COMMAND_FUNCTIONS[args.command](ctx)
        exit_code = EXIT_SUCCESS

    except NotConvergedError as error:
        logger.error(str(error))
        bundle.log['error'] = str(error)
        exit_code = EXIT_NOT_CONVERGED

    except (ValueError, ValidationError, FileNotFoundError, KeyError) as error:
        logger.error(str(error))
        bundle.log['error'] = str(error)
        exit_code = EXIT_INPUT_ERROR

    bundle.log['exit_code'] = exit_code
    if bundle.files or exit_code == EXIT_NOT_CONVERGED:
        bundle.write_log()

    return bundle, exit_code


def run(argv: list = None) -> tuple[ReportBundle, int]:
    """
    Runs one subcommand without touching the logging configuration.

    :param      argv:  Command-line arguments, e.g. ['jacobian', '--scenario', 'complementarity_example']
    :type       argv:  list

    :returns:   The emitted reports and the exit code (0 success, 1 input error, 2 non-convergence).
    :rtype:     tuple
    """
    args = get_parser().parse_args(argv)
    return run_arguments(args)


def main(argv: list = None) -> None:
    args = get_parser().parse_args(argv)

    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s'
    )

    _, exit_code = run_arguments(args)
    sys.exit(exit_code)


if __name__ == '__main__':
    main()

# -
