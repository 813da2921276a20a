"""
Command-line interface for the quaternionic Heisenberg group toolkit.

Usage:
    hq norm --family koranyi --point "1+i;0,0,1"     # one value
    hq norm --family max --batch points.txt          # CSV point,family,value
    hq equiv --from max --to koranyi --samples 1000000 --refine
    hq equiv verify --estimate estimate.json --fresh 100000
    hq equiv table --families koranyi,fs,alpha:2,max
    hq ccdist --target "1;0,0,0" --steps 32 --restarts 8 --seed 7
    hq ops table | hq ops expand --op sublaplacian | hq ops diff
    hq haar --rho 2 --samples 1000000
    hq verify

Exit codes: 0 all checks pass, 1 a check failed, 2 usage error.
Tables go to stdout, logs to stderr.
"""

import csv
import json
import logging
import sys
from contextlib import contextmanager
from typing import Any, Dict, Iterable, List, Optional

import click

from cc_metric import SolverParams, cc_distance, develop_trajectory
from config import Config, RunConfig
from equivalence import EquivEstimate, equivalence_table, estimate_constants, verify_sandwich
from errors import ConfigError, HQError, SchemaError
from group_ops import haar_scaling_check
from literals import format_point, parse_point, parse_points
from logging_config import LogContext, clear_log_context, set_log_context, setup_logging
from norms import NormSpec, evaluate
from operators import (
    FIELD_NAMES, bracket_table, check_commutation_table, check_jacobi, check_stratification,
    compare_frames, diff_against_display, display_operator, format_operator_terms, format_polynomial,
    kohn_laplacian, sublaplacian, vector_field,
)
from reporting import emit_table
from sentry_config import SentryConfig
from verification import run_verify

logger = logging.getLogger(__name__)

FORMATS = ['json', 'csv', 'text']
EXPANDABLE = ['sublaplacian', 'kohn', 'display'] + list(FIELD_NAMES)


@contextmanager
def user_errors():
    """Turn input errors into usage errors (exit 2); report anything else to Sentry."""
    try:
        yield
    except click.exceptions.Exit:
        raise
    except click.ClickException:
        raise
    except HQError as e:
        raise click.UsageError(str(e)) from None
    except Exception as e:
        SentryConfig.capture_exception(e, command=click.get_current_context().command_path)
        raise


def _run_config(ctx: click.Context, command: str, samples: Optional[int] = None) -> RunConfig:
    options = ctx.find_root().obj
    try:
        config = RunConfig(
            command=command,
            seed=Config.get_seed(options['seed']),
            samples=Config.VERIFY_SAMPLES if samples is None else samples,
            output_format=options['format'] or 'json',
            n=options['n'],
            workers=options['workers'],
        )
    except ConfigError as e:
        raise click.UsageError(str(e)) from None
    SentryConfig.set_context("run", config.to_dict())
    return config


def _format(ctx: click.Context, default: str) -> str:
    return ctx.find_root().obj['format'] or default


def _emit(ctx: click.Context, records: Iterable[Any], default: str = 'json',
          columns: Optional[List[str]] = None):
    click.echo(emit_table(records, _format(ctx, default), columns=columns), nl=False)


def _emit_object(ctx: click.Context, record: Dict[str, Any], default: str = 'json'):
    fmt = _format(ctx, default)
    if fmt == 'json':
        click.echo(json.dumps(record, indent=2))
    else:
        flat = {k: v for k, v in record.items() if not isinstance(v, dict) or k in ('argmin', 'argmax')}
        _emit(ctx, [flat], default)


@click.group()
@click.version_option(version="1.0.0", prog_name="hq")
@click.option('--seed', type=int, envvar='HQ_SEED', default=Config.SEED, show_default=True,
              help='Seed for every randomized command')
@click.option('--n', 'n', type=click.IntRange(min=1), default=1, show_default=True,
              help='Quaternionic dimension of H^n')
@click.option('--format', 'fmt', type=click.Choice(FORMATS), default=None,
              help='Output format (default depends on the command)')
@click.option('--log-level', default=Config.LOG_LEVEL, show_default=True,
              type=click.Choice(['DEBUG', 'INFO', 'WARNING', 'ERROR'], case_sensitive=False))
@click.option('--workers', type=click.IntRange(min=1), default=Config.WORKERS, show_default=True,
              help='Threads for sample batches and solver restarts')
@click.pass_context
def cli(ctx: click.Context, seed: int, n: int, fmt: Optional[str], log_level: str, workers: int):
    """Quasi-norms, equivalence constants and CC distance on the quaternionic Heisenberg group."""
    setup_logging(log_level.upper())
    clear_log_context()
    set_log_context(seed=seed)
    try:
        Config.validate()
    except ConfigError as e:
        raise click.UsageError(str(e)) from None

    SentryConfig.initialize(
        dsn=Config.SENTRY_DSN,
        environment=Config.SENTRY_ENVIRONMENT,
        traces_sample_rate=Config.SENTRY_TRACES_SAMPLE_RATE,
    )
    ctx.obj = {'seed': seed, 'n': n, 'format': fmt, 'workers': workers}
    logger.debug(f"hq invoked: seed={seed} n={n} format={fmt} workers={workers}")


@cli.command()
@click.option('--family', required=True, help='koranyi | fs | alpha:<a> | box | max')
@click.option('--point', 'point_literal', default=None, help='Point literal q_1;...;q_n;t1,t2,t3')
@click.option('--batch', type=click.File('r'), default=None, help='File with one point literal per line')
@click.pass_context
def norm(ctx: click.Context, family: str, point_literal: Optional[str], batch):
    """Evaluate a quasi-norm at one point or at every point of a file."""
    if (point_literal is None) == (batch is None):
        raise click.UsageError("Give exactly one of --point or --batch")
    _run_config(ctx, 'norm', samples=1)

    with user_errors(), LogContext(command='norm', family=family):
        spec = NormSpec.parse(family)
        if point_literal is not None:
            value = evaluate(spec, parse_point(point_literal))
            if ctx.find_root().obj['format'] in (None, 'text'):
                click.echo("%.17g" % value)
            else:
                _emit(ctx, [{"point": point_literal, "family": spec.label, "value": value}])
            return

        points = parse_points(batch)
        records = [
            {"point": format_point(p), "family": spec.label, "value": float(evaluate(spec, p))}
            for p in points
        ]
        logger.info(f"Evaluated {spec.label} at {len(records)} points")
        _emit(ctx, records, default='csv', columns=['point', 'family', 'value'])


@cli.group(invoke_without_command=True)
@click.option('--from', 'spec_from', default=None, help='Norm whose unit sphere is searched')
@click.option('--to', 'spec_to', default=None, help='Norm being bounded')
@click.option('--samples', type=int, default=Config.EQUIV_SAMPLES, show_default=True)
@click.option('--refine', is_flag=True, help='Hill-climb the two witnesses after sampling')
@click.pass_context
def equiv(ctx: click.Context, spec_from: Optional[str], spec_to: Optional[str], samples: int, refine: bool):
    """Estimate m, M with m ||v||_from <= ||v||_to <= M ||v||_from."""
    if ctx.invoked_subcommand is not None:
        return
    if not spec_from or not spec_to:
        raise click.UsageError("equiv needs --from and --to (or a subcommand)")
    config = _run_config(ctx, 'equiv', samples)

    with user_errors(), LogContext(command='equiv', seed=config.seed):
        estimate = estimate_constants(NormSpec.parse(spec_from), NormSpec.parse(spec_to),
                                      config.samples, config.seed, refine=refine, n=config.n)
        _emit_object(ctx, estimate.to_dict())


def _load_estimate(handle) -> EquivEstimate:
    try:
        data = json.load(handle)
    except json.JSONDecodeError as e:
        raise click.UsageError(f"Estimate file is not valid JSON: {e}") from None
    if isinstance(data, list):
        if len(data) != 1:
            raise click.UsageError("Estimate file must hold exactly one estimate")
        data = data[0]
    try:
        return EquivEstimate.from_dict(data)
    except (KeyError, TypeError) as e:
        raise click.UsageError(f"Estimate file is missing fields: {e}") from None


@equiv.command('verify')
@click.option('--estimate', 'estimate_file', type=click.File('r'), required=True,
              help='JSON written by `hq equiv`')
@click.option('--fresh', type=int, default=100000, show_default=True, help='Fresh random points')
@click.option('--scale', type=float, default=None, help='Dilate every fresh point by this factor')
@click.pass_context
def equiv_verify(ctx: click.Context, estimate_file, fresh: int, scale: Optional[float]):
    """Count fresh points violating a stored sandwich estimate (exit 1 if any)."""
    config = _run_config(ctx, 'equiv', fresh)
    estimate = _load_estimate(estimate_file)

    with user_errors(), LogContext(command='equiv-verify', seed=config.seed):
        report = verify_sandwich(estimate, NormSpec.parse(estimate.spec_from), NormSpec.parse(estimate.spec_to),
                                 config.samples, config.seed, scale=scale)
        _emit_object(ctx, {
            "from": estimate.spec_from,
            "to": estimate.spec_to,
            "violations": report.violations,
            "max_excess": report.max_excess,
            "fresh_samples": report.fresh_samples,
            "seed": report.seed,
            "witness": format_point(report.witness) if report.witness is not None else None,
        })
    ctx.exit(0 if report.violations == 0 else 1)


@equiv.command('table')
@click.option('--families', default='koranyi,fs,alpha:2,max', show_default=True,
              help='Comma-separated norm families')
@click.pass_context
def equiv_table(ctx: click.Context, families: str):
    """Constants for every ordered pair of the given families."""
    parent = ctx.parent.params
    config = _run_config(ctx, 'equiv', parent['samples'])

    with user_errors(), LogContext(command='equiv-table', seed=config.seed):
        specs = [NormSpec.parse(name) for name in families.split(',') if name.strip()]
        if len(specs) < 2:
            raise click.UsageError("equiv table needs at least two families")
        table = equivalence_table(specs, config.samples, config.seed, refine=parent['refine'], n=config.n)
        columns = ['from', 'to', 'lower_m', 'upper_M', 'samples', 'seed', 'refined']
        _emit(ctx, [{key: est.to_dict()[key] for key in columns} for est in table], columns=columns)


def _write_path_dump(path_file: str, result, n: int):
    trajectory = develop_trajectory(result.path, n)
    controls = result.path.controls
    width = controls.shape[1]
    header = (['s'] + [f"a{i}" for i in range(width)]
              + [f"u{i}" for i in range(4 * n)] + ['t1', 't2', 't3'])
    with open(path_file, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for index, (s, point) in enumerate(zip(result.path.knots, trajectory)):
            control = controls[min(index, len(controls) - 1)]
            row = [s, *control, *point.coordinates()]
            writer.writerow(["%.17g" % value for value in row])
    logger.info(f"Wrote {len(trajectory)} path samples to {path_file}")


@cli.command()
@click.option('--target', required=True, help='Point literal of the endpoint')
@click.option('--steps', type=int, default=Config.CC_STEPS, show_default=True)
@click.option('--restarts', type=int, default=Config.CC_RESTARTS, show_default=True)
@click.option('--tol', type=float, default=Config.CC_TOL, show_default=True)
@click.option('--dump-path', type=click.Path(dir_okay=False, writable=True), default=None,
              help='CSV file for s, controls and gamma(s)')
@click.pass_context
def ccdist(ctx: click.Context, target: str, steps: int, restarts: int, tol: float, dump_path: Optional[str]):
    """Carnot-Caratheodory distance from the identity to a target."""
    config = _run_config(ctx, 'ccdist', samples=restarts)

    with user_errors(), LogContext(command='ccdist', seed=config.seed):
        point = parse_point(target)
        params = SolverParams.from_config()
        params = SolverParams(**{**params.to_dict(), 'steps': steps, 'restarts': restarts,
                                 'tol': tol, 'workers': config.workers})
        result = cc_distance(point, seed=config.seed, params=params)
        if dump_path:
            _write_path_dump(dump_path, result, point.n)

        record = result.to_dict()
        if _format(ctx, 'json') != 'json':
            record = {
                "target": target, "distance": result.distance, "endpoint_error": result.endpoint_error,
                "iterations": result.iterations, "converged": result.converged,
                "steps": steps, "restarts": restarts, "seed": config.seed,
            }
        _emit_object(ctx, record)


@cli.group()
@click.pass_context
def ops(ctx: click.Context):
    """Exact symbolic algebra of the left-invariant vector fields (n = 1)."""
    if ctx.find_root().obj['n'] != 1:
        raise click.UsageError("Symbolic operators are implemented for n = 1 only; drop --n")


@ops.command('table')
@click.option('--all-brackets', is_flag=True, help='List every bracket instead of the checked relations')
@click.pass_context
def ops_table(ctx: click.Context, all_brackets: bool):
    """Verified commutation table (exit 1 if a relation fails)."""
    _run_config(ctx, 'ops', samples=1)
    if all_brackets:
        _emit(ctx, bracket_table(), default='text')
        return

    report = check_commutation_table()
    jacobi = check_jacobi()
    strata = check_stratification()
    records = [relation.to_dict() for relation in report.relations]
    records.append({"relation": "Jacobi identity", "expected": "0", "computed": "0" if jacobi else "nonzero",
                    "status": "pass" if jacobi else "fail"})
    records.append({"relation": "step-2 nilpotency", "expected": "0",
                    "computed": "0" if strata.passed else "; ".join(strata.offending),
                    "status": "pass" if strata.passed else "fail"})
    _emit(ctx, records, default='text')
    ctx.exit(0 if report.passed and jacobi and strata.passed else 1)


@ops.command('expand')
@click.option('--op', 'op_name', type=click.Choice(EXPANDABLE, case_sensitive=False),
              default='sublaplacian', show_default=True)
@click.pass_context
def ops_expand(ctx: click.Context, op_name: str):
    """Canonical expansion of an operator as sorted monomial text."""
    _run_config(ctx, 'ops', samples=1)
    key = op_name.lower()
    if key == 'sublaplacian':
        operator = sublaplacian()
    elif key == 'kohn':
        operator = kohn_laplacian()
    elif key == 'display':
        operator = display_operator()
    else:
        operator = vector_field(op_name)

    if _format(ctx, 'text') == 'text':
        click.echo(format_operator_terms(operator.terms()))
        return
    _emit(ctx, [{"derivative": "*".join(f"d{name}" for name in term), "coefficient": format_polynomial(coeff)}
                for term, coeff in operator.terms().items()], columns=['derivative', 'coefficient'])


@ops.command('diff')
@click.option('--frames', is_flag=True, help='Compare the displayed fields with the group-law fields')
@click.pass_context
def ops_diff(ctx: click.Context, frames: bool):
    """Terms where -sum X_i^2 differs from the displayed -Delta expansion."""
    _run_config(ctx, 'ops', samples=1)
    if frames:
        _emit_object(ctx, compare_frames().to_dict(), default='json')
        return
    _emit(ctx, diff_against_display(), default='text', columns=['derivative', 'computed', 'displayed'])


@cli.command()
@click.option('--rho', type=float, default=2.0, show_default=True, help='Dilation factor')
@click.option('--samples', type=int, default=10 * Config.VERIFY_SAMPLES, show_default=True,
              help='Monte Carlo points per region')
@click.pass_context
def haar(ctx: click.Context, rho: float, samples: int):
    """Monte Carlo volume ratio of a dilated box against rho^(4n+6)."""
    config = _run_config(ctx, 'haar', samples)
    with user_errors(), LogContext(command='haar', seed=config.seed):
        result = haar_scaling_check(rho, config.n, config.samples, config.seed, workers=config.workers)
        record = result.to_dict()
        record["relative"] = result.empirical_ratio / result.exact_ratio
        _emit_object(ctx, record)


@cli.command()
@click.option('--samples', type=int, default=Config.VERIFY_SAMPLES, show_default=True,
              help='Sample count for the randomized checks')
@click.option('--cc-targets', type=click.IntRange(min=2), default=Config.VERIFY_CC_TARGETS, show_default=True,
              help='Targets in the CC distance suite')
@click.option('--gauge-targets', type=click.IntRange(min=1), default=Config.VERIFY_GAUGE_TARGETS, show_default=True,
              help='Koranyi-sphere targets per seed in the CC/Koranyi comparison')
@click.pass_context
def verify(ctx: click.Context, samples: int, cc_targets: int, gauge_targets: int):
    """Run the full property suite (exit 1 if any check fails)."""
    config = _run_config(ctx, 'verify', samples)
    solver = SolverParams(**{**SolverParams.from_config().to_dict(), 'workers': config.workers})

    with user_errors():
        report = run_verify(config, cc_targets=cc_targets, solver=solver, gauge_targets=gauge_targets)
    _emit(ctx, report.to_records(),
          columns=['name', 'module', 'status', 'measured', 'tolerance', 'witness', 'detail'])
    click.echo(report.summary(), err=True)
    ctx.exit(report.exit_code)


def main():
    """Main entry point."""
    try:
        cli(prog_name='hq')
    except SchemaError as e:
        logger.critical(f"Output error: {e}")
        SentryConfig.capture_exception(e, fatal=True)
        sys.exit(1)
    except Exception as e:
        logger.critical(f"Fatal error: {e}", exc_info=True)
        SentryConfig.capture_exception(e, fatal=True)
        raise


if __name__ == '__main__':
    main()
