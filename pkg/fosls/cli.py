"""
命令行入口
study / audit-weight / audit-balance / audit-coercivity / solve-once / export-matrix
"""
import logging
import sys
from typing import Callable, Dict, Optional, Sequence

from .audits import (balance_audit, coercivity_audit, format_balance_audit, format_coercivity_audit,
                     format_weight_audit, weight_audit)
from .convergence_study import build_operator, run_convergence_study, solve_once
from .errors import InvalidArgumentError, NumericalBreakdownError, SolverConvergenceError
from .fosls_assembly import assemble_system, export_coordinate
from .run_config import RunConfig, parse_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_SOLVER_FAILURE = 3
EXIT_ACCEPTANCE = 4

BALANCE_DEFAULT_QUADRATURE = 12


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        print(text)
        return
    with open(path, 'w', newline='') as f:
        f.write(text if text.endswith('\n') else text + '\n')
    logger.info(f"Output written to {path}")


def _study(config: RunConfig) -> int:
    table = run_convergence_study(config.epsilon, config.N, config.settings(), workers=config.workers)
    if config.format == 'csv':
        text = table.to_csv(timings=config.timings)
    else:
        text = table.to_markdown()
    _emit(text, config.output)
    return EXIT_SOLVER_FAILURE if table.failures else EXIT_OK


def _audit_weight(config: RunConfig) -> int:
    rows = weight_audit(config.epsilon, config.gamma)
    _emit(format_weight_audit(rows), config.output)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_ACCEPTANCE


def _audit_balance(config: RunConfig) -> int:
    q = config.quadrature if config.quadrature is not None else BALANCE_DEFAULT_QUADRATURE
    rows = balance_audit(config.epsilon, config.gamma, degree=config.degree, n=config.N[-1], q=q)
    _emit(format_balance_audit(rows), config.output)
    return EXIT_OK if all(r.passed for r in rows) else EXIT_ACCEPTANCE


def _audit_coercivity(config: RunConfig) -> int:
    settings = config.settings()
    audits = [coercivity_audit(epsilon, n, settings, samples=config.samples, seed=config.seed)
              for epsilon in config.epsilon for n in config.N]
    _emit('\n'.join(format_coercivity_audit(a) for a in audits), config.output)
    return EXIT_OK if all(a.passed for a in audits) else EXIT_ACCEPTANCE


def _solve_once(config: RunConfig) -> int:
    epsilon, n = config.epsilon[0], config.N[0]
    report = solve_once(epsilon, n, config.settings()).report
    lines = [
        f"epsilon = {epsilon:.3e}, N = {n}, p = {config.degree}, problem = {config.problem}",
        f"  beta-norm error  {report.beta_norm_error:.3e}",
        f"  max-norm error   {report.max_norm_error:.3e}",
    ]
    lines += [f"    {name:<7} {value:.3e}" for name, value in report.components.items()]
    lines.append(f"  solver: {config.solver}, {report.iterations} iterations, residual {report.residual:.3e}")
    _emit('\n'.join(lines), config.output)
    return EXIT_OK


def _export_matrix(config: RunConfig) -> int:
    if config.output is None:
        raise InvalidArgumentError("export-matrix needs --output")
    spec = build_operator(config.epsilon[0], config.N[0], config.settings())
    export_coordinate(assemble_system(spec).matrix, config.output)
    return EXIT_OK


COMMAND_HANDLERS: Dict[str, Callable[[RunConfig], int]] = {
    'study': _study,
    'audit-weight': _audit_weight,
    'audit-balance': _audit_balance,
    'audit-coercivity': _audit_coercivity,
    'solve-once': _solve_once,
    'export-matrix': _export_matrix,
}


def run(config: RunConfig) -> int:
    """执行一个已校验的配置，返回退出码"""
    try:
        return COMMAND_HANDLERS[config.command](config)
    except InvalidArgumentError as e:
        logger.error(f"Invalid argument: {e}")
        return EXIT_USAGE
    except (SolverConvergenceError, NumericalBreakdownError) as e:
        logger.error(f"Solver failure: {e}")
        return EXIT_SOLVER_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    """主函数"""
    try:
        config = parse_config(argv)
    except InvalidArgumentError as e:
        print(f"fosls-study: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logging.basicConfig(
        level=config.log_level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    logger.debug(f"Run configuration: {config}")
    return run(config)
