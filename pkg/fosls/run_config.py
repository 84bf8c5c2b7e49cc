"""
运行配置
优先级（低 → 高）：RunConfig 默认值 → 配置文件（key = value，# 注释）→ 命令行参数
"""
import argparse
import logging
import os
from dataclasses import dataclass, field, fields
from typing import Callable, Dict, List, Optional, Sequence

from .convergence_study import DiscretizationSettings
from .errors import InvalidArgumentError
from .fe_space import FluxBoundary
from .manufactured_problem import PROBLEMS
from .reference_element import MAX_GAUSS_POINTS, check_degree
from .spd_solver import PRECONDITIONERS, SOLVER_METHODS, SolverConfig

logger = logging.getLogger(__name__)

COMMANDS = ('study', 'audit-weight', 'audit-balance', 'audit-coercivity', 'solve-once', 'export-matrix')
OUTPUT_FORMATS = ('csv', 'markdown')
FLUX_BOUNDARIES = tuple(b.value for b in FluxBoundary)

EXIT_CODES_HELP = """exit codes:
  0  success
  2  usage error (bad flag, bad config file, invalid value)
  3  solver failure (a study cell or a single solve did not converge)
  4  acceptance violation (weight ratio >= 1, balance mismatch, Rayleigh quotient out of bounds)
"""


def _float_list(text: str) -> List[float]:
    values = [float(part) for part in str(text).split(',') if part.strip()]
    if not values:
        raise ValueError("empty list")
    return values


def _int_list(text: str) -> List[int]:
    values = [int(part) for part in str(text).split(',') if part.strip()]
    if not values:
        raise ValueError("empty list")
    return values


def _boolean(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_int(text: str) -> Optional[int]:
    return None if str(text).strip().lower() in ('', 'none', 'auto') else int(text)


def _optional_str(text: str) -> Optional[str]:
    text = str(text).strip()
    return text or None


# 配置文件中允许出现的键及其解析函数
CONFIG_KEYS: Dict[str, Callable[[str], object]] = {
    'command': str,
    'epsilon': _float_list,
    'N': _int_list,
    'degree': int,
    'gamma': float,
    'k': float,
    'rescaled': _boolean,
    'quadrature': _optional_int,
    'solver': str,
    'tolerance': float,
    'max_iterations': int,
    'preconditioner': str,
    'format': str,
    'output': _optional_str,
    'seed': int,
    'workers': int,
    'problem': str,
    'samples': int,
    'flux_boundary': str,
}


@dataclass
class RunConfig:
    """一次命令行运行的完整配置，默认值对应基准算例"""
    command: str
    epsilon: List[float] = field(default_factory=lambda: [1e-6, 1e-8, 1e-10, 1e-12])
    N: List[int] = field(default_factory=lambda: [32, 64, 128])
    degree: int = 1
    gamma: float = 0.5
    k: float = 2.0
    rescaled: bool = True
    quadrature: Optional[int] = None  # 默认 p+3
    solver: str = 'cg'
    tolerance: float = 1e-10
    max_iterations: int = 20000
    preconditioner: str = 'diagonal'
    format: str = 'markdown'
    output: Optional[str] = None
    seed: int = 0
    workers: int = 1
    problem: str = 'manufactured'
    samples: int = 100
    flux_boundary: str = FluxBoundary.TANGENTIAL.value
    timings: bool = False
    log_level: int = logging.INFO

    def validate(self) -> 'RunConfig':
        if self.command not in COMMANDS:
            raise InvalidArgumentError(f"unknown command {self.command!r}, expected one of {COMMANDS}")
        if not self.epsilon or not self.N:
            raise InvalidArgumentError("epsilon and N lists must be nonempty")
        if any(not e > 0 for e in self.epsilon):
            raise InvalidArgumentError(f"epsilon values must be positive, got {self.epsilon}")
        check_degree(self.degree)
        if self.quadrature is not None and not (1 <= self.quadrature <= MAX_GAUSS_POINTS):
            raise InvalidArgumentError(f"quadrature must be in 1..{MAX_GAUSS_POINTS}, got {self.quadrature}")
        if self.format not in OUTPUT_FORMATS:
            raise InvalidArgumentError(f"unknown format {self.format!r}, expected one of {OUTPUT_FORMATS}")
        if self.problem not in PROBLEMS:
            raise InvalidArgumentError(f"unknown problem {self.problem!r}, expected one of {sorted(PROBLEMS)}")
        if self.flux_boundary not in FLUX_BOUNDARIES:
            raise InvalidArgumentError(f"unknown flux boundary {self.flux_boundary!r}, expected one of {FLUX_BOUNDARIES}")
        if self.workers < 1 or self.samples < 1:
            raise InvalidArgumentError(f"workers and samples must be >= 1, got {self.workers}, {self.samples}")
        if self.output is not None:
            directory = os.path.dirname(os.path.abspath(self.output))
            if not os.path.isdir(directory) or not os.access(directory, os.W_OK):
                raise InvalidArgumentError(f"output path {self.output!r} is not writable")
        self.solver_config()
        return self

    def solver_config(self) -> SolverConfig:
        return SolverConfig(method=self.solver, tolerance=self.tolerance,
                            max_iterations=self.max_iterations, preconditioner=self.preconditioner)

    def settings(self) -> DiscretizationSettings:
        return DiscretizationSettings(degree=self.degree, gamma=self.gamma, k=self.k, rescaled=self.rescaled,
                                      quadrature=self.quadrature, solver=self.solver_config(),
                                      problem=self.problem, flux_boundary=FluxBoundary(self.flux_boundary))


def read_config_file(path: str) -> Dict[str, object]:
    """
    解析 key = value 配置文件
    列表用逗号分隔；未知键或无法解析的值直接报错
    """
    values: Dict[str, object] = {}
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as e:
        raise InvalidArgumentError(f"cannot read config file {path}: {e}")
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise InvalidArgumentError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, text = (part.strip() for part in line.split('=', 1))
        if key not in CONFIG_KEYS:
            raise InvalidArgumentError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](text)
        except ValueError as e:
            raise InvalidArgumentError(f"{path}:{lineno}: malformed value for {key!r}: {e}")
    logger.debug(f"Loaded {len(values)} settings from {path}")
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='fosls-study',
        description='Weighted FOSLS on Shishkin meshes for singularly perturbed reaction-diffusion',
        epilog=EXIT_CODES_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        argument_default=argparse.SUPPRESS,
    )
    parser.add_argument('command', nargs='?', default=None, help=f"one of: {', '.join(COMMANDS)}")
    parser.add_argument('--config', help='key = value configuration file')
    parser.add_argument('--epsilon', type=_float_list, help='comma-separated epsilon values')
    parser.add_argument('--N', type=_int_list, help='comma-separated element counts per direction')
    parser.add_argument('--degree', type=int, help='polynomial degree p (1, 2 or 3)')
    parser.add_argument('--gamma', type=float, help='weight decay rate')
    parser.add_argument('--k', type=float, help='curl weight exponent')
    parser.add_argument('--rescaled', type=_boolean, help='use the rescaled flux w = sqrt(eps) grad u')
    parser.add_argument('--quadrature', type=_optional_int, help='Gauss points per direction (default p+3)')
    parser.add_argument('--solver', choices=SOLVER_METHODS)
    parser.add_argument('--tolerance', type=float, help='relative residual tolerance')
    parser.add_argument('--max-iterations', dest='max_iterations', type=int)
    parser.add_argument('--preconditioner', choices=PRECONDITIONERS)
    parser.add_argument('--format', choices=OUTPUT_FORMATS)
    parser.add_argument('--output', help='output file (stdout when omitted)')
    parser.add_argument('--seed', type=int, help='random seed for the Rayleigh-quotient audit')
    parser.add_argument('--workers', type=int, help='concurrent study cells')
    parser.add_argument('--problem', choices=sorted(PROBLEMS))
    parser.add_argument('--samples', type=int, help='random vectors in the Rayleigh-quotient audit')
    parser.add_argument('--flux-boundary', dest='flux_boundary', choices=FLUX_BOUNDARIES,
                        help='tangential: w1 = 0 on y = 0,1 and w2 = 0 on x = 0,1 (default); natural: unconstrained')
    parser.add_argument('--timings', action='store_true', help='write solve_seconds into the CSV')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', action='store_true', help='debug logging')
    verbosity.add_argument('--quiet', action='store_true', help='warnings only')
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """
    合并默认值、配置文件与命令行参数
    argparse 层面的错误以 SystemExit(2) 退出；其余非法配置抛出 InvalidArgumentError
    """
    flags = vars(build_parser().parse_args(argv))
    if flags.get('command') is None:
        flags.pop('command', None)
    merged: Dict[str, object] = {}
    config_path = flags.pop('config', None)
    if config_path is not None:
        merged.update(read_config_file(config_path))
    verbose = flags.pop('verbose', False)
    quiet = flags.pop('quiet', False)
    merged.update(flags)

    if 'command' not in merged:
        raise InvalidArgumentError(f"missing command, expected one of {COMMANDS}")
    known = {f.name for f in fields(RunConfig)}
    config = RunConfig(**{key: value for key, value in merged.items() if key in known})
    config.log_level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    return config.validate()
