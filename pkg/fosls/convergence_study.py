"""
收敛性研究驱动
对每个 (ε, N)：过渡点 → Shishkin 网格 → 有限元空间 → 组装 → 求解 → 误差
结果汇总为 ConvergenceTable，可输出 CSV（全精度）与 markdown（4 位有效数字）
"""
import io
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from .errors import NumericalBreakdownError, SolverConvergenceError, UnsupportedOperationError
from .error_analysis import ErrorReport, beta_norm_error, max_norm_error
from .fe_space import FluxBoundary, SystemField, build_space
from .fosls_assembly import AssembledSystem, FoslsOperatorSpec, assemble_system
from .manufactured_problem import make_problem
from .reference_element import MAX_GAUSS_POINTS, gauss_rule
from .shishkin_mesh import shishkin_mesh, tensor_mesh
from .spd_solver import SolverConfig, solve_spd
from .weight_function import LayerSide, WeightSpec

logger = logging.getLogger(__name__)

CSV_COLUMNS = ['epsilon', 'N', 'p', 'beta_norm_err', 'beta_rate', 'max_norm_err', 'max_rate',
               'iterations', 'solve_seconds']
FAILED_CELL = 'failed'


@dataclass(frozen=True)
class DiscretizationSettings:
    """一次计算的离散与求解参数（ε、N 之外）"""
    degree: int = 1
    gamma: float = 0.5
    k: float = 2.0
    rescaled: bool = True
    quadrature: Optional[int] = None  # 默认 p+3
    solver: SolverConfig = field(default_factory=SolverConfig)
    problem: str = 'manufactured'
    assembly_workers: int = 1
    flux_boundary: FluxBoundary = FluxBoundary.TANGENTIAL

    @property
    def quadrature_points(self) -> int:
        return self.quadrature if self.quadrature is not None else min(self.degree + 3, MAX_GAUSS_POINTS)


def _layer_at_zero(side: LayerSide) -> bool:
    if side is LayerSide.ZERO:
        return True
    if side is LayerSide.ONE:
        return False
    raise UnsupportedOperationError(f"Shishkin mesh needs a layer on exactly one side, got {side}")


def build_operator(epsilon: float, n: int, settings: DiscretizationSettings) -> FoslsOperatorSpec:
    """按设置构建问题、权函数、网格、空间与求积规则"""
    problem = make_problem(settings.problem, epsilon)
    weight = WeightSpec.from_gamma(epsilon, settings.gamma, b0=problem.b0, layers=problem.layers)
    axes = [shishkin_mesh(epsilon, problem.b0, settings.gamma, settings.degree, n, _layer_at_zero(side))
            for side in problem.layers]
    space = build_space(tensor_mesh(axes[0], axes[1]), settings.degree, settings.flux_boundary)
    return FoslsOperatorSpec(problem=problem, weight=weight, space=space,
                             rule=gauss_rule(settings.quadrature_points), k=settings.k,
                             rescaled=settings.rescaled, workers=settings.assembly_workers)


@dataclass
class SolveOutcome:
    """单次求解的全部产物"""
    spec: FoslsOperatorSpec
    system: AssembledSystem
    field: SystemField
    report: ErrorReport


def solve_once(epsilon: float, n: int, settings: DiscretizationSettings) -> SolveOutcome:
    """
    单个 (ε, N) 的完整流程；求解失败时抛出异常，由调用方决定如何记录
    """
    spec = build_operator(epsilon, n, settings)
    system = assemble_system(spec)
    result = solve_spd(system.matrix, system.rhs, settings.solver)
    field_h = SystemField(spec.space, result.solution)
    beta_err, components = beta_norm_error(field_h, spec)
    max_err = max_norm_error(field_h.u, spec.problem.exact, spec.space)
    report = ErrorReport(epsilon=epsilon, n=n, degree=settings.degree, beta_norm_error=beta_err,
                         max_norm_error=max_err, components=components, iterations=result.iterations,
                         residual=result.residual, solve_seconds=result.seconds)
    logger.info(f"eps={epsilon:g} N={n} p={settings.degree}: beta-norm error {beta_err:.3e}, "
                f"max-norm error {max_err:.3e}, {result.iterations} iterations")
    return SolveOutcome(spec=spec, system=system, field=field_h, report=report)


def _run_cell(epsilon: float, n: int, settings: DiscretizationSettings) -> ErrorReport:
    try:
        return solve_once(epsilon, n, settings).report
    except SolverConvergenceError as e:
        logger.error(f"Solver failed at eps={epsilon:g} N={n}: {e}")
        return ErrorReport.failure(epsilon, n, settings.degree, str(e), e.iterations, e.residual)
    except NumericalBreakdownError as e:
        logger.error(f"Numerical breakdown at eps={epsilon:g} N={n}: {e}")
        return ErrorReport.failure(epsilon, n, settings.degree, str(e), e.iterations or 0)


def _full_precision(value: float) -> str:
    """最短可往返的十进制表示"""
    return repr(float(value))


def _rate(current: ErrorReport, previous: Optional[ErrorReport], attribute: str) -> Optional[float]:
    if previous is None or current.failed or previous.failed:
        return None
    denominator = getattr(previous, attribute)
    if denominator == 0.0:
        return None
    return getattr(current, attribute) / denominator


@dataclass
class ConvergenceTable:
    """固定 p 的 (ε × N) 误差表"""
    degree: int
    epsilons: List[float]
    ns: List[int]
    reports: Dict[Tuple[float, int], ErrorReport]

    def report(self, epsilon: float, n: int) -> ErrorReport:
        return self.reports[(epsilon, n)]

    def rate(self, epsilon: float, n: int, attribute: str = 'beta_norm_error') -> Optional[float]:
        """err(N)/err(N_prev)；第一列或失败单元返回 None"""
        index = self.ns.index(n)
        previous = self.reports[(epsilon, self.ns[index - 1])] if index > 0 else None
        return _rate(self.reports[(epsilon, n)], previous, attribute)

    @property
    def failures(self) -> List[ErrorReport]:
        return [r for r in self.reports.values() if r.failed]

    def to_frame(self, timings: bool = False) -> pd.DataFrame:
        """
        每个单元一行；失败单元误差为空，不省略
        solve_seconds 只在 timings=True 时填写，保证默认输出可逐字节复现
        """
        records = []
        for epsilon in self.epsilons:
            for n in self.ns:
                r = self.reports[(epsilon, n)]
                records.append({
                    'epsilon': epsilon,
                    'N': n,
                    'p': self.degree,
                    'beta_norm_err': None if r.failed else r.beta_norm_error,
                    'beta_rate': self.rate(epsilon, n, 'beta_norm_error'),
                    'max_norm_err': None if r.failed else r.max_norm_error,
                    'max_rate': self.rate(epsilon, n, 'max_norm_error'),
                    'iterations': r.iterations,
                    'solve_seconds': r.solve_seconds if timings and not r.failed else None,
                })
        return pd.DataFrame.from_records(records, columns=CSV_COLUMNS)

    def to_csv(self, path: Optional[str] = None, timings: bool = False) -> str:
        """全精度 CSV；给定 path 时同时写文件"""
        buffer = io.StringIO()
        self.to_frame(timings).to_csv(buffer, index=False, float_format=_full_precision, na_rep='',
                                      lineterminator='\n')
        text = buffer.getvalue()
        if path is not None:
            with open(path, 'w', newline='') as f:
                f.write(text)
            logger.info(f"Wrote convergence table to {path}")
        return text

    def _markdown_block(self, title: str, attribute: str) -> List[str]:
        header = ['ε \\ N'] + [str(n) for n in self.ns]
        body = []
        for epsilon in self.epsilons:
            cells = [f"{epsilon:.0e}"]
            for n in self.ns:
                r = self.reports[(epsilon, n)]
                if r.failed:
                    cells.append(FAILED_CELL)
                    continue
                text = format_error(getattr(r, attribute))
                rate = self.rate(epsilon, n, attribute)
                cells.append(text if rate is None else f"{text} ({rate:.2f})")
            body.append(cells)
        widths = [max(len(row[i]) for row in [header] + body) for i in range(len(header))]

        def line(cells):
            return '| ' + ' | '.join(c.ljust(w) for c, w in zip(cells, widths)) + ' |'

        separator = '|' + '|'.join('-' * (w + 2) for w in widths) + '|'
        return [f"### {title}", '', line(header), separator] + [line(row) for row in body] + ['']

    def to_markdown(self) -> str:
        """行 ε，列 N，单元格为 “误差 (缩减率)”"""
        lines = [f"## p = {self.degree}", '']
        lines += self._markdown_block('Balanced-norm error (reduction rate w.r.t. N)', 'beta_norm_error')
        lines += self._markdown_block('Nodal max-norm error (reduction rate w.r.t. N)', 'max_norm_error')
        return '\n'.join(lines)


def format_error(value: float) -> str:
    """4 位有效数字的科学计数法，例如 1.921e-01"""
    if value is None or not math.isfinite(value):
        return FAILED_CELL
    return f"{value:.3e}"


def run_convergence_study(epsilons: Sequence[float], ns: Sequence[int],
                          settings: Optional[DiscretizationSettings] = None,
                          workers: int = 1) -> ConvergenceTable:
    """
    遍历 (ε, N) 网格
    单元格求解失败时记为 failed 并继续；workers > 1 时各单元并发执行，表格按索引组装
    """
    settings = settings or DiscretizationSettings()
    epsilons = [float(e) for e in epsilons]
    ns = [int(n) for n in ns]
    cells = [(epsilon, n) for epsilon in epsilons for n in ns]
    logger.info(f"Convergence study: p={settings.degree}, {len(epsilons)} epsilons x {len(ns)} meshes, "
                f"solver={settings.solver.method}")
    if workers > 1 and len(cells) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(lambda cell: _run_cell(cell[0], cell[1], settings), cells))
    else:
        results = [_run_cell(epsilon, n, settings) for epsilon, n in cells]
    table = ConvergenceTable(degree=settings.degree, epsilons=epsilons, ns=ns,
                             reports=dict(zip(cells, results)))
    if table.failures:
        logger.warning(f"{len(table.failures)} of {len(cells)} cells failed")
    return table
