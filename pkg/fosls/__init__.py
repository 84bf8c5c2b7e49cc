"""
加权 FOSLS 有限元求解包
奇异摄动反应扩散问题 -εΔu + bu = f，张量积 Shishkin 网格，平衡范数误差与收敛率研究
"""

# 网格与有限元
from .shishkin_mesh import (
    ShishkinMesh1D,
    TensorMesh2D,
    transition_point,
    build_shishkin_1d,
    shishkin_mesh,
    tensor_mesh,
)
from .reference_element import QuadratureRule, ReferenceBasis, gauss_rule, eval_basis, push_forward
from .fe_space import FeSpace, FluxBoundary, SystemField, build_space, interpolate

# 权函数
from .weight_function import (
    LayerSide,
    WeightSpec,
    beta_eval,
    grad_beta,
    audit_weight_bound,
    balance_integrals,
    balance_integrals_by_quadrature,
    layer_subdivision,
    stereotypical_norm_audit,
    coercivity_constants,
)

# 问题定义
from .problem_interface import ExactSolution, ProblemSpec, eval_exact_fields
from .manufactured_problem import manufactured_problem, zero_problem, make_problem

# 组装与求解
from .fosls_assembly import (
    FoslsOperatorSpec,
    AssembledSystem,
    local_residual_rows,
    assemble_system,
    assemble_norm_gram,
    apply_dirichlet,
    least_squares_functional,
    restrict_to_free,
    export_coordinate,
)
from .spd_solver import SolverConfig, SolveResult, solve_spd

# 误差与收敛研究
from .error_analysis import (
    ErrorReport,
    beta_norm_error,
    max_norm_error,
    reduction_rates,
    expected_rate,
    rayleigh_quotient_audit,
)
from .convergence_study import (
    ConvergenceTable,
    DiscretizationSettings,
    build_operator,
    solve_once,
    run_convergence_study,
)

# 异常
from .errors import (
    InvalidArgumentError,
    UnsupportedOperationError,
    SolverConvergenceError,
    NumericalBreakdownError,
)

__all__ = [
    # 网格与有限元
    'ShishkinMesh1D',
    'TensorMesh2D',
    'transition_point',
    'build_shishkin_1d',
    'shishkin_mesh',
    'tensor_mesh',
    'QuadratureRule',
    'ReferenceBasis',
    'gauss_rule',
    'eval_basis',
    'push_forward',
    'FeSpace',
    'FluxBoundary',
    'SystemField',
    'build_space',
    'interpolate',

    # 权函数
    'LayerSide',
    'WeightSpec',
    'beta_eval',
    'grad_beta',
    'audit_weight_bound',
    'balance_integrals',
    'balance_integrals_by_quadrature',
    'layer_subdivision',
    'stereotypical_norm_audit',
    'coercivity_constants',

    # 问题定义
    'ExactSolution',
    'ProblemSpec',
    'eval_exact_fields',
    'manufactured_problem',
    'zero_problem',
    'make_problem',

    # 组装与求解
    'FoslsOperatorSpec',
    'AssembledSystem',
    'local_residual_rows',
    'assemble_system',
    'assemble_norm_gram',
    'apply_dirichlet',
    'least_squares_functional',
    'restrict_to_free',
    'export_coordinate',
    'SolverConfig',
    'SolveResult',
    'solve_spd',

    # 误差与收敛研究
    'ErrorReport',
    'beta_norm_error',
    'max_norm_error',
    'reduction_rates',
    'expected_rate',
    'rayleigh_quotient_audit',
    'ConvergenceTable',
    'DiscretizationSettings',
    'build_operator',
    'solve_once',
    'run_convergence_study',

    # 异常
    'InvalidArgumentError',
    'UnsupportedOperationError',
    'SolverConvergenceError',
    'NumericalBreakdownError',
]

__version__ = '1.0.0'
