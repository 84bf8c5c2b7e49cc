"""
理论假设的数值审计：权函数梯度界、平衡性积分、离散矫顽/连续常数
"""
import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .convergence_study import DiscretizationSettings, build_operator
from .error_analysis import RayleighAudit, generalized_eigenvalue_bounds, rayleigh_quotient_audit
from .fosls_assembly import assemble_norm_gram, assemble_system
from .shishkin_mesh import shishkin_mesh
from .spd_solver import DENSE_LIMIT
from .weight_function import (BalanceIntegrals, StereotypicalNormReport, WeightSpec, audit_weight_bound,
                              balance_integrals, balance_integrals_by_quadrature, coercivity_constants,
                              stereotypical_norm_audit)

logger = logging.getLogger(__name__)

BALANCE_TOLERANCE = 1e-8
QUOTIENT_SLACK = 1e-8


@dataclass
class WeightAuditRow:
    epsilon: float
    gamma: float
    C: float
    max_ratio: float

    @property
    def passed(self) -> bool:
        return self.max_ratio < 1.0


def weight_audit(epsilons: Sequence[float], gamma: float, b0: float = 1.0) -> List[WeightAuditRow]:
    """每个 ε 上检查 ∇β·∇β < b0β²/(ε(1+C)²)"""
    rows = []
    for epsilon in epsilons:
        spec = WeightSpec.from_gamma(epsilon, gamma, b0=b0)
        rows.append(WeightAuditRow(epsilon=epsilon, gamma=gamma, C=spec.C,
                                   max_ratio=audit_weight_bound(spec)))
    return rows


@dataclass
class BalanceAuditRow:
    epsilon: float
    closed_form: BalanceIntegrals
    quadrature: BalanceIntegrals
    stereotypical: StereotypicalNormReport

    @property
    def max_relative_difference(self) -> float:
        return max(abs(q - c) / abs(c) for q, c in zip(self.quadrature, self.closed_form))

    @property
    def passed(self) -> bool:
        return self.max_relative_difference < BALANCE_TOLERANCE


def balance_audit(epsilons: Sequence[float], gamma: float, b0: float = 1.0,
                  degree: int = 1, n: int = 128, q: int = 12) -> List[BalanceAuditRow]:
    """闭式积分与一维 Shishkin 网格上复合 Gauss 积分的比对"""
    rows = []
    for epsilon in epsilons:
        mesh = shishkin_mesh(epsilon, b0, gamma, degree, n)
        rows.append(BalanceAuditRow(
            epsilon=epsilon,
            closed_form=balance_integrals(gamma, epsilon, b0),
            quadrature=balance_integrals_by_quadrature(gamma, epsilon, b0, mesh, q),
            stereotypical=stereotypical_norm_audit(gamma, epsilon, b0, mesh, q),
        ))
    return rows


@dataclass
class CoercivityAudit:
    epsilon: float
    n: int
    degree: int
    c_min: float
    c_cont: float
    rayleigh: RayleighAudit
    eigenvalues: Optional[tuple] = None  # (λ_min, λ_max)，规模过大时为 None

    @property
    def passed(self) -> bool:
        low = self.c_min * (1.0 - QUOTIENT_SLACK)
        high = self.c_cont * (1.0 + QUOTIENT_SLACK)
        ok = low <= self.rayleigh.min_quotient and self.rayleigh.max_continuity_ratio <= high
        if self.eigenvalues is not None:
            ok = ok and low <= self.eigenvalues[0] and self.eigenvalues[1] <= high
        return ok


def coercivity_audit(epsilon: float, n: int, settings: DiscretizationSettings,
                     samples: int = 100, seed: int = 0) -> CoercivityAudit:
    """
    随机向量上的 xᵀAx/xᵀMx 应落在 [c_min, C_cont]；小规模时另做稠密广义特征值分解
    """
    spec = build_operator(epsilon, n, settings)
    system = assemble_system(spec)
    gram = assemble_norm_gram(spec)
    problem = spec.problem
    c_min, c_cont = coercivity_constants(problem.b0, problem.b1, spec.weight.C)
    rayleigh = rayleigh_quotient_audit(system.matrix, gram, spec.space,
                                       np.random.default_rng(seed), samples)
    eigenvalues = None
    if spec.space.free_dofs.size <= DENSE_LIMIT:
        eigenvalues = generalized_eigenvalue_bounds(system.matrix, gram, spec.space)
    audit = CoercivityAudit(epsilon=epsilon, n=n, degree=settings.degree, c_min=c_min, c_cont=c_cont,
                            rayleigh=rayleigh, eigenvalues=eigenvalues)
    if not audit.passed:
        logger.warning(f"Coercivity audit failed at eps={epsilon:g} N={n}: {audit}")
    return audit


def format_weight_audit(rows: Sequence[WeightAuditRow]) -> str:
    lines = ['epsilon      gamma    C          max_ratio   status']
    for r in rows:
        lines.append(f"{r.epsilon:<12.3e} {r.gamma:<8.4g} {r.C:<10.6f} {r.max_ratio:<11.6f} "
                     f"{'ok' if r.passed else 'VIOLATED'}")
    return '\n'.join(lines)


def format_balance_audit(rows: Sequence[BalanceAuditRow]) -> str:
    lines = []
    for r in rows:
        s = r.stereotypical
        lines += [
            f"epsilon = {r.epsilon:.3e}",
            f"  int beta          closed {r.closed_form.weight_integral:.15e}  "
            f"quadrature {r.quadrature.weight_integral:.15e}",
            f"  int beta*layer^2  closed {r.closed_form.layer_integral:.15e}  "
            f"quadrature {r.quadrature.layer_integral:.15e}",
            f"  max relative difference {r.max_relative_difference:.3e} "
            f"({'ok' if r.passed else 'VIOLATED'})",
            f"  regular part norm^2  {s.regular_closed_form:.6e} (limit {s.regular_limit:.6e})",
            f"  layer part norm^2    {s.layer_closed_form:.6e} (limit {s.layer_limit:.6e})",
        ]
    return '\n'.join(lines)


def format_coercivity_audit(audit: CoercivityAudit) -> str:
    lines = [
        f"epsilon = {audit.epsilon:.3e}, N = {audit.n}, p = {audit.degree}",
        f"  c_min = {audit.c_min:.6f}, C_cont = {audit.c_cont:.6f}",
        f"  Rayleigh quotients over {audit.rayleigh.samples} samples: "
        f"[{audit.rayleigh.min_quotient:.6f}, {audit.rayleigh.max_quotient:.6f}]",
        f"  max |x'Ay|/(|x|_M |y|_M) = {audit.rayleigh.max_continuity_ratio:.6f}",
    ]
    if audit.eigenvalues is not None:
        lines.append(f"  generalized eigenvalues in [{audit.eigenvalues[0]:.6f}, {audit.eigenvalues[1]:.6f}]")
    lines.append(f"  status: {'ok' if audit.passed else 'VIOLATED'}")
    return '\n'.join(lines)
