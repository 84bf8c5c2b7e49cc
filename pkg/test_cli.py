#!/usr/bin/env python3
"""
测试命令行：配置解析与优先级、各子命令的退出码
"""
import logging

import pytest

from fosls.audits import coercivity_audit
from fosls.cli import EXIT_OK, EXIT_SOLVER_FAILURE, EXIT_USAGE, main
from fosls.convergence_study import DiscretizationSettings
from fosls.errors import InvalidArgumentError
from fosls.fe_space import FluxBoundary
from fosls.run_config import parse_config, read_config_file


def test_defaults():
    config = parse_config(['study'])
    assert config.command == 'study'
    assert config.epsilon == [1e-6, 1e-8, 1e-10, 1e-12]
    assert config.N == [32, 64, 128]
    assert config.degree == 1 and config.gamma == 0.5 and config.k == 2.0
    assert config.rescaled is True
    assert config.settings().quadrature_points == 4
    assert config.log_level == logging.INFO
    assert config.settings().flux_boundary is FluxBoundary.TANGENTIAL


def test_flags():
    config = parse_config(['study', '--epsilon', '1e-6,1e-8', '--N', '32,64', '--degree', '2',
                           '--rescaled', 'false', '--solver', 'direct', '--format', 'csv', '--quiet'])
    assert config.epsilon == [1e-6, 1e-8]
    assert config.N == [32, 64]
    assert config.degree == 2
    assert config.rescaled is False
    assert config.solver_config().method == 'direct'
    assert config.format == 'csv'
    assert config.log_level == logging.WARNING


def test_flux_boundary_flag_and_config_key(tmp_path):
    config = parse_config(['study', '--flux-boundary', 'natural'])
    assert config.settings().flux_boundary is FluxBoundary.NATURAL
    path = tmp_path / 'run.cfg'
    path.write_text('flux_boundary = natural\n')
    assert parse_config(['study', '--config', str(path)]).flux_boundary == 'natural'
    path.write_text('flux_boundary = normal\n')
    assert main(['study', '--config', str(path)]) == EXIT_USAGE
    with pytest.raises(SystemExit):
        parse_config(['study', '--flux-boundary', 'normal'])


def test_missing_command():
    with pytest.raises(InvalidArgumentError):
        parse_config([])
    assert main([]) == EXIT_USAGE


def test_bad_flag_value_exits_with_usage():
    with pytest.raises(SystemExit) as info:
        parse_config(['study', '--solver', 'gmres'])
    assert info.value.code == 2


@pytest.mark.parametrize("argv", [
    ['study', '--degree', '4'],
    ['study', '--epsilon=-1e-6'],
    ['study', '--quadrature', '13'],
    ['bogus'],
])
def test_invalid_values(argv):
    assert main(argv) == EXIT_USAGE


def test_config_file_precedence(tmp_path):
    path = tmp_path / 'run.cfg'
    path.write_text('# benchmark\ncommand = study\nepsilon = 1e-4, 1e-6\ndegree = 2\nquadrature = auto\n')
    config = parse_config(['--config', str(path), '--degree', '3'])
    assert config.command == 'study'
    assert config.epsilon == [1e-4, 1e-6]
    assert config.degree == 3
    assert config.quadrature is None


def test_config_file_errors(tmp_path):
    path = tmp_path / 'bad.cfg'
    path.write_text('colour = blue\n')
    with pytest.raises(InvalidArgumentError):
        read_config_file(str(path))
    assert main(['study', '--config', str(path)]) == EXIT_USAGE
    path.write_text('degree = two\n')
    with pytest.raises(InvalidArgumentError):
        read_config_file(str(path))
    with pytest.raises(InvalidArgumentError):
        read_config_file(str(tmp_path / 'missing.cfg'))


def test_unwritable_output_directory(tmp_path):
    assert main(['study', '--output', str(tmp_path / 'no' / 'such' / 'file.csv')]) == EXIT_USAGE


def test_solve_once_zero_problem(capsys):
    code = main(['solve-once', '--problem', 'zero', '--epsilon', '1e-6', '--N', '8', '--quiet'])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert 'beta-norm error  0.000e+00' in out
    assert 'max-norm error   0.000e+00' in out


def test_audit_weight_exit_codes(capsys):
    assert main(['audit-weight', '--epsilon', '1e-6,1e-8', '--quiet']) == EXIT_OK
    assert 'VIOLATED' not in capsys.readouterr().out
    # γ 过大时不存在满足条件的 C
    assert main(['audit-weight', '--gamma', '1.0', '--quiet']) == EXIT_USAGE


def test_audit_balance(capsys):
    """默认网格 (p = 1, N = 128) 上 ε = 1e-6 与 1e-10 都应通过"""
    code = main(['audit-balance', '--epsilon', '1e-6,1e-10', '--quiet'])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert out.count('max relative difference') == 2
    assert 'VIOLATED' not in out
    assert main(['audit-balance', '--epsilon', '1e-8', '--degree', '3', '--N', '32', '--quiet']) == EXIT_OK


@pytest.mark.parametrize("epsilon", ["1e-2", "1e-6"])
@pytest.mark.parametrize("degree", ["1", "2"])
@pytest.mark.parametrize("n", ["4", "8"])
def test_audit_coercivity(capsys, epsilon, degree, n):
    """100 个随机向量与稠密特征值都落在 [c_min, C_cont] 内"""
    code = main(['audit-coercivity', '--epsilon', epsilon, '--N', n, '--degree', degree,
                 '--samples', '100', '--quiet'])
    out = capsys.readouterr().out
    assert code == EXIT_OK
    assert 'Rayleigh quotients over 100 samples' in out
    assert 'generalized eigenvalues' in out
    assert 'VIOLATED' not in out


@pytest.mark.parametrize("flux_boundary", list(FluxBoundary))
def test_coercivity_audit_passes(flux_boundary):
    settings = DiscretizationSettings(degree=2, flux_boundary=flux_boundary)
    audit = coercivity_audit(1e-6, 8, settings, samples=100)
    assert audit.passed
    assert audit.eigenvalues is not None
    assert audit.eigenvalues[0] >= audit.c_min
    assert audit.rayleigh.min_quotient >= audit.eigenvalues[0] * (1 - 1e-10)
    assert audit.rayleigh.max_continuity_ratio <= audit.c_cont


def test_study_solver_failure_exit_code(tmp_path):
    output = tmp_path / 'study.csv'
    code = main(['study', '--epsilon', '1e-6', '--N', '8', '--max-iterations', '1', '--format', 'csv',
                 '--output', str(output), '--quiet'])
    assert code == EXIT_SOLVER_FAILURE
    lines = output.read_text().splitlines()
    assert lines[0].startswith('epsilon,N,p,beta_norm_err')
    assert len(lines) == 2


def test_study_markdown(capsys):
    code = main(['study', '--epsilon', '1e-6', '--N', '8,16', '--quiet'])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith('## p = 1')


def test_export_matrix(tmp_path):
    assert main(['export-matrix', '--N', '4', '--quiet']) == EXIT_USAGE
    output = tmp_path / 'A.txt'
    assert main(['export-matrix', '--N', '4', '--epsilon', '1e-4', '--output', str(output), '--quiet']) == EXIT_OK
    first = output.read_text().splitlines()[0].split()
    assert first[:2] == ['0', '0']
    assert float(first[2]) == 1.0  # 边界 u 自由度消去后对角为 1
