#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Commands / 子命令
Implementations of gen-dirs, sum, bench, variance-check and rate.
gen-dirs、sum、bench、variance-check 与 rate 子命令的实现。
"""

import logging
import time
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from analysis.experiments import rate_table
from analysis.variance import variance_mc
from app.cli import RunConfig
from app.datasets import load_points, load_weights, make_synthetic
from core import directions
from core.config import resolve_output
from core.directions import DirectionSet, EnergyOptConfig
from core.errors import ParameterError
from core.fastsum import (FEATURE_METHODS, SLICED_METHODS, FourierPlan, SummationProblem,
                          build_fourier_plan, compute_sum, naive_sum, relative_l1)
from core.kernels import POSITIVE_DEFINITE, Family, KernelSpec, ScaleRule, median_rule
from core.recorder import NaiveCache, ResultTable, problem_key, save_vector
from core.rng import derive_seed


logger = logging.getLogger(__name__)

_SCALE_PARAM = {Family.GAUSS: 'sigma', Family.LAPLACE: 'alpha', Family.MATERN: 'beta'}
_FIXED_BENCH_BASES = ('sobol', 'distance')


def _opt_config(rc: RunConfig) -> EnergyOptConfig:
    return EnergyOptConfig.from_config(rc.config.get('directions'), steps=rc.steps, threads=rc.threads)


def resolve_kernel(rc: RunConfig, dim: int, points_a: Optional[np.ndarray] = None,
                   points_b: Optional[np.ndarray] = None) -> KernelSpec:
    """
    Kernel from the CLI parameters; 'auto' or missing scales use the median rule
    由命令行参数构建核函数; 'auto' 或缺省尺度使用中位数规则

    Without data a missing scale defaults to 1.
    """
    params = dict(rc.kernel_params)
    family = rc.family
    name = _SCALE_PARAM.get(family)
    if name is not None and params.get(name) in (None, 'auto'):
        if points_a is None:
            if params.get(name) == 'auto':
                raise ParameterError(f"--{name} auto needs data points")
            params[name] = 1.0
        else:
            rule = ScaleRule(rc.gamma, rc.median_samples)
            m = median_rule(points_a, points_a if points_b is None else points_b, rule, rc.seed)
            params[name] = 1.0 / m if family == Family.LAPLACE else m
            print(f"median rule: {name}={params[name]:.6g}")
    return KernelSpec.from_params(family, dim, **params)


def load_problem(rc: RunConfig) -> SummationProblem:
    """Data from CSV files or a synthetic spec; targets default to the sources / 读取数据"""
    if rc.synthetic:
        x = make_synthetic(rc.synthetic, rc.seed)
        return SummationProblem(x, x)
    x = load_points(rc.x_path)
    y = load_points(rc.y_path) if rc.y_path else x
    w = load_weights(rc.w_path, x.shape[0]) if rc.w_path else None
    return SummationProblem(x, y, w)


def _meta(rc: RunConfig, **extra) -> dict:
    return {'command': rc.command, 'seed': rc.seed, **extra, 'config': rc.config}


def _plan(rc: RunConfig, problem: SummationProblem, kernel: KernelSpec) -> FourierPlan:
    return build_fourier_plan(problem, kernel, n_ft=rc.n_ft, periodize=rc.periodize,
                              config=rc.config.get('fourier'), nfft_options=rc.config.get('nfft'))


# ---------------------------------------------------------------------------
# gen-dirs
# ---------------------------------------------------------------------------

def cmd_gen_dirs(rc: RunConfig):
    """Generate, or load and re-randomize, a direction set / 生成方向文件"""
    tolerance = float(rc.config.get('directions', {}).get('file_tolerance', 1e-6))
    if rc.method == 'file':
        dirs = directions.load_directions(rc.dirs_file, tolerance=tolerance)
        if rc.seed is not None:
            dirs = directions.randomize(dirs, rc.seed)
    else:
        dirs = directions.generate(rc.method, rc.p, rc.d, rc.seed, _opt_config(rc))
    path = resolve_output(rc.out, rc.config)
    directions.save_directions(dirs, path)
    energy = directions.energy_sym(dirs, rc.threads)
    print(f"wrote {dirs.P} directions in R^{dirs.d} to {path}")
    print(f"E_sym={energy:.10g}")
    if dirs.P <= dirs.d:
        print(f"E_sym / orthonormal={energy / directions.orthonormal_energy(dirs.P):.10g}")


# ---------------------------------------------------------------------------
# sum
# ---------------------------------------------------------------------------

def _sum_directions(rc: RunConfig, d: int) -> DirectionSet:
    if rc.dirs_file:
        dirs = directions.load_directions(rc.dirs_file)
        if rc.p is not None and rc.p != dirs.P:
            raise ParameterError(f"--p {rc.p} differs from the {dirs.P} rows of {rc.dirs_file}")
        return dirs
    return directions.generate(rc.dirs_method, rc.p, d, rc.seed, _opt_config(rc))


def cmd_sum(rc: RunConfig):
    """One kernel sum written one value per line / 计算一次核和"""
    problem = load_problem(rc)
    kernel = resolve_kernel(rc, problem.d, problem.x, problem.y)
    dirs = _sum_directions(rc, problem.d) if rc.method in SLICED_METHODS else None

    start = time.perf_counter()
    plan = _plan(rc, problem, kernel) if rc.method == 'fourier-slice' else None
    s = compute_sum(problem, kernel, rc.method, dirs=dirs, D=rc.D, plan=plan, k=rc.k,
                    seed=rc.seed, threads=rc.threads)
    elapsed = time.perf_counter() - start

    path = save_vector(s, resolve_output(rc.out, rc.config))
    print(f"method={rc.method} kernel={kernel.label} N={problem.N} M={problem.M} time_s={elapsed:.6f}")
    if plan is not None:
        print(plan.describe())
    if rc.compare_naive:
        print(f"rel_l1={relative_l1(s, naive_sum(problem, kernel)):.6e}")
    print(f"sums written to {path}")


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _equal_cost_p_list(rc: RunConfig) -> list:
    K = int(rc.config.get('bench', {}).get('equal_cost_k', 6))
    return [5 * 2 ** k for k in range(1, K + 1)]


class _BenchDirections:
    """Fresh sets for iid/orthogonal, rotated fixed bases for sobol/distance / 基准测试方向集"""

    def __init__(self, d: int, seed: Optional[int], opt: EnergyOptConfig):
        self.d = d
        self.seed = seed
        self.opt = opt
        self._bases: Dict[Tuple[str, int], DirectionSet] = {}

    def get(self, generator: str, P: int, rep_seed: int) -> DirectionSet:
        if generator not in _FIXED_BENCH_BASES:
            return directions.generate(generator, P, self.d, rep_seed, self.opt)
        key = (generator, P)
        if key not in self._bases:
            base_seed = None if generator == 'sobol' else derive_seed(self.seed, P)
            self._bases[key] = directions.generate(generator, P, self.d, base_seed, self.opt)
        return directions.randomize(self._bases[key], rep_seed)


def cmd_bench(rc: RunConfig):
    """
    Timing and relative L1 error per method and size / 每个方法与规模的耗时与误差

    Methods are 'backend[:generator]'. Equal-cost mode uses P = 5 * 2^k, D = 2P
    features and rff-k with P/2 slices so all methods have comparable cost.
    """
    problem = load_problem(rc)
    kernel = resolve_kernel(rc, problem.d, problem.x, problem.y)
    bench = rc.config.get('bench', {})
    p_list = _equal_cost_p_list(rc) if rc.equal_cost else list(rc.p_list)
    methods = rc.methods or list(bench.get('methods', []))

    cache = NaiveCache(resolve_output(bench.get('cache_file', 'naive_cache.h5'), rc.config))
    key = problem_key(problem.x, problem.y, problem.w, kernel.label)
    exact = cache.get_or_compute(key, lambda: naive_sum(problem, kernel), kernel=kernel.label)

    plan = None
    if any(m.split(':')[0] == 'fourier-slice' for m in methods):
        plan = _plan(rc, problem, kernel)
    dir_source = _BenchDirections(problem.d, rc.seed, _opt_config(rc))

    meta = _meta(rc, kernel=kernel.label, N=problem.N, M=problem.M, d=problem.d,
                 reps=rc.reps, equal_cost=rc.equal_cost)
    if plan is not None:
        meta['plan'] = plan.describe()
    table = ResultTable(['method', 'P_or_D', 'time_s', 'rel_l1_mean', 'rel_l1_std', 'seed'], meta)

    for si, spec in enumerate(methods):
        backend, _, generator = spec.partition(':')
        generator = generator or 'iid'
        sizes = [0] if backend == 'naive' else p_list
        for pi, P in enumerate(sizes):
            times, errors = [], []
            count = P
            for rep in range(rc.reps):
                rep_seed = derive_seed(rc.seed, si, pi, rep)
                dirs, D = None, None
                if backend in SLICED_METHODS:
                    n_slices = max(1, P // 2) if (rc.equal_cost and backend == 'rff-k') else P
                    dirs = dir_source.get(generator, n_slices, rep_seed)
                elif backend in FEATURE_METHODS:
                    D = 2 * P if rc.equal_cost else P
                    count = D
                start = time.perf_counter()
                s = compute_sum(problem, kernel, backend, dirs=dirs, D=D, plan=plan, k=rc.k,
                                seed=rep_seed, threads=rc.threads)
                times.append(time.perf_counter() - start)
                errors.append(relative_l1(s, exact))
            errs = np.asarray(errors)
            std = float(errs.std(ddof=1)) if errs.size > 1 else 0.0
            table.add_row(spec, count, float(np.mean(times)), float(errs.mean()), std, rc.seed)
            print(f"{spec:<28} P_or_D={count:<6d} time_s={np.mean(times):.4f} "
                  f"rel_l1={errs.mean():.4e} +- {std:.1e}")
    path = table.save(resolve_output(rc.out, rc.config))
    print(f"bench table written to {path}")


# ---------------------------------------------------------------------------
# variance-check
# ---------------------------------------------------------------------------

def cmd_variance_check(rc: RunConfig):
    """Closed-form vs Monte-Carlo slicing variance / 闭式方差与蒙特卡洛方差对比"""
    kernel = resolve_kernel(rc, rc.d)
    table = ResultTable(['kernel', 'd', 'x_norm', 'kind', 'closed_form', 'mc_estimate', 'mc_stderr',
                         'z_score', 'n_samples'],
                        _meta(rc, samples=rc.samples))
    for i, x_norm in enumerate(rc.x_norms):
        report = variance_mc(kernel, rc.d, x_norm, rc.samples, derive_seed(rc.seed, i))
        closed = report.closed_form
        z = report.z_score
        table.add_row(kernel.label, rc.d, x_norm,
                      closed.kind if closed else 'none',
                      closed.value if closed else float('nan'),
                      report.mc_estimate, report.mc_stderr,
                      z if z is not None else float('nan'), report.n_samples)
        closed_text = f"{closed.value:.6e} ({closed.kind})" if closed else 'n/a'
        z_text = f"{z:+.2f}" if z is not None else 'n/a'
        print(f"|x|={x_norm:g} closed={closed_text} mc={report.mc_estimate:.6e} "
              f"+- {report.mc_stderr:.1e} z={z_text}")
    path = table.save(resolve_output(rc.out, rc.config))
    print(f"variance table written to {path}")


# ---------------------------------------------------------------------------
# rate
# ---------------------------------------------------------------------------

def cmd_rate(rc: RunConfig):
    """Fitted convergence rate per generator / 每个生成器的收敛率"""
    kernel = resolve_kernel(rc, rc.d)
    analysis = rc.config.get('analysis', {})
    reports = rate_table(kernel, rc.generators, rc.p_list, reps=rc.reps, n_x=rc.n_x, seed=rc.seed,
                         randomize=rc.randomize, opt_config=_opt_config(rc),
                         design_dir=rc.design_dir, direction_file=rc.dirs_file, threads=rc.threads,
                         max_p=int(analysis.get('max_p', 2048)),
                         x_variance=float(analysis.get('x_variance', 0.1)))
    table = ResultTable(['kernel', 'd', 'generator', 'r', 'intercept'],
                        _meta(rc, p_list=rc.p_list, reps=rc.reps, n_x=rc.n_x,
                               randomize=rc.randomize))
    for report in reports:
        table.add_row(kernel.label, rc.d, report.generator, report.rate, report.intercept)
        print(f"{report.generator:<12} r={report.rate:.3f} intercept={report.intercept:.3f}")
        if rc.details_dir:
            report.save(resolve_output(str(Path(rc.details_dir) / f"{report.generator}.csv"), rc.config))
    path = table.save(resolve_output(rc.out, rc.config))
    print(f"rate table written to {path}")
