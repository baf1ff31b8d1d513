#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Slicing Error Experiments / 切片误差实验
Per-P approximation errors of the slicing identity for different direction
generators, and log-log convergence rate fits.
不同方向生成器下切片恒等式的逼近误差与对数-对数收敛率拟合。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core import directions, fastsum, kernels
from core.directions import DirectionSet, EnergyOptConfig
from core.errors import DomainError, ParameterError
from core.kernels import KernelSpec
from core.recorder import ResultTable
from core.rng import derive_seed, make_rng


logger = logging.getLogger(__name__)

SLICING_GENERATORS = ('iid', 'sobol', 'orthogonal', 'distance', 'design', 'file')
FEATURE_GENERATORS = ('rff', 'orf', 'sobol-rff')
GENERATORS = SLICING_GENERATORS + FEATURE_GENERATORS

# generators whose base set is built once per P
_FIXED_BASE = ('sobol', 'distance', 'design', 'file')


@dataclass
class ExperimentReport:
    """
    Error statistics per P and the fitted rate / 每个 P 的误差统计与拟合收敛率
    """
    p_values: List[int]
    mean_errors: List[float]
    std_errors: List[float]
    rate: float
    intercept: float
    generator: str
    kernel: str
    d: int
    reps: int
    n_x: int
    seed: Optional[int]
    cells: Dict[Tuple[int, int], float] = field(default_factory=dict, repr=False)

    def table(self, meta: Optional[dict] = None) -> ResultTable:
        """Rows per P plus the trailer row 'rate' / 每个 P 一行, 末尾为收敛率行"""
        table = ResultTable(['generator', 'kernel', 'd', 'P', 'mean_error', 'std_error'], meta)
        for p, mean, std in zip(self.p_values, self.mean_errors, self.std_errors):
            table.add_row(self.generator, self.kernel, self.d, p, float(mean), float(std))
        table.add_row(self.generator, self.kernel, self.d, 'rate', float(self.rate), float(self.intercept))
        return table

    def save(self, filepath: Union[str, Path], meta: Optional[dict] = None) -> Path:
        info = {'reps': self.reps, 'n_x': self.n_x, 'seed': self.seed, **(meta or {})}
        return self.table(info).save(filepath)


def fit_rate(p_list: Sequence[float], mean_errors: Sequence[float]) -> Tuple[float, float]:
    """
    Least-squares line through (log P, log error); rate is the negated slope
    对数坐标最小二乘拟合, 收敛率为斜率的相反数

    Returns:
        (r, intercept)
    """
    p = np.asarray(p_list, dtype=float)
    e = np.asarray(mean_errors, dtype=float)
    if p.shape != e.shape or p.size < 2:
        raise ParameterError("rate fitting needs at least two (P, error) pairs")
    if np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise DomainError("errors must be positive and finite for a log-log fit")
    if np.any(p <= 0):
        raise DomainError("P values must be positive")
    slope, intercept = np.polyfit(np.log(p), np.log(e), 1)
    return float(-slope), float(intercept)


def _validate_p_list(p_list: Sequence[int], max_p: int) -> List[int]:
    ps = [int(p) for p in p_list]
    if not ps:
        raise ParameterError("P list is empty")
    if any(p < 1 for p in ps) or any(b <= a for a, b in zip(ps, ps[1:])):
        raise ParameterError(f"P list must be positive and strictly increasing, got {ps}")
    if ps[-1] > max_p:
        raise ParameterError(f"P = {ps[-1]} exceeds the cap {max_p}")
    return ps


class _BaseSets:
    """Builds and caches per-P base direction sets / 缓存每个 P 的基础方向集"""

    def __init__(self, generator: str, d: int, seed: Optional[int],
                 opt_config: Optional[EnergyOptConfig], design_dir, direction_file):
        self.generator = generator
        self.d = d
        self.seed = seed
        self.opt_config = opt_config or EnergyOptConfig()
        self.design_dir = design_dir
        self.direction_file = direction_file
        self._cache: Dict[int, DirectionSet] = {}

    def get(self, P: int, p_index: int) -> DirectionSet:
        if P not in self._cache:
            if self.generator == 'sobol':
                dirs = directions.sobol_sphere(P, self.d)
            elif self.generator == 'distance':
                cfg = replace(self.opt_config, seed=derive_seed(self.seed, p_index))
                dirs = directions.distance_design(P, self.d, cfg)
            elif self.generator == 'design':
                if self.design_dir is None:
                    raise ParameterError("the design generator needs a design directory")
                dirs = directions.load_design_for(P, self.design_dir)
            else:
                if self.direction_file is None:
                    raise ParameterError("the file generator needs a direction file")
                dirs = directions.load_directions(self.direction_file)
                if dirs.P < P:
                    raise ParameterError(f"direction file holds {dirs.P} rows, P={P} requested")
                dirs = DirectionSet(dirs.vectors[:P], dirs.generator)
            if dirs.d != self.d:
                raise ParameterError(f"direction set has d={dirs.d}, experiment uses d={self.d}")
            self._cache[P] = dirs
        return self._cache[P]


def _slicing_estimate(kernel: KernelSpec, x: np.ndarray, dirs: DirectionSet) -> np.ndarray:
    proj = np.abs(x @ dirs.vectors.T)
    return np.mean(kernels.eval_f(kernel, proj), axis=1)


def slicing_error_experiment(kernel: KernelSpec, d: Optional[int], p_list: Sequence[int],
                             generator: str = 'iid', reps: int = 50, n_x: int = 1000,
                             seed: Optional[int] = 0, randomize: bool = True,
                             opt_config: Optional[EnergyOptConfig] = None,
                             design_dir: Optional[Union[str, Path]] = None,
                             direction_file: Optional[Union[str, Path]] = None,
                             threads: int = 1, max_p: int = 2048,
                             x_variance: float = 0.1) -> ExperimentReport:
    """
    Mean absolute slicing error per P / 每个 P 的平均绝对切片误差

    For each P and each repetition, n_x points x ~ N(0, x_variance I) are drawn
    and |F(||x||) - (1/P) sum_p f(|<xi_p, x>|)| is averaged. Fixed base sets
    (Sobol, distance designs, loaded designs) are randomly rotated per
    repetition; with `randomize=False` they are used as-is and the repetition
    count collapses to 1. The feature generators (rff, orf, sobol-rff) use
    D = P frequencies instead of slices.

    Args:
        kernel: Kernel spec / 核函数
        d: Dimension, must match the kernel / 维度
        p_list: Strictly increasing P values / 递增的 P 列表
        generator: Generator name / 生成器名称
        reps: Repetitions per P / 每个 P 的重复次数
        n_x: Points per repetition / 每次重复的点数
        seed: Base seed / 基础种子
        randomize: Rotate fixed base sets per repetition / 是否随机旋转
        opt_config: Distance design settings / 距离设计参数
        design_dir: Directory of spherical designs / 球面设计目录
        direction_file: Direction file for the 'file' generator / 方向文件
        threads: Worker threads over cells / 线程数
        max_p: Cap on P / P 上限
        x_variance: Variance of the test points / 测试点方差

    Returns:
        ExperimentReport
    """
    if d is not None and int(d) != kernel.dim:
        raise ParameterError(f"kernel was built for d={kernel.dim}, experiment requested for d={d}")
    dim = kernel.dim
    if generator not in GENERATORS:
        raise ParameterError(f"unknown generator '{generator}', expected one of {', '.join(GENERATORS)}")
    ps = _validate_p_list(p_list, max_p)
    if int(reps) < 1 or int(n_x) < 1:
        raise ParameterError("reps and n_x must be positive")
    reps, n_x = int(reps), int(n_x)

    fixed = generator in _FIXED_BASE or generator == 'sobol-rff'
    if fixed and not randomize and reps > 1:
        logger.warning("generator '%s' is deterministic without randomization; reps collapsed from %d to 1",
                       generator, reps)
        reps = 1
    bases = _BaseSets(generator, dim, seed, opt_config, design_dir, direction_file)
    sampler = fastsum.SpectralSampler(kernel) if generator == 'rff' else None

    def cell(index: Tuple[int, int]) -> float:
        pi, rep = index
        P = ps[pi]
        cell_seed = derive_seed(seed, pi, rep)
        x = make_rng(cell_seed, 0).normal(0.0, np.sqrt(x_variance), size=(n_x, dim))
        exact = np.asarray(kernels.eval_F(kernel, np.linalg.norm(x, axis=1)))
        if generator in FEATURE_GENERATORS:
            if generator == 'rff':
                freqs = sampler.sample(P, make_rng(cell_seed, 1))
            elif generator == 'orf':
                freqs = fastsum.orf_frequencies(kernel, P, derive_seed(cell_seed, 1))
            else:
                shift = derive_seed(cell_seed, 1) if randomize else None
                freqs = fastsum.sobol_rff_frequencies(kernel, P, shift)
            approx = np.mean(np.cos(x @ freqs.T), axis=1)
        else:
            if generator == 'iid':
                dirs = directions.iid_uniform(P, dim, derive_seed(cell_seed, 1))
            elif generator == 'orthogonal':
                dirs = directions.orthogonal(P, dim, derive_seed(cell_seed, 1))
            else:
                dirs = bases.get(P, pi)
                if randomize:
                    dirs = directions.randomize(dirs, derive_seed(cell_seed, 1))
            approx = _slicing_estimate(kernel, x, dirs)
        return float(np.mean(np.abs(exact - approx)))

    # fixed bases are built up front so worker threads only read the cache
    if generator in _FIXED_BASE:
        for pi, P in enumerate(ps):
            bases.get(P, pi)
    order = [(pi, rep) for pi in range(len(ps)) for rep in range(reps)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = list(pool.map(cell, order))
    else:
        values = [cell(index) for index in order]
    cells = dict(zip(order, values))

    means, stds = [], []
    for pi, P in enumerate(ps):
        rep_means = np.array([cells[(pi, rep)] for rep in range(reps)])
        means.append(float(rep_means.mean()))
        stds.append(float(rep_means.std(ddof=1)) if reps > 1 else 0.0)
        logger.info("%s %s d=%d P=%d: mean error %.4e", generator, kernel.label, dim, P, means[-1])
    if len(ps) >= 2:
        rate, intercept = fit_rate(ps, means)
    else:
        rate, intercept = float('nan'), float('nan')
    return ExperimentReport(ps, means, stds, rate, intercept, generator, kernel.label, dim,
                            reps, n_x, seed, cells)


def rate_table(kernel: KernelSpec, generators: Sequence[str], p_list: Sequence[int],
               **kwargs) -> List[ExperimentReport]:
    """One experiment per generator, in the given order / 每个生成器一次实验"""
    if len(list(p_list)) < 2:
        raise ParameterError("a rate needs at least two P values")
    return [slicing_error_experiment(kernel, kernel.dim, p_list, generator=g, **kwargs) for g in generators]
