#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Fast Kernel Summation / 快速核求和
Kernel sums s_m = sum_n w_n F(||x_n - y_m||) by naive evaluation, direct
slicing, Fourier slicing, sorting slicing and random Fourier features.
通过朴素求和、直接切片、傅里叶切片、排序切片与随机傅里叶特征计算核和。
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import BPoly
from scipy.spatial.distance import cdist

from core import kernels
from core.directions import DirectionSet, orthogonal, sobol_gaussian
from core.errors import (DatasetError, ParameterError, PlanMismatchError,
                         UnsupportedFamilyError)
from core.kernels import Family, KernelSpec
from core.nfft1d import NfftPlan, frequencies
from core.rng import make_rng


logger = logging.getLogger(__name__)

_FEATURE_CHUNK = 256
_PAIR_BUDGET = 2_000_000


@dataclass
class SummationProblem:
    """
    Sources, targets and weights / 源点、目标点与权重

    Args:
        x: N x d sources / 源点
        y: M x d targets / 目标点
        w: N weights, default all ones / 权重, 默认全为 1
    """
    x: np.ndarray
    y: np.ndarray
    w: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2 or y.ndim != 2:
            raise ParameterError("sources and targets must be 2D arrays")
        if x.shape[0] < 1 or y.shape[0] < 1:
            raise ParameterError("need at least one source and one target")
        if x.shape[1] != y.shape[1]:
            raise ParameterError(f"sources have d={x.shape[1]}, targets d={y.shape[1]}")
        w = np.ones(x.shape[0]) if self.w is None else np.asarray(self.w, dtype=float).ravel()
        if w.shape[0] != x.shape[0]:
            raise ParameterError(f"{w.shape[0]} weights for {x.shape[0]} sources")
        for name, arr in (('sources', x), ('targets', y), ('weights', w)):
            if not np.all(np.isfinite(arr)):
                raise DatasetError(f"{name} contain non-finite entries")
        self.x, self.y, self.w = x, y, w

    @property
    def N(self) -> int:
        return self.x.shape[0]

    @property
    def M(self) -> int:
        return self.y.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def radii(self) -> Tuple[float, float]:
        """max_n ||x_n||, max_m ||y_m|| / 最大范数"""
        return float(np.linalg.norm(self.x, axis=1).max()), float(np.linalg.norm(self.y, axis=1).max())


def _check_kernel(problem: SummationProblem, kernel: KernelSpec):
    if kernel.dim != problem.d:
        raise ParameterError(f"kernel dimension {kernel.dim} differs from data dimension {problem.d}")


def _check_dirs(problem: SummationProblem, dirs: DirectionSet):
    if dirs.d != problem.d:
        raise ParameterError(f"directions live in R^{dirs.d}, data in R^{problem.d}")


def _map_ordered(fn: Callable, items: Sequence, threads: int) -> List:
    """Map preserving index order so reductions stay deterministic / 保序映射"""
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _reduce_in_order(parts: Sequence[np.ndarray]) -> np.ndarray:
    total = np.zeros_like(parts[0])
    for part in parts:
        total += part
    return total


# ---------------------------------------------------------------------------
# Exact and direct sums / 精确与直接求和
# ---------------------------------------------------------------------------

def naive_sum(problem: SummationProblem, kernel: KernelSpec) -> np.ndarray:
    """
    Exact O(NM) kernel sum / 精确 O(NM) 核求和

    Args:
        problem: Summation problem / 求和问题
        kernel: Kernel spec / 核函数

    Returns:
        Vector s of length M / 长度 M 的向量
    """
    _check_kernel(problem, kernel)
    out = np.empty(problem.M)
    step = max(1, _PAIR_BUDGET // problem.N)
    for s in range(0, problem.M, step):
        dist = cdist(problem.y[s:s + step], problem.x)
        out[s:s + step] = kernels.eval_F(kernel, dist) @ problem.w
    return out


def _slice_direct(problem: SummationProblem, kernel: KernelSpec, xi: np.ndarray) -> np.ndarray:
    a = problem.x @ xi
    b = problem.y @ xi
    out = np.empty(problem.M)
    step = max(1, _PAIR_BUDGET // problem.N)
    for s in range(0, problem.M, step):
        t = np.abs(b[s:s + step, None] - a[None, :])
        out[s:s + step] = kernels.eval_f(kernel, t) @ problem.w
    return out


def sliced_direct_sum(problem: SummationProblem, kernel: KernelSpec, dirs: DirectionSet,
                      threads: int = 1) -> np.ndarray:
    """
    (1/P) sum_p sum_n w_n f(|<xi_p, x_n - y_m>|) with exact f values
    使用精确 f 值的切片求和 (O(PNM) 参照)
    """
    _check_kernel(problem, kernel)
    _check_dirs(problem, dirs)
    parts = _map_ordered(lambda xi: _slice_direct(problem, kernel, xi), list(dirs.vectors), threads)
    return _reduce_in_order(parts) / dirs.P


# ---------------------------------------------------------------------------
# Fourier slicing / 傅里叶切片
# ---------------------------------------------------------------------------

@dataclass
class FourierPlan:
    """
    Rescaling and Fourier coefficients for one kernel and geometry
    一个核函数与数据几何对应的缩放因子与傅里叶系数

    Args:
        kernel: Original kernel / 原始核函数
        tau: Rescaling factor / 缩放因子
        n_ft: Number of modes / 模数
        coeffs: c_k for k = -n_ft/2 .. n_ft/2-1 / 傅里叶系数
        threshold: T, bound on |tau <x - y, xi>| / 阈值
        g_max: Effective support radius (None when periodized) / 有效支撑半径
        rescaled: Kernel of u -> F(u / tau), None when periodized / 缩放后的核
        radius_x: Planned max ||x_n|| / 规划时的源点半径
        radius_y: Planned max ||y_m|| / 规划时的目标点半径
        periodized: Coefficients from the smooth periodization / 是否数值周期化
    """
    kernel: KernelSpec
    tau: float
    n_ft: int
    coeffs: np.ndarray
    threshold: float
    g_max: Optional[float]
    rescaled: Optional[KernelSpec]
    radius_x: float
    radius_y: float
    periodized: bool = False
    nfft: NfftPlan = field(default=None, repr=False)

    def __post_init__(self):
        if self.nfft is None:
            self.nfft = NfftPlan(self.n_ft)

    def describe(self) -> str:
        return f"tau={self.tau:.6g} n_ft={self.n_ft} T={self.threshold:g}"


def _fourier_defaults(section: Optional[dict], family: Family) -> Tuple[float, int]:
    section = section or {}
    key = {Family.GAUSS: 'gauss', Family.MATERN: 'matern',
           Family.LAPLACE: 'laplace'}.get(family, 'periodized')
    defaults = {'gauss': (0.3, 128), 'matern': (0.2, 512), 'laplace': (0.1, 1024), 'periodized': (0.25, 1024)}
    entry = section.get(key, {})
    T, n_ft = defaults[key]
    return float(entry.get('T', T)), int(entry.get('n_ft', n_ft))


def _nfft_plan(n_ft: int, options: Optional[dict]) -> NfftPlan:
    options = options or {}
    kwargs = {k: options[k] for k in ('oversampling', 'cutoff', 'window') if k in options}
    return NfftPlan(n_ft, **kwargs)


def build_fourier_plan(geometry: Union[SummationProblem, Tuple[float, float]], kernel: KernelSpec,
                       n_ft: Optional[int] = None, periodize: bool = False,
                       threshold: Optional[float] = None, config: Optional[dict] = None,
                       nfft_options: Optional[dict] = None) -> FourierPlan:
    """
    Rescaling factor and Fourier coefficients of the sliced kernel
    计算缩放因子与切片核的傅里叶系数

    tau = min(T / c, 1 / (2 g_max)) with c = max ||x_n|| + max ||y_m|| and
    g_max = 5 m. Positive definite kernels take c_k from the 1D spectral
    density of the rescaled kernel. Riesz (r > 0) and thin plate kernels need
    `periodize=True`: f(|u| / tau) on |u| <= T is joined to its shifted copy
    by a two-point Taylor (Hermite) polynomial and the coefficients come from
    an oversampled FFT.

    Args:
        geometry: Problem or (max ||x||, max ||y||) / 问题或半径
        kernel: Kernel spec / 核函数
        n_ft: Mode count override / 模数覆盖
        periodize: Enable numeric periodization / 启用数值周期化
        threshold: T override / 阈值覆盖
        config: `fourier` config section / 配置段
        nfft_options: oversampling, cutoff and window of the NFFT / NFFT 参数

    Returns:
        FourierPlan
    """
    config = config or {}
    if isinstance(geometry, SummationProblem):
        _check_kernel(geometry, kernel)
        rx, ry = geometry.radii()
    else:
        rx, ry = (float(v) for v in geometry)
    T, default_n = _fourier_defaults(config, kernel.family)
    T = float(threshold) if threshold is not None else T
    n_ft = int(n_ft) if n_ft is not None else default_n
    if not 0.0 < T < 0.5:
        raise ParameterError(f"threshold T must lie in (0, 1/2), got {T}")
    c = rx + ry

    if kernel.is_positive_definite:
        g_max = float(config.get('g_max_factor', 5.0)) * kernel.scale
        tau = min(T / c, 1.0 / (2.0 * g_max)) if c > 0 else 1.0 / (2.0 * g_max)
        rescaled = kernel.rescaled(tau)
        coeffs = np.asarray(kernels.spectral_density_1d(rescaled, frequencies(n_ft)), dtype=complex)
        plan = FourierPlan(kernel, tau, n_ft, coeffs, T, g_max, rescaled, rx, ry, False,
                           _nfft_plan(n_ft, nfft_options))
    elif periodize:
        if kernel.family == Family.RIESZ and kernel.r <= 0:
            raise UnsupportedFamilyError("periodized Fourier slicing needs a Riesz exponent r > 0")
        section = config.get('periodized', {})
        tau = T / c if c > 0 else 1.0
        coeffs = _periodized_coefficients(kernel, tau, T, n_ft,
                                          int(section.get('grid_factor', 16)),
                                          int(section.get('taylor_order', 4)))
        plan = FourierPlan(kernel, tau, n_ft, coeffs, T, None, None, rx, ry, True,
                           _nfft_plan(n_ft, nfft_options))
    else:
        raise UnsupportedFamilyError(
            f"the {kernel.family.value} kernel has no closed-form spectral density; "
            "enable the periodized Fourier path")
    logger.info("Fourier plan for %s: %s", kernel.label, plan.describe())
    return plan


def _periodized_coefficients(kernel: KernelSpec, tau: float, T: float, n_ft: int,
                             grid_factor: int, order: int) -> np.ndarray:
    """Coefficients of the smooth 1-periodic extension of u -> f(|u| / tau)"""
    derivs = kernels.eval_f_derivatives(kernel, T / tau, order)
    scale = tau ** -np.arange(order + 1, dtype=float)
    left = derivs * scale
    right = left * (-1.0) ** np.arange(order + 1)
    bridge = BPoly.from_derivatives([T, 1.0 - T], [left, right])

    L = grid_factor * n_ft
    u = np.arange(L) / L
    g = np.empty(L)
    near = u <= T
    far = u >= 1.0 - T
    mid = ~(near | far)
    g[near] = kernels.eval_f(kernel, u[near] / tau)
    g[far] = kernels.eval_f(kernel, (1.0 - u[far]) / tau)
    g[mid] = bridge(u[mid])
    spectrum = np.fft.fft(g) / L
    return spectrum[frequencies(n_ft) % L]


def _projected_nodes(points: np.ndarray, xi: np.ndarray, tau: float) -> np.ndarray:
    nodes = -tau * (points @ xi)
    if nodes.size and (nodes.min() < -0.5 or nodes.max() >= 0.5):
        raise PlanMismatchError("projected nodes leave [-1/2, 1/2); rebuild the Fourier plan")
    return nodes


def fourier_slice_sum(problem: SummationProblem, kernel: KernelSpec, dirs: DirectionSet,
                      plan: FourierPlan, threads: int = 1) -> np.ndarray:
    """
    Sliced sum with the 1D Fourier backend / 一维傅里叶后端切片求和

    Per slice: adjoint NFFT at -tau <x_n, xi>, multiply by c_k, forward NFFT
    at -tau <y_m, xi>; slices are averaged in ascending order.
    每个切片: 伴随 NFFT, 乘以系数, 正向 NFFT; 按顺序平均。
    """
    _check_kernel(problem, kernel)
    _check_dirs(problem, dirs)
    if plan.kernel != kernel:
        raise PlanMismatchError("the Fourier plan was built for a different kernel")
    rx, ry = problem.radii()
    slack = 1e-12 * max(1.0, plan.radius_x + plan.radius_y)
    if rx > plan.radius_x + slack or ry > plan.radius_y + slack:
        raise PlanMismatchError(
            f"data radii ({rx:.6g}, {ry:.6g}) exceed the planned ({plan.radius_x:.6g}, {plan.radius_y:.6g})")
    nfft = plan.nfft

    def one_slice(xi: np.ndarray) -> np.ndarray:
        w_hat = nfft.adjoint(_projected_nodes(problem.x, xi, plan.tau), problem.w)
        return nfft.forward(_projected_nodes(problem.y, xi, plan.tau), plan.coeffs * w_hat).real

    parts = _map_ordered(one_slice, list(dirs.vectors), threads)
    return _reduce_in_order(parts) / dirs.P


# ---------------------------------------------------------------------------
# Sorting slicing / 排序切片
# ---------------------------------------------------------------------------

def sorted_abs_sum(a: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    sum_n w_n |b_m - a_n| for all m in O((N + M) log N) / 排序法一维绝对值求和
    """
    order = np.argsort(a, kind='stable')
    a_s, w_s = a[order], w[order]
    W = np.concatenate(([0.0], np.cumsum(w_s)))
    S = np.concatenate(([0.0], np.cumsum(w_s * a_s)))
    j = np.searchsorted(a_s, b, side='right')
    return b * (2.0 * W[j] - W[-1]) - (2.0 * S[j] - S[-1])


def sorting_slice_sum(problem: SummationProblem, kernel: KernelSpec, dirs: DirectionSet,
                      threads: int = 1) -> np.ndarray:
    """Negative distance kernel (Riesz r = 1) by sorting / 排序切片 (Riesz r=1)"""
    _check_kernel(problem, kernel)
    _check_dirs(problem, dirs)
    if kernel.family != Family.RIESZ or kernel.r != 1.0:
        raise UnsupportedFamilyError("sorting slicing handles the Riesz kernel with r = 1 only")
    const = -kernels.riesz_constant(kernel.dim, 1.0)

    def one_slice(xi: np.ndarray) -> np.ndarray:
        return sorted_abs_sum(problem.x @ xi, problem.w, problem.y @ xi)

    parts = _map_ordered(one_slice, list(dirs.vectors), threads)
    return const * _reduce_in_order(parts) / dirs.P


# ---------------------------------------------------------------------------
# Random Fourier features / 随机傅里叶特征
# ---------------------------------------------------------------------------

class SpectralSampler:
    """
    Samples angular frequencies w from the kernel's spectral measure so that
    E[cos <w, x>] = F(||x||) / 从谱测度采样角频率

    Gauss: w ~ N(0, I / sigma^2). Laplace: w = alpha z / |g| (multivariate
    Cauchy). Matern: w = z sqrt(2 nu / u) / beta with u ~ chi^2(2 nu).
    """

    def __init__(self, kernel: KernelSpec):
        if not kernel.is_positive_definite:
            raise UnsupportedFamilyError(
                f"random features need a positive definite kernel, got {kernel.family.value}")
        self.kernel = kernel

    @property
    def dim(self) -> int:
        return self.kernel.dim

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        k = self.kernel
        z = rng.standard_normal((int(n), k.dim))
        if k.family == Family.GAUSS:
            return z / k.sigma
        if k.family == Family.LAPLACE:
            return k.alpha * z / np.abs(rng.standard_normal((int(n), 1)))
        u = rng.chisquare(2.0 * k.nu, size=(int(n), 1))
        return z * np.sqrt(2.0 * k.nu / u) / k.beta

    def sample_radii(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Norms of fresh spectral samples / 谱样本的范数"""
        return np.linalg.norm(self.sample(n, rng), axis=1)


def feature_sum(problem: SummationProblem, freqs: np.ndarray) -> np.ndarray:
    """
    (1/D) sum_p sum_n w_n cos <w_p, y_m - x_n>, feature-major in O(D (N + M))
    按特征计算余弦特征和
    """
    out = np.zeros(problem.M)
    for s in range(0, freqs.shape[0], _FEATURE_CHUNK):
        wc = freqs[s:s + _FEATURE_CHUNK]
        px = problem.x @ wc.T
        py = problem.y @ wc.T
        out += np.cos(py) @ (problem.w @ np.cos(px)) + np.sin(py) @ (problem.w @ np.sin(px))
    return out / freqs.shape[0]


def _check_count(name: str, value: int):
    if isinstance(value, bool) or int(value) != value or value < 1:
        raise ParameterError(f"{name} must be a positive integer, got {value}")


def rff_sum(problem: SummationProblem, kernel: KernelSpec, D: int, seed: Optional[int] = None) -> np.ndarray:
    """Random Fourier features with D iid frequencies / 随机傅里叶特征"""
    _check_kernel(problem, kernel)
    _check_count('D', D)
    sampler = SpectralSampler(kernel)
    return feature_sum(problem, sampler.sample(D, make_rng(seed)))


def orf_sum(problem: SummationProblem, kernel: KernelSpec, D: int, seed: Optional[int] = None) -> np.ndarray:
    """
    Orthogonal random features: Haar-orthogonal directions, radii from the
    radial law of the spectral measure / 正交随机特征
    """
    _check_kernel(problem, kernel)
    _check_count('D', D)
    return feature_sum(problem, orf_frequencies(kernel, D, seed))


def orf_frequencies(kernel: KernelSpec, D: int, seed: Optional[int]) -> np.ndarray:
    """Rows of orthogonal(D, d) scaled by spectral radii; pairwise orthogonal for D <= d"""
    sampler = SpectralSampler(kernel)
    dirs = orthogonal(int(D), kernel.dim, seed)
    return sampler.sample_radii(int(D), make_rng(seed, 1))[:, None] * dirs.vectors


def rff_k_frequencies(kernel: KernelSpec, dirs: DirectionSet, k: int, seed: Optional[int]) -> np.ndarray:
    sampler = SpectralSampler(kernel)
    radii = sampler.sample_radii(dirs.P * int(k), make_rng(seed)).reshape(dirs.P, int(k))
    return (radii[:, :, None] * dirs.vectors[:, None, :]).reshape(-1, dirs.d)


def rff_k_slice_sum(problem: SummationProblem, kernel: KernelSpec, dirs: DirectionSet, k: int,
                    seed: Optional[int] = None) -> np.ndarray:
    """
    Slicing with k one-dimensional random features per direction
    每个方向使用 k 个一维随机特征的切片

    Returns (1/(P k)) sum_{p,q} sum_n w_n cos(r_pq <x_n - y_m, xi_p>) with
    radii r_pq drawn as norms of d-dimensional spectral samples.
    """
    _check_kernel(problem, kernel)
    _check_dirs(problem, dirs)
    _check_count('k', k)
    return feature_sum(problem, rff_k_frequencies(kernel, dirs, k, seed))


def sobol_rff_frequencies(kernel: KernelSpec, D: int, seed: Optional[int]) -> np.ndarray:
    if kernel.family != Family.GAUSS:
        raise UnsupportedFamilyError("Sobol random features are available for the Gauss kernel only")
    return sobol_gaussian(int(D), kernel.dim, seed) / kernel.sigma


def sobol_rff_sum(problem: SummationProblem, kernel: KernelSpec, D: int, seed: Optional[int] = None) -> np.ndarray:
    """Gauss kernel features from inverse-normal Sobol points / Sobol 准随机特征"""
    _check_kernel(problem, kernel)
    _check_count('D', D)
    return feature_sum(problem, sobol_rff_frequencies(kernel, D, seed))


# ---------------------------------------------------------------------------
# Dispatch / 分发
# ---------------------------------------------------------------------------

SLICED_METHODS = ('direct-slice', 'fourier-slice', 'sorting-slice', 'rff-k')
FEATURE_METHODS = ('rff', 'orf', 'sobol-rff')
METHODS = ('naive',) + SLICED_METHODS + FEATURE_METHODS


def compute_sum(problem: SummationProblem, kernel: KernelSpec, method: str,
                dirs: Optional[DirectionSet] = None, D: Optional[int] = None,
                plan: Optional[FourierPlan] = None, k: int = 1, seed: Optional[int] = None,
                threads: int = 1) -> np.ndarray:
    """Run one backend by name / 按名称运行后端"""
    if method == 'naive':
        return naive_sum(problem, kernel)
    if method in SLICED_METHODS and dirs is None:
        raise ParameterError(f"method '{method}' needs a direction set")
    if method == 'direct-slice':
        return sliced_direct_sum(problem, kernel, dirs, threads)
    if method == 'fourier-slice':
        if plan is None:
            plan = build_fourier_plan(problem, kernel)
        return fourier_slice_sum(problem, kernel, dirs, plan, threads)
    if method == 'sorting-slice':
        return sorting_slice_sum(problem, kernel, dirs, threads)
    if method == 'rff-k':
        return rff_k_slice_sum(problem, kernel, dirs, k, seed)
    if method in FEATURE_METHODS and D is None:
        raise ParameterError(f"method '{method}' needs a feature count D")
    if method == 'rff':
        return rff_sum(problem, kernel, D, seed)
    if method == 'orf':
        return orf_sum(problem, kernel, D, seed)
    if method == 'sobol-rff':
        return sobol_rff_sum(problem, kernel, D, seed)
    raise ParameterError(f"unknown summation method '{method}'")


def relative_l1(approx: np.ndarray, exact: np.ndarray) -> float:
    """||approx - exact||_1 / ||exact||_1 / 相对 L1 误差"""
    denom = float(np.sum(np.abs(exact)))
    diff = float(np.sum(np.abs(np.asarray(approx) - exact)))
    return diff / denom if denom > 0 else diff
