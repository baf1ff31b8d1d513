#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Slicing Variance / 切片方差
Closed forms and Monte-Carlo estimates of Var_xi[f(|<xi, x>|)]
切片估计量方差的闭式解与蒙特卡洛估计
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from core import kernels
from core.errors import CapabilityError, ParameterError, UnsupportedDimensionError
from core.kernels import Family, KernelSpec
from core.rng import make_rng


logger = logging.getLogger(__name__)

EXACT = 'exact'
BOUND = 'bound'
ASYMPTOTIC = 'asymptotic'

# log(2) and Euler's constant enter the thin plate constants
_LOG2 = math.log(2.0)
THIN_PLATE_C1 = -3.0 * kernels.EULER_GAMMA - math.log(8.0) + 8.0
THIN_PLATE_C2 = (0.75 * (float(special.polygamma(1, 2.5)) + (float(special.digamma(2.5)) + _LOG2) ** 2)
                 + 2.0 * (kernels.EULER_GAMMA + _LOG2 - 2.0) ** 2)


@dataclass(frozen=True)
class ClosedFormVariance:
    """Closed-form value tagged exact, bound or asymptotic / 带类别标记的闭式方差"""
    value: float
    kind: str

    @property
    def is_upper_bound(self) -> bool:
        return self.kind == BOUND


@dataclass
class VarianceReport:
    """
    Monte-Carlo variance with the closed form when one exists
    蒙特卡洛方差及闭式解
    """
    closed_form: Optional[ClosedFormVariance]
    mc_estimate: float
    mc_stderr: float
    n_samples: int
    x_norm: float

    @property
    def z_score(self) -> Optional[float]:
        if self.closed_form is None or self.mc_stderr <= 0:
            return None
        return (self.mc_estimate - self.closed_form.value) / self.mc_stderr


def projection_moment(dim: int, q: float) -> float:
    """E|t|^q for the projection density on [-1, 1] / 投影密度的 q 阶绝对矩"""
    return math.exp(special.gammaln(0.5 * dim) + special.gammaln(0.5 * (q + 1))
                    - 0.5 * math.log(math.pi) - special.gammaln(0.5 * (q + dim)))


def _resolve_dim(kernel: KernelSpec, d: Optional[int]) -> int:
    if d is not None and int(d) != kernel.dim:
        raise ParameterError(f"kernel was built for d={kernel.dim}, variance requested for d={d}")
    return kernel.dim


def _check_norm(x_norm: float):
    if not (x_norm >= 0 and math.isfinite(x_norm)):
        raise ParameterError(f"x_norm must be finite and nonnegative, got {x_norm}")


def riesz_variance(dim: int, r: float, x_norm: float) -> float:
    """Exact Riesz variance (M(2r)/M(r)^2 - 1) F^2 / Riesz 精确方差"""
    if x_norm == 0.0:
        return 0.0
    ratio = projection_moment(dim, 2.0 * r) / projection_moment(dim, r) ** 2
    return (ratio - 1.0) * x_norm ** (2.0 * r)


def riesz_variance_bound(r: float) -> float:
    """Dimension-free factor sqrt(pi) G(r + 1/2) / G((r+1)/2)^2 / 与维度无关的上界因子"""
    return math.exp(0.5 * math.log(math.pi) + special.gammaln(r + 0.5) - 2.0 * special.gammaln(0.5 * (r + 1)))


def thin_plate_variance_asymptotic(dim: int, x_norm: float) -> float:
    """
    Large-d thin plate variance with the O(log d / d) term dropped
    薄板样条方差的大维度渐近式

    ||x||^4 [(3 L^2 + c1 L + c2) / (1 + 2/d) - L^2], L = log ||x||
    """
    if x_norm == 0.0:
        return 0.0
    L = math.log(x_norm)
    return x_norm ** 4 * ((3.0 * L * L + THIN_PLATE_C1 * L + THIN_PLATE_C2) / (1.0 + 2.0 / dim) - L * L)


def thin_plate_variance_moments(kernel: KernelSpec, x_norm: float) -> float:
    """
    Exact thin plate variance from the moments of the projection density
    由投影密度矩得到的薄板样条精确方差

    With A = d log||x|| + C_d and M(q) = E|t|^q:
    Var = ||x||^4 [A^2 M(4) + 2 A d M'(4) + d^2 M''(4)] - ||x||^4 log^2 ||x||.
    """
    if kernel.family != Family.THIN_PLATE:
        raise ParameterError("moment variance is defined for the thin plate kernel")
    _check_norm(x_norm)
    if x_norm == 0.0:
        return 0.0
    d = kernel.dim
    q = 4.0
    m = projection_moment(d, q)
    d1 = 0.5 * (special.digamma(0.5 * (q + 1)) - special.digamma(0.5 * (q + d)))
    d2 = 0.25 * (special.polygamma(1, 0.5 * (q + 1)) - special.polygamma(1, 0.5 * (q + d)))
    m1 = m * d1
    m2 = m * (d1 * d1 + d2)
    L = math.log(x_norm)
    A = d * L + kernels.thin_plate_constant(d)
    second = A * A * m + 2.0 * A * d * m1 + d * d * m2
    return float(x_norm ** 4 * (second - L * L))


def gauss_variance_d3(b: float) -> float:
    """
    Exact Gauss variance in d = 3 with b = ||x||^2 / sigma^2
    三维高斯核的精确方差

    Var = int_0^1 (1 - b u^2)^2 exp(-b u^2) du - exp(-b). For b <= 1 the
    alternating series sum_{k>=2} (-b)^k k (k-1) / ((2k+1) k!) avoids the
    cancellation of the erf form.
    """
    if b <= 0.0:
        return 0.0
    if b <= 1.0:
        k = np.arange(2, 40, dtype=float)
        terms = np.exp(k * math.log(b) - special.gammaln(k + 1.0)) * k * (k - 1.0) / (2.0 * k + 1.0)
        return float(np.sum(terms * (-1.0) ** k))
    root = math.sqrt(b)
    i0 = 0.5 * math.sqrt(math.pi) * float(special.erf(root)) / root
    return 0.75 * i0 - math.exp(-b) * (0.75 + 0.5 * b)


def variance_closed_form(kernel: KernelSpec, d: Optional[int] = None, x_norm: float = 1.0) -> ClosedFormVariance:
    """
    Closed-form slicing variance / 切片方差闭式解

    Riesz: exact for any d. Gauss and Laplace: exact for d = 3, otherwise
    the positive definite bound F(0)^2 - F(||x||)^2. Matern: bound. Thin
    plate: large-d asymptotic form.

    Args:
        kernel: Kernel spec / 核函数
        d: Dimension, must match the kernel / 维度
        x_norm: ||x|| / 范数

    Returns:
        ClosedFormVariance
    """
    dim = _resolve_dim(kernel, d)
    _check_norm(x_norm)
    fam = kernel.family
    if fam == Family.RIESZ:
        return ClosedFormVariance(riesz_variance(dim, kernel.r, x_norm), EXACT)
    if fam == Family.THIN_PLATE:
        return ClosedFormVariance(thin_plate_variance_asymptotic(dim, x_norm), ASYMPTOTIC)
    if fam in (Family.GAUSS, Family.LAPLACE) and dim == 3:
        if x_norm == 0.0:
            return ClosedFormVariance(0.0, EXACT)
        if fam == Family.GAUSS:
            return ClosedFormVariance(gauss_variance_d3((x_norm / kernel.sigma) ** 2), EXACT)
        a = kernel.alpha * x_norm
        return ClosedFormVariance(float(special.gammainc(3.0, 2.0 * a)) / (4.0 * a), EXACT)
    if kernel.is_positive_definite:
        F = float(kernels.eval_F(kernel, x_norm))
        return ClosedFormVariance(1.0 - F * F, BOUND)
    raise UnsupportedDimensionError(f"no closed-form variance for {kernel.label} in d={dim}")


def variance_mc(kernel, d: Optional[int] = None, x_norm: float = 1.0, n_samples: int = 100000,
                seed: Optional[int] = None) -> VarianceReport:
    """
    Monte-Carlo variance of f(||x|| |t|) with t from the projection density
    投影密度采样的蒙特卡洛方差

    `kernel` only needs a `dim` attribute and an `f` method, so synthetic
    kernels can be passed as well.

    Args:
        kernel: Kernel spec or duck-typed kernel / 核函数
        d: Dimension, must match the kernel / 维度
        x_norm: ||x|| / 范数
        n_samples: Sample count >= 2 / 样本数
        seed: Sampling seed / 种子

    Returns:
        VarianceReport
    """
    dim = int(kernel.dim)
    if d is not None and int(d) != dim:
        raise ParameterError(f"kernel was built for d={dim}, variance requested for d={d}")
    _check_norm(x_norm)
    if isinstance(n_samples, bool) or int(n_samples) != n_samples or n_samples < 2:
        raise ParameterError(f"n_samples must be an integer >= 2, got {n_samples}")
    n = int(n_samples)
    t = kernels.sample_projection(dim, n, make_rng(seed))
    values = np.asarray(kernel.f(x_norm * np.abs(t)), dtype=float)
    mean = float(np.mean(values))
    centred = values - mean
    var = float(np.sum(centred ** 2) / (n - 1))
    m4 = float(np.mean(centred ** 4))
    stderr = math.sqrt(max(m4 - var * var, 0.0) / n)

    closed = None
    if isinstance(kernel, KernelSpec):
        try:
            closed = variance_closed_form(kernel, dim, x_norm)
        except CapabilityError:
            logger.debug("no closed form for %s in d=%d", kernel.label, dim)
    return VarianceReport(closed, var, stderr, n, float(x_norm))


def slicing_mse(kernel: KernelSpec, differences: np.ndarray, weights: np.ndarray, P: int) -> float:
    """
    Mean squared error bound of iid slicing for one target
    单个目标点上独立切片的均方误差

    By Bienaymé: Var[(1/P) sum_p sum_n w_n f(...)] <= (sum_n |w_n| sqrt(V(x_n - y)))^2 / P.
    """
    norms = np.linalg.norm(np.atleast_2d(differences), axis=1)
    stds = np.array([math.sqrt(max(variance_closed_form(kernel, kernel.dim, float(s)).value, 0.0))
                     for s in norms])
    return float((np.abs(weights) @ stds) ** 2 / P)
