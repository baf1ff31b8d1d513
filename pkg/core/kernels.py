#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Radial Kernels / 径向核函数
Basis functions F, sliced basis functions f and one-dimensional spectral
densities for the supported kernel families, plus median-rule bandwidths.
基函数 F、切片基函数 f、一维谱密度, 以及中位数规则带宽选择。

The sliced basis f satisfies E_xi[f(|<xi, x>|)] = F(||x||) for xi uniform on
the unit sphere of R^d.
"""

import logging
import math
from dataclasses import dataclass, fields, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np
from scipy import integrate, special
from scipy.interpolate import CubicSpline
from scipy.spatial.distance import cdist

from core.errors import (DegenerateDataError, DomainError, EvaluationError,
                         ParameterError, UnsupportedFamilyError)
from core.rng import make_rng


logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

EULER_GAMMA = float(np.euler_gamma)


@dataclass
class KernelSettings:
    """Evaluation thresholds / 求值阈值"""
    gauss_series_max_z: float = 600.0
    laplace_series_max_at: float = 10.0
    series_max_term: float = 1.0e5
    quad_epsabs: float = 1.0e-10
    quad_limit: int = 400
    quad_limlst: int = 200
    quad_fail_abserr: float = 1.0e-7
    table_nodes: int = 1024
    table_max_nodes: int = 8192
    table_tolerance: float = 1.0e-9
    table_min_points: int = 256


SETTINGS = KernelSettings()


def configure(section: Optional[dict]):
    """
    Apply the `kernels` config section / 应用 kernels 配置段

    Unknown keys are ignored. Cached profile tables are dropped.
    """
    global SETTINGS
    if not section:
        return
    known = {f.name for f in fields(KernelSettings)}
    updates = {k: v for k, v in section.items() if k in known}
    if 'laplace_series_max_term' in section:
        updates['series_max_term'] = section['laplace_series_max_term']
    SETTINGS = replace(SETTINGS, **updates)
    _profile_cached.cache_clear()


class Family(str, Enum):
    GAUSS = 'gauss'
    LAPLACE = 'laplace'
    MATERN = 'matern'
    RIESZ = 'riesz'
    THIN_PLATE = 'thin_plate'

    @classmethod
    def parse(cls, name: Union[str, 'Family']) -> 'Family':
        if isinstance(name, Family):
            return name
        key = str(name).strip().lower().replace('-', '_').replace(' ', '_')
        aliases = {'gaussian': 'gauss', 'matérn': 'matern', 'thinplate': 'thin_plate',
                   'tps': 'thin_plate', 'negative_distance': 'riesz'}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise ParameterError(f"unknown kernel family '{name}'") from None


_REQUIRED: Dict[Family, Tuple[str, ...]] = {
    Family.GAUSS: ('sigma',),
    Family.LAPLACE: ('alpha',),
    Family.MATERN: ('beta', 'nu'),
    Family.RIESZ: ('r',),
    Family.THIN_PLATE: (),
}
_PARAM_NAMES = ('sigma', 'alpha', 'beta', 'nu', 'r')
POSITIVE_DEFINITE = (Family.GAUSS, Family.LAPLACE, Family.MATERN)


@dataclass(frozen=True)
class KernelSpec:
    """
    Kernel family with parameters and ambient dimension / 核函数族、参数与维度

    Immutable and hashable, safe to share across threads.
    不可变且可哈希, 可在线程间共享。

    Args:
        family: Kernel family / 核函数族
        dim: Ambient dimension d >= 2 / 维度
        sigma: Gauss length scale / 高斯尺度
        alpha: Laplace decay / 拉普拉斯衰减率
        beta: Matern scale / Matern 尺度
        nu: Matern smoothness / Matern 光滑度
        r: Riesz exponent, r > -1 / Riesz 指数
    """
    family: Family
    dim: int
    sigma: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    nu: Optional[float] = None
    r: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, 'family', Family.parse(self.family))
        if isinstance(self.dim, bool) or int(self.dim) != self.dim or self.dim < 2:
            raise ParameterError(f"dimension must be an integer >= 2, got {self.dim}")
        object.__setattr__(self, 'dim', int(self.dim))
        required = _REQUIRED[self.family]
        for name in _PARAM_NAMES:
            value = getattr(self, name)
            if name not in required:
                if value is not None:
                    raise ParameterError(f"{name} is not a parameter of the {self.family.value} kernel")
                continue
            if value is None:
                raise ParameterError(f"the {self.family.value} kernel requires {name}")
            value = float(value)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite")
            if name == 'r':
                if value <= -1.0:
                    raise ParameterError(f"Riesz exponent must exceed -1, got {value}")
            elif value <= 0.0:
                raise ParameterError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)

    # -- constructors / 构造 ------------------------------------------------

    @classmethod
    def gauss(cls, dim: int, sigma: float) -> 'KernelSpec':
        return cls(Family.GAUSS, dim, sigma=sigma)

    @classmethod
    def laplace(cls, dim: int, alpha: float) -> 'KernelSpec':
        return cls(Family.LAPLACE, dim, alpha=alpha)

    @classmethod
    def matern(cls, dim: int, beta: float, nu: float) -> 'KernelSpec':
        return cls(Family.MATERN, dim, beta=beta, nu=nu)

    @classmethod
    def riesz(cls, dim: int, r: float = 1.0) -> 'KernelSpec':
        return cls(Family.RIESZ, dim, r=r)

    @classmethod
    def thin_plate(cls, dim: int) -> 'KernelSpec':
        return cls(Family.THIN_PLATE, dim)

    @classmethod
    def from_params(cls, family: Union[str, Family], dim: int, **params) -> 'KernelSpec':
        """Build from a loose parameter dict, keeping only the family's keys / 从参数字典构建"""
        fam = Family.parse(family)
        kept = {k: params.get(k) for k in _REQUIRED[fam]}
        return cls(fam, dim, **kept)

    # -- properties / 属性 ---------------------------------------------------

    @property
    def is_positive_definite(self) -> bool:
        return self.family in POSITIVE_DEFINITE

    @property
    def params(self) -> Dict[str, float]:
        return {k: getattr(self, k) for k in _REQUIRED[self.family]}

    @property
    def scale(self) -> float:
        """Length scale m = sigma = beta = 1/alpha / 长度尺度"""
        if self.family == Family.GAUSS:
            return self.sigma
        if self.family == Family.LAPLACE:
            return 1.0 / self.alpha
        if self.family == Family.MATERN:
            return self.beta
        raise UnsupportedFamilyError(f"the {self.family.value} kernel has no length scale")

    def with_scale(self, m: float) -> 'KernelSpec':
        """Same family with length scale m / 以尺度 m 重新参数化"""
        if self.family == Family.GAUSS:
            return replace(self, sigma=m)
        if self.family == Family.LAPLACE:
            return replace(self, alpha=1.0 / m)
        if self.family == Family.MATERN:
            return replace(self, beta=m)
        raise UnsupportedFamilyError(f"the {self.family.value} kernel has no length scale")

    def rescaled(self, tau: float) -> 'KernelSpec':
        """Kernel of u -> F(u / tau) / 按 tau 缩放后的核"""
        if self.family in POSITIVE_DEFINITE:
            return self.with_scale(tau * self.scale)
        raise UnsupportedFamilyError(f"the {self.family.value} kernel is not rescaled by parameters")

    @property
    def label(self) -> str:
        args = ','.join(f"{k}={v:g}" for k, v in self.params.items())
        return f"{self.family.value}({args})" if args else self.family.value

    def F(self, t: ArrayLike) -> ArrayLike:
        return eval_F(self, t)

    def f(self, t: ArrayLike, method: str = 'auto') -> ArrayLike:
        return eval_f(self, t, method=method)

    def density_1d(self, omega: ArrayLike) -> ArrayLike:
        return spectral_density_1d(self, omega)


@dataclass(frozen=True)
class ScaleRule:
    """Median-rule settings / 中位数规则设置"""
    gamma: float = 1.0
    sample_size: int = 10000

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ParameterError(f"gamma must be positive, got {self.gamma}")
        if int(self.sample_size) != self.sample_size or self.sample_size < 1:
            raise ParameterError(f"sample_size must be a positive integer, got {self.sample_size}")


# ---------------------------------------------------------------------------
# Helpers / 辅助函数
# ---------------------------------------------------------------------------

def _nonnegative(t: ArrayLike, what: str = 't') -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr < 0)):
        raise DomainError(f"{what} must be finite and nonnegative")
    return arr


def _finish(shape_like: np.ndarray, out: np.ndarray) -> ArrayLike:
    if shape_like.ndim == 0:
        return float(out.reshape(-1)[0])
    return out.reshape(shape_like.shape)


def riesz_constant(dim: int, r: float) -> float:
    """sqrt(pi) G((d+r)/2) / (G(d/2) G((r+1)/2)) / Riesz 切片常数"""
    return math.exp(0.5 * math.log(math.pi) + special.gammaln((dim + r) / 2.0)
                    - special.gammaln(dim / 2.0) - special.gammaln((r + 1.0) / 2.0))


def harmonic_number(x: float) -> float:
    """H_x = psi(x + 1) + gamma_EM, valid at half-integers / 调和数"""
    return float(special.digamma(x + 1.0)) + EULER_GAMMA


def thin_plate_constant(dim: int) -> float:
    """C_d = (d/2)(H_{d/2} - 2 + log 4) / 薄板样条常数"""
    return 0.5 * dim * (harmonic_number(0.5 * dim) - 2.0 + math.log(4.0))


# ---------------------------------------------------------------------------
# F
# ---------------------------------------------------------------------------

def eval_F(kernel: KernelSpec, t: ArrayLike) -> ArrayLike:
    """
    Evaluate the radial basis F / 计算径向基函数 F

    Args:
        kernel: Kernel spec / 核函数
        t: Nonnegative distance(s) / 非负距离

    Returns:
        F(t), float for scalar input / 函数值
    """
    arr = _nonnegative(t)
    x = np.atleast_1d(arr).astype(float)
    fam = kernel.family
    if fam == Family.GAUSS:
        out = np.exp(-x ** 2 / (2.0 * kernel.sigma ** 2))
    elif fam == Family.LAPLACE:
        out = np.exp(-kernel.alpha * x)
    elif fam == Family.MATERN:
        nu = kernel.nu
        s = math.sqrt(2.0 * nu) * x / kernel.beta
        out = np.ones_like(s)
        pos = s > 0
        sp = s[pos]
        with np.errstate(over='ignore', under='ignore'):
            log_pref = (1.0 - nu) * math.log(2.0) - special.gammaln(nu) + nu * np.log(sp) - sp
            out[pos] = np.exp(log_pref) * special.kve(nu, sp)
    elif fam == Family.RIESZ:
        with np.errstate(divide='ignore'):
            out = -np.power(x, kernel.r)
    else:
        out = special.xlogy(x ** 2, x)
    return _finish(arr, out)


# ---------------------------------------------------------------------------
# 1D spectral density / 一维谱密度
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _density_constant(kernel: KernelSpec) -> float:
    d = kernel.dim
    base = 0.5 * d * math.log(math.pi) - special.gammaln(0.5 * d)
    if kernel.family == Family.GAUSS:
        return base + 0.5 * d * math.log(2.0 * math.pi * kernel.sigma ** 2)
    if kernel.family == Family.LAPLACE:
        return (base + special.gammaln(0.5 * (d + 1)) + d * math.log(2.0)
                + 0.5 * (d - 1) * math.log(math.pi) + math.log(kernel.alpha))
    nu, beta = kernel.nu, kernel.beta
    return (base + d * math.log(2.0) + 0.5 * d * math.log(math.pi) + special.gammaln(nu + 0.5 * d)
            + nu * math.log(2.0 * nu) - special.gammaln(nu) - 2.0 * nu * math.log(beta))


def _log_density(kernel: KernelSpec, w: np.ndarray) -> np.ndarray:
    d = kernel.dim
    with np.errstate(divide='ignore'):
        log_w = (d - 1) * np.log(w)
    c = _density_constant(kernel)
    four_pi2 = 4.0 * math.pi ** 2
    if kernel.family == Family.GAUSS:
        return c + log_w - 0.5 * four_pi2 * kernel.sigma ** 2 * w ** 2
    if kernel.family == Family.LAPLACE:
        return c + log_w - 0.5 * (d + 1) * np.log(kernel.alpha ** 2 + four_pi2 * w ** 2)
    nu, beta = kernel.nu, kernel.beta
    return c + log_w - (nu + 0.5 * d) * np.log(2.0 * nu / beta ** 2 + four_pi2 * w ** 2)


def spectral_density_1d(kernel: KernelSpec, omega: ArrayLike) -> ArrayLike:
    """
    One-dimensional inverse Fourier transform of f(|.|) / f 的一维谱密度

    rho(w) = pi^{d/2} |w|^{d-1} / Gamma(d/2) * F_d^{-1}[F](|w|) with the
    e^{-2 pi i <w, x>} convention. Even in w and integrates to f(0) = 1.
    偶函数, 积分为 1。

    Args:
        kernel: Gauss, Laplace or Matern kernel / 正定核
        omega: Frequencies / 频率

    Returns:
        Density values / 密度值
    """
    if not kernel.is_positive_definite:
        raise UnsupportedFamilyError(
            f"the {kernel.family.value} kernel has no spectral density (not a function)")
    arr = np.asarray(omega, dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        raise DomainError("frequencies must be finite")
    w = np.abs(np.atleast_1d(arr))
    with np.errstate(under='ignore'):
        out = np.exp(_log_density(kernel, w))
    return _finish(arr, out)


def _frequency_cutoff(kernel: KernelSpec) -> float:
    if kernel.family == Family.GAUSS:
        base = 1.0 / (2.0 * math.pi * kernel.sigma)
    elif kernel.family == Family.LAPLACE:
        base = kernel.alpha / (2.0 * math.pi)
    else:
        base = math.sqrt(2.0 * kernel.nu) / (2.0 * math.pi * kernel.beta)
    return base * (math.sqrt(kernel.dim) + 10.0)


def _cosine_transform(kernel: KernelSpec, t: float) -> float:
    """f(t) = 2 int_0^inf rho(w) cos(2 pi w t) dw via QUADPACK"""
    if t == 0.0:
        return 1.0
    settings = SETTINGS
    wvar = 2.0 * math.pi * t
    cut = _frequency_cutoff(kernel)

    def density(w):
        return float(np.exp(_log_density(kernel, np.asarray(w, dtype=float))))

    def oscillating(w):
        return density(w) * math.cos(wvar * w)

    slow = t * cut < 1.0
    if slow:
        # QAWO/QAWF moments break down for t << 1 / cut
        head = integrate.quad(oscillating, 0.0, cut, epsabs=settings.quad_epsabs,
                              limit=settings.quad_limit, full_output=1)
    else:
        head = integrate.quad(density, 0.0, cut, weight='cos', wvar=wvar,
                              epsabs=settings.quad_epsabs, limit=settings.quad_limit, full_output=1)
    value, abserr, failed = head[0], head[1], len(head) > 3
    if kernel.family != Family.GAUSS:
        if slow:
            tail = integrate.quad(oscillating, cut, np.inf, epsabs=settings.quad_epsabs,
                                  limit=settings.quad_limit, full_output=1)
        else:
            tail = integrate.quad(density, cut, np.inf, weight='cos', wvar=wvar,
                                  epsabs=settings.quad_epsabs, limlst=settings.quad_limlst,
                                  limit=settings.quad_limit, full_output=1)
        value += tail[0]
        abserr += tail[1]
        failed = failed or len(tail) > 3
    if failed and abserr > settings.quad_fail_abserr:
        raise EvaluationError(f"cosine transform of the {kernel.family.value} density did not converge at t={t:g}",
                              residual=2.0 * abserr)
    return 2.0 * value


# ---------------------------------------------------------------------------
# Series / 级数
# ---------------------------------------------------------------------------

def _gauss_series(dim: int, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    1F1(d/2; 1/2; -z) = e^{-z} 1F1((1-d)/2; 1/2; z), term recurrence with
    Neumaier compensation. Returns values and a mask of trusted entries.
    """
    a, b = 0.5 * (1 - dim), 0.5
    term = np.exp(-z)
    total = term.copy()
    comp = np.zeros_like(z)
    peak = np.abs(term)
    terminating = float(a).is_integer()
    n_stop = int(-a)
    z_max = float(z.max()) if z.size else 0.0
    max_iter = int(z_max + 40.0 * math.sqrt(z_max) + 200 + abs(a))
    converged = np.zeros(z.shape, dtype=bool)
    n = 0
    while n < max_iter:
        term = term * ((a + n) / (b + n)) * z / (n + 1)
        n += 1
        tmp = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - tmp) + term, (term - tmp) + total)
        total = tmp
        np.maximum(peak, np.abs(term), out=peak)
        if terminating and n >= n_stop:
            converged[:] = True
            break
        if n > -a:
            converged = np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)
            if converged.all():
                break
    ok = converged & (peak <= SETTINGS.series_max_term)
    return total + comp, ok


def _laplace_series(dim: int, at: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Power series in alpha*t with log-gamma coefficients"""
    half_log_pi = 0.5 * math.log(math.pi)
    log_gd = special.gammaln(0.5 * dim)
    with np.errstate(divide='ignore'):
        log_at = np.log(at)
    total = np.ones_like(at)
    comp = np.zeros_like(at)
    peak = np.ones_like(at)
    at_max = float(at.max()) if at.size else 0.0
    max_iter = int(4.0 * at_max + dim + 400)
    converged = np.zeros(at.shape, dtype=bool)
    for n in range(1, max_iter):
        log_c = (half_log_pi + special.gammaln(0.5 * (n + dim)) - special.gammaln(n + 1.0)
                 - log_gd - special.gammaln(0.5 * (n + 1)))
        with np.errstate(under='ignore'):
            term = (-1.0) ** n * np.exp(log_c + n * log_at)
        tmp = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - tmp) + term, (term - tmp) + total)
        total = tmp
        np.maximum(peak, np.abs(term), out=peak)
        if n > at_max + 0.5 * dim:
            converged = np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)
            if converged.all():
                break
    ok = converged & (peak <= SETTINGS.series_max_term)
    return total + comp, ok


# ---------------------------------------------------------------------------
# f
# ---------------------------------------------------------------------------

EVAL_METHODS = ('auto', 'exact', 'quad', 'table')


def eval_f(kernel: KernelSpec, t: ArrayLike, method: str = 'auto') -> ArrayLike:
    """
    Evaluate the sliced basis f / 计算切片基函数 f

    Riesz and thin plate are closed forms. Gauss and Laplace use series
    where they are well conditioned and the cosine transform of the spectral
    density elsewhere; Matern always goes through the cosine transform.
    Large batches of transform evaluations are served from a cached spline
    table (method 'auto' or 'table'); 'exact' never tabulates and 'quad'
    forces quadrature.

    Args:
        kernel: Kernel spec / 核函数
        t: Nonnegative argument(s) / 非负自变量
        method: One of auto, exact, quad, table / 求值方式

    Returns:
        f(t), float for scalar input / 函数值
    """
    if method not in EVAL_METHODS:
        raise ParameterError(f"unknown evaluation method '{method}'")
    arr = _nonnegative(t)
    x = np.atleast_1d(arr).astype(float).ravel()
    fam = kernel.family
    if fam == Family.RIESZ:
        with np.errstate(divide='ignore'):
            out = -riesz_constant(kernel.dim, kernel.r) * np.power(x, kernel.r)
    elif fam == Family.THIN_PLATE:
        out = kernel.dim * special.xlogy(x ** 2, x) + thin_plate_constant(kernel.dim) * x ** 2
    else:
        out = _eval_positive_definite(kernel, x, method)
    return _finish(arr, out)


def _eval_positive_definite(kernel: KernelSpec, x: np.ndarray, method: str) -> np.ndarray:
    out = np.empty_like(x)
    need = np.ones(x.shape, dtype=bool)
    if method != 'quad':
        if kernel.family == Family.GAUSS:
            z = x ** 2 / (2.0 * kernel.sigma ** 2)
            cand = np.flatnonzero(z <= SETTINGS.gauss_series_max_z)
            vals, ok = _gauss_series(kernel.dim, z[cand])
        elif kernel.family == Family.LAPLACE:
            at = kernel.alpha * x
            cand = np.flatnonzero(at <= SETTINGS.laplace_series_max_at)
            vals, ok = _laplace_series(kernel.dim, at[cand])
        else:
            cand, vals, ok = np.array([], dtype=int), np.array([]), np.array([], dtype=bool)
        out[cand[ok]] = vals[ok]
        need[cand[ok]] = False
    rest = np.flatnonzero(need)
    if rest.size == 0:
        return out
    if method == 'table' or (method == 'auto' and rest.size >= SETTINGS.table_min_points):
        profile = sliced_profile(kernel, float(x[rest].max()))
        out[rest] = profile(x[rest])
    else:
        if rest.size > 16:
            logger.debug("quadrature for %d values of the %s sliced basis", rest.size, kernel.label)
        out[rest] = [_cosine_transform(kernel, float(v)) for v in x[rest]]
    return out


def eval_f_derivatives(kernel: KernelSpec, t: ArrayLike, order: int) -> np.ndarray:
    """
    Derivatives f, f', ..., f^(order) at t > 0 (Riesz and thin plate only)
    切片基函数的各阶导数

    Returns:
        Array of shape (order + 1,) + shape(t)
    """
    arr = np.asarray(t, dtype=float)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0)):
        raise DomainError("derivatives are evaluated at t > 0 only")
    if order < 0:
        raise ParameterError("derivative order must be nonnegative")
    x = np.atleast_1d(arr)
    out = np.empty((order + 1,) + x.shape)
    d = kernel.dim
    if kernel.family == Family.RIESZ:
        c, r = riesz_constant(d, kernel.r), kernel.r
        falling = 1.0
        for k in range(order + 1):
            out[k] = -c * falling * np.power(x, r - k)
            falling *= (r - k)
    elif kernel.family == Family.THIN_PLATE:
        c = thin_plate_constant(d)
        log_x = np.log(x)
        out[0] = d * x ** 2 * log_x + c * x ** 2
        if order >= 1:
            out[1] = 2.0 * d * x * log_x + d * x + 2.0 * c * x
        if order >= 2:
            out[2] = 2.0 * d * log_x + 3.0 * d + 2.0 * c
        for k in range(3, order + 1):
            out[k] = 2.0 * d * (-1.0) ** (k - 3) * math.factorial(k - 3) * x ** (2 - k)
    else:
        raise UnsupportedFamilyError("analytic derivatives exist for Riesz and thin plate kernels only")
    return out if arr.ndim else out[:, 0]


# ---------------------------------------------------------------------------
# Tabulated profiles / 查表
# ---------------------------------------------------------------------------

class SlicedProfile:
    """
    Cubic spline table of f on [0, t_max] in the variable u = sqrt(t)
    f 在 [0, t_max] 上的三次样条表
    """

    def __init__(self, kernel: KernelSpec, t_max: float):
        self.kernel = kernel
        self.t_max = float(t_max)
        self.nodes = SETTINGS.table_nodes
        self.max_error = math.inf
        u_max = math.sqrt(self.t_max)
        while True:
            u = np.linspace(0.0, u_max, self.nodes)
            spline = CubicSpline(u, eval_f(kernel, u ** 2, method='exact'))
            step = max(1, (self.nodes - 1) // 128)
            mid = 0.5 * (u[:-1] + u[1:])[::step]
            exact = eval_f(kernel, mid ** 2, method='exact')
            self.max_error = float(np.max(np.abs(spline(mid) - exact)))
            if self.max_error <= SETTINGS.table_tolerance or self.nodes >= SETTINGS.table_max_nodes:
                break
            self.nodes *= 2
        if self.max_error > SETTINGS.table_tolerance:
            logger.warning("profile table of %s reaches %.2e only (%d nodes)",
                           kernel.label, self.max_error, self.nodes)
        else:
            logger.debug("profile table of %s on [0, %g]: %d nodes, error %.2e",
                         kernel.label, self.t_max, self.nodes, self.max_error)
        self._spline = spline

    def __call__(self, t: ArrayLike) -> np.ndarray:
        x = np.asarray(t, dtype=float)
        out = self._spline(np.sqrt(np.minimum(x, self.t_max)))
        beyond = x > self.t_max
        if np.any(beyond):
            out = np.asarray(out)
            out[beyond] = eval_f(self.kernel, x[beyond], method='exact')
        return out


@lru_cache(maxsize=32)
def _profile_cached(kernel: KernelSpec, t_hi: float) -> SlicedProfile:
    return SlicedProfile(kernel, t_hi)


def sliced_profile(kernel: KernelSpec, t_max: float) -> Callable[[ArrayLike], np.ndarray]:
    """
    Cached spline table of f covering [0, t_max] / 缓存的 f 样条表

    Ranges are rounded up to a power of two so neighbouring requests share a table.
    """
    if not kernel.is_positive_definite:
        return lambda t: eval_f(kernel, t)
    t_hi = 2.0 ** math.ceil(math.log2(max(float(t_max), 1e-3)))
    return _profile_cached(kernel, t_hi)


# ---------------------------------------------------------------------------
# Sampling and bandwidth / 采样与带宽
# ---------------------------------------------------------------------------

def sample_projection(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Sample <xi, x>/||x|| for uniform xi: density ~ (1 - t^2)^{(d-3)/2} on [-1, 1]
    投影密度采样 (对称 Beta 变换)
    """
    if dim < 2:
        raise ParameterError("dimension must be >= 2")
    half = 0.5 * (dim - 1)
    return 2.0 * rng.beta(half, half, size=n) - 1.0


def _canonical_rows(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ParameterError("point sets must be non-empty")
    return arr[np.lexsort(arr.T[::-1])]


def median_rule(points_a, points_b, rule: Optional[ScaleRule] = None, seed: Optional[int] = None) -> float:
    """
    Bandwidth gamma * median ||x - y|| over sampled pairs / 中位数规则

    Inputs are sorted into a canonical order first, so the result does not
    depend on the order of the points. When all pairs fit in the sample
    budget the exact median over all pairs is used.

    Args:
        points_a: First point set / 第一组点
        points_b: Second point set / 第二组点
        rule: Scale factor and sample size / 规则
        seed: Pair sampling seed / 采样种子

    Returns:
        gamma * median distance / 带宽
    """
    rule = rule or ScaleRule()
    a = _canonical_rows(points_a)
    b = _canonical_rows(points_b)
    if a.shape[1] != b.shape[1]:
        raise ParameterError("point sets have different dimensions")
    if a.shape[0] * b.shape[0] <= rule.sample_size:
        dists = cdist(a, b).ravel()
    else:
        rng = make_rng(seed)
        i = rng.integers(a.shape[0], size=rule.sample_size)
        j = rng.integers(b.shape[0], size=rule.sample_size)
        dists = np.linalg.norm(a[i] - b[j], axis=1)
    med = float(np.median(dists))
    if not np.any(dists > 0) or med <= 0.0:
        raise DegenerateDataError("sampled pair distances are zero, no scale can be derived")
    return rule.gamma * med
