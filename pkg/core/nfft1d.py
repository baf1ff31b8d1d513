#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
1D NFFT / 一维非均匀快速傅里叶变换
Adjoint and forward non-equispaced transforms by window gridding
(spread, FFT, deconvolve) plus exact direct oracles.
基于窗函数网格化的伴随/正向变换, 以及直接求和的精确参照。

    adjoint:  w_hat_k = sum_n w_n exp(-2 pi i k x_n)
    forward:  f_m     = sum_k c_k exp(+2 pi i k y_m)
with k = -n_ft/2, ..., n_ft/2 - 1 and nodes in [-1/2, 1/2).
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import special

from core.errors import DomainError, ParameterError


class Window(str, Enum):
    KAISER_BESSEL = 'kaiser_bessel'
    GAUSSIAN = 'gaussian'


def _next_pow2(x: float) -> int:
    return 1 << max(0, math.ceil(math.log2(x)))


def _check_nodes(nodes) -> np.ndarray:
    x = np.asarray(nodes, dtype=float).ravel()
    if x.size and (not np.all(np.isfinite(x)) or x.min() < -0.5 or x.max() >= 0.5):
        raise DomainError("NFFT nodes must lie in [-1/2, 1/2)")
    return x


def frequencies(n_ft: int) -> np.ndarray:
    return np.arange(-n_ft // 2, n_ft // 2)


@dataclass(frozen=True)
class NfftPlan:
    """
    Immutable transform plan / 不可变的变换计划

    Args:
        n_ft: Even number of Fourier modes / 偶数个傅里叶模
        oversampling: Grid enlargement factor >= 1.25 / 过采样因子
        cutoff: Window half-width m in grid cells, >= 2 / 窗口半宽
        window: Kaiser-Bessel or Gaussian / 窗函数
    """
    n_ft: int
    oversampling: float = 2.0
    cutoff: int = 8
    window: Window = Window.KAISER_BESSEL
    grid: int = field(init=False)
    shape: float = field(init=False)
    _deconv: np.ndarray = field(init=False, repr=False, compare=False)
    _k_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if int(self.n_ft) != self.n_ft or self.n_ft < 2 or self.n_ft % 2:
            raise ParameterError(f"n_ft must be an even positive integer, got {self.n_ft}")
        if not self.oversampling >= 1.25:
            raise ParameterError(f"oversampling must be >= 1.25, got {self.oversampling}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 2:
            raise ParameterError(f"cutoff must be an integer >= 2, got {self.cutoff}")
        window = Window(self.window)
        n_ft, m = int(self.n_ft), int(self.cutoff)
        grid = _next_pow2(self.oversampling * n_ft)
        sigma = grid / n_ft
        k = frequencies(n_ft)
        if window == Window.KAISER_BESSEL:
            shape = math.pi * (2.0 - 1.0 / sigma)
            deconv = special.i0(m * np.sqrt(shape ** 2 - (2.0 * math.pi * k / grid) ** 2))
        else:
            shape = 2.0 * sigma * m / ((2.0 * sigma - 1.0) * math.pi)
            deconv = np.exp(-shape * (math.pi * k / grid) ** 2)
        for name, value in (('n_ft', n_ft), ('cutoff', m), ('window', window), ('grid', grid),
                            ('shape', shape), ('_deconv', deconv), ('_k_index', k % grid)):
            object.__setattr__(self, name, value)

    @property
    def sigma(self) -> float:
        """Actual oversampling grid / n_ft / 实际过采样因子"""
        return self.grid / self.n_ft

    def _window_weights(self, x: np.ndarray):
        """Grid indices and window values phi(x_n - l/L) for the 2m+2 nearest cells"""
        L, m = self.grid, self.cutoff
        lx = L * x
        base = np.floor(lx).astype(np.int64)
        offsets = np.arange(-m, m + 2)
        cells = base[:, None] + offsets[None, :]
        dist = lx[:, None] - cells
        if self.window == Window.KAISER_BESSEL:
            arg = m * m - dist ** 2
            inside = arg > 0
            root = np.sqrt(np.where(inside, arg, 1.0))
            with np.errstate(over='ignore'):
                phi = np.where(inside, np.sinh(self.shape * root) / (math.pi * root), 0.0)
            phi = np.where(arg == 0, self.shape / math.pi, phi)
        else:
            phi = np.where(np.abs(dist) <= m,
                           np.exp(-dist ** 2 / self.shape) / math.sqrt(math.pi * self.shape), 0.0)
        return np.mod(cells, L), phi

    def adjoint(self, nodes, coeffs) -> np.ndarray:
        """
        Fast adjoint transform / 快速伴随变换

        Args:
            nodes: N nodes in [-1/2, 1/2) / 节点
            coeffs: N real or complex coefficients / 系数

        Returns:
            Complex vector of length n_ft, modes -n_ft/2 .. n_ft/2-1 / 长度 n_ft 的复向量
        """
        x = _check_nodes(nodes)
        w = np.asarray(coeffs).ravel()
        if w.shape[0] != x.shape[0]:
            raise ParameterError("nodes and coefficients differ in length")
        if x.size == 0:
            return np.zeros(self.n_ft, dtype=complex)
        cells, phi = self._window_weights(x)
        flat = cells.ravel()
        contrib = (w[:, None] * phi).ravel()
        g = np.bincount(flat, weights=contrib.real, minlength=self.grid).astype(complex)
        if np.iscomplexobj(contrib):
            g += 1j * np.bincount(flat, weights=contrib.imag, minlength=self.grid)
        g_hat = np.fft.fft(g)
        return g_hat[self._k_index] / self._deconv

    def forward(self, nodes, spectral) -> np.ndarray:
        """
        Fast forward transform / 快速正向变换

        Args:
            nodes: M nodes in [-1/2, 1/2) / 节点
            spectral: n_ft Fourier coefficients / 傅里叶系数

        Returns:
            Complex vector of length M / 长度 M 的复向量
        """
        y = _check_nodes(nodes)
        c = np.asarray(spectral, dtype=complex).ravel()
        if c.shape[0] != self.n_ft:
            raise ParameterError(f"expected {self.n_ft} Fourier coefficients, got {c.shape[0]}")
        if y.size == 0:
            return np.zeros(0, dtype=complex)
        g_hat = np.zeros(self.grid, dtype=complex)
        g_hat[self._k_index] = c / self._deconv
        g = np.fft.ifft(g_hat) * self.grid
        cells, phi = self._window_weights(y)
        return np.einsum('ij,ij->i', g[cells], phi)


def adjoint(plan: NfftPlan, nodes, coeffs) -> np.ndarray:
    return plan.adjoint(nodes, coeffs)


def forward(plan: NfftPlan, nodes, spectral) -> np.ndarray:
    return plan.forward(nodes, spectral)


def _chunk_rows(n_ft: int) -> int:
    return max(1, 1_000_000 // max(n_ft, 1))


def direct_adjoint(nodes, coeffs, n_ft: int) -> np.ndarray:
    """Exact O(N n_ft) adjoint sum / 精确伴随求和"""
    x = np.asarray(nodes, dtype=float).ravel()
    w = np.asarray(coeffs).ravel()
    k = frequencies(n_ft)
    out = np.zeros(n_ft, dtype=complex)
    step = _chunk_rows(n_ft)
    for s in range(0, x.size, step):
        out += w[s:s + step] @ np.exp(-2j * math.pi * np.outer(x[s:s + step], k))
    return out


def direct_forward(nodes, spectral) -> np.ndarray:
    """Exact O(M n_ft) forward sum / 精确正向求和"""
    y = np.asarray(nodes, dtype=float).ravel()
    c = np.asarray(spectral, dtype=complex).ravel()
    k = frequencies(c.size)
    out = np.empty(y.size, dtype=complex)
    step = _chunk_rows(c.size)
    for s in range(0, y.size, step):
        out[s:s + step] = np.exp(2j * math.pi * np.outer(y[s:s + step], k)) @ c
    return out
