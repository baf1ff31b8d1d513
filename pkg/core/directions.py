#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Direction Sets / 方向集
Generators, energies and file I/O for sets of unit vectors on S^{d-1}
单位球面方向集的生成、能量与文件读写
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from core.errors import (DirectionFileError, DomainError, OptimizationDivergedError,
                         ParameterError, UnsupportedDimensionError)
from core.rng import make_rng


logger = logging.getLogger(__name__)

SOBOL_MAX_DIM = 21201
SOBOL_BITS = 30
UNIT_TOLERANCE = 1e-12
_CHUNK = 256


class Generator(str, Enum):
    IID = 'iid'
    SOBOL = 'sobol'
    ORTHOGONAL = 'orthogonal'
    DISTANCE = 'distance'
    SPHERICAL_DESIGN = 'design'
    FILE = 'file'


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """
    P unit vectors in R^d / R^d 中的 P 个单位向量

    Immutable; the matrix is a read-only copy.
    不可变, 矩阵为只读副本。

    Args:
        vectors: P x d matrix with unit rows / 单位行向量矩阵
        generator: Provenance / 生成方式
        seed: Seed used by the generator, None when deterministic / 种子
        randomized: True once a random rotation has been applied / 是否已随机旋转
    """
    vectors: np.ndarray
    generator: Generator = Generator.IID
    seed: Optional[int] = None
    randomized: bool = False

    def __post_init__(self):
        v = np.array(self.vectors, dtype=float)
        if v.ndim != 2:
            raise ParameterError("direction vectors must form a P x d matrix")
        if v.shape[0] < 1 or v.shape[1] < 2:
            raise ParameterError(f"direction sets need P >= 1 and d >= 2, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("direction vectors must be finite")
        dev = np.max(np.abs(np.linalg.norm(v, axis=1) - 1.0))
        if dev > UNIT_TOLERANCE:
            raise ParameterError(f"direction rows are not unit vectors (deviation {dev:.2e})")
        v.setflags(write=False)
        object.__setattr__(self, 'vectors', v)
        object.__setattr__(self, 'generator', Generator(self.generator))

    @property
    def P(self) -> int:
        return self.vectors.shape[0]

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def is_deterministic(self) -> bool:
        if self.generator in (Generator.SPHERICAL_DESIGN, Generator.FILE):
            return True
        return self.generator == Generator.SOBOL and self.seed is None


def _normalize_rows(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _check_sizes(P: int, d: int):
    for name, value, low in (('P', P, 1), ('d', d, 2)):
        if isinstance(value, bool) or int(value) != value or value < low:
            raise ParameterError(f"{name} must be an integer >= {low}, got {value}")


# ---------------------------------------------------------------------------
# Generators / 生成器
# ---------------------------------------------------------------------------

def iid_uniform(P: int, d: int, seed: Optional[int] = None) -> DirectionSet:
    """Normalized standard Gaussian vectors / 独立均匀方向"""
    _check_sizes(P, d)
    rng = make_rng(seed)
    g = rng.standard_normal((int(P), int(d)))
    return DirectionSet(_normalize_rows(g), Generator.IID, seed)


def sobol_gaussian(n: int, d: int, seed: Optional[int] = None) -> np.ndarray:
    """
    Inverse-normal images of Sobol points / Sobol 点的正态逆变换

    Index 0 is skipped; rows that map to non-finite or zero vectors are dropped
    and replaced by later points. A seed applies a digital (XOR) shift.

    Args:
        n: Number of rows / 行数
        d: Dimension / 维度
        seed: Digital shift seed, None for the plain sequence / 数字移位种子

    Returns:
        n x d matrix / 矩阵
    """
    if d > SOBOL_MAX_DIM:
        raise UnsupportedDimensionError(
            f"Sobol direction numbers cover d <= {SOBOL_MAX_DIM}, got d={d}")
    engine = qmc.Sobol(d, scramble=False, bits=SOBOL_BITS)
    engine.fast_forward(1)
    shift = None
    if seed is not None:
        shift = make_rng(seed).integers(0, 2 ** SOBOL_BITS, size=d, dtype=np.uint64)
    scale = float(2 ** SOBOL_BITS)
    rows: List[np.ndarray] = []
    have = 0
    while have < n:
        batch = max(n - have, 8)
        with warnings.catch_warnings():
            warnings.simplefilter('ignore', UserWarning)
            u = engine.random(batch)
        if shift is not None:
            ints = np.round(u * scale).astype(np.uint64) ^ shift
            u = ints.astype(float) / scale
        with np.errstate(divide='ignore'):
            g = ndtri(u)
        norms = np.linalg.norm(g, axis=1)
        keep = np.isfinite(norms) & (norms > 0)
        rows.append(g[keep])
        have += int(keep.sum())
    return np.concatenate(rows)[:n]


def sobol_sphere(P: int, d: int, seed: Optional[int] = None) -> DirectionSet:
    """
    Sobol points pushed to the sphere through the normal distribution
    Sobol 点经正态分布投影到球面
    """
    _check_sizes(P, d)
    g = sobol_gaussian(int(P), int(d), seed)
    return DirectionSet(_normalize_rows(g), Generator.SOBOL, seed)


def _haar_block(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    signs = np.where(np.diag(r) >= 0, 1.0, -1.0)
    return q * signs


def random_orthogonal(d: int, seed: Optional[int] = None) -> np.ndarray:
    """Haar-distributed orthogonal matrix / Haar 随机正交矩阵"""
    _check_sizes(1, d)
    return _haar_block(make_rng(seed), int(d))


def orthogonal(P: int, d: int, seed: Optional[int] = None) -> DirectionSet:
    """
    Columns of ceil(P/d) independent Haar orthogonal matrices
    由多个 Haar 正交矩阵的列组成
    """
    _check_sizes(P, d)
    rng = make_rng(seed)
    blocks = [_haar_block(rng, int(d)) for _ in range(math.ceil(P / d))]
    cols = np.concatenate(blocks, axis=1)[:, :int(P)]
    return DirectionSet(_normalize_rows(cols.T), Generator.ORTHOGONAL, seed)


def randomize(dirs: DirectionSet, seed: Optional[int] = None) -> DirectionSet:
    """Apply one Haar rotation A to every row: xi -> A xi / 随机旋转"""
    a = random_orthogonal(dirs.d, seed)
    rotated = _normalize_rows(dirs.vectors @ a.T)
    return DirectionSet(rotated, dirs.generator, dirs.seed, randomized=True)


# ---------------------------------------------------------------------------
# Energies / 能量
# ---------------------------------------------------------------------------

def _pair_norms(x: np.ndarray, rows: slice) -> Tuple[np.ndarray, np.ndarray]:
    """||xi_p - xi_q||, ||xi_p + xi_q|| for p in rows, all q"""
    sq = np.einsum('ij,ij->i', x, x)
    gram = x[rows] @ x.T
    base = sq[rows][:, None] + sq[None, :]
    minus = np.sqrt(np.maximum(base - 2.0 * gram, 0.0))
    plus = np.sqrt(np.maximum(base + 2.0 * gram, 0.0))
    idx = np.arange(rows.start, rows.stop)
    local = np.arange(len(idx))
    minus[local, idx] = 0.0
    plus[local, idx] = 2.0 * np.sqrt(sq[idx])
    return minus, plus


def _chunks(P: int) -> List[slice]:
    return [slice(s, min(s + _CHUNK, P)) for s in range(0, P, _CHUNK)]


def _reduce(parts) -> float:
    total = 0.0
    for part in parts:
        total += part
    return total


def energy_sym(dirs: Union[DirectionSet, np.ndarray], threads: int = 1) -> float:
    """
    E_sym = -2 sum_{p,q} (||xi_p - xi_q|| + ||xi_p + xi_q||), diagonal included
    对称距离能量

    Partial sums over row blocks are reduced in block order.
    """
    x = dirs.vectors if isinstance(dirs, DirectionSet) else np.asarray(dirs, dtype=float)

    def block(rows: slice) -> float:
        minus, plus = _pair_norms(x, rows)
        return float(np.sum(minus) + np.sum(plus))

    chunks = _chunks(x.shape[0])
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(block, chunks))
    else:
        parts = [block(c) for c in chunks]
    return -2.0 * _reduce(parts)


def energy_riesz(dirs: Union[DirectionSet, np.ndarray], exponent: float = 1.0) -> float:
    """-sum_{p != q} ||xi_p - xi_q||^s for s in (0, 2) / Riesz 距离能量"""
    if not (0.0 < exponent < 2.0):
        raise DomainError(f"energy exponent must lie in (0, 2), got {exponent}")
    x = dirs.vectors if isinstance(dirs, DirectionSet) else np.asarray(dirs, dtype=float)
    P = x.shape[0]
    step = max(1, 2_000_000 // (P * x.shape[1]))
    parts = []
    for start in range(0, P, step):
        diff = x[start:start + step][:, None, :] - x[None, :, :]
        dist = np.sqrt(np.einsum('ijk,ijk->ij', diff, diff))
        parts.append(float(np.sum(dist ** exponent)))
    return -_reduce(parts)


# ---------------------------------------------------------------------------
# Distance design / 距离设计
# ---------------------------------------------------------------------------

@dataclass
class EnergyOptConfig:
    """
    Adam settings for the distance design / 距离设计优化参数

    steps None means clip(10 d P, min_steps, max_steps).
    """
    steps: Optional[int] = None
    step_size: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    pair_clamp: float = 1e-12
    seed: Optional[int] = None
    min_steps: int = 500
    max_steps: int = 3000
    lr_final_ratio: float = 0.05
    threads: int = 1

    def __post_init__(self):
        if self.steps is not None and (int(self.steps) != self.steps or self.steps < 1):
            raise ParameterError(f"steps must be >= 1, got {self.steps}")
        if not self.step_size > 0:
            raise ParameterError("step_size must be positive")
        for name in ('beta1', 'beta2'):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ParameterError(f"{name} must lie in (0, 1)")
        if not self.pair_clamp > 0:
            raise ParameterError("pair_clamp must be positive")
        if not 0.0 < self.lr_final_ratio <= 1.0:
            raise ParameterError("lr_final_ratio must lie in (0, 1]")

    def budget(self, P: int, d: int) -> int:
        if self.steps is not None:
            return int(self.steps)
        return int(np.clip(10 * d * P, self.min_steps, self.max_steps))

    @classmethod
    def from_config(cls, section: Optional[dict], **overrides) -> 'EnergyOptConfig':
        keys = ('step_size', 'beta1', 'beta2', 'pair_clamp', 'min_steps', 'max_steps', 'lr_final_ratio')
        values = {k: v for k, v in (section or {}).items() if k in keys}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def _energy_and_gradient(x: np.ndarray, clamp: float) -> Tuple[float, np.ndarray]:
    total = 0.0
    grad = np.empty_like(x)
    for rows in _chunks(x.shape[0]):
        minus, plus = _pair_norms(x, rows)
        total += float(np.sum(minus) + np.sum(plus))
        w_minus = np.where(minus > 0, 1.0 / np.maximum(minus, clamp), 0.0)
        w_plus = np.where(plus > 0, 1.0 / np.maximum(plus, clamp), 0.0)
        xr = x[rows]
        pull = xr * w_minus.sum(axis=1, keepdims=True) - w_minus @ x
        push = xr * w_plus.sum(axis=1, keepdims=True) + w_plus @ x
        grad[rows] = -4.0 * (pull + push)
    return -2.0 * total, grad


def distance_design(P: int, d: int, cfg: Optional[EnergyOptConfig] = None) -> DirectionSet:
    """
    Minimize E_sym with Adam, renormalizing rows after every step
    用 Adam 最小化对称距离能量

    Starts from iid_uniform(P, d, cfg.seed) and returns the iterate with the
    lowest recorded energy.

    Args:
        P: Number of directions / 方向数
        d: Dimension / 维度
        cfg: Optimizer settings / 优化参数

    Returns:
        DirectionSet tagged DISTANCE / 方向集
    """
    cfg = cfg or EnergyOptConfig()
    _check_sizes(P, d)
    x = iid_uniform(P, d, cfg.seed).vectors.copy()
    steps = cfg.budget(P, d)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    best_x, best_e = x.copy(), math.inf
    decay = cfg.lr_final_ratio ** (1.0 / max(steps - 1, 1))
    lr = cfg.step_size
    for it in range(1, steps + 2):
        energy, grad = _energy_and_gradient(x, cfg.pair_clamp)
        if not math.isfinite(energy) or not np.all(np.isfinite(grad)):
            raise OptimizationDivergedError(
                f"distance energy became non-finite at step {it}", last_state=best_x)
        if energy < best_e:
            best_e, best_x = energy, x.copy()
        if it > steps:
            break
        grad -= np.einsum('ij,ij->i', grad, x)[:, None] * x
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad ** 2
        m_hat = m / (1.0 - cfg.beta1 ** it)
        v_hat = v / (1.0 - cfg.beta2 ** it)
        x = _normalize_rows(x - lr * m_hat / (np.sqrt(v_hat) + 1e-12))
        lr *= decay
        if it % 500 == 0:
            logger.debug("distance design P=%d d=%d step %d: E_sym=%.10g", P, d, it, best_e)
    logger.info("distance design P=%d d=%d: %d steps, E_sym=%.10g", P, d, steps, best_e)
    return DirectionSet(_normalize_rows(best_x), Generator.DISTANCE, cfg.seed)


def orthonormal_energy(P: int) -> float:
    """E_sym of P orthonormal vectors / 正交集的能量"""
    return -4.0 * P - 4.0 * math.sqrt(2.0) * P * (P - 1)


# ---------------------------------------------------------------------------
# Files / 文件
# ---------------------------------------------------------------------------

def save_directions(dirs: DirectionSet, path: Union[str, Path]):
    """Header 'd P' then P rows at 17 significant digits / 保存方向文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(f"{dirs.d} {dirs.P}\n")
        for row in dirs.vectors:
            f.write(' '.join(f"{value:.17g}" for value in row) + '\n')


def _parse_header(tokens: List[str]) -> Optional[Tuple[int, int]]:
    if len(tokens) != 2:
        return None
    try:
        d, p = int(tokens[0]), int(tokens[1])
    except ValueError:
        return None
    return (d, p) if d >= 1 and p >= 1 else None


def load_directions(path: Union[str, Path], generator: Generator = Generator.FILE,
                    tolerance: float = 1e-6) -> DirectionSet:
    """
    Load a direction file with or without a 'd P' header / 读取方向文件

    Rows whose norm deviates from 1 by less than `tolerance` are renormalized,
    larger deviations are rejected. Without a header d is the field count of
    the first row.

    Args:
        path: File path / 文件路径
        generator: Provenance tag, FILE or SPHERICAL_DESIGN / 来源标记
        tolerance: Norm tolerance / 范数容差

    Returns:
        DirectionSet
    """
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = [(i + 1, line.split()) for i, line in enumerate(f)]
    except OSError as e:
        raise DirectionFileError(f"cannot read direction file {path}: {e}") from None
    lines = [(no, tok) for no, tok in lines if tok and not tok[0].startswith('#')]
    if not lines:
        raise DirectionFileError(f"direction file {path} is empty")

    header = _parse_header(lines[0][1])
    body = lines
    if header is not None:
        d, p = header
        rest = lines[1:]
        if len(rest) == p and all(len(tok) == d for _, tok in rest):
            body = rest
        else:
            header = None
    width = len(body[0][1])
    rows = []
    for no, tok in body:
        if len(tok) != width:
            raise DirectionFileError(f"{path}:{no}: expected {width} fields, found {len(tok)}")
        try:
            rows.append([float(t) for t in tok])
        except ValueError:
            raise DirectionFileError(f"{path}:{no}: malformed number") from None
    vectors = np.asarray(rows, dtype=float)
    if vectors.shape[1] < 2:
        raise DirectionFileError(f"{path}: directions need at least 2 coordinates")
    if not np.all(np.isfinite(vectors)):
        raise DirectionFileError(f"{path}: non-finite coordinate")
    norms = np.linalg.norm(vectors, axis=1)
    bad = np.flatnonzero(np.abs(norms - 1.0) >= tolerance)
    if bad.size:
        no = body[bad[0]][0]
        raise DirectionFileError(f"{path}:{no}: row norm {norms[bad[0]]:.6g} is not 1")
    return DirectionSet(vectors / norms[:, None], generator, None)


def load_design_for(P: int, directory: Union[str, Path]) -> DirectionSet:
    """
    Spherical design with P points from a directory of design files
    从设计文件目录读取 P 点球面设计

    Tries '<P>.txt' first, then any file whose row count equals P.
    """
    directory = Path(directory)
    direct = directory / f"{P}.txt"
    if direct.is_file():
        return load_directions(direct, Generator.SPHERICAL_DESIGN)
    for candidate in sorted(directory.glob('*')):
        if not candidate.is_file():
            continue
        try:
            dirs = load_directions(candidate, Generator.SPHERICAL_DESIGN)
        except DirectionFileError:
            continue
        if dirs.P == P:
            return dirs
    raise DirectionFileError(f"no design with {P} points in {directory}")


# ---------------------------------------------------------------------------
# Dispatch / 分发
# ---------------------------------------------------------------------------

GENERATOR_NAMES = ('iid', 'sobol', 'orthogonal', 'distance')


def generate(method: str, P: int, d: int, seed: Optional[int] = None,
             opt: Optional[EnergyOptConfig] = None) -> DirectionSet:
    """Build a direction set by generator name / 按名称生成方向集"""
    if method == 'iid':
        return iid_uniform(P, d, seed)
    if method == 'sobol':
        return sobol_sphere(P, d, seed)
    if method == 'orthogonal':
        return orthogonal(P, d, seed)
    if method == 'distance':
        cfg = opt or EnergyOptConfig()
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        return distance_design(P, d, cfg)
    raise ParameterError(f"unknown direction generator '{method}'")
