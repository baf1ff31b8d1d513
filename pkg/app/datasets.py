#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Datasets / 数据集
CSV point sets and weights, plus seeded synthetic generators
CSV 点集与权重读写, 以及带种子的合成数据生成器
"""

import csv
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from core.errors import DatasetError, ParameterError
from core.rng import make_rng


SYNTHETIC_KINDS = ('blobs', 'cube')


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _read_rows(path: Union[str, Path]) -> List[Tuple[int, List[str]]]:
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8', newline='') as f:
            rows = [(i + 1, [t.strip() for t in row]) for i, row in enumerate(csv.reader(f))]
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e}") from None
    rows = [(no, row) for no, row in rows if row and any(row)]
    if rows and not all(_is_number(t) for t in rows[0][1]):
        rows = rows[1:]
    if not rows:
        raise DatasetError(f"{path} holds no data rows")
    return rows


def load_points(path: Union[str, Path]) -> np.ndarray:
    """
    Load one point per row; an optional non-numeric header row is skipped
    读取点集, 每行一个点, 可选表头

    Args:
        path: CSV file / CSV 文件

    Returns:
        N x d array / 数组
    """
    rows = _read_rows(path)
    width = len(rows[0][1])
    values = []
    for no, row in rows:
        if len(row) != width:
            raise DatasetError(f"{path}:{no}: expected {width} fields, found {len(row)}")
        try:
            values.append([float(t) for t in row])
        except ValueError:
            raise DatasetError(f"{path}:{no}: malformed number") from None
    points = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(points)):
        raise DatasetError(f"{path}: non-finite value")
    return points


def load_weights(path: Union[str, Path], n: Optional[int] = None) -> np.ndarray:
    """One weight per row / 每行一个权重"""
    points = load_points(path)
    if points.shape[1] != 1:
        raise DatasetError(f"{path}: weights file must have one column, found {points.shape[1]}")
    w = points[:, 0]
    if n is not None and w.shape[0] != n:
        raise DatasetError(f"{path}: {w.shape[0]} weights for {n} points")
    return w


def save_points(points: np.ndarray, path: Union[str, Path], header: bool = False) -> Path:
    """Write points at 17 significant digits / 保存点集"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        if header:
            writer.writerow([f"x{i}" for i in range(arr.shape[1])])
        for row in arr:
            writer.writerow([f"{v:.17g}" for v in row])
    return path


def gaussian_blobs(n: int, d: int, seed: Optional[int] = 0, n_blobs: int = 8,
                   spread: float = 0.25) -> np.ndarray:
    """
    Mixture of isotropic Gaussians with standard normal centres
    各向同性高斯混合

    Args:
        n: Number of points / 点数
        d: Dimension / 维度
        seed: Seed / 种子
        n_blobs: Number of components / 分量数
        spread: Component standard deviation / 分量标准差

    Returns:
        n x d array
    """
    rng = make_rng(seed)
    centres = rng.standard_normal((n_blobs, d))
    labels = rng.integers(n_blobs, size=n)
    return centres[labels] + spread * rng.standard_normal((n, d))


def uniform_cube(n: int, d: int, seed: Optional[int] = 0) -> np.ndarray:
    """Uniform points in [-1, 1]^d / 立方体内均匀分布"""
    return make_rng(seed).uniform(-1.0, 1.0, size=(n, d))


def parse_synthetic(spec: str) -> Tuple[str, int, int]:
    """'kind:N:d', e.g. 'blobs:4096:16' / 解析合成数据描述"""
    parts = spec.split(':')
    if len(parts) != 3 or parts[0] not in SYNTHETIC_KINDS:
        raise ParameterError(f"synthetic data must look like blobs:N:d or cube:N:d, got '{spec}'")
    try:
        n, d = int(parts[1]), int(parts[2])
    except ValueError:
        raise ParameterError(f"synthetic sizes must be integers, got '{spec}'") from None
    if n < 1 or d < 2:
        raise ParameterError(f"synthetic data needs N >= 1 and d >= 2, got '{spec}'")
    return parts[0], n, d


def make_synthetic(spec: str, seed: Optional[int] = 0) -> np.ndarray:
    kind, n, d = parse_synthetic(spec)
    if kind == 'blobs':
        return gaussian_blobs(n, d, seed)
    return uniform_cube(n, d, seed)
