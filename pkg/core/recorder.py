#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
recorder.py - result tables, meta files and the naive-sum cache
结果表、元数据文件与朴素求和缓存
"""

import csv
import hashlib
import json
import logging
import threading
from datetime import datetime
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Union

import h5py
import numpy as np


logger = logging.getLogger(__name__)


def format_value(value) -> str:
    """17 significant digits for floats, plain text otherwise / 浮点数保留17位有效数字"""
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


class ResultTable:
    """CSV table with a JSON meta sidecar / 带元数据文件的CSV表"""

    def __init__(self, columns: Sequence[str], meta: Optional[dict] = None):
        self.columns = list(columns)
        self.rows: List[list] = []
        self.meta = dict(meta or {})

    def add_row(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(list(values))

    def save(self, filepath: Union[str, Path], write_meta: bool = True) -> Path:
        """
        Write CSV (LF endings, header row) and '<name>.meta.json'
        保存CSV与元数据

        Args:
            filepath: CSV path / CSV路径
            write_meta: Also write the meta sidecar / 是否写元数据

        Returns:
            Path of the CSV / CSV路径
        """
        path = Path(filepath)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator='\n')
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([format_value(v) for v in row])
        if write_meta:
            save_meta(path, self.meta)
        logger.info("table saved to %s (%d rows)", path, len(self.rows))
        return path


def save_meta(path: Union[str, Path], meta: dict) -> Path:
    """Write '<file>.meta.json' with a creation timestamp / 写入元数据"""
    path = Path(path)
    meta_path = path.with_name(path.name + '.meta.json')
    data = {
        'meta': {
            'file': path.name,
            'created': datetime.now().isoformat(),
            **meta,
        }
    }
    with open(meta_path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False, default=str)
    return meta_path


def save_vector(values: np.ndarray, filepath: Union[str, Path]) -> Path:
    """One value per line at 17 significant digits / 每行一个值"""
    path = Path(filepath)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for value in np.asarray(values, dtype=float).ravel():
            f.write(f"{value:.17g}\n")
    return path


def problem_key(x: np.ndarray, y: np.ndarray, w: np.ndarray, kernel_label: str) -> str:
    """SHA-1 over the data and the kernel / 数据与核函数的哈希键"""
    h = hashlib.sha1()
    for arr in (x, y, w):
        a = np.ascontiguousarray(arr, dtype=np.float64)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    h.update(kernel_label.encode())
    return h.hexdigest()


class NaiveCache:
    """
    HDF5 cache of exact reference sums / 精确参考和的HDF5缓存

    One dataset per problem key; a lock serializes file access.
    """

    def __init__(self, filepath: Union[str, Path]):
        self.path = Path(filepath)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def get(self, key: str) -> Optional[np.ndarray]:
        with self._lock:
            if not self.path.exists():
                return None
            with h5py.File(self.path, 'r') as f:
                if key not in f:
                    return None
                return np.asarray(f[key][()])

    def put(self, key: str, values: np.ndarray, **attrs):
        with self._lock:
            with h5py.File(self.path, 'a') as f:
                if key in f:
                    del f[key]
                dset = f.create_dataset(key, data=np.asarray(values, dtype=np.float64))
                dset.attrs['created'] = datetime.now().isoformat()
                for name, value in attrs.items():
                    dset.attrs[name] = value

    def get_or_compute(self, key: str, compute: Callable[[], np.ndarray], **attrs) -> np.ndarray:
        cached = self.get(key)
        if cached is not None:
            logger.info("naive sum cache hit %s", key[:12])
            return cached
        values = compute()
        self.put(key, values, **attrs)
        return values
