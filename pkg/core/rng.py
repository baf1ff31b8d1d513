#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Random Streams / 随机数流
All randomness goes through numpy's counter-based Philox generator so that
seeds reproduce across platforms.
所有随机数均来自 Philox 计数器生成器, 保证跨平台可复现。
"""

import os
from typing import Optional

import numpy as np


RNG_ALGORITHM = 'philox'
STREAM_ENV = 'FASTSLICE_STREAM'

_default_stream: Optional[int] = None


def set_default_stream(stream: Optional[int]):
    """Override the stream offset for this process / 设置进程级流偏移"""
    global _default_stream
    _default_stream = None if stream is None else int(stream)


def default_stream() -> int:
    if _default_stream is not None:
        return _default_stream
    value = os.environ.get(STREAM_ENV, '').strip()
    return int(value) if value else 0


def make_rng(seed: Optional[int], *spawn: int, stream: Optional[int] = None) -> np.random.Generator:
    """
    Build a Philox generator / 构建 Philox 生成器

    Args:
        seed: Base seed; None draws fresh OS entropy / 基础种子
        spawn: Extra integers identifying a sub-stream (P index, rep, ...) / 子流标识
        stream: Stream offset, defaults to FASTSLICE_STREAM / 流偏移

    Returns:
        numpy Generator
    """
    offset = default_stream() if stream is None else int(stream)
    key = (offset,) + tuple(int(s) for s in spawn)
    seq = np.random.SeedSequence(seed, spawn_key=key)
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed: Optional[int], *spawn: int) -> int:
    """Deterministic 63-bit child seed / 派生子种子"""
    if seed is None:
        return int(make_rng(None).integers(2 ** 63 - 1))
    seq = np.random.SeedSequence(seed, spawn_key=(default_stream(),) + tuple(int(s) for s in spawn))
    return int(seq.generate_state(1, dtype=np.uint64)[0]) >> 1
