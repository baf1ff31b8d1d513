# -*- coding: utf-8 -*-
"""Shared fixtures / 公共测试夹具"""

import numpy as np
import pytest

from core import kernels
from core.fastsum import SummationProblem
from core.kernels import KernelSpec
from core.rng import make_rng, set_default_stream


@pytest.fixture(autouse=True)
def default_kernel_settings():
    """Every test starts from the built-in evaluation thresholds"""
    saved = kernels.SETTINGS
    yield
    kernels.SETTINGS = saved
    kernels._profile_cached.cache_clear()
    set_default_stream(None)


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def gauss3():
    return KernelSpec.gauss(3, 1.0)


@pytest.fixture
def small_problem():
    gen = make_rng(7)
    x = gen.normal(size=(64, 3))
    y = gen.normal(size=(48, 3))
    w = gen.uniform(0.5, 1.5, size=64)
    return SummationProblem(x, y, w)

