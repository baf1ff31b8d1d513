#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Error Hierarchy / 错误层次
Exceptions raised by the summation engine and their CLI exit codes
求和引擎抛出的异常及其命令行退出码
"""

from typing import Optional

import numpy as np


EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CAPABILITY = 4
EXIT_NUMERICAL = 5


class FastSliceError(Exception):
    """Base class of all engine errors / 所有引擎错误的基类"""

    exit_code = 1

    @property
    def error_class(self) -> str:
        return type(self).__name__

    def one_line(self) -> str:
        """Machine-parseable single-line form / 单行可解析格式"""
        message = ' '.join(str(self).split())
        return f"error class={self.error_class} code={self.exit_code} message={message}"


class UsageError(FastSliceError):
    exit_code = EXIT_USAGE


class ParseError(FastSliceError):
    exit_code = EXIT_PARSE


class CapabilityError(FastSliceError):
    exit_code = EXIT_CAPABILITY


class NumericalError(FastSliceError):
    exit_code = EXIT_NUMERICAL


class ParameterError(UsageError, ValueError):
    """Invalid kernel, generator or run parameters / 参数无效"""


class DomainError(UsageError, ValueError):
    """Argument outside the mathematical domain / 参数超出定义域"""


class DirectionFileError(ParseError):
    """Malformed direction file / 方向文件格式错误"""


class DatasetError(ParseError):
    """Malformed dataset or weights file / 数据集文件格式错误"""


class UnsupportedFamilyError(CapabilityError):
    """Operation not available for the kernel family / 核函数族不支持该操作"""


class UnsupportedDimensionError(CapabilityError):
    """Dimension beyond what a generator supports / 维度超出生成器支持范围"""


class EvaluationError(NumericalError):
    """Quadrature did not converge / 数值积分未收敛"""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message if residual is None else f"{message} (residual estimate {residual:.3e})")
        self.residual = residual


class DegenerateDataError(NumericalError):
    """Data carries no usable scale / 数据退化"""


class OptimizationDivergedError(NumericalError):
    """Energy became non-finite during optimization / 优化发散"""

    def __init__(self, message: str, last_state: Optional[np.ndarray] = None):
        super().__init__(message)
        self.last_state = last_state


class PlanMismatchError(NumericalError):
    """Data does not fit the precomputed Fourier plan / 数据与傅里叶计划不匹配"""
