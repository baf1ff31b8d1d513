#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Configuration / 配置
YAML configuration with built-in defaults and environment overrides
YAML 配置, 带默认值与环境变量覆盖
"""

import copy
import logging
import os
from pathlib import Path
from typing import Optional

import yaml


logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = './config/app_config.yaml'
OUTPUT_DIR_ENV = 'FASTSLICE_OUTPUT_DIR'


def get_default_config() -> dict:
    """
    Get default configuration / 获取默认配置

    Returns:
        Default config dict / 默认配置字典
    """
    return {
        'logging': {
            'level': 'WARNING',
            'format': '%(asctime)s %(levelname)s %(name)s: %(message)s',
        },
        'rng': {
            'algorithm': 'philox',
            'stream': 0,
        },
        'kernels': {
            'gauss_series_max_z': 600.0,
            'laplace_series_max_at': 10.0,
            'laplace_series_max_term': 1.0e5,
            'quad_epsabs': 1.0e-10,
            'quad_limit': 400,
            'table_nodes': 1024,
            'table_max_nodes': 8192,
            'table_tolerance': 1.0e-9,
            'table_min_points': 256,
        },
        'directions': {
            'step_size': 0.01,
            'beta1': 0.9,
            'beta2': 0.999,
            'pair_clamp': 1.0e-12,
            'min_steps': 500,
            'max_steps': 3000,
            'lr_final_ratio': 0.05,
            'file_tolerance': 1.0e-6,
        },
        'nfft': {
            'oversampling': 2.0,
            'cutoff': 8,
            'window': 'kaiser_bessel',
        },
        'fourier': {
            'gauss': {'T': 0.3, 'n_ft': 128},
            'matern': {'T': 0.2, 'n_ft': 512},
            'laplace': {'T': 0.1, 'n_ft': 1024},
            'periodized': {'T': 0.25, 'n_ft': 1024, 'grid_factor': 16, 'taylor_order': 4},
            'g_max_factor': 5.0,
        },
        'analysis': {
            'reps': 50,
            'n_x': 1000,
            'max_p': 2048,
            'variance_samples': 1000000,
            'x_variance': 0.1,
        },
        'bench': {
            'methods': ['naive', 'fourier-slice'],
            'p_list': [10, 20, 40, 80, 160],
            'reps': 3,
            'equal_cost': False,
            'equal_cost_k': 6,
            'rff_k': 10,
            'cache_file': 'naive_cache.h5',
        },
        'output': {
            'dir': '.',
        },
    }


def deep_merge(base: dict, override: Optional[dict]) -> dict:
    """Merge override into a copy of base / 递归合并配置"""
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def load_config(config_path: Optional[str] = DEFAULT_CONFIG_PATH) -> dict:
    """
    Load configuration from YAML file / 从YAML文件加载配置

    Missing files fall back to the defaults; present files are merged over them.
    缺失文件时使用默认配置; 已有文件覆盖默认值。

    Args:
        config_path: Path to config file / 配置文件路径

    Returns:
        Configuration dict / 配置字典
    """
    defaults = get_default_config()
    if config_path is None:
        return apply_env_overrides(defaults)
    try:
        with open(config_path, 'r', encoding='utf-8') as f:
            user = yaml.safe_load(f) or {}
    except FileNotFoundError:
        logger.info("Config file not found: %s, using default configuration", config_path)
        return apply_env_overrides(defaults)
    if not isinstance(user, dict):
        logger.warning("Config file %s is not a mapping, ignored", config_path)
        user = {}
    return apply_env_overrides(deep_merge(defaults, user))


def apply_env_overrides(config: dict) -> dict:
    stream = os.environ.get('FASTSLICE_STREAM', '').strip()
    if stream:
        config['rng']['stream'] = int(stream)
    out_dir = os.environ.get(OUTPUT_DIR_ENV, '').strip()
    if out_dir:
        config['output']['dir'] = out_dir
    return config


def resolve_output(path: str, config: dict) -> Path:
    """Relative output paths land in the configured output directory / 解析输出路径"""
    p = Path(path)
    if p.is_absolute():
        return p
    return Path(config.get('output', {}).get('dir', '.')) / p
