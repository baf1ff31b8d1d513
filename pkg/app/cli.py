#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
Command Line / 命令行
Argument parsing, run configuration and error-to-exit-code mapping
参数解析、运行配置与错误退出码映射
"""

import argparse
import logging
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from core import kernels
from core.config import DEFAULT_CONFIG_PATH, load_config
from core.directions import GENERATOR_NAMES
from core.errors import FastSliceError, ParameterError, UsageError
from core.fastsum import METHODS
from core.kernels import Family
from core.rng import set_default_stream


logger = logging.getLogger(__name__)

GEN_DIRS_METHODS = GENERATOR_NAMES + ('file',)
KERNEL_CHOICES = ('gauss', 'laplace', 'matern', 'riesz', 'thin-plate')


class _Parser(argparse.ArgumentParser):
    """Turns argparse failures into UsageError / 将参数错误转为 UsageError"""

    def error(self, message):
        raise UsageError(message)


def _scale_value(text: str):
    if text == 'auto':
        return 'auto'
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got '{text}'") from None


def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'") from None


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _str_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(',') if v.strip()]


@dataclass
class RunConfig:
    """
    Validated settings of one CLI invocation / 一次命令行调用的已验证配置
    """
    command: str
    config: dict = field(default_factory=dict, repr=False)
    kernel: str = 'gauss'
    kernel_params: Dict[str, object] = field(default_factory=dict)
    gamma: float = 1.0
    median_samples: int = 10000
    d: Optional[int] = None
    x_path: Optional[str] = None
    y_path: Optional[str] = None
    w_path: Optional[str] = None
    synthetic: Optional[str] = None
    method: Optional[str] = None
    methods: List[str] = field(default_factory=list)
    generators: List[str] = field(default_factory=list)
    dirs_method: str = 'iid'
    dirs_file: Optional[str] = None
    p: Optional[int] = None
    p_list: List[int] = field(default_factory=list)
    D: Optional[int] = None
    k: int = 10
    n_ft: Optional[int] = None
    periodize: bool = False
    seed: Optional[int] = 0
    out: Optional[str] = None
    reps: int = 1
    n_x: int = 1000
    threads: int = 1
    x_norms: List[float] = field(default_factory=list)
    samples: int = 1000000
    randomize: bool = True
    equal_cost: bool = False
    design_dir: Optional[str] = None
    compare_naive: bool = False
    details_dir: Optional[str] = None
    steps: Optional[int] = None

    @property
    def family(self) -> Family:
        return Family.parse(self.kernel)

    def validate(self) -> 'RunConfig':
        """Check mutual consistency before any work / 执行前检查一致性"""
        if self.threads < 1:
            raise ParameterError("--threads must be >= 1")
        if self.reps < 1:
            raise ParameterError("--reps must be >= 1")
        family = self.family
        r = self.kernel_params.get('r')
        if self.command == 'gen-dirs':
            if self.method not in GEN_DIRS_METHODS:
                raise ParameterError(f"--method must be one of {', '.join(GEN_DIRS_METHODS)}")
            if self.method == 'file':
                if not self.dirs_file:
                    raise ParameterError("--method file needs --in")
            else:
                if self.p is None or self.p < 1:
                    raise ParameterError(f"--p must be >= 1, got {self.p}")
                if self.d is None or self.d < 2:
                    raise ParameterError(f"--d must be >= 2, got {self.d}")
            if not self.out:
                raise ParameterError("--out is required")
        elif self.command in ('sum', 'bench'):
            if not (self.x_path or self.synthetic):
                raise ParameterError("give --x or --synthetic")
            if self.x_path and self.synthetic:
                raise ParameterError("--x and --synthetic are mutually exclusive")
            backends = [self.method] if self.command == 'sum' else [m.split(':')[0] for m in self.methods]
            for backend in backends:
                if backend not in METHODS:
                    raise ParameterError(f"unknown method '{backend}', expected one of {', '.join(METHODS)}")
            if 'sorting-slice' in backends and not (family == Family.RIESZ and (r is None or float(r) == 1.0)):
                raise ParameterError("the sorting backend needs the Riesz kernel with r = 1")
            if self.command == 'sum':
                if self.method in ('direct-slice', 'fourier-slice', 'sorting-slice', 'rff-k'):
                    if not self.dirs_file and (self.p is None or self.p < 1):
                        raise ParameterError("sliced methods need --p >= 1 or --dirs-file")
                    if not self.dirs_file and self.dirs_method not in GENERATOR_NAMES:
                        raise ParameterError(f"--dirs must be one of {', '.join(GENERATOR_NAMES)}")
                if self.method in ('rff', 'orf', 'sobol-rff') and (self.D is None or self.D < 1):
                    raise ParameterError("feature methods need --D >= 1")
            else:
                if not self.p_list and not self.equal_cost:
                    raise ParameterError("bench needs --p-list or --equal-cost")
        elif self.command == 'variance-check':
            if self.d is None or self.d < 2:
                raise ParameterError("--d must be >= 2")
            if not self.x_norms or any(v < 0 for v in self.x_norms):
                raise ParameterError("--x-norm needs nonnegative values")
            if self.samples < 2:
                raise ParameterError("--samples must be >= 2")
        elif self.command == 'rate':
            if self.d is None or self.d < 2:
                raise ParameterError("--d must be >= 2")
            if len(self.p_list) < 2:
                raise ParameterError("a rate needs at least two P values in --p-list")
            if not self.generators:
                raise ParameterError("--generators is empty")
        return self


def _add_kernel_args(p: argparse.ArgumentParser):
    g = p.add_argument_group('kernel / 核函数')
    g.add_argument('--kernel', choices=KERNEL_CHOICES, default='gauss')
    g.add_argument('--sigma', type=_scale_value, help="Gauss length scale or 'auto'")
    g.add_argument('--alpha', type=_scale_value, help="Laplace decay or 'auto'")
    g.add_argument('--beta', type=_scale_value, help="Matern scale or 'auto'")
    g.add_argument('--nu', type=float, default=1.5, help='Matern smoothness')
    g.add_argument('--r', type=float, default=1.0, help='Riesz exponent')
    g.add_argument('--gamma', type=float, default=1.0, help='median rule factor')
    g.add_argument('--median-samples', type=int, default=10000)


def _add_data_args(p: argparse.ArgumentParser):
    g = p.add_argument_group('data / 数据')
    g.add_argument('--x', dest='x_path', help='sources CSV')
    g.add_argument('--y', dest='y_path', help='targets CSV (default: sources)')
    g.add_argument('--w', dest='w_path', help='weights CSV (default: all ones)')
    g.add_argument('--synthetic', help="synthetic data 'blobs:N:d' or 'cube:N:d'")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='fastslice', description='Sliced fast kernel summation / 切片快速核求和')
    parser.add_argument('--config', default=DEFAULT_CONFIG_PATH, help='YAML config file')
    parser.add_argument('--log-level', help='override logging level')
    parser.add_argument('--stream', type=int, help='RNG stream offset (default FASTSLICE_STREAM)')
    parser.add_argument('--threads', type=int, default=1)
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen-dirs', help='generate a direction file')
    p.add_argument('--method', required=True)
    p.add_argument('--d', type=int)
    p.add_argument('--p', type=int)
    p.add_argument('--seed', type=int)
    p.add_argument('--in', dest='dirs_file', help='input direction file for --method file')
    p.add_argument('--steps', type=int, help='distance design step budget')
    p.add_argument('--out', required=True)

    p = sub.add_parser('sum', help='compute one kernel sum')
    _add_kernel_args(p)
    _add_data_args(p)
    p.add_argument('--method', default='naive')
    p.add_argument('--dirs', dest='dirs_method', default='iid')
    p.add_argument('--dirs-file')
    p.add_argument('--p', type=int)
    p.add_argument('--D', type=int)
    p.add_argument('--k', type=int, default=10)
    p.add_argument('--n-ft', type=int)
    p.add_argument('--periodize', action='store_true')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--compare-naive', action='store_true')
    p.add_argument('--out', default='sums.txt')

    p = sub.add_parser('bench', help='benchmark sweep against the naive sum')
    _add_kernel_args(p)
    _add_data_args(p)
    p.add_argument('--methods', type=_str_list, help="e.g. 'fourier-slice:distance,fourier-slice:iid,rff'")
    p.add_argument('--p-list', type=_int_list)
    p.add_argument('--reps', type=int)
    p.add_argument('--k', type=int)
    p.add_argument('--n-ft', type=int)
    p.add_argument('--periodize', action='store_true')
    p.add_argument('--equal-cost', action='store_true')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', default='bench.csv')

    p = sub.add_parser('variance-check', help='closed-form vs Monte-Carlo variance')
    _add_kernel_args(p)
    p.add_argument('--d', type=int, required=True)
    p.add_argument('--x-norm', dest='x_norms', type=_float_list, default=[1.0])
    p.add_argument('--samples', type=int)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--out', default='variance.csv')

    p = sub.add_parser('rate', help='convergence rate table')
    _add_kernel_args(p)
    p.add_argument('--d', type=int, required=True)
    p.add_argument('--generators', type=_str_list, default=['iid'])
    p.add_argument('--p-list', type=_int_list, required=True)
    p.add_argument('--reps', type=int)
    p.add_argument('--n-x', type=int)
    p.add_argument('--no-randomize', dest='randomize', action='store_false')
    p.add_argument('--design-dir')
    p.add_argument('--dirs-file')
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--details-dir', help='also write one experiment CSV per generator')
    p.add_argument('--out', default='rates.csv')
    return parser


def run_config_from_args(args: argparse.Namespace, config: dict) -> RunConfig:
    """Merge parsed flags over the config file / 合并命令行参数与配置文件"""
    bench = config.get('bench', {})
    analysis = config.get('analysis', {})
    get = lambda name, default=None: getattr(args, name, default)
    params = {'sigma': get('sigma'), 'alpha': get('alpha'), 'beta': get('beta'),
              'nu': get('nu'), 'r': get('r')}
    reps_default = bench.get('reps', 1) if args.command == 'bench' else analysis.get('reps', 50)
    rc = RunConfig(
        command=args.command,
        config=config,
        kernel=get('kernel', 'gauss') or 'gauss',
        kernel_params={k: v for k, v in params.items() if v is not None},
        gamma=get('gamma', 1.0) or 1.0,
        median_samples=get('median_samples', 10000) or 10000,
        d=get('d'),
        x_path=get('x_path'),
        y_path=get('y_path'),
        w_path=get('w_path'),
        synthetic=get('synthetic'),
        method=get('method'),
        methods=get('methods') or list(bench.get('methods', [])),
        generators=get('generators') or [],
        dirs_method=get('dirs_method', 'iid') or 'iid',
        dirs_file=get('dirs_file'),
        p=get('p'),
        p_list=get('p_list') or ([] if args.command == 'rate' else list(bench.get('p_list', []))),
        D=get('D'),
        k=get('k') or int(bench.get('rff_k', 10)),
        n_ft=get('n_ft'),
        periodize=bool(get('periodize', False)),
        seed=get('seed'),
        out=get('out'),
        reps=get('reps') or int(reps_default),
        n_x=get('n_x') or int(analysis.get('n_x', 1000)),
        threads=args.threads,
        x_norms=get('x_norms') or [],
        samples=get('samples') or int(analysis.get('variance_samples', 1000000)),
        randomize=get('randomize', True),
        equal_cost=bool(get('equal_cost', False)) or bool(args.command == 'bench' and bench.get('equal_cost')),
        design_dir=get('design_dir'),
        compare_naive=bool(get('compare_naive', False)),
        details_dir=get('details_dir'),
        steps=get('steps'),
    )
    return rc.validate()


def setup_logging(config: dict, level: Optional[str] = None):
    section = config.get('logging', {})
    name = (level or section.get('level', 'WARNING')).upper()
    logging.basicConfig(level=getattr(logging, name, logging.WARNING),
                        format=section.get('format', '%(levelname)s %(name)s: %(message)s'),
                        force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    CLI entry / 命令行入口

    Returns:
        Exit code: 0 ok, 2 usage, 3 parse, 4 capability, 5 numerical
        退出码
    """
    from app import commands

    try:
        args = build_parser().parse_args(argv)
        config = load_config(args.config)
        setup_logging(config, args.log_level)
        set_default_stream(args.stream if args.stream is not None else config.get('rng', {}).get('stream', 0))
        kernels.configure(config.get('kernels'))
        rc = run_config_from_args(args, config)
        handler = {
            'gen-dirs': commands.cmd_gen_dirs,
            'sum': commands.cmd_sum,
            'bench': commands.cmd_bench,
            'variance-check': commands.cmd_variance_check,
            'rate': commands.cmd_rate,
        }[rc.command]
        handler(rc)
    except FastSliceError as e:
        print(e.one_line(), file=sys.stderr)
        return e.exit_code
    except SystemExit as e:
        return int(e.code or 0)
    return 0
