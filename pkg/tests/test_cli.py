# -*- coding: utf-8 -*-
"""Command line surface / 命令行测试"""

import csv
import math

import numpy as np
import pytest

from app import cli
from app.datasets import save_points
from core import directions
from core.errors import EXIT_CAPABILITY, EXIT_PARSE, EXIT_USAGE


@pytest.fixture
def run(tmp_path, monkeypatch):
    """main() with defaults only and outputs under tmp_path"""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv('FASTSLICE_OUTPUT_DIR', str(tmp_path))
    monkeypatch.delenv('FASTSLICE_STREAM', raising=False)

    def _run(*argv):
        return cli.main(['--config', str(tmp_path / 'absent.yaml'), *argv])

    return _run


def _read_csv(path):
    with open(path, newline='') as f:
        return list(csv.DictReader(f))


class TestGenDirs:

    def test_orthogonal(self, run, tmp_path):
        assert run('gen-dirs', '--method', 'orthogonal', '--d', '8', '--p', '8', '--seed', '1', '--out', 'o.txt') == 0
        dirs = directions.load_directions(tmp_path / 'o.txt')
        assert (dirs.P, dirs.d) == (8, 8)
        np.testing.assert_allclose(dirs.vectors @ dirs.vectors.T, np.eye(8), atol=1e-10)

    def test_distance_energy(self, run, tmp_path, capsys):
        assert run('gen-dirs', '--method', 'distance', '--p', '4', '--d', '4', '--seed', '0', '--out', 'dist.txt') == 0
        energy = directions.energy_sym(directions.load_directions(tmp_path / 'dist.txt'))
        assert energy == pytest.approx(-4.0 * 4 - 4.0 * math.sqrt(2.0) * 12, rel=1e-3)
        assert 'E_sym=' in capsys.readouterr().out

    def test_file_rerandomized(self, run, tmp_path):
        directions.save_directions(directions.sobol_sphere(6, 3), tmp_path / 'in.txt')
        assert run('gen-dirs', '--method', 'file', '--in', 'in.txt', '--seed', '2', '--out', 'rot.txt') == 0
        src = directions.load_directions(tmp_path / 'in.txt').vectors
        rot = directions.load_directions(tmp_path / 'rot.txt').vectors
        np.testing.assert_allclose(rot @ rot.T, src @ src.T, atol=1e-12)

    def test_zero_directions_is_usage_error(self, run, capsys):
        assert run('gen-dirs', '--method', 'iid', '--p', '0', '--d', '3', '--out', 'x.txt') == EXIT_USAGE
        err = capsys.readouterr().err.strip()
        assert err.startswith('error class=ParameterError code=2 message=')
        assert '\n' not in err

    def test_unknown_subcommand(self, run, capsys):
        assert run('plot') == EXIT_USAGE
        assert 'class=UsageError' in capsys.readouterr().err


class TestSum:

    def test_fourier_against_naive(self, run, tmp_path, capsys):
        code = run('sum', '--synthetic', 'cube:128:3', '--kernel', 'gauss', '--sigma', '0.8',
                   '--method', 'fourier-slice', '--dirs', 'distance', '--p', '16', '--compare-naive',
                   '--out', 's.txt')
        assert code == 0
        out = capsys.readouterr().out
        rel = float(out.split('rel_l1=')[1].split()[0])
        assert rel < 0.05
        assert len((tmp_path / 's.txt').read_text().splitlines()) == 128

    def test_csv_inputs_default_weights(self, run, tmp_path):
        gen = np.random.default_rng(0)
        x = gen.normal(size=(20, 3))
        y = gen.normal(size=(7, 3))
        save_points(x, tmp_path / 'x.csv', header=True)
        save_points(y, tmp_path / 'y.csv')
        assert run('sum', '--x', 'x.csv', '--y', 'y.csv', '--kernel', 'laplace', '--alpha', '1.0',
                   '--out', 'naive.txt') == 0
        values = np.loadtxt(tmp_path / 'naive.txt')
        dist = np.linalg.norm(y[:, None, :] - x[None, :, :], axis=2)
        np.testing.assert_allclose(values, np.exp(-dist).sum(axis=1), rtol=1e-12)

    def test_riesz_fourier_needs_periodization(self, run, capsys):
        code = run('sum', '--synthetic', 'cube:32:3', '--kernel', 'riesz', '--r', '1',
                   '--method', 'fourier-slice', '--p', '4')
        assert code == EXIT_CAPABILITY
        assert 'class=UnsupportedFamilyError' in capsys.readouterr().err

    def test_malformed_points(self, run, tmp_path, capsys):
        (tmp_path / 'bad.csv').write_text('1.0,2.0\n3.0,abc\n')
        assert run('sum', '--x', 'bad.csv') == EXIT_PARSE
        assert 'bad.csv:2' in capsys.readouterr().err

    def test_sorting_needs_negative_distance(self, run):
        assert run('sum', '--synthetic', 'cube:16:3', '--method', 'sorting-slice', '--p', '2') == EXIT_USAGE


class TestBench:

    ARGS = ('bench', '--synthetic', 'blobs:200:3', '--kernel', 'gauss', '--methods',
            'fourier-slice:iid,fourier-slice:sobol,rff', '--p-list', '8,16', '--reps', '1', '--seed', '3')

    def test_table(self, run, tmp_path):
        assert run(*self.ARGS, '--out', 'bench.csv') == 0
        rows = _read_csv(tmp_path / 'bench.csv')
        assert [r['method'] for r in rows] == ['fourier-slice:iid'] * 2 + ['fourier-slice:sobol'] * 2 + ['rff'] * 2
        assert [int(r['P_or_D']) for r in rows] == [8, 16, 8, 16, 8, 16]
        assert all(float(r['rel_l1_std']) == 0.0 for r in rows)
        assert all(0.0 < float(r['rel_l1_mean']) < 1.0 for r in rows[:4])
        assert all(np.isfinite(float(r['rel_l1_mean'])) for r in rows[4:])
        assert (tmp_path / 'bench.csv.meta.json').exists()
        assert (tmp_path / 'naive_cache.h5').exists()

    def test_reproducible_apart_from_timing(self, run, tmp_path):
        assert run(*self.ARGS, '--out', 'a.csv') == 0
        assert run(*self.ARGS, '--out', 'b.csv') == 0
        strip = lambda rows: [{k: v for k, v in r.items() if k != 'time_s'} for r in rows]
        assert strip(_read_csv(tmp_path / 'a.csv')) == strip(_read_csv(tmp_path / 'b.csv'))

    def test_equal_cost_sizes(self, run, tmp_path, monkeypatch):
        (tmp_path / 'cfg.yaml').write_text('bench:\n  equal_cost_k: 2\n')
        code = cli.main(['--config', str(tmp_path / 'cfg.yaml'), 'bench', '--synthetic', 'blobs:100:3',
                         '--methods', 'rff,rff-k:iid', '--equal-cost', '--reps', '1', '--out', 'equal_cost.csv'])
        assert code == 0
        rows = _read_csv(tmp_path / 'equal_cost.csv')
        assert [int(r['P_or_D']) for r in rows] == [20, 40, 10, 20]


class TestVarianceCheck:

    def test_riesz_d3(self, run, tmp_path):
        code = run('variance-check', '--kernel', 'riesz', '--r', '1', '--d', '3', '--x-norm', '1',
                   '--samples', '1000000', '--out', 'var.csv')
        assert code == 0
        row = _read_csv(tmp_path / 'var.csv')[0]
        assert row['kind'] == 'exact'
        assert float(row['closed_form']) == pytest.approx(0.333333, abs=1e-6)
        assert abs(float(row['mc_estimate']) - float(row['closed_form'])) <= 4.0 * float(row['mc_stderr'])

    def test_no_closed_form_row(self, run, tmp_path):
        assert run('variance-check', '--kernel', 'gauss', '--d', '4', '--x-norm', '0.5,2',
                   '--samples', '2000', '--out', 'v.csv') == 0
        rows = _read_csv(tmp_path / 'v.csv')
        assert [r['kind'] for r in rows] == ['bound', 'bound']


class TestRate:

    def test_single_p_is_usage_error(self, run):
        assert run('rate', '--kernel', 'gauss', '--d', '3', '--p-list', '16') == EXIT_USAGE

    def test_table_and_details(self, run, tmp_path):
        code = run('rate', '--kernel', 'gauss', '--sigma', '1', '--d', '3', '--generators', 'iid,orthogonal',
                   '--p-list', '8,32', '--reps', '4', '--n-x', '50', '--details-dir', 'details', '--out', 'r.csv')
        assert code == 0
        rows = _read_csv(tmp_path / 'r.csv')
        assert [r['generator'] for r in rows] == ['iid', 'orthogonal']
        assert (tmp_path / 'details' / 'iid.csv').exists()

    @pytest.mark.slow
    def test_iid_rate(self, run, tmp_path):
        code = run('rate', '--kernel', 'gauss', '--d', '3', '--generators', 'iid',
                   '--p-list', '8,16,32,64,128,256,512', '--reps', '10', '--n-x', '200', '--out', 'iid.csv')
        assert code == 0
        assert 0.35 <= float(_read_csv(tmp_path / 'iid.csv')[0]['r']) <= 0.65
