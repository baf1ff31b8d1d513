# -*- coding: utf-8 -*-
"""Direction generators, energies and direction files / 方向集测试"""

import dataclasses
import math

import numpy as np
import pytest
from scipy import stats

from core import directions
from core.directions import DirectionSet, EnergyOptConfig, Generator
from core.errors import (DirectionFileError, DomainError, ParameterError,
                         UnsupportedDimensionError)
from core.rng import make_rng


def _unit_rows(v):
    np.testing.assert_allclose(np.linalg.norm(v, axis=1), 1.0, atol=1e-12)


class TestDirectionSet:

    def test_rejects_non_unit_rows(self):
        with pytest.raises(ParameterError):
            DirectionSet(np.array([[1.0, 0.0], [0.6, 0.6]]))

    def test_rejects_empty(self):
        with pytest.raises(ParameterError):
            DirectionSet(np.zeros((0, 3)))

    def test_deterministic_flag(self):
        assert directions.sobol_sphere(8, 3).is_deterministic
        assert not directions.sobol_sphere(8, 3, seed=1).is_deterministic
        assert not directions.iid_uniform(8, 3, seed=1).is_deterministic

    def test_immutable(self):
        source = np.eye(3)
        dirs = DirectionSet(source, Generator.ORTHOGONAL)
        source[0, 0] = 5.0
        np.testing.assert_array_equal(dirs.vectors, np.eye(3))
        with pytest.raises(ValueError):
            dirs.vectors[0, 0] = 0.0
        with pytest.raises(dataclasses.FrozenInstanceError):
            dirs.seed = 3
        rotated = directions.randomize(dirs, seed=1)
        assert rotated.randomized and not dirs.randomized


class TestIid:

    def test_single_direction(self):
        dirs = directions.iid_uniform(1, 2, seed=0)
        assert dirs.P == 1 and dirs.d == 2
        _unit_rows(dirs.vectors)

    def test_mean_close_to_zero(self):
        P = 100000
        dirs = directions.iid_uniform(P, 4, seed=2)
        assert np.all(np.abs(dirs.vectors.mean(axis=0)) < 4.0 / math.sqrt(P))

    def test_same_seed_same_output(self):
        a = directions.iid_uniform(16, 5, seed=42).vectors
        b = directions.iid_uniform(16, 5, seed=42).vectors
        assert a.tobytes() == b.tobytes()

    @pytest.mark.parametrize('P,d', [(0, 3), (4, 1), (2.5, 3)])
    def test_bad_sizes(self, P, d):
        with pytest.raises(ParameterError):
            directions.iid_uniform(P, d)


class TestSobol:

    def test_skips_centre_point(self):
        g = directions.sobol_gaussian(16, 3)
        assert np.all(np.linalg.norm(g, axis=1) > 0)
        assert np.all(np.isfinite(g))

    def test_unit_rows_and_shift(self):
        plain = directions.sobol_sphere(64, 5)
        shifted = directions.sobol_sphere(64, 5, seed=3)
        _unit_rows(plain.vectors)
        _unit_rows(shifted.vectors)
        assert not np.allclose(plain.vectors, shifted.vectors)
        np.testing.assert_array_equal(shifted.vectors, directions.sobol_sphere(64, 5, seed=3).vectors)

    def test_dimension_limit(self):
        with pytest.raises(UnsupportedDimensionError):
            directions.sobol_gaussian(4, directions.SOBOL_MAX_DIM + 1)

    def test_more_uniform_than_iid_on_circle(self):
        P, wins = 256, 0
        for rep in range(20):
            sob = directions.randomize(directions.sobol_sphere(P, 2), seed=rep).vectors
            iid = directions.iid_uniform(P, 2, seed=100 + rep).vectors
            angle = lambda v: (np.arctan2(v[:, 1], v[:, 0]) + math.pi) / (2.0 * math.pi)
            ks_sob = stats.kstest(angle(sob), 'uniform').statistic
            ks_iid = stats.kstest(angle(iid), 'uniform').statistic
            wins += ks_sob < ks_iid
        assert wins >= 15


class TestOrthogonal:

    def test_square_frame(self):
        v = directions.orthogonal(6, 6, seed=1).vectors
        np.testing.assert_allclose(v @ v.T, np.eye(6), atol=1e-10)

    def test_two_blocks(self):
        d = 4
        v = directions.orthogonal(2 * d, d, seed=5).vectors
        np.testing.assert_allclose(v[:d] @ v[:d].T, np.eye(d), atol=1e-10)
        np.testing.assert_allclose(v[d:] @ v[d:].T, np.eye(d), atol=1e-10)

    def test_haar_first_coordinate_mean(self):
        first = np.array([directions.random_orthogonal(3, seed=s)[0, 0] for s in range(10000)])
        stderr = first.std(ddof=1) / math.sqrt(first.size)
        assert abs(first.mean()) <= 4.0 * stderr

    def test_randomize_is_isometry(self):
        dirs = directions.iid_uniform(10, 5, seed=8)
        a = directions.random_orthogonal(5, seed=1)
        np.testing.assert_allclose(a.T @ a, np.eye(5), atol=1e-12)
        rotated = directions.randomize(dirs, seed=9)
        assert rotated.randomized and rotated.generator == Generator.IID
        np.testing.assert_allclose(rotated.vectors @ rotated.vectors.T, dirs.vectors @ dirs.vectors.T,
                                   atol=1e-12)


class TestEnergies:

    def test_single_direction(self):
        assert directions.energy_sym(np.array([[1.0, 0.0, 0.0]])) == pytest.approx(-4.0)

    def test_orthogonal_pair(self):
        e = directions.energy_sym(np.eye(3)[:2])
        assert e == pytest.approx(-8.0 - 8.0 * math.sqrt(2.0))
        assert e == pytest.approx(directions.orthonormal_energy(2))

    def test_orthonormal_closed_form(self):
        for P in (1, 3, 5):
            v = directions.orthogonal(P, 5, seed=P).vectors
            assert directions.energy_sym(v) == pytest.approx(directions.orthonormal_energy(P), rel=1e-12)

    def test_threads_do_not_change_result(self):
        v = directions.iid_uniform(600, 3, seed=1)
        assert directions.energy_sym(v, threads=4) == directions.energy_sym(v, threads=1)

    def test_riesz_energy_examples(self):
        assert directions.energy_riesz(np.array([[1.0, 0.0], [-1.0, 0.0]])) == pytest.approx(-4.0)
        assert directions.energy_riesz(np.array([[0.0, 1.0], [0.0, 1.0]])) == 0.0
        angles = 2.0 * math.pi * np.arange(3) / 3.0
        tri = np.column_stack([np.cos(angles), np.sin(angles), np.zeros(3)])
        assert directions.energy_riesz(tri) == pytest.approx(-6.0 * math.sqrt(3.0))

    def test_riesz_exponent_range(self):
        with pytest.raises(DomainError):
            directions.energy_riesz(np.eye(3), exponent=-0.5)


class TestDistanceDesign:

    def test_single_direction(self):
        dirs = directions.distance_design(1, 3, EnergyOptConfig(steps=5, seed=0))
        assert directions.energy_sym(dirs) == pytest.approx(-4.0)

    def test_reaches_orthonormal_optimum(self):
        dirs = directions.distance_design(4, 4, EnergyOptConfig(seed=0))
        target = -4.0 * 4 - 4.0 * math.sqrt(2.0) * 12
        assert target == pytest.approx(-83.882, abs=1e-3)
        assert directions.energy_sym(dirs) == pytest.approx(target, rel=1e-3)

    def test_improves_on_start(self):
        cfg = EnergyOptConfig(steps=200, seed=4)
        start = directions.iid_uniform(12, 3, seed=4)
        assert directions.energy_sym(directions.distance_design(12, 3, cfg)) <= directions.energy_sym(start)

    def test_budget(self):
        cfg = EnergyOptConfig()
        assert cfg.budget(1, 2) == 500
        assert cfg.budget(20, 10) == 2000
        assert cfg.budget(1000, 10) == 3000
        assert EnergyOptConfig(steps=7).budget(1000, 10) == 7

    def test_config_overrides(self):
        cfg = EnergyOptConfig.from_config({'step_size': 0.05, 'unknown': 1}, steps=None, seed=3)
        assert cfg.step_size == 0.05 and cfg.seed == 3 and cfg.steps is None
        with pytest.raises(ParameterError):
            EnergyOptConfig(beta1=1.0)


class TestFiles:

    def test_round_trip(self, tmp_path):
        dirs = directions.iid_uniform(7, 4, seed=3)
        path = tmp_path / 'dirs.txt'
        directions.save_directions(dirs, path)
        assert path.read_text().splitlines()[0] == '4 7'
        loaded = directions.load_directions(path)
        np.testing.assert_allclose(loaded.vectors, dirs.vectors, rtol=0, atol=1e-15)
        assert loaded.generator == Generator.FILE

    def test_headerless_file(self, tmp_path):
        v = directions.iid_uniform(6, 3, seed=1).vectors
        path = tmp_path / 'plain.txt'
        np.savetxt(path, v, fmt='%.17g')
        loaded = directions.load_directions(path)
        assert (loaded.d, loaded.P) == (3, 6)

    def test_two_column_rows_are_not_a_header(self, tmp_path):
        path = tmp_path / 'circle.txt'
        path.write_text('1 0\n0 1\n-1 0\n')
        loaded = directions.load_directions(path)
        assert (loaded.d, loaded.P) == (2, 3)

    def test_non_unit_row_rejected(self, tmp_path):
        path = tmp_path / 'bad.txt'
        path.write_text('1 0 0\n0.9 0 0\n')
        with pytest.raises(DirectionFileError, match=':2:'):
            directions.load_directions(path)

    def test_ragged_and_malformed(self, tmp_path):
        ragged = tmp_path / 'ragged.txt'
        ragged.write_text('1 0 0\n0 1\n')
        with pytest.raises(DirectionFileError):
            directions.load_directions(ragged)
        malformed = tmp_path / 'malformed.txt'
        malformed.write_text('1 0 0\n0 x 0\n')
        with pytest.raises(DirectionFileError):
            directions.load_directions(malformed)
        with pytest.raises(DirectionFileError):
            directions.load_directions(tmp_path / 'missing.txt')

    def test_design_lookup(self, tmp_path):
        directions.save_directions(directions.orthogonal(6, 3, seed=0), tmp_path / 'octahedron.txt')
        directions.save_directions(directions.orthogonal(3, 3, seed=0), tmp_path / '3.txt')
        assert directions.load_design_for(6, tmp_path).P == 6
        assert directions.load_design_for(3, tmp_path).generator == Generator.SPHERICAL_DESIGN
        with pytest.raises(DirectionFileError):
            directions.load_design_for(5, tmp_path)


def test_generate_dispatch():
    assert directions.generate('orthogonal', 3, 3, seed=1).generator == Generator.ORTHOGONAL
    assert directions.generate('sobol', 4, 3).generator == Generator.SOBOL
    with pytest.raises(ParameterError):
        directions.generate('halton', 4, 3)
