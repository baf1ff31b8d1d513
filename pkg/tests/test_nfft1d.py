# -*- coding: utf-8 -*-
"""1D NFFT against the direct sums / 一维 NFFT 测试"""

import cmath

import numpy as np
import pytest

from core import nfft1d
from core.errors import DomainError, ParameterError
from core.nfft1d import NfftPlan, Window
from core.rng import make_rng


def _nodes(n, seed):
    return make_rng(seed).uniform(-0.5, 0.5, size=n)


class TestPlan:

    def test_grid_is_power_of_two(self):
        plan = NfftPlan(96, oversampling=2.0)
        assert plan.grid == 256
        assert plan.sigma == pytest.approx(256 / 96)

    @pytest.mark.parametrize('kwargs', [{'n_ft': 7}, {'n_ft': 0}, {'n_ft': 8, 'oversampling': 1.0},
                                        {'n_ft': 8, 'cutoff': 1}, {'n_ft': 8, 'window': 'sinc'}])
    def test_invalid(self, kwargs):
        with pytest.raises((ParameterError, ValueError)):
            NfftPlan(**kwargs)

    def test_out_of_range_nodes(self):
        plan = NfftPlan(16)
        with pytest.raises(DomainError):
            plan.adjoint([0.5], [1.0])
        with pytest.raises(DomainError):
            plan.forward([-0.51], np.zeros(16))


class TestAdjoint:

    def test_single_node_at_origin(self):
        out = NfftPlan(32).adjoint([0.0], [1.0])
        np.testing.assert_allclose(out, np.ones(32), atol=1e-12)

    def test_matches_direct(self):
        x = _nodes(1000, 1)
        w = make_rng(2).standard_normal(1000)
        plan = NfftPlan(256, oversampling=2.0, cutoff=8)
        fast = plan.adjoint(x, w)
        direct = nfft1d.direct_adjoint(x, w, 256)
        assert np.max(np.abs(fast - direct)) <= 1e-10

    def test_equispaced_nodes_match_dft(self):
        n = 64
        x = np.arange(n) / n - 0.5
        w = make_rng(3).standard_normal(n)
        fast = NfftPlan(n).adjoint(x, w)
        k = nfft1d.frequencies(n)
        dft = np.exp(-2j * np.pi * np.outer(k, x)) @ w
        np.testing.assert_allclose(fast, dft, atol=1e-10 * np.abs(dft).max())

    def test_complex_coefficients(self):
        x = _nodes(50, 4)
        gen = make_rng(5)
        w = gen.standard_normal(50) + 1j * gen.standard_normal(50)
        fast = NfftPlan(32).adjoint(x, w)
        np.testing.assert_allclose(fast, nfft1d.direct_adjoint(x, w, 32), atol=1e-10)

    def test_empty(self):
        np.testing.assert_array_equal(NfftPlan(8).adjoint([], []), np.zeros(8))

    def test_linear(self):
        x = _nodes(200, 15)
        gen = make_rng(16)
        w1, w2 = gen.standard_normal(200), gen.standard_normal(200)
        plan = NfftPlan(64)
        mixed = plan.adjoint(x, 1.5 * w1 - 3.0 * w2)
        combined = 1.5 * plan.adjoint(x, w1) - 3.0 * plan.adjoint(x, w2)
        np.testing.assert_allclose(mixed, combined, rtol=0.0, atol=1e-12 * np.abs(combined).max())

    def test_translation(self):
        n, delta = 64, 0.0625
        x = make_rng(17).uniform(-0.4, 0.4, size=150)
        w = make_rng(18).standard_normal(150)
        phase = np.exp(-2j * np.pi * nfft1d.frequencies(n) * delta)
        shifted = nfft1d.direct_adjoint(x + delta, w, n)
        np.testing.assert_allclose(shifted, phase * nfft1d.direct_adjoint(x, w, n), atol=1e-12 * np.abs(shifted).max())
        np.testing.assert_allclose(NfftPlan(n).adjoint(x + delta, w), phase * NfftPlan(n).adjoint(x, w), atol=1e-10)

    def test_error_decreases_with_cutoff(self):
        x = _nodes(500, 19)
        w = make_rng(20).standard_normal(500)
        direct = nfft1d.direct_adjoint(x, w, 128)
        errors = [np.max(np.abs(NfftPlan(128, cutoff=m).adjoint(x, w) - direct)) for m in (4, 6, 8)]
        assert errors[0] > errors[1] > errors[2]

    def test_real_input_is_conjugate_symmetric(self):
        n = 128
        out = NfftPlan(n).adjoint(_nodes(300, 21), make_rng(22).standard_normal(300))
        # index n/2 + k holds mode k
        np.testing.assert_allclose(out[n // 2 + 1:], out[1:n // 2][::-1].conj(), rtol=0.0,
                                   atol=1e-12 * np.abs(out).max())


class TestForward:

    def test_origin_sums_coefficients(self):
        c = make_rng(6).standard_normal(64)
        out = NfftPlan(64).forward([0.0], c)
        assert out[0] == pytest.approx(c.sum(), abs=1e-10)

    def test_constant_mode(self):
        n = 32
        c = np.zeros(n)
        c[n // 2] = 1.0
        out = NfftPlan(n).forward(_nodes(40, 7), c)
        np.testing.assert_allclose(out, np.ones(40), atol=1e-12)

    def test_single_mode(self):
        n, y = 8, 0.3125
        c = np.zeros(n)
        c[n // 2 + 3] = 1.0
        assert nfft1d.direct_forward([y], c)[0] == pytest.approx(cmath.exp(2j * cmath.pi * 3 * y))

    def test_matches_direct(self):
        y = _nodes(7, 8)
        gen = make_rng(9)
        c = gen.standard_normal(8) + 1j * gen.standard_normal(8)
        np.testing.assert_allclose(NfftPlan(8).forward(y, c), nfft1d.direct_forward(y, c), atol=1e-12)

    def test_random_nodes_absolute_error(self):
        y = _nodes(1000, 23)
        gen = make_rng(24)
        c = gen.standard_normal(256) + 1j * gen.standard_normal(256)
        fast = NfftPlan(256, oversampling=2.0, cutoff=8).forward(y, c)
        assert np.max(np.abs(fast - nfft1d.direct_forward(y, c))) <= 1e-10

    def test_adjointness(self):
        n = 128
        x = _nodes(300, 10)
        gen = make_rng(11)
        w = gen.standard_normal(300) + 1j * gen.standard_normal(300)
        c = gen.standard_normal(n) + 1j * gen.standard_normal(n)
        plan = NfftPlan(n)
        lhs = np.vdot(w, plan.forward(x, c))
        rhs = np.vdot(plan.adjoint(x, w), c)
        assert abs(lhs - rhs) <= 1e-10 * abs(lhs)

    def test_empty(self):
        assert NfftPlan(8).forward([], np.ones(8)).shape == (0,)


def test_gaussian_window_accuracy():
    x = _nodes(400, 12)
    w = make_rng(13).standard_normal(400)
    plan = NfftPlan(64, window=Window.GAUSSIAN, cutoff=10)
    direct = nfft1d.direct_adjoint(x, w, 64)
    assert np.max(np.abs(plan.adjoint(x, w) - direct)) <= 1e-6 * np.max(np.abs(direct))


def test_module_level_helpers():
    plan = NfftPlan(16)
    x = _nodes(20, 14)
    w = np.ones(20)
    np.testing.assert_array_equal(nfft1d.adjoint(plan, x, w), plan.adjoint(x, w))
