# -*- coding: utf-8 -*-
"""Slicing variance and convergence experiments / 方差与收敛实验测试"""

import math

import numpy as np
import pytest
from scipy import integrate

from analysis import experiments, variance
from analysis.variance import ASYMPTOTIC, BOUND, EXACT
from core.directions import EnergyOptConfig
from core.errors import (CapabilityError, DomainError, ParameterError,
                         UnsupportedDimensionError)
from core.kernels import KernelSpec


class TestClosedForms:

    def test_riesz_d3(self):
        cf = variance.variance_closed_form(KernelSpec.riesz(3, 1.0), 3, 1.0)
        assert cf.kind == EXACT
        assert cf.value == pytest.approx(1.0 / 3.0, rel=1e-12)
        assert variance.variance_closed_form(KernelSpec.riesz(3, 1.0), 3, 2.0).value == pytest.approx(4.0 / 3.0)

    def test_laplace_d3(self):
        cf = variance.variance_closed_form(KernelSpec.laplace(3, 1.0), 3, 1.0)
        assert cf.kind == EXACT
        assert cf.value == pytest.approx((1.0 - 5.0 * math.exp(-2.0)) / 4.0, rel=1e-12)
        assert cf.value == pytest.approx(0.080833, abs=1e-6)

    @pytest.mark.parametrize('sigma,x_norm,expected', [(1.0, 1.0, 0.100269), (2.0, 1.0, 0.010471),
                                                       (0.5, 1.3, 0.250790)])
    def test_gauss_d3(self, sigma, x_norm, expected):
        cf = variance.variance_closed_form(KernelSpec.gauss(3, sigma), 3, x_norm)
        assert cf.kind == EXACT
        assert cf.value == pytest.approx(expected, abs=2e-6)

    def test_gauss_d3_matches_quadrature(self):
        # E f(||x|| u)^2 - F(||x||)^2 with u uniform on [0, 1]
        for b in (1e-4, 0.3, 1.0, 1.0001, 4.0, 30.0):
            second, _ = integrate.quad(lambda u: (1.0 - b * u * u) ** 2 * math.exp(-b * u * u), 0.0, 1.0,
                                       epsabs=1e-15, epsrel=1e-13)
            expected = second - math.exp(-b)
            assert variance.gauss_variance_d3(b) == pytest.approx(expected, rel=1e-8, abs=1e-13)
        assert variance.gauss_variance_d3(1e-3) == pytest.approx(1e-6 / 5.0 - 1e-9 / 7.0, rel=1e-6)

    def test_positive_definite_bound(self):
        k = KernelSpec.gauss(5, 1.0)
        cf = variance.variance_closed_form(k, 5, 50.0)
        assert cf.kind == BOUND and cf.is_upper_bound
        assert cf.value == pytest.approx(1.0)
        assert variance.variance_closed_form(KernelSpec.matern(4, 1.0, 1.5), None, 1.0).kind == BOUND

    def test_thin_plate_is_asymptotic(self):
        cf = variance.variance_closed_form(KernelSpec.thin_plate(200), 200, 1.5)
        assert cf.kind == ASYMPTOTIC
        exact = variance.thin_plate_variance_moments(KernelSpec.thin_plate(200), 1.5)
        assert cf.value == pytest.approx(exact, rel=0.1)

    def test_dimension_must_match(self):
        with pytest.raises(ParameterError):
            variance.variance_closed_form(KernelSpec.gauss(3, 1.0), 4, 1.0)

    def test_zero_norm(self):
        for k in (KernelSpec.riesz(4, 0.5), KernelSpec.gauss(3, 1.0), KernelSpec.thin_plate(3)):
            assert variance.variance_closed_form(k, k.dim, 0.0).value == 0.0

    def test_unsupported_is_capability_error(self):
        assert issubclass(UnsupportedDimensionError, CapabilityError)

    def test_riesz_bound_factor(self):
        # dimension-free factor dominates the exact ratio in every dimension
        r = 1.0
        for d in (2, 3, 10, 100):
            exact = variance.riesz_variance(d, r, 1.0) + 1.0
            assert exact <= variance.riesz_variance_bound(r) + 1e-12


class TestMonteCarlo:

    @pytest.mark.parametrize('kernel,x_norm', [(KernelSpec.riesz(3, 1.0), 1.0), (KernelSpec.riesz(3, 1.0), 2.0),
                                               (KernelSpec.laplace(3, 1.0), 1.0),
                                               (KernelSpec.gauss(3, 1.0), 1.0)])
    def test_matches_exact_closed_form(self, kernel, x_norm):
        report = variance.variance_mc(kernel, 3, x_norm, n_samples=1000000, seed=1)
        assert report.closed_form.kind == EXACT
        assert abs(report.z_score) <= 4.0

    def test_thin_plate_moments(self):
        k = KernelSpec.thin_plate(5)
        report = variance.variance_mc(k, 5, 1.7, n_samples=400000, seed=2)
        exact = variance.thin_plate_variance_moments(k, 1.7)
        assert abs(report.mc_estimate - exact) <= 4.0 * report.mc_stderr

    def test_bound_holds(self):
        gen = np.random.default_rng(3)
        cases = [(KernelSpec.gauss(6, 1.0), x) for x in gen.uniform(0.1, 3.0, size=5)]
        cases += [(KernelSpec.laplace(4, 0.7), x) for x in gen.uniform(0.1, 3.0, size=5)]
        cases.append((KernelSpec.matern(5, 1.2, 2.5), 1.0))
        for k, x_norm in cases:
            report = variance.variance_mc(k, k.dim, float(x_norm), n_samples=20000, seed=4)
            assert report.mc_estimate <= report.closed_form.value + 4.0 * report.mc_stderr

    def test_constant_kernel(self):
        class Constant:
            dim = 4

            def f(self, t):
                return np.full_like(t, 2.5)

        report = variance.variance_mc(Constant(), None, 1.0, n_samples=1000, seed=0)
        assert report.mc_estimate == 0.0
        assert report.closed_form is None and report.z_score is None

    def test_sample_count(self):
        with pytest.raises(ParameterError):
            variance.variance_mc(KernelSpec.gauss(3, 1.0), 3, 1.0, n_samples=1)

    def test_slicing_mse(self):
        k = KernelSpec.riesz(3, 1.0)
        diffs = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
        mse = variance.slicing_mse(k, diffs, np.array([1.0, 1.0]), P=10)
        expected = (math.sqrt(1.0 / 3.0) + math.sqrt(4.0 / 3.0)) ** 2 / 10
        assert mse == pytest.approx(expected)


class TestRateFit:

    def test_exact_power_laws(self):
        p = [8, 16, 32, 64]
        assert experiments.fit_rate(p, [1.0 / v for v in p])[0] == pytest.approx(1.0)
        assert experiments.fit_rate(p, [7.0 * v ** -0.5 for v in p])[0] == pytest.approx(0.5)

    def test_errors(self):
        with pytest.raises(ParameterError):
            experiments.fit_rate([8], [0.1])
        with pytest.raises(DomainError):
            experiments.fit_rate([8, 16], [0.1, 0.0])


class TestExperiments:

    def test_single_p(self):
        report = experiments.slicing_error_experiment(KernelSpec.gauss(3, 1.0), 3, [1], reps=3, n_x=50)
        assert report.mean_errors[0] > 0
        assert math.isnan(report.rate)

    def test_iid_quadruple_p_halves_error(self):
        report = experiments.slicing_error_experiment(KernelSpec.gauss(3, 1.0), 3, [16, 64], generator='iid',
                                                      reps=30, n_x=200, seed=1)
        ratio = report.mean_errors[0] / report.mean_errors[1]
        assert 1.5 <= ratio <= 2.6

    def test_same_seed_reproducible(self):
        kwargs = dict(generator='orthogonal', reps=3, n_x=40, seed=5)
        a = experiments.slicing_error_experiment(KernelSpec.laplace(3, 1.0), 3, [4, 8], **kwargs)
        b = experiments.slicing_error_experiment(KernelSpec.laplace(3, 1.0), 3, [4, 8], threads=3, **kwargs)
        assert a.mean_errors == b.mean_errors and a.std_errors == b.std_errors

    def test_fixed_base_without_randomization_collapses(self, caplog):
        report = experiments.slicing_error_experiment(KernelSpec.gauss(3, 1.0), 3, [8, 16], generator='sobol',
                                                      reps=5, n_x=30, randomize=False)
        assert report.reps == 1 and report.std_errors == [0.0, 0.0]
        assert 'collapsed' in caplog.text

    def test_validation(self):
        k = KernelSpec.gauss(3, 1.0)
        with pytest.raises(ParameterError):
            experiments.slicing_error_experiment(k, 3, [16, 8])
        with pytest.raises(ParameterError):
            experiments.slicing_error_experiment(k, 3, [8, 4096])
        with pytest.raises(ParameterError):
            experiments.slicing_error_experiment(k, 3, [8, 16], generator='halton')
        with pytest.raises(ParameterError):
            experiments.slicing_error_experiment(k, 4, [8, 16])
        with pytest.raises(ParameterError):
            experiments.slicing_error_experiment(k, 3, [8, 16], generator='design')

    @pytest.mark.parametrize('generator', ['rff', 'orf', 'sobol-rff'])
    def test_feature_generators(self, generator):
        report = experiments.slicing_error_experiment(KernelSpec.gauss(3, 1.0), 3, [16, 256],
                                                      generator=generator, reps=4, n_x=100, seed=2)
        assert report.mean_errors[1] < report.mean_errors[0]

    def test_report_table(self, tmp_path):
        report = experiments.slicing_error_experiment(KernelSpec.gauss(3, 1.0), 3, [4, 8], reps=2, n_x=20)
        table = report.table()
        assert table.columns == ['generator', 'kernel', 'd', 'P', 'mean_error', 'std_error']
        assert table.rows[-1][3] == 'rate'
        path = report.save(tmp_path / 'iid.csv')
        lines = path.read_text().splitlines()
        assert len(lines) == 4 and lines[1].startswith('iid,gauss(sigma=1),3,4,')

    def test_rate_table_needs_two_points(self):
        with pytest.raises(ParameterError):
            experiments.rate_table(KernelSpec.gauss(3, 1.0), ['iid'], [8])

    def test_distance_designs_beat_iid(self):
        k = KernelSpec.gauss(3, 1.0)
        opt = EnergyOptConfig(steps=300)
        p_list = [16, 32]
        iid = experiments.slicing_error_experiment(k, 3, p_list, generator='iid', reps=10, n_x=200, seed=3)
        dist = experiments.slicing_error_experiment(k, 3, p_list, generator='distance', reps=10, n_x=200,
                                                    seed=3, opt_config=opt)
        assert all(a < b for a, b in zip(dist.mean_errors, iid.mean_errors))


@pytest.mark.slow
class TestRateReproduction:

    P_LIST = [8, 16, 32, 64, 128, 256, 512]

    def _rate(self, generator):
        return experiments.slicing_error_experiment(KernelSpec.gauss(3, 1.0), 3, self.P_LIST, generator=generator,
                                                    reps=10, n_x=200, seed=0).rate

    def test_iid(self):
        assert 0.35 <= self._rate('iid') <= 0.65

    def test_sobol(self):
        assert self._rate('sobol') >= 0.75

    def test_distance(self):
        assert self._rate('distance') >= 1.5

    def test_rff(self):
        report = experiments.slicing_error_experiment(KernelSpec.gauss(3, 1.0), 3, [32, 128, 512, 2048],
                                                      generator='rff', reps=10, n_x=200, seed=0)
        assert 0.35 <= report.rate <= 0.65
