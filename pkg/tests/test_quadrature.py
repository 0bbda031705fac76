import math

import numpy as np
import pytest

from pathprob.lattice import LatticeConfig
from pathprob.potentials import BandLimitedPotential
from pathprob.quadrature import (
    KernelEstimate,
    amplitude_discrete,
    extrapolate_gamma,
    probability_from_amplitude,
    probability_product_form,
    transition_probability_quadrature,
)
from pathprob.weights import NonConvergenceError

TWO_PI = 2.0 * math.pi
FREE = BandLimitedPotential.zero()


def free_cfg(n, gamma, za=0.0, zb=0.0, T=1.0):
    return LatticeConfig(0.0, T, n, gamma, za, zb)


class TestFreeParticle:
    def test_n2_approaches_free_propagator(self):
        vals = [
            transition_probability_quadrature(FREE, free_cfg(2, g), points_per_dim=32).value
            for g in (0.2, 0.1, 0.05)
        ]
        target = 1.0 / TWO_PI
        devs = [abs(v - target) for v in vals]
        assert devs[0] > devs[1] > devs[2]
        assert devs[-1] < 0.1 * target

    def test_gamma_extrapolation_hits_free_value(self):
        gammas = (0.2, 0.1, 0.05)
        for n in (2, 3, 4):
            vals = [
                transition_probability_quadrature(
                    FREE, free_cfg(n, g), points_per_dim=28
                ).value
                for g in gammas
            ]
            p0, unc = extrapolate_gamma(gammas, vals)
            assert abs(p0 - 1.0 / TWO_PI) <= unc

    def test_n_independence_as_gamma_shrinks(self):
        # at fixed gamma the extra interior regularizer factors shift the
        # value by O(gamma); the n-dependence must vanish with gamma
        devs = []
        for g in (0.1, 0.05, 0.02):
            v2 = transition_probability_quadrature(FREE, free_cfg(2, g), points_per_dim=32)
            v3 = transition_probability_quadrature(FREE, free_cfg(3, g), points_per_dim=32)
            devs.append(abs(v3.value - v2.value) / v2.value)
        assert devs[0] > devs[1] > devs[2]
        assert devs[-1] < 0.005

    def test_flat_in_separation(self):
        # symmetric endpoints: the free value depends only on T up to the
        # regularizer's |z| weighting
        vals = [
            transition_probability_quadrature(
                FREE, free_cfg(3, 0.05, -dz / 2, dz / 2), points_per_dim=32
            ).value
            for dz in (0.0, 0.5, 1.0)
        ]
        assert max(abs(v - vals[0]) / vals[0] for v in vals) < 0.02

    def test_refinement_deltas_decrease(self):
        est = transition_probability_quadrature(
            FREE, free_cfg(3, 0.1), points_per_dim=16, doublings=2
        )
        assert len(est.refinement) == 2
        assert abs(est.refinement[-1]) <= abs(est.refinement[-2])


class TestGuards:
    def test_large_n_rejected(self):
        with pytest.raises(ValueError):
            transition_probability_quadrature(FREE, free_cfg(9, 0.1))

    def test_tensor_budget_guard(self):
        with pytest.raises(ValueError, match="tensor grid"):
            transition_probability_quadrature(
                FREE, free_cfg(6, 0.1), points_per_dim=64, doublings=3
            )

    def test_small_window_rejected(self):
        with pytest.raises(NonConvergenceError, match="window"):
            transition_probability_quadrature(
                FREE, free_cfg(2, 0.05), window=2.0, points_per_dim=32
            )


class TestAmplitude:
    def test_free_n2(self):
        cfg = free_cfg(2, 0.02)
        est = amplitude_discrete(FREE, cfg, regularizer="gaussian")
        assert est.modulus_squared == pytest.approx(1.0 / TWO_PI, rel=1e-3)

    def test_free_n_independent(self):
        a2 = amplitude_discrete(FREE, free_cfg(2, 0.05), regularizer="gaussian")
        a3 = amplitude_discrete(FREE, free_cfg(3, 0.05), regularizer="gaussian")
        assert a3.modulus_squared == pytest.approx(a2.modulus_squared, rel=1e-3)

    def test_large_n_rejected(self):
        with pytest.raises(ValueError):
            amplitude_discrete(FREE, free_cfg(5, 0.1))

    def test_unknown_regularizer(self):
        with pytest.raises(ValueError):
            amplitude_discrete(FREE, free_cfg(2, 0.1), regularizer="cosine")


class TestProductForm:
    def test_identity_n2_weak_line(self):
        p = BandLimitedPotential.single_line(a=0.2, q=1.0, phi=0.3)
        cfg = LatticeConfig(0.0, 2.0, 2, 1.0, 0.1, -0.2)
        lhs = amplitude_discrete(p, cfg, regularizer="laplace").modulus_squared
        rhs = probability_product_form(p, cfg)
        assert rhs == pytest.approx(lhs, rel=1e-6)

    def test_identity_free_n3(self):
        cfg = LatticeConfig(0.0, 3.0, 3, 1.0, 0.0, 0.3)
        lhs = amplitude_discrete(FREE, cfg, regularizer="laplace").modulus_squared
        rhs = probability_product_form(FREE, cfg)
        assert rhs == pytest.approx(lhs, rel=1e-5)

    def test_multi_line_rejected(self):
        p = BandLimitedPotential.from_lines([(1.0, 0.1, 0.0), (0.5, 0.1, 0.0)])
        with pytest.raises(ValueError):
            probability_product_form(p, LatticeConfig(0.0, 2.0, 2, 1.0, 0.0, 0.0))


class TestProbabilityFromAmplitude:
    def test_unit(self):
        assert probability_from_amplitude(KernelEstimate(1 + 0j)).value == 1.0

    def test_phase_invariance(self):
        z = 0.3 - 0.4j
        rot = z * np.exp(1j * 0.77)
        assert probability_from_amplitude(KernelEstimate(rot)).value == pytest.approx(
            abs(z) ** 2, rel=1e-14
        )

    def test_free_kernel(self):
        amp = (TWO_PI * 1.0) ** -0.5 * np.exp(-1j * np.pi / 4)
        est = probability_from_amplitude(KernelEstimate(complex(amp)))
        assert est.value == pytest.approx(1.0 / TWO_PI, rel=1e-12)
        assert est.method == "amplitude"


class TestExtrapolation:
    def test_linear_data_exact(self):
        g = np.array([0.2, 0.1, 0.05])
        v = 0.7 + 1.3 * g
        p0, unc = extrapolate_gamma(g, v)
        assert p0 == pytest.approx(0.7, abs=1e-12)
        assert unc < 1e-10

    def test_model_spread_reported_for_curved_data(self):
        g = np.array([0.2, 0.1, 0.05, 0.025])
        v = 0.5 + g * np.log(g)
        p0, unc = extrapolate_gamma(g, v)
        # the linear intercept misses; the reported uncertainty must cover it
        assert abs(p0 - 0.5) <= unc * (1 + 1e-9)

    def test_needs_two_points(self):
        with pytest.raises(ValueError):
            extrapolate_gamma([0.1], [1.0])
