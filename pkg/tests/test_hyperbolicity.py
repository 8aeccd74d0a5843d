import math

import numpy as np
import pytest

from cocycle_lab.cocycles import (Barycentric, Constant, RandomProduct,
                                  Schrodinger, driver_for)
from cocycle_lab.errors import UsageError
from cocycle_lab.exponents import top_exponent
from cocycle_lab.hyperbolicity import (CERTIFIED_BY_GROWTH,
                                       CERTIFIED_HYPERBOLIC, INCONCLUSIVE,
                                       NOT_HYPERBOLIC, band_oracle,
                                       cone_certify, slice_spectrum,
                                       uniform_growth_test,
                                       _growth_min_sequential)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class TestConeCertify:
    def test_cat_map_certified_with_witness_one(self):
        cert = cone_certify(Constant([[2.0, 1.0], [1.0, 1.0]]))
        assert cert.verdict == CERTIFIED_HYPERBOLIC
        assert cert.witness_n == 1
        assert cert.covered
        assert cert.cone_field is not None

    def test_positive_random_product_certified(self):
        spec = RandomProduct(([[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]))
        cert = cone_certify(spec)
        assert cert.verdict == CERTIFIED_HYPERBOLIC
        assert cert.witness_n is not None and cert.witness_n <= 4

    def test_rotation_matrix_not_hyperbolic(self):
        t = 0.7
        rot = [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]
        cert = cone_certify(Constant(rot))
        assert cert.verdict == NOT_HYPERBOLIC

    def test_barycentric_is_not_uniformly_hyperbolic(self):
        cert = cone_certify(Barycentric())
        assert cert.verdict in (NOT_HYPERBOLIC, INCONCLUSIVE)

    def test_certified_schrodinger_off_spectrum(self):
        spec = Schrodinger(6.0, 2.0, GOLDEN)
        cert = cone_certify(spec, grid_m=128, n_max=256)
        assert cert.certified

    def test_soundness_growth_bound(self):
        # certified-hyperbolic implies the exponent clears log(2)/witness
        for spec in (Constant([[2.0, 1.0], [1.0, 1.0]]),
                     Constant([[3.0, 1.0], [0.5, 0.5]])):
            cert = cone_certify(spec)
            if cert.verdict == CERTIFIED_HYPERBOLIC:
                rep = top_exponent(spec, driver_for(spec), 10_000)
                assert rep.top >= math.log(2.0) / cert.witness_n - 1e-3


class TestUniformGrowth:
    def test_large_energy_certified_at_any_alpha(self):
        for alpha in (GOLDEN, 0.25, 1 / math.pi):
            cert = uniform_growth_test(Schrodinger(10.0, 2.0, alpha),
                                       grid_m=256, n_max=64)
            assert cert.verdict == CERTIFIED_BY_GROWTH
            assert cert.growth_constant >= math.log(abs(10) - 3.0) * 0.5

    def test_critical_center_not_hyperbolic(self):
        cert = uniform_growth_test(Schrodinger(0.0, 2.0, GOLDEN),
                                   grid_m=256, n_max=512)
        assert cert.verdict == NOT_HYPERBOLIC

    def test_free_laplacian_in_and_out(self):
        out_cert = uniform_growth_test(Schrodinger(5.0, 0.0, GOLDEN),
                                       grid_m=64, n_max=256)
        assert out_cert.verdict == CERTIFIED_BY_GROWTH
        in_cert = uniform_growth_test(Schrodinger(1.0, 0.0, GOLDEN),
                                      grid_m=64, n_max=256)
        assert in_cert.verdict == NOT_HYPERBOLIC

    def test_rejects_non_schrodinger(self):
        with pytest.raises(UsageError):
            uniform_growth_test(Constant(np.eye(2)))

    def test_stable_evidence_outside_spectrum(self):
        # for energies beyond [-4, 4]: certified at every depth n >= 8, and
        # the growth statistic is stable under doubling (within 1%; the
        # phase-grid minimum wobbles at the c/n scale, so exact monotonicity
        # does not hold in either direction)
        for E in (4.2, 4.5, 5.0, -4.2, -5.0):
            gs = [_growth_min_sequential(Schrodinger(E, 2.0, GOLDEN), GOLDEN,
                                         n, 64) for n in (8, 16, 32, 64, 128)]
            assert all(g >= 0.05 for g in gs)
            for a, b in zip(gs, gs[1:]):
                assert abs(b - a) <= 0.01 * a


class TestBandOracle:
    def test_alpha_zero_band_is_minus4_to_4(self):
        for E in (-4.0, -3.99, 0.0, 3.99, 4.0):
            assert band_oracle(0, 1, E)
        for E in (-4.02, 4.02, 5.0, -7.0):
            assert not band_oracle(0, 1, E)

    def test_q2_bands_symmetric(self):
        es = np.linspace(-4.5, 4.5, 901)
        mask = np.array([band_oracle(1, 2, e) for e in es])
        assert np.array_equal(mask, mask[::-1])

    def test_large_energy_never_in_spectrum(self):
        for p, q in ((0, 1), (1, 2), (1, 3), (2, 5), (3, 7)):
            assert not band_oracle(p, q, 10.0)

    def test_rejects_non_coprime(self):
        with pytest.raises(ValueError):
            band_oracle(2, 4, 0.0)

    def test_rejects_coarse_grid(self):
        with pytest.raises(ValueError):
            band_oracle(1, 21, 0.0, m_x=64)


class TestSliceSpectrum:
    def test_alpha_zero_row(self):
        es = np.linspace(-5.0, 5.0, 1001)
        mask = slice_spectrum((0, 1), es, method="oracle")
        cell = es[1] - es[0]
        inside = es[mask]
        assert inside.min() == pytest.approx(-4.0, abs=cell + 1e-12)
        assert inside.max() == pytest.approx(4.0, abs=cell + 1e-12)
        # exactly the [-4, 4] block, no holes
        want = (es >= -4.0 - 1e-9) & (es <= 4.0 + 1e-9)
        assert np.array_equal(mask, want)

    def test_golden_endpoints_out(self):
        es = np.array([-4.5, 4.5])
        mask = slice_spectrum(GOLDEN, es, method="growth")
        assert not mask.any()

    def test_golden_mask_symmetric(self):
        es = np.linspace(-4.5, 4.5, 601)
        mask = slice_spectrum(GOLDEN, es, method="growth")
        flipped = mask[::-1]
        assert np.mean(mask != flipped) <= 1.0 / 601 + 0.01

    def test_oracle_requires_rational(self):
        with pytest.raises(UsageError):
            slice_spectrum(GOLDEN, np.array([0.0]), method="oracle")

    def test_auto_dispatch(self):
        es = np.linspace(-4.2, 4.2, 301)
        assert np.array_equal(slice_spectrum((1, 3), es),
                              slice_spectrum((1, 3), es, method="oracle"))

    def test_growth_oracle_agreement_sample_rows(self):
        # full q <= 20 sweep runs in the acceptance suite; spot rows here
        es = np.linspace(-4.5, 4.5, 800)
        for p, q in ((0, 1), (1, 2), (1, 5), (3, 8), (5, 13)):
            mo = slice_spectrum((p, q), es, method="oracle")
            mg = slice_spectrum((p, q), es, method="growth")
            agree = np.mean(mo == mg)
            assert agree >= 0.98, (p, q, agree)
            # disagreements confined to band edges
            edges = np.flatnonzero(np.diff(mo.astype(int)) != 0)
            for idx in np.flatnonzero(mo != mg):
                assert np.min(np.abs(edges + 0.5 - idx)) <= 2.5, (p, q, idx)

    def test_open_set_behavior_under_energy_perturbation(self):
        # points certified with margin >= 2*theta stay certified after an
        # energy nudge of theta/4: the generator is 1-Lipschitz in E, so the
        # per-step growth drop is at most -log(1 - dE * max||A_E||), which
        # the 2*theta margin budget covers on |E| <= 4.5
        rng = np.random.default_rng(0)
        theta = 0.05
        checked = 0
        trials = 0
        while checked < 100 and trials < 3000:
            trials += 1
            E = float(rng.uniform(-4.5, 4.5))
            alpha = float(rng.choice([GOLDEN, 1 / math.pi, 0.3183, 0.4142]))
            g = _growth_min_sequential(Schrodinger(E, 2.0, alpha), alpha, 256, 64)
            if g - theta < 2.0 * theta:  # certificate margin below 2*theta
                continue
            checked += 1
            for dE in (theta / 4.0, -theta / 4.0):
                g2 = _growth_min_sequential(Schrodinger(E + dE, 2.0, alpha),
                                            alpha, 256, 64)
                assert g2 >= theta, (E, alpha, g, g2)
        assert checked == 100
