import io
import math

import numpy as np
import pytest

from qlambda.errors import (
    ConfigError,
    CorrectionTooLarge,
    GridTooCoarse,
    RealPairThreshold,
    SignMismatch,
    ZeroWavevector,
)
from qlambda.lorentz import NATURAL, Constants, FourVector, eta, moller_kinematics
from qlambda.vacuum import (
    GridSpec,
    cm_correction_factor,
    corrected_amplitude,
    corrected_pair_coupling,
    correction_factor,
    outgoing_eta,
    pair_coupling,
    shift_density,
    total_shift,
)

K3 = np.array([0.0, 0.0, 0.5])


class TestPairCoupling:
    def test_eta1_matches_four_vector_eta(self):
        # independent path: eta() reconstructs the rest mass from E^2 - |p|^2,
        # so the two evaluations agree to the last ulp rather than bitwise
        rng = np.random.default_rng(31)
        for _ in range(50):
            p3 = rng.uniform(-2.0, 2.0, 3)
            pk = p3 + K3
            four = FourVector.from_spatial(math.sqrt(pk @ pk + 1.0), pk)
            assert outgoing_eta(p3, K3, 1.0) == pytest.approx(eta(four), rel=1e-15)

    def test_linear_in_charge(self):
        p3 = np.array([0.3, -0.2, 0.7])
        base = pair_coupling(p3, K3, 1, 2, 1)
        doubled = pair_coupling(p3, K3, 1, 2, 1, constants=Constants(e=2 * NATURAL.e))
        assert doubled == pytest.approx(2.0 * base, rel=1e-14)

    def test_conjugate_process_same_magnitude(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            p3 = rng.uniform(-1.5, 1.5, 3)
            for alpha in (1, 2):
                forward = pair_coupling(p3, K3, 1, 2, alpha)
                reverse = pair_coupling(p3, K3, 1, 2, alpha, conjugate=True)
                assert abs(forward) == pytest.approx(abs(reverse), rel=1e-12)

    def test_zero_wavevector(self):
        with pytest.raises(ZeroWavevector):
            pair_coupling((0.1, 0.2, 0.3), (0.0, 0.0, 0.0))


class TestShiftDensity:
    def test_negative_below_threshold(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            p3 = rng.uniform(-5.0, 5.0, 3)
            assert shift_density(p3, K3) < 0.0

    def test_threshold_raises_with_offshell_energy(self):
        with pytest.raises(RealPairThreshold):
            shift_density((0.1, 0.0, 0.0), K3, photon_energy=5.0)

    def test_zero_photon_energy_allowed(self):
        value = shift_density((0.4, 0.1, -0.2), K3, photon_energy=0.0)
        assert value < 0.0 and math.isfinite(value)

    def test_large_momentum_scaling(self):
        # density * |p|^4 approaches a constant along a fixed direction
        direction = np.array([0.3, 0.5, 0.81])
        direction /= np.linalg.norm(direction)
        values = [
            shift_density(p * direction, K3) * p**4 for p in (1e2, 1e3, 1e4)
        ]
        assert values[1] == pytest.approx(values[2], rel=0.05)

    def test_zero_wavevector(self):
        with pytest.raises(ZeroWavevector):
            shift_density((0.1, 0.2, 0.3), (0.0, 0.0, 0.0))

    def test_sample_fields_consistent(self):
        from qlambda.vacuum import pair_shift_sample

        p3 = np.array([0.3, -0.2, 0.7])
        sample = pair_shift_sample(p3, K3)
        assert sample.eta1 == pytest.approx(outgoing_eta(p3, K3, 1.0), rel=1e-14)
        assert sample.spinor_factor > 0.0
        assert sample.shift_density == shift_density(p3, K3)
        # spinor factor agrees with the explicit bilinear sum: divide the
        # squared couplings by their common prefactor
        pk = p3 + K3
        combined = math.sqrt(p3 @ p3 + 1) + math.sqrt(pk @ pk + 1)
        prefactor_sq = (NATURAL.e * sample.eta1) ** 2 / combined
        explicit = sum(
            0.5 * abs(pair_coupling(p3, K3, s, s_out, alpha)) ** 2 / prefactor_sq
            for alpha in (1, 2)
            for s in (1, 2)
            for s_out in (1, 2)
        )
        assert sample.spinor_factor == pytest.approx(explicit, rel=1e-12)


class TestTotalShift:
    def test_converged_negative_value(self):
        shift, report = total_shift(K3, 1e3, GridSpec(n_radial=48, n_theta=8, n_phi=4))
        assert shift < 0.0
        assert report.fitted_slope == pytest.approx(-4.0, abs=0.2)

    def test_partial_sums_monotone(self):
        _, report = total_shift(K3, 1e3, GridSpec(n_radial=48, n_theta=8, n_phi=4))
        assert np.all(np.diff(report.partial_sums) < 0.0)

    def test_cutoff_stability(self):
        grid = GridSpec(n_radial=64, n_theta=8, n_phi=4)
        s1, _ = total_shift(K3, 1e3, grid)
        s2, _ = total_shift(K3, 2e3, grid)
        assert abs(s1 - s2) / abs(s2) < 0.02

    def test_tail_halves(self):
        grid = GridSpec(n_radial=64, n_theta=8, n_phi=4)
        _, report_1k = total_shift(K3, 1e3, grid)
        _, report_2k = total_shift(K3, 2e3, grid)
        # the last tail estimate of each report sits exactly at its cutoff
        ratio = report_2k.tail_estimates[-1] / report_1k.tail_estimates[-1]
        assert ratio == pytest.approx(0.5, abs=0.05)

    def test_grid_refinement_self_consistency(self):
        grid = GridSpec(n_radial=48, n_theta=8, n_phi=4)
        coarse, _ = total_shift(K3, 1e3, grid)
        fine, _ = total_shift(K3, 1e3, GridSpec(n_radial=96, n_theta=8, n_phi=4))
        assert abs(coarse - fine) / abs(fine) < 1e-3

    def test_too_coarse_raises(self):
        with pytest.raises(GridTooCoarse):
            total_shift(K3, 1e3, GridSpec(n_radial=4, n_theta=8, n_phi=4))

    def test_cutoff_precondition(self):
        with pytest.raises(ConfigError):
            total_shift(K3, 5.0)

    def test_threads_bitwise_identical(self):
        grid = GridSpec(n_radial=32, n_theta=8, n_phi=4)
        single, _ = total_shift(K3, 1e3, grid, n_threads=1)
        multi, _ = total_shift(K3, 1e3, grid, n_threads=4)
        assert single == multi

    def test_report_csv(self):
        _, report = total_shift(K3, 1e3, GridSpec(n_radial=32, n_theta=8, n_phi=4))
        buf = io.StringIO()
        report.write_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "cutoff,partial_sum,tail_estimate"
        assert len(lines) == len(report.cutoffs) + 1


class TestCorrectedAmplitude:
    def setup_method(self):
        self.vectors = moller_kinematics(4.0, 1.0)
        self.spins = (1, 2, 1, 2)

    def test_zero_shift_trivial(self):
        corr = corrected_amplitude(*self.vectors, pair_shift=0.0, spins=self.spins)
        assert corr.first_order == 0.0
        assert corr.exact == pytest.approx(corr.base.total, rel=1e-14)

    def test_factor_structure(self):
        p1, _, p2, _ = self.vectors
        shift = 1e-4
        corr = corrected_amplitude(*self.vectors, pair_shift=shift, spins=self.spins)
        delta_e = p1.t - p2.t
        e_k = float(np.linalg.norm((p1 - p2).spatial))
        expected = (shift / e_k) * (delta_e**2 + e_k**2) / (delta_e**2 - e_k**2)
        assert corr.factor == pytest.approx(expected, rel=1e-14)
        assert corr.first_order == pytest.approx(corr.base.total * expected, rel=1e-14)

    def test_taylor_remainder_quadratic(self):
        base = corrected_amplitude(*self.vectors, pair_shift=0.0, spins=self.spins).base
        min_denom = min(abs(p.denom) for p in base.parts)
        shifts = np.array([1e-5, 3e-5, 1e-4, 3e-4, 1e-3]) * min_denom
        remainders = []
        for s in shifts:
            corr = corrected_amplitude(*self.vectors, pair_shift=float(s), spins=self.spins)
            remainders.append(abs(corr.exact - (corr.base.total + corr.first_order)))
        slope = np.polyfit(np.log(shifts), np.log(remainders), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.1)

    def test_guard(self):
        base = corrected_amplitude(*self.vectors, pair_shift=0.0, spins=self.spins).base
        min_denom = min(abs(p.denom) for p in base.parts)
        with pytest.raises(CorrectionTooLarge):
            corrected_amplitude(*self.vectors, pair_shift=0.5 * min_denom, spins=self.spins)

    def test_first_order_linear_in_shift(self):
        one = corrected_amplitude(*self.vectors, pair_shift=1e-5, spins=self.spins)
        three = corrected_amplitude(*self.vectors, pair_shift=3e-5, spins=self.spins)
        assert three.first_order == pytest.approx(3.0 * one.first_order, rel=1e-12)


class TestCorrectionFactorFrames:
    def test_cm_factor_matches_direct_evaluation(self):
        vectors = moller_kinematics(4.0, 1.0)
        grid = GridSpec(n_radial=32, n_theta=8, n_phi=4)
        p1, _, p2, _ = vectors
        k = p1 - p2
        shift, _ = total_shift(k.spatial, 1e3, grid)
        direct = correction_factor(k.t, float(np.linalg.norm(k.spatial)), shift)
        via_boost = cm_correction_factor(*vectors, cutoff=1e3, grid=grid)
        assert via_boost == pytest.approx(direct, rel=1e-10)

    def test_modified_coupling_makes_factor_frame_fixed(self):
        # rescaling the coupling by sqrt(f_cm / f_here) scales the shift by
        # f_cm / f_here, so the re-evaluated factor equals the cm one exactly
        delta_e, e_k = 0.3, 1.2
        shift_here = -2e-4
        f_here = correction_factor(delta_e, e_k, shift_here)
        f_cm = -5e-5
        rescaled_shift = shift_here * (f_cm / f_here)
        assert correction_factor(delta_e, e_k, rescaled_shift) == pytest.approx(
            f_cm, rel=1e-14
        )


class TestCorrectedPairCoupling:
    def test_identity_in_cm(self):
        p3 = (0.2, -0.4, 0.6)
        plain = pair_coupling(p3, K3, 1, 2, 1)
        assert corrected_pair_coupling(p3, K3, 1, 2, 1, -1e-4, -1e-4) == plain

    def test_rescale_value(self):
        p3 = (0.2, -0.4, 0.6)
        plain = pair_coupling(p3, K3, 1, 2, 1)
        out = corrected_pair_coupling(p3, K3, 1, 2, 1, factor_cm=-4e-4, factor_here=-1e-4)
        assert out == pytest.approx(2.0 * plain, rel=1e-14)

    def test_sign_mismatch(self):
        with pytest.raises(SignMismatch):
            corrected_pair_coupling((0.1, 0.2, 0.3), K3, 1, 1, 1, 1e-4, -1e-4)
        with pytest.raises(SignMismatch):
            corrected_pair_coupling((0.1, 0.2, 0.3), K3, 1, 1, 1, 0.0, 1e-4)
