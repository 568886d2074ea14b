import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iontrap_xxz.couplings import (BeamParams, CouplingMatrix, PowerLawError, ResonanceError, default_detuning_grid,
                                   delta_tilde, detuning_for, detuning_sweep, effective_couplings, fit_power_law,
                                   sweep_geometry)
from iontrap_xxz.phonons import longitudinal_modes, solve_equilibrium


@pytest.fixture(scope="module")
def two_ion():
    return longitudinal_modes(solve_equilibrium(2))


def mode_sum_reference(spectrum, delta, pref=1.0):
    """Pair-by-pair loop over modes, written out independently of the matrix form."""
    f, w = spectrum.mode_matrix, spectrum.frequencies
    n = len(w)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                out[i, j] = pref * sum(f[i, l] * f[j, l] / (delta**2 - w[l] ** 2) for l in range(n))
    return out


class TestEffectiveCouplings:
    def test_two_ion_value(self, two_ion):
        # modes (1,1)/sqrt2 at omega 1 and (-1,1)/sqrt2 at sqrt3: 1/2/(2-1) + (-1/2)/(2-3) = 1
        beam = BeamParams(1.0, math.sqrt(2))
        assert beam.prefactor == 0.5
        j = effective_couplings(two_ion, beam)
        assert j.values[0, 1] == pytest.approx(beam.prefactor, rel=1e-12)
        assert j.values[0, 0] == 0

    def test_zero_rabi_gives_zero(self, two_ion):
        j = effective_couplings(two_ion, BeamParams(0.0, 0.5))
        assert np.all(j.values == 0)

    def test_scales_with_rabi_squared(self):
        s = longitudinal_modes(solve_equilibrium(6))
        a = effective_couplings(s, BeamParams(1.0, 0.7)).values
        b = effective_couplings(s, BeamParams(3.0, 0.7)).values
        np.testing.assert_allclose(b, 9 * a, rtol=1e-13)

    @pytest.mark.parametrize("delta", [0.3, 0.95, 1.2, 2.5])
    def test_matches_loop_reference(self, delta):
        s = longitudinal_modes(solve_equilibrium(7))
        j = effective_couplings(s, BeamParams(1.0, delta)).values
        np.testing.assert_allclose(j, mode_sum_reference(s, delta, 0.5), rtol=1e-12, atol=1e-14)

    def test_symmetric_with_zero_diagonal(self):
        s = longitudinal_modes(solve_equilibrium(9))
        j = effective_couplings(s, BeamParams(1.0, 0.9)).values
        assert np.array_equal(j, j.T)
        assert np.all(np.diag(j) == 0)

    def test_ferromagnetic_sign_below_com(self):
        s = longitudinal_modes(solve_equilibrium(9))
        j = effective_couplings(s, BeamParams(1.0, 0.9)).values
        off = ~np.eye(9, dtype=bool)
        assert np.all(j[off] < 0)

    def test_resonance_rejected(self, two_ion):
        with pytest.raises(ResonanceError) as info:
            effective_couplings(two_ion, BeamParams(1.0, math.sqrt(3)))
        assert info.value.mode == 1

    def test_invalid_beam(self):
        with pytest.raises(ValueError):
            BeamParams(1.0, 0.0)
        with pytest.raises(ValueError):
            BeamParams(-1.0, 0.5)

    def test_distance_unit_is_centre_spacing(self):
        s = longitudinal_modes(solve_equilibrium(8))
        j = effective_couplings(s, BeamParams(1.0, 0.5))
        assert j.distances[3, 4] == pytest.approx(1.0, rel=1e-12)


class TestPowerLawFit:
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.3, 3.0])
    def test_exact_power_law_recovered(self, sigma):
        m = CouplingMatrix.from_function(np.arange(10.0), lambda r: -(r**-sigma))
        fit = fit_power_law(m)
        assert abs(fit.sigma - sigma) < 1e-10
        assert fit.max_relative_residual < 1e-10
        assert fit.amplitude == pytest.approx(1.0, rel=1e-10)
        assert fit.sign == -1.0

    def test_constant_gives_zero(self):
        fit = fit_power_law(CouplingMatrix.from_function(np.arange(6.0), lambda r: -np.ones_like(r)))
        assert fit.sigma == 0.0 and math.copysign(1, fit.sigma) == 1

    def test_window(self):
        m = CouplingMatrix.from_function(np.arange(12.0), lambda r: -(r**-1.5) * (1 + 0.5 * (r < 3)))
        assert abs(fit_power_law(m, window=(3, 11)).sigma - 1.5) < 1e-10
        assert abs(fit_power_law(m).sigma - 1.5) > 1e-3

    def test_edge_ions_skipped(self):
        pos = np.arange(10.0)
        vals = np.array([[0 if i == j else -abs(i - j) ** -2.0 for j in range(10)] for i in range(10)])
        vals[0, 5] = vals[5, 0] = -50.0
        fit = fit_power_law(CouplingMatrix(vals, pos), skip_edge_ions=1)
        assert abs(fit.sigma - 2.0) < 1e-10

    def test_sign_change_rejected(self):
        m = CouplingMatrix.from_function(np.arange(6.0), lambda r: np.where(r > 2, 1.0, -1.0) / r)
        with pytest.raises(PowerLawError, match="sign"):
            fit_power_law(m)

    def test_too_few_distances(self):
        with pytest.raises(PowerLawError):
            fit_power_law(CouplingMatrix.from_function(np.arange(3.0), lambda r: -1 / r))

    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.0, 4.0), st.floats(0.1, 10.0))
    def test_fit_property(self, sigma, amp):
        m = CouplingMatrix.from_function(np.arange(8.0), lambda r: -amp * r**-sigma)
        fit = fit_power_law(m)
        assert abs(fit.sigma - sigma) < 1e-9
        assert fit.amplitude == pytest.approx(amp, rel=1e-9)


class TestDetuning:
    def test_delta_tilde_round_trip(self):
        x = np.geomspace(1e-3, 49, 11)
        np.testing.assert_allclose(delta_tilde(detuning_for(x, 0.02), 0.02), x, rtol=1e-12, atol=1e-14)

    def test_beyond_range(self):
        with pytest.raises(ValueError):
            detuning_for(60.0, 0.02)

    def test_grid_ascending_below_com(self):
        g = default_detuning_grid(points=50)
        assert len(g) == 50 and np.all(np.diff(g) > 0)
        assert 0 < g[0] and g[-1] < 1

    def test_geometry(self):
        eq = sweep_geometry(10, "equidistant")
        np.testing.assert_allclose(np.diff(eq), 1.0)
        real = sweep_geometry(10, "real")
        assert np.diff(real)[4] == pytest.approx(1.0)
        assert np.diff(real)[0] > 1.0
        with pytest.raises(ValueError):
            sweep_geometry(10, "ring")


class TestSweep:
    @pytest.fixture(scope="class")
    @staticmethod
    def sweep():
        return detuning_sweep(10, "both", default_detuning_grid(points=40), with_prefactor=False)

    def test_no_failures(self, sweep):
        assert sweep.failures == []
        assert len(sweep.points) == 80

    @pytest.mark.parametrize("mode", ["real", "equidistant"])
    def test_sigma_monotone_and_range(self, sweep, mode):
        pts = sweep.series(mode)
        s = np.array([p.sigma for p in pts])
        assert np.all(np.diff(s) > 0)
        assert s[0] < 0.01 and s[-1] > 2.5

    def test_beta_z_defined_only_above_d(self, sweep):
        for p in sweep.points:
            assert math.isnan(p.beta_z) == (p.sigma <= 1)

    def test_coulomb_ratio_only_relabels(self):
        x = np.array([0.1, 1.0, 10.0])
        a = detuning_sweep(8, "real", detuning_for(x, 0.02), coulomb_ratio=0.02, with_prefactor=False)
        b = detuning_sweep(8, "real", detuning_for(x, 0.01), coulomb_ratio=0.01, with_prefactor=False)
        np.testing.assert_allclose([p.sigma for p in a.points], [p.sigma for p in b.points], rtol=1e-9)

    def test_rejects_detuning_above_com(self):
        with pytest.raises(ValueError):
            detuning_sweep(6, "real", [1.2])
