import math

import numpy as np
import pytest

from iontrap_xxz.model_map import ModelSpec
from iontrap_xxz.spinsim import (QuenchProtocol, SizeError, build_hamiltonian, defect_density, finite_size_hc,
                                 ground_state_scan, kz_sweep, polarized_state, quench_evolve, saturation_field,
                                 sector_crossings, sector_energies, single_magnon_field, total_sx, total_sz)

import oracles


def chain(n, sigma=2.3, lam=0.5, **kw):
    return ModelSpec(sigma=sigma, lam=lam, n_sites=n, **kw)


def blocked_spectrum(ham, h):
    return np.sort(np.concatenate([np.linalg.eigvalsh(ham.sector(k, h).toarray()) for k in ham.blocks]))


class TestHamiltonian:
    def test_two_site_spectrum(self):
        ham = build_hamiltonian(chain(2, sigma=2.0, lam=0.0))
        assert blocked_spectrum(ham, 0.0).tolist() == pytest.approx([-0.5, 0.0, 0.0, 0.5])
        assert blocked_spectrum(ham, 0.3).tolist() == pytest.approx([-0.5, -0.3, 0.3, 0.5])

    @pytest.mark.parametrize("n,lam,h", [(3, 0.0, 0.0), (5, 0.5, 0.37), (6, 1.7, -0.2)])
    def test_matches_dense_oracle(self, n, lam, h):
        model = chain(n, sigma=1.6, lam=lam)
        dense = oracles.dense_xxz(model.coupling_matrix(), lam, h)
        sparse = build_hamiltonian(model).to_sparse(h).toarray()
        np.testing.assert_allclose(sparse, dense.real, atol=1e-13)
        assert np.abs(dense.imag).max() == 0

    def test_spin_flip_symmetry(self):
        ham = build_hamiltonian(chain(6, lam=0.8))
        e = sector_energies(ham)
        for m, v in e.items():
            assert v == pytest.approx(e[-m], abs=1e-12)

    def test_explicit_couplings(self):
        rng = np.random.default_rng(1)
        j = rng.uniform(0.1, 1, (5, 5))
        j = np.triu(j, 1) + np.triu(j, 1).T
        ham = build_hamiltonian(ModelSpec(couplings=j, lam=0.3))
        dense = oracles.dense_xxz(j, 0.3, 0.0)
        np.testing.assert_allclose(ham.to_sparse(0.0).toarray(), dense.real, atol=1e-13)

    def test_cap(self):
        with pytest.raises(SizeError, match="GiB"):
            build_hamiltonian(chain(15))

    def test_spin_one_rejected(self):
        with pytest.raises(ValueError):
            build_hamiltonian(ModelSpec(sigma=2.0, n_sites=3, S=1.0))

    def test_total_operators(self):
        n = 3
        ref_z = sum(oracles.site_op(oracles.SZ, i, n) for i in range(n))
        ref_x = sum(oracles.site_op(oracles.SX, i, n) for i in range(n))
        np.testing.assert_allclose(total_sz(n).toarray(), ref_z.real)
        np.testing.assert_allclose(total_sx(n).toarray(), ref_x.real)


class TestED:
    def test_two_site_crossing(self):
        ham = build_hamiltonian(chain(2, sigma=2.0, lam=0.0))
        crossings = sector_crossings(sector_energies(ham))
        assert len(crossings) == 2
        assert abs(crossings[-1][0] - 0.5) < 1e-10
        assert abs(saturation_field(ham) - 0.5) < 1e-10

    def test_strong_anisotropy_jumps_directly(self):
        ham = build_hamiltonian(chain(6, lam=1.5))
        crossings = sector_crossings(sector_energies(ham))
        assert len(crossings) == 1
        assert crossings[0][1:] == (-3.0, 3.0)

    def test_magnetization_staircase(self):
        model = chain(8)
        ham = build_hamiltonian(model)
        hs = np.linspace(-0.05, 1.2 * saturation_field(ham) + 0.05, 400)
        scan = ground_state_scan(ham, hs)
        m = np.array([r.m_z for r in scan])
        assert np.all(np.diff(m) >= 0)
        np.testing.assert_allclose(np.round(m * 8), m * 8, atol=1e-12)
        steps = np.diff(m)[np.diff(m) > 0]
        assert np.all(np.isclose(steps, 1 / 8))
        assert scan[-1].m_z == 0.5 and scan[-1].polarized_overlap == 1.0

    def test_polarized_above_saturation_is_exact_eigenstate(self):
        model = chain(6)
        ham = build_hamiltonian(model)
        h = saturation_field(ham) + 0.1
        dense = oracles.dense_xxz(model.coupling_matrix(), model.lam, h)
        _, v = np.linalg.eigh(dense)
        gs = v[:, 0]
        assert abs(gs[2**6 - 1]) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_saturation_increases_with_n(self):
        rep = finite_size_hc(ModelSpec(sigma=2.0, lam=0.0), [4, 6, 8])
        assert np.all(np.diff(rep.h_saturation) > 0)
        assert rep.h_infinite == pytest.approx(math.pi**2 / 6, abs=1e-10)

    def test_single_magnon_bound(self):
        model = chain(8, sigma=2.0, lam=0.0)
        assert single_magnon_field(model) <= saturation_field(build_hamiltonian(model)) + 1e-12

    def test_heisenberg_gives_zero(self):
        rep = finite_size_hc(ModelSpec(sigma=2.0, lam=1.0), [4, 6])
        assert np.all(rep.h_saturation == 0)


class TestDefectDensity:
    def test_polarized(self):
        assert defect_density(polarized_state(5), 5) == pytest.approx(0.5)

    def test_xy_aligned_pair(self):
        psi = np.zeros(4, dtype=complex)
        psi[0b01] = psi[0b10] = 1 / math.sqrt(2)
        assert defect_density(psi, 2) == pytest.approx(0.0, abs=1e-15)

    def test_against_dense_correlator(self):
        rng = np.random.default_rng(7)
        n = 4
        psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        psi /= np.linalg.norm(psi)
        total = 0.0
        for i in range(n - 1):
            op = 4 * (oracles.site_op(oracles.SX, i, n) @ oracles.site_op(oracles.SX, i + 1, n)
                      + oracles.site_op(oracles.SY, i, n) @ oracles.site_op(oracles.SY, i + 1, n))
            c = np.vdot(psi, op @ psi).real / 2
            total += (1 - c) / 2
        assert defect_density(psi, n) == pytest.approx(total / (n - 1), abs=1e-14)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            defect_density(np.zeros(5), 2)


class TestQuench:
    def test_protocol(self):
        p = QuenchProtocol(h0=2.0, rate=0.5, power=2)
        assert p.duration == pytest.approx(2.0)
        assert p.field(p.duration) == pytest.approx(0.0)
        assert p.seed(0.0) == 0.0 and p.seed(p.duration) == pytest.approx(p.seed_field)
        with pytest.raises(ValueError):
            QuenchProtocol(h0=1.0, rate=0.0)
        with pytest.raises(ValueError):
            QuenchProtocol(h0=0.0, rate=1.0, h_final=0.5)

    def test_sudden_limit(self):
        res = quench_evolve(chain(6), QuenchProtocol(h0=1.0, rate=1e6))
        assert abs(np.vdot(polarized_state(6), res.final_state)) ** 2 > 0.999

    def test_unitarity_and_determinism(self):
        model, proto = chain(6), QuenchProtocol(h0=1.0, rate=0.2)
        a = quench_evolve(model, proto)
        b = quench_evolve(model, proto)
        assert a.max_norm_drift < 1e-8
        assert abs(a.norm - 1) < 1e-8
        assert np.array_equal(a.final_state, b.final_state)
        assert a.steps > 0 and len(a.times) == a.steps + 1

    def test_reversible(self):
        model, proto = chain(6), QuenchProtocol(h0=1.0, rate=0.2)
        fwd = quench_evolve(model, proto)
        back = quench_evolve(model, proto, initial_state=fwd.final_state, reverse=True)
        assert abs(np.vdot(polarized_state(6), back.final_state)) ** 2 > 1 - 1e-6
        assert back.times[-1] == 0.0

    def test_slow_ramp_follows_ground_state(self):
        res = quench_evolve(chain(6), QuenchProtocol(h0=1.0, rate=0.01))
        assert res.final_ground_fidelity > 0.99

    def test_faster_ramp_leaves_more_defects(self):
        model = chain(6)
        slow = quench_evolve(model, QuenchProtocol(h0=1.0, rate=0.02), fidelity=False)
        fast = quench_evolve(model, QuenchProtocol(h0=1.0, rate=2.0), fidelity=False)
        assert fast.density > slow.density

    def test_needs_finite_chain(self):
        with pytest.raises(ValueError):
            quench_evolve(ModelSpec(sigma=2.3), QuenchProtocol(h0=1.0, rate=1.0))


class TestKZ:
    def test_empty_grid(self):
        r = kz_sweep(chain(6), [])
        assert r.rates.size == 0 and r.densities.size == 0
        assert math.isnan(r.slope)
        assert abs(r.zeta_predicted - 0.384615) < 1e-6

    def test_small_sweep(self):
        r = kz_sweep(chain(6), np.geomspace(0.05, 5, 5))
        assert r.failures == []
        assert len(r.densities) == 5
        assert np.all((r.densities > 0) & (r.densities <= 0.5 + 1e-12))
        assert r.slope > 0
        assert r.window == (pytest.approx(0.05 * 10**0.5), pytest.approx(5 / 10**0.5))
