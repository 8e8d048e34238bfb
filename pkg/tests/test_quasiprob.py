"""Characteristic functions, quasiprobabilities, reconstruction, pairing."""

from math import pi

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import genlaguerre

from scalemaps import fock
from scalemaps import quasiprob as qp


def brute_pair_trace(rho, sigma):
    return float(np.trace(rho.amplitudes @ sigma.amplitudes).real)


class TestPolarGrid:
    def test_gauss_rule_integrates_dr(self):
        grid = qp.PolarGrid.gauss(5.0, 64, 4)
        assert abs(grid.weights.sum() - 5.0) < 1e-12
        assert np.all(np.diff(grid.radii) > 0)

    def test_invalid_grids_rejected(self):
        r, w = qp.radial_gauss(3.0, 16)
        with pytest.raises(ValueError):
            qp.PolarGrid(radii=r[::-1], weights=w, cutoff=3.0, max_harmonic=2)
        with pytest.raises(ValueError):
            qp.PolarGrid(radii=r, weights=2 * w, cutoff=3.0, max_harmonic=2)
        with pytest.raises(ValueError):
            qp.PolarGrid.gauss(-1.0, 16, 2)

    def test_required_cutoff_divergence(self):
        with pytest.raises(qp.DivergentReconstruction):
            qp.required_cutoff([(0.5, 1.0, 4), (-0.25, 1.0, 0)])


class TestCharFn:
    @pytest.mark.parametrize("s", [-1.0, -0.3, 0.0, 0.5, 1.0])
    def test_vacuum_gaussian(self, s):
        # chi_s(xi) = exp(-(1-s)|xi|^2/2); at s=1 the ground state gives a constant
        chi = qp.char_fn(fock.vacuum_state(6), s)
        r = chi.grid.radii
        want = np.exp(-0.5 * (1.0 - s) * r**2)
        assert np.abs(chi.harmonic_values(0) - want).max() < 1e-13

    def test_first_excited_symmetric(self):
        chi = qp.char_fn(fock.fock_state(1, 8), 0.0)
        r = chi.grid.radii
        want = genlaguerre(1, 0)(r**2) * np.exp(-0.5 * r**2)
        assert np.abs(chi.harmonic_values(0) - want).max() < 1e-13

    def test_thermal_gaussian_from_fock_sum(self):
        # geometric sum over L_k reproduces exp(-v r^2/2)
        v = 3.0
        chi = qp.char_fn(fock.thermal_state(v, 60), 0.0)
        r = chi.grid.radii
        direct = np.zeros_like(r)
        for k in range(60):
            direct += 0.5 * 0.5**k * genlaguerre(k, 0)(r**2)
        direct *= np.exp(-0.5 * r**2)
        assert np.abs(chi.harmonic_values(0) - direct).max() < 1e-12
        assert np.abs(chi.harmonic_values(0) - np.exp(-0.5 * v * r**2)).max() < 1e-10

    def test_origin_is_trace(self):
        for desc in ("vacuum", "thermal:5", "random:3", "coherent:0.8"):
            st = fock.make_state(desc, 40)
            chi = qp.char_fn(st, 0.3)
            assert abs(chi.at_origin() - st.trace) < 1e-12
            assert abs(chi.at_origin() - 1.0) <= st.tail + 1e-10

    def test_harmonic_hermiticity_symmetry(self):
        # chi(-xi) = conj(chi(xi)) encoded as chi^{(-k)} = (-1)^k conj(chi^{(k)})
        chi = qp.char_fn(fock.random_pure_state(2, 10), 0.0)
        for k in range(1, 9):
            lhs = chi.harmonic_values(-k)
            rhs = (-1.0) ** k * np.conj(chi.harmonic_values(k))
            assert np.abs(lhs - rhs).max() < 1e-14

    def test_rejects_fat_tail(self):
        st = fock.TruncatedState(4, np.diag([0.9, 0.1, 0, 0]).astype(complex), tail=1e-3)
        with pytest.raises(ValueError):
            qp.char_fn(st, 0.0)

    def test_json_export(self):
        chi = qp.char_fn(fock.vacuum_state(4), 0.0)
        import json

        payload = json.loads(qp.charfn_to_json(chi))
        assert payload["ordering"] == 0.0
        assert len(payload["values_re"]) == len(payload["harmonics"])


class TestConvertOrdering:
    def test_identity(self):
        chi = qp.char_fn(fock.fock_state(2, 8), 0.2)
        same = qp.convert_ordering(chi, 0.2)
        assert np.array_equal(same.values, chi.values)

    def test_vacuum_to_p_ordering_is_constant(self):
        chi = qp.char_fn(fock.vacuum_state(6), 0.0)
        flat = qp.convert_ordering(chi, 1.0)
        assert np.abs(flat.harmonic_values(0) - 1.0).max() < 1e-12

    def test_round_trip(self):
        chi = qp.char_fn(fock.random_pure_state(8, 12), -0.4)
        back = qp.convert_ordering(qp.convert_ordering(chi, 0.9), -0.4)
        assert np.abs(back.values - chi.values).max() < 1e-14
        assert back.envelope == pytest.approx(chi.envelope, abs=1e-15)


class TestQuasiprob:
    def test_vacuum_wigner(self):
        chi = qp.char_fn(fock.vacuum_state(6), 0.0)
        pts = np.array([0.0, 0.3 + 0.4j, 1.0j])
        got = qp.quasiprob_values(chi, pts)
        want = (2.0 / pi) * np.exp(-2.0 * np.abs(pts) ** 2)
        assert np.abs(got - want).max() < 1e-10

    def test_vacuum_husimi(self):
        chi = qp.char_fn(fock.vacuum_state(6), -1.0)
        pts = np.array([0.0, 0.7, 1.2 - 0.5j])
        got = qp.quasiprob_values(chi, pts)
        want = (1.0 / pi) * np.exp(-np.abs(pts) ** 2)
        assert np.abs(got - want).max() < 1e-10

    def test_first_excited_wigner_origin(self):
        # independent radial quadrature oracle for the central value
        oracle = (2.0 / pi) * quad(lambda r: (1 - r * r) * np.exp(-r * r / 2) * r, 0, 12)[0]
        chi = qp.char_fn(fock.fock_state(1, 8), 0.0)
        got = qp.quasiprob_values(chi, [0.0])[0]
        assert abs(got - oracle) < 1e-10
        assert abs(got + 2.0 / pi) < 1e-10

    def test_grid_is_real_and_normalized(self):
        chi = qp.char_fn(fock.random_pure_state(6, 12), 0.0)
        grid = qp.quasiprob_from_charfn(chi)
        assert grid.values.dtype == float
        assert abs(grid.integral() - 1.0) < 1e-8

    def test_husimi_nonnegative_everywhere(self):
        # Q is a genuine probability density for every physical state
        for desc in ("vacuum", "fock:3", "thermal:4", "random:12", "coherent:1.0"):
            chi = qp.char_fn(fock.make_state(desc, 40), -1.0)
            grid = qp.quasiprob_from_charfn(chi)
            assert grid.values.min() >= -1e-10

    def test_p_function_of_fock_state_diverges(self):
        chi = qp.char_fn(fock.fock_state(1, 8), 1.0)
        with pytest.raises(qp.DivergentReconstruction):
            qp.quasiprob_from_charfn(chi)

    def test_csv_export(self, tmp_path):
        chi = qp.char_fn(fock.vacuum_state(4), 0.0)
        grid = qp.quasiprob_from_charfn(chi, alpha_cutoff=3.0, alpha_nodes=8, n_angles=8)
        path = tmp_path / "w.csv"
        qp.save_quasiprob_csv(grid, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "re_alpha,im_alpha,value"
        assert len(lines) == 1 + 8 * 8


class TestReconstruct:
    @pytest.mark.parametrize(
        "desc", ["vacuum", "fock:1", "fock:5", "thermal:3", "coherent:1.0", "random:7"]
    )
    def test_round_trip(self, desc):
        st = fock.make_state(desc, 24)
        chi = qp.char_fn(st, 0.0)
        back = qp.reconstruct_state(chi, 24)
        assert np.abs(back.amplitudes - st.amplitudes).max() < 1e-8

    def test_round_trip_from_other_ordering(self):
        st = fock.random_pure_state(3, 16)
        chi = qp.char_fn(st, 0.8)
        back = qp.reconstruct_state(chi, 16)
        assert np.abs(back.amplitudes - st.amplitudes).max() < 1e-8

    def test_gaussian_thermal(self):
        chi = qp.gaussian_char_fn(7.0)
        st = qp.reconstruct_state(chi, 12)
        want = 0.25 * 0.75 ** np.arange(12)
        assert np.abs(np.diag(st.amplitudes).real - want).max() < 1e-12
        offdiag = st.amplitudes - np.diag(np.diag(st.amplitudes))
        assert np.abs(offdiag).max() < 1e-12

    def test_gaussian_below_vacuum_width_is_nonpositive(self):
        # v = 1/4: the geometric law continues to alternating-sign entries
        chi = qp.gaussian_char_fn(0.25)
        st = qp.reconstruct_state(chi, 10)
        want = 1.6 * (-0.6) ** np.arange(10)
        assert np.abs(np.diag(st.amplitudes).real - want).max() < 1e-12

    def test_trace_matches_origin_value(self):
        chi = qp.char_fn(fock.thermal_state(5.0, 40), 0.0)
        st = qp.reconstruct_state(chi, 40)
        assert abs(st.trace - chi.at_origin().real) < 1e-10

    def test_verify_mode_passes_on_clean_input(self):
        chi = qp.char_fn(fock.fock_state(2, 12), 0.0)
        st = qp.reconstruct_state(chi, 12, verify=True)
        assert abs(st.trace - 1.0) < 1e-10

    def test_divergent_envelope_raises(self):
        chi = qp.gaussian_char_fn(2.0)
        grown = qp.convert_ordering(chi, 0.0)  # no-op; now force a bad profile
        bad = qp.CharFnGrid(
            ordering=0.0,
            grid=grown.grid,
            harmonics=grown.harmonics,
            values=grown.values,
            envelope=0.5,
            source_tail=0.0,
            profile=grown.profile.scaled(1.0, -3.0),
        )
        with pytest.raises(qp.DivergentReconstruction):
            qp.reconstruct_state(bad, 8)


class TestPairing:
    def test_vacuum_vacuum(self):
        v = fock.vacuum_state(8)
        assert abs(qp.pairing(v, v, 0.0) - 1.0 / pi) < 1e-12

    def test_orthogonal_projectors(self):
        v, f1 = fock.vacuum_state(8), fock.fock_state(1, 8)
        for s in (-0.7, 0.0, 1.0):
            assert abs(qp.pairing(f1, v, s)) < 1e-12

    def test_pure_state_self_pairing(self):
        f1 = fock.fock_state(1, 8)
        assert abs(qp.pairing(f1, f1, 0.0) - 1.0 / pi) < 1e-12

    def test_duality_symmetry(self):
        rng = np.random.default_rng(17)
        for _ in range(6):
            a = fock.random_pure_state(int(rng.integers(1 << 30)), 12)
            b = fock.random_pure_state(int(rng.integers(1 << 30)), 12)
            s = float(rng.uniform(-1, 1))
            assert qp.pairing(a, b, s) == pytest.approx(qp.pairing(b, a, -s), abs=1e-9)

    def test_pi_times_pairing_is_overlap(self):
        # cross-module oracle: 20 random pairs at N=24
        rng = np.random.default_rng(100)
        for _ in range(20):
            a = fock.random_pure_state(int(rng.integers(1 << 30)), 24)
            b = fock.random_pure_state(int(rng.integers(1 << 30)), 24)
            s = float(rng.uniform(-1, 1))
            assert abs(pi * qp.pairing(a, b, s) - brute_pair_trace(a, b)) < 1e-8

    def test_mixed_state_pairing(self):
        t = fock.thermal_state(3.0, 40)
        c = fock.coherent_state(0.5, 40)
        assert pi * qp.pairing(t, c, 0.3) == pytest.approx(brute_pair_trace(t, c), abs=1e-10)
