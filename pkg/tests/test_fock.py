"""Fock-space kernel: constructors, displacement elements, spectra, parity."""

import json
from math import exp, factorial, lgamma, pi, sqrt

import numpy as np
import pytest

from scalemaps import fock


def series_displacement(m, n, xi, terms=80):
    """Independent oracle: <m|D(xi)|n> from the operator power series.

    D = exp(xi a^dag - xi* a) expanded by explicit matrix exponential on a
    comfortably larger truncation.
    """
    dim = max(m, n) + terms
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    gen = xi * a.conj().T - np.conj(xi) * a
    mat = np.eye(dim, dtype=complex)
    term = np.eye(dim, dtype=complex)
    for k in range(1, 120):
        term = term @ gen / k
        mat += term
    return mat[m, n]


class TestConstructors:
    def test_vacuum_is_ground_projector(self):
        st = fock.vacuum_state(4)
        assert np.allclose(st.amplitudes, np.diag([1, 0, 0, 0]))
        assert st.tail == 0.0
        assert st.normalized

    def test_fock_projector(self):
        st = fock.fock_state(1, 4)
        assert np.allclose(st.amplitudes, np.diag([0, 1, 0, 0]))

    def test_fock_rejects_overflow_level(self):
        with pytest.raises(ValueError):
            fock.fock_state(4, 4)

    def test_thermal_geometric_law(self):
        # v = 2*nbar + 1 with nbar = 1: p_k = (1/2) (1/2)^k
        st = fock.thermal_state(3.0, 30)
        expected = 0.5 * 0.5 ** np.arange(30)
        assert np.allclose(np.diag(st.amplitudes).real, expected, atol=1e-15)
        assert abs(st.tail - 0.5**30) < 1e-18

    def test_thermal_rejects_subvacuum_width(self):
        with pytest.raises(ValueError):
            fock.thermal_state(0.25, 8)

    def test_coherent_poisson_amplitudes(self):
        alpha = 0.7 + 0.3j
        st = fock.coherent_state(alpha, 25)
        x = abs(alpha) ** 2
        lognorm = np.array([lgamma(k + 1) for k in range(25)])
        probs = np.exp(-x + np.arange(25) * np.log(x) - lognorm)
        assert np.allclose(np.diag(st.amplitudes).real, probs, atol=1e-14)
        # off-diagonal phase structure
        assert np.allclose(st.amplitudes[0, 1], np.exp(-x) * np.conj(alpha), atol=1e-14)

    def test_coherent_warns_when_poorly_truncated(self):
        with pytest.warns(UserWarning):
            fock.coherent_state(3.0, 6)

    def test_random_pure_is_seeded_rank_one(self):
        st = fock.random_pure_state(11, 16)
        st2 = fock.random_pure_state(11, 16)
        assert np.array_equal(st.amplitudes, st2.amplitudes)
        vals = np.linalg.eigvalsh(st.amplitudes)
        assert abs(vals[-1] - 1.0) < 1e-12 and np.all(vals[:-1] < 1e-12)

    def test_make_state_dispatch(self):
        assert fock.make_state("vacuum", 6).label == "vacuum"
        assert fock.make_state("fock:2", 6).amplitudes[2, 2] == 1.0
        assert fock.make_state("thermal:3", 6).amplitudes[0, 0].real == 0.5
        st = fock.make_state("coherent:0.5,0.2", 20)
        assert st.normalized
        assert fock.make_state("random:3", 6).normalized
        with pytest.raises(ValueError):
            fock.make_state("squeezed:1", 6)

    def test_dimension_floor(self):
        with pytest.raises(ValueError):
            fock.vacuum_state(1)

    def test_state_rejects_non_hermitian(self):
        m = np.zeros((3, 3), dtype=complex)
        m[0, 1] = 1.0
        with pytest.raises(fock.NonHermitianError):
            fock.TruncatedState(3, m)


class TestDisplacement:
    def test_identity_at_zero(self):
        assert fock.displacement_element(0, 0, 0.0) == 1.0

    def test_kronecker_at_zero(self):
        assert fock.displacement_element(2, 5, 0.0) == 0.0

    def test_one_zero_element(self):
        # <1|D(1)|0> = 1 * e^{-1/2}
        got = fock.displacement_element(1, 0, 1.0)
        assert abs(got - exp(-0.5)) < 1e-14

    @pytest.mark.parametrize("m,n", [(0, 0), (1, 0), (3, 2), (5, 5), (2, 6)])
    @pytest.mark.parametrize("xi", [0.3, 1.0 + 0.5j, -0.8 + 1.2j])
    def test_against_power_series(self, m, n, xi):
        got = fock.displacement_element(m, n, xi)
        want = series_displacement(m, n, xi)
        assert abs(got - want) < 1e-10

    def test_conjugate_symmetry(self):
        xi = 0.9 - 0.4j
        for m in range(5):
            for n in range(5):
                lhs = fock.displacement_element(n, m, xi)
                rhs = np.conj(fock.displacement_element(m, n, -xi))
                assert abs(lhs - rhs) < 1e-13

    def test_closed_form_upper_triangle(self):
        # m >= n: sqrt(n!/m!) xi^{m-n} e^{-|xi|^2/2} L_n^{(m-n)}(|xi|^2)
        from scipy.special import genlaguerre

        xi = 0.8 + 0.1j
        x = abs(xi) ** 2
        for m in range(2, 7):
            for n in range(0, m + 1):
                want = (
                    sqrt(factorial(n) / factorial(m))
                    * xi ** (m - n)
                    * exp(-x / 2)
                    * genlaguerre(n, m - n)(x)
                )
                got = fock.displacement_element(m, n, xi)
                assert abs(got - want) < 1e-12

    def test_elements_bounded_by_one(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m, n = rng.integers(0, 30, size=2)
            xi = complex(*rng.normal(0, 2, size=2))
            assert abs(fock.displacement_element(int(m), int(n), xi)) <= 1.0 + 1e-12

    def test_column_norm_unity(self):
        # sum_k |<k|D(xi)|n>|^2 = 1 within truncation tail for |xi|^2 <= N/4
        dim = 64
        for n in (0, 2, 5):
            for r in (0.5, 2.0, sqrt(dim) / 2):
                col = [fock.displacement_element(k, n, r) for k in range(dim)]
                assert abs(sum(abs(c) ** 2 for c in col) - 1.0) < 1e-8

    def test_radial_matches_elements(self):
        radii = np.array([0.0, 0.4, 1.7, 3.2])
        g = fock.displacement_radial(8, 3, radii)
        for j in range(5):
            for i, r in enumerate(radii):
                want = fock.displacement_element(j + 3, j, r)
                assert abs(g[j, i] - want.real) < 1e-13

    def test_radial_gauss_tempering(self):
        radii = np.linspace(0.1, 4.0, 7)
        plain = fock.displacement_radial(6, 1, radii)
        tempered = fock.displacement_radial(6, 1, radii, gauss_exponent=0.3)
        assert np.allclose(tempered, plain * np.exp(0.15 * radii**2), rtol=1e-12)

    def test_large_dim_recurrence_stays_bounded(self):
        radii = np.linspace(0.0, 20.0, 11)
        g = fock.displacement_radial(256, 17, radii)
        assert np.isfinite(g).all()
        assert np.abs(g).max() <= 1.0 + 1e-9


class TestSpectrum:
    def test_diagonal_matrix(self):
        res = fock.hermitian_spectrum(np.diag([1.0, 0.0, 0.0]))
        assert np.allclose(res.eigenvalues, [0.0, 0.0, 1.0])

    def test_geometric_diagonal_min_eigenvalue(self):
        diag = 1.6 * (-0.6) ** np.arange(12)
        res = fock.hermitian_spectrum(np.diag(diag))
        assert abs(res.min_eigenvalue + 0.96) < 1e-14

    def test_residual_and_orthogonality(self):
        rng = np.random.default_rng(3)
        m = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        m = m + m.conj().T
        res = fock.hermitian_spectrum(m)
        recon = (res.eigenvectors * res.eigenvalues) @ res.eigenvectors.conj().T
        assert np.abs(recon - m).max() <= 1e-12 * np.abs(m).max()
        assert np.abs(res.eigenvectors.conj().T @ res.eigenvectors - np.eye(8)).max() < 1e-12

    def test_eigenvalue_sum_is_trace(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            m = rng.normal(size=(10, 10)) + 1j * rng.normal(size=(10, 10))
            m = m + m.conj().T
            res = fock.hermitian_spectrum(m)
            trace = np.trace(m).real
            assert abs(res.eigenvalues.sum() - trace) <= 1e-10 * max(1.0, abs(trace))

    def test_rejects_non_hermitian(self):
        with pytest.raises(fock.NonHermitianError):
            fock.hermitian_spectrum(np.array([[0.0, 1.0], [0.0, 0.0]]))


class TestParity:
    def test_diagonal_states_unchanged(self):
        st = fock.thermal_state(3.0, 10)
        assert np.array_equal(fock.parity_conjugate(st).amplitudes, st.amplitudes)

    def test_coherent_flips_amplitude(self):
        st = fock.coherent_state(0.6, 24)
        flipped = fock.parity_conjugate(st)
        target = fock.coherent_state(-0.6, 24)
        assert np.abs(flipped.amplitudes - target.amplitudes).max() < 1e-12

    def test_involution(self):
        st = fock.random_pure_state(9, 12)
        twice = fock.parity_conjugate(fock.parity_conjugate(st))
        assert np.array_equal(twice.amplitudes, st.amplitudes)

    def test_preserves_trace_and_spectrum(self):
        st = fock.random_pure_state(4, 10)
        conj = fock.parity_conjugate(st)
        assert conj.trace == pytest.approx(st.trace, abs=1e-15)
        assert np.allclose(
            np.linalg.eigvalsh(conj.amplitudes), np.linalg.eigvalsh(st.amplitudes), atol=1e-12
        )


def test_state_json_roundtrip(tmp_path):
    st = fock.random_pure_state(21, 7)
    path = tmp_path / "state.json"
    fock.save_state(st, path)
    back = fock.load_state(path)
    assert back.dim == 7
    assert np.abs(back.amplitudes - st.amplitudes).max() < 1e-15
    # row-major [re, im] pairs is the wire contract
    payload = json.loads(path.read_text())
    assert len(payload["amplitudes"]) == 49
    assert payload["amplitudes"][8] == [st.amplitudes[1, 1].real, st.amplitudes[1, 1].imag]
