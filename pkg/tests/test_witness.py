import math

import numpy as np
import pytest

import oracles
from squeezent.blocks import (
    MomentSummary,
    moments_from_blocks,
    sector_cell_state,
    singlet_state,
)
from squeezent.schur import rotated_jz_product_blocks
from squeezent.thermal import XXZParams, gibbs_blocks, thermal_moments
from squeezent.witness import (
    evaluate_inequality_set,
    gamma_matrix,
    normalization_constant,
    ssi_parameter,
    x_matrix,
)


def coherent_moments(n):
    """Moments of the fully polarized product state along +z."""
    return MomentSummary(
        mean=np.array([0.0, 0.0, n / 2.0]),
        second=np.diag([n / 4.0, n / 4.0, n * n / 4.0]),
        n=n,
    )


def random_dense_moments(n, rng):
    """Moments of a random dense density matrix (not block-diagonal)."""
    dim = 2**n
    mat = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = mat @ mat.conj().T
    rho /= np.trace(rho).real
    mean, second = oracles.dense_moments(rho, n)
    return MomentSummary(mean=mean, second=second, n=n)


class TestGamma:
    def test_singlet_zero(self):
        m = moments_from_blocks(singlet_state(2))
        assert np.all(gamma_matrix(m) == 0.0)

    def test_polarized_coherent(self):
        n = 6
        gamma = gamma_matrix(coherent_moments(n))
        np.testing.assert_allclose(gamma, np.diag([n / 4, n / 4, 0.0]), atol=1e-13)

    def test_dense_oracle(self):
        rng = np.random.default_rng(3)
        m = random_dense_moments(4, rng)
        gamma = gamma_matrix(m)
        ref = m.second - np.outer(m.mean, m.mean)
        assert np.abs(gamma - ref).max() < 1e-10
        assert np.linalg.eigvalsh(gamma).min() > -1e-10  # psd for genuine states


class TestXMatrix:
    def test_singlet_n2(self):
        m = moments_from_blocks(singlet_state(2))
        np.testing.assert_allclose(x_matrix(m), -np.eye(3), atol=1e-14)

    def test_dicke_n4(self):
        m = moments_from_blocks(sector_cell_state(4, 4, 0))
        x = x_matrix(m)
        assert x[2, 2] == pytest.approx(-4 / 3, abs=1e-13)
        assert x[0, 0] == pytest.approx(8 / 3, abs=1e-13)
        assert x[1, 1] == pytest.approx(8 / 3, abs=1e-13)

    def test_elementwise_recomputation(self):
        rng = np.random.default_rng(9)
        m = random_dense_moments(6, rng)
        x = x_matrix(m)
        n = 6
        for a in range(3):
            for b in range(3):
                expected = (
                    m.second[a, b]
                    - m.mean[a] * m.mean[b]
                    + m.second[a, b] / (n - 1)
                    - (n * n / (4 * (n - 1))) * (a == b)
                )
                assert x[a, b] == pytest.approx(expected, abs=1e-12)
        assert np.abs(x - x.T).max() == 0.0


class TestNormalization:
    def test_reference_values(self):
        n = 10
        assert normalization_constant(n, 0) == pytest.approx(n / 2)
        assert normalization_constant(n, 1) == pytest.approx(
            n * (n - 2) / (4 * (n - 1))
        )
        assert normalization_constant(n, 2) == pytest.approx(
            n * n / (4 * (n - 1))
        )


class TestSsiParameter:
    @pytest.mark.parametrize("n", [2, 4, 8, 20])
    def test_singlet_saturates(self, n):
        res = ssi_parameter(moments_from_blocks(singlet_state(n)))
        assert res.k == 0
        assert res.xi == pytest.approx(-n / 2)
        assert res.lower_bound == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("n", [2, 4, 8, 20])
    def test_dicke_saturates(self, n):
        res = ssi_parameter(moments_from_blocks(sector_cell_state(n, n, 0)))
        assert res.k == 2
        assert res.xi == pytest.approx(-n * n / (4 * (n - 1)), rel=1e-12)
        assert res.lower_bound == pytest.approx(1.0, abs=1e-10)

    def test_polarized_undetected(self):
        res = ssi_parameter(coherent_moments(8))
        assert res.lower_bound == 0.0
        assert res.xi >= 0.0

    def test_never_exceeds_one_on_valid_states(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            m = random_dense_moments(5, rng)
            res = ssi_parameter(m)
            assert res.lower_bound <= 1.0 + 1e-10

    def test_rotation_invariance(self):
        rng = np.random.default_rng(33)
        m = random_dense_moments(5, rng)
        base = ssi_parameter(m)
        for _ in range(10):
            q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
            rotated = MomentSummary(
                mean=q.T @ m.mean, second=q.T @ m.second @ q, n=m.n
            )
            res = ssi_parameter(rotated)
            assert res.lower_bound == pytest.approx(base.lower_bound, abs=1e-10)
            assert res.xi == pytest.approx(base.xi, abs=1e-10)


class TestInequalitySet:
    def test_singlet_total_variance_facet(self):
        facets = evaluate_inequality_set(moments_from_blocks(singlet_state(4)))
        assert facets.variance_sum == pytest.approx(-2.0, abs=1e-13)

    def test_total_spin_facet_never_negative(self):
        rng = np.random.default_rng(41)
        for n in (3, 5):
            for _ in range(20):
                facets = evaluate_inequality_set(random_dense_moments(n, rng))
                assert facets.spin_bound >= -1e-10

    def test_separable_sweep_nonnegative(self):
        rng = np.random.default_rng(55)
        for _ in range(200):
            n = int(rng.integers(2, 9))
            k = int(rng.integers(0, n + 1))
            theta = float(rng.uniform(0, math.pi))
            state = rotated_jz_product_blocks(n, k, theta)
            facets = evaluate_inequality_set(moments_from_blocks(state))
            assert float(facets.all_values().min()) >= -1e-10

    def test_optimal_facet_agreement(self):
        # the reported bound equals the largest normalized facet violation
        rng = np.random.default_rng(61)
        cases = [
            thermal_moments(XXZParams(1.0, 1.0, 0.0, 6), 0.4)[1],
            thermal_moments(XXZParams(1.0, 0.0, 0.0, 200), 0.1)[1],
            thermal_moments(XXZParams(-1.0, 0.0, 1.02, 8), 0.2)[1],
        ]
        cases += [random_dense_moments(4, rng) for _ in range(20)]
        for m in cases:
            res = ssi_parameter(m)
            facets = res.facet_values
            n = m.n
            candidates = [-facets.variance_sum / normalization_constant(n, 0)]
            if n > 2:
                candidates += [
                    -v / normalization_constant(n, 1) for v in facets.planar
                ]
            candidates += [
                -v / normalization_constant(n, 2) for v in facets.single_axis
            ]
            expected = max(0.0, max(candidates))
            assert res.lower_bound == pytest.approx(expected, abs=1e-10)


class TestSerialization:
    def test_json_round_trip(self):
        res = ssi_parameter(moments_from_blocks(singlet_state(4)))
        payload = res.to_json_dict()
        assert payload["K"] == 0
        assert payload["lower_bound"] == pytest.approx(1.0)
        assert len(payload["x_eigenvalues"]) == 3
        assert "variance_sum" in payload["facet_values"]

    def test_csv_row(self):
        res = ssi_parameter(moments_from_blocks(singlet_state(4)))
        row = res.csv_row(0.25)
        t, xi, k, bound = row.split(",")
        assert float(t) == 0.25
        assert int(k) == 0
        assert float(bound) == pytest.approx(1.0)


def test_thermal_bound_zero_above_threshold():
    params = XXZParams(1.0, 1.0, 0.0, 4)
    _, m = thermal_moments(params, 2.0)
    assert ssi_parameter(m).lower_bound == 0.0
    state = gibbs_blocks(params, 2.0).state
    assert ssi_parameter(moments_from_blocks(state)).lower_bound == 0.0
