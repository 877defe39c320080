import math

import numpy as np
import pytest

import oracles
from squeezent.blocks import (
    bsa_mixing_parameter,
    maximally_mixed,
    mix,
    moments_from_blocks,
    singlet_state,
    two_norm_distance,
)
from squeezent.errors import IntegrityError
from squeezent.schur import blocks_to_dense, cached_schur_basis
from squeezent.separable import (
    EnsembleMember,
    GeneralProduct,
    SimpleAnsatz,
    UpperBoundReport,
    descriptor_from_json,
    member_from_descriptor,
    min_t_weights,
    refit_weights,
    sandwich_report,
    seesaw_best_product,
    separable_ball_check,
    simple_ansatz_library,
    upper_bound_full,
    upper_bound_simple,
    verify_certificate,
)
from squeezent.thermal import XXZParams, gibbs_blocks, thermal_moments
from squeezent.witness import evaluate_inequality_set, ssi_parameter


def random_separable(n, rng, members=6):
    lib = simple_ansatz_library(n, theta_grid=np.linspace(0, math.pi, 9))
    picks = rng.choice(len(lib), size=min(members, len(lib)), replace=False)
    weights = rng.dirichlet(np.ones(len(picks)))
    return mix([lib[i].blocks for i in picks], weights)


class TestLibrary:
    def test_single_member_polarized(self):
        lib = simple_ansatz_library(4, k_set=[4], theta_grid=np.array([0.0]))
        assert len(lib) == 1
        assert lib[0].blocks.cell(4, 4) == 1.0
        assert lib[0].descriptor == SimpleAnsatz(k=4, theta=0.0)

    def test_half_half_member(self):
        lib = simple_ansatz_library(2, k_set=[1], theta_grid=np.array([0.0]))
        assert lib[0].blocks.cell(0, 0) == pytest.approx(0.5)
        assert lib[0].blocks.cell(2, 0) == pytest.approx(0.5)

    def test_n8_library_size_and_validity(self):
        lib = simple_ansatz_library(8, theta_grid=np.linspace(0, math.pi, 16))
        assert len(lib) <= 144  # 9 K values x 16 angles, minus duplicates
        for member in lib:
            facets = evaluate_inequality_set(moments_from_blocks(member.blocks))
            assert float(facets.all_values().min()) >= -1e-10

    def test_spin_flip_duplicates_removed(self):
        # (K, pi) twirls to the same state as (N-K, 0)
        lib = simple_ansatz_library(
            4, k_set=[0, 4], theta_grid=np.array([0.0, math.pi])
        )
        assert len(lib) == 2

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            simple_ansatz_library(4, k_set=[], theta_grid=np.array([0.0]))


class TestRefitWeights:
    def test_target_is_member(self):
        lib = simple_ansatz_library(4, theta_grid=np.linspace(0, math.pi, 5))
        w = refit_weights(lib[2].blocks, lib)
        assert w[2] == pytest.approx(1.0, abs=1e-8)

    def test_exact_two_member_mixture(self):
        lib = simple_ansatz_library(4, theta_grid=np.linspace(0, math.pi, 5))
        target = mix([lib[0].blocks, lib[7].blocks], np.array([0.3, 0.7]))
        w = refit_weights(target, [lib[0], lib[7]])
        assert w[0] == pytest.approx(0.3, abs=1e-8)
        assert w[1] == pytest.approx(0.7, abs=1e-8)

    def test_no_worse_than_any_single_member(self):
        target = gibbs_blocks(XXZParams(1.0, 1.0, 0.0, 4), 2.0).state
        lib = simple_ansatz_library(4)
        w = refit_weights(target, lib)
        sigma = mix([m.blocks for m in lib], w)
        best_single = min(
            two_norm_distance(target, m.blocks) for m in lib
        )
        assert two_norm_distance(target, sigma) <= best_single + 1e-12

    def test_degenerate_members_return_valid_point(self):
        member = simple_ansatz_library(2, k_set=[1], theta_grid=np.array([0.0]))[0]
        clones = [member, EnsembleMember(1.0, member.blocks.copy(), member.descriptor)]
        w = refit_weights(singlet_state(2), clones)
        assert w.min() >= 0.0
        assert w.sum() == pytest.approx(1.0)

    def test_lp_weights_never_worse_for_mixing(self):
        target = gibbs_blocks(XXZParams(1.0, 1.0, 0.0, 6), 1.5).state
        lib = simple_ansatz_library(6)
        nnls_w = refit_weights(target, lib)
        t_nnls = bsa_mixing_parameter(target, mix([m.blocks for m in lib], nnls_w))
        lp_w = min_t_weights(target, lib)
        assert lp_w is not None
        t_lp = bsa_mixing_parameter(target, mix([m.blocks for m in lib], lp_w))
        assert t_lp <= t_nnls + 1e-9


class TestSeesaw:
    def test_rank_one_product_residual(self):
        psi = np.zeros(8)
        psi[0] = 1.0  # |up up up>
        product, overlap = seesaw_best_product(np.outer(psi, psi), seed=1)
        assert overlap == pytest.approx(1.0, abs=1e-9)
        bloch = np.array(product.bloch)
        np.testing.assert_allclose(bloch[:, 2], 1.0, atol=1e-6)

    def test_singlet_residual_analytic_optimum(self):
        psi = np.array([0.0, 1.0, -1.0, 0.0]) / math.sqrt(2)
        residual = np.outer(psi, psi) - np.eye(4) / 4
        best = max(
            seesaw_best_product(residual, seed=s)[1] for s in range(4)
        )
        # best product overlap with the singlet is 1/2, so 1/2 - 1/4
        assert best == pytest.approx(0.25, abs=1e-8)

    def test_monotone_across_sweep_budgets(self):
        rng = np.random.default_rng(5)
        mat = rng.standard_normal((16, 16))
        residual = mat + mat.T
        overlaps = [
            seesaw_best_product(residual, seed=9, max_sweeps=k)[1]
            for k in (1, 2, 5, 50)
        ]
        assert all(b >= a - 1e-12 for a, b in zip(overlaps, overlaps[1:]))

    def test_non_hermitian_rejected(self):
        with pytest.raises(ValueError, match="Hermitian"):
            seesaw_best_product(np.arange(16.0).reshape(4, 4), seed=0)

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(5)
        mat = rng.standard_normal((16, 16))
        residual = mat + mat.T
        a = seesaw_best_product(residual, seed=123)
        b = seesaw_best_product(residual, seed=123)
        assert a == b


class TestUpperBoundSimple:
    def test_maximally_mixed_exactly_spanned(self):
        report = upper_bound_simple(maximally_mixed(4))
        assert report.residual_two_norm < 1e-8
        assert report.t_bsa < 1e-8

    def test_singlet_upper_bound_is_one(self):
        # every product state carries symmetric-sector weight, while the
        # singlet has none, so no ensemble does better than t = 1
        report = upper_bound_simple(singlet_state(2))
        assert report.t_bsa == pytest.approx(1.0)

    def test_certificate_weights_sum_to_one(self):
        report = upper_bound_simple(gibbs_blocks(XXZParams(1, 1, 0, 6), 1.1).state)
        total = sum(m.weight for m in report.ensemble)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_distance_beats_single_members(self):
        target = gibbs_blocks(XXZParams(1.0, 1.0, 0.0, 4), 2.0).state
        report = upper_bound_simple(target)
        lib = simple_ansatz_library(4)
        best_single = min(two_norm_distance(target, m.blocks) for m in lib)
        assert report.residual_two_norm <= best_single + 1e-12


class TestUpperBoundFull:
    def test_separable_target_recovered(self):
        rng = np.random.default_rng(71)
        target = random_separable(4, rng)
        basis = cached_schur_basis(4)
        report = upper_bound_full(
            blocks_to_dense(target, basis), target, restarts=3, seed=7, max_outer=30
        )
        assert report.termination == "converged"
        assert report.t_bsa <= 1e-4

    def test_singlet_goes_to_one(self):
        target = singlet_state(2)
        basis = cached_schur_basis(2)
        report = upper_bound_full(
            blocks_to_dense(target, basis), target, restarts=3, seed=3, max_outer=10
        )
        assert report.t_bsa == pytest.approx(1.0)

    def test_above_threshold_thermal_state_absorbed(self):
        params = XXZParams(1.0, 1.0, 0.0, 8)
        point = gibbs_blocks(params, 1.3)
        basis = cached_schur_basis(8)
        report = upper_bound_full(
            blocks_to_dense(point.state, basis),
            point.state,
            restarts=3,
            seed=13,
            max_outer=40,
        )
        assert report.t_bsa <= 0.02

    def test_residual_history_monotone(self):
        params = XXZParams(1.0, 1.0, 0.0, 6)
        point = gibbs_blocks(params, 0.8)
        basis = cached_schur_basis(6)
        report = upper_bound_full(
            blocks_to_dense(point.state, basis),
            point.state,
            restarts=2,
            seed=29,
            max_outer=12,
        )
        residuals = [h[2] for h in report.history]
        assert all(b <= a + 1e-12 for a, b in zip(residuals, residuals[1:]))

    def test_deterministic_bit_for_bit(self):
        params = XXZParams(1.0, 0.0, 0.2, 4)
        point = gibbs_blocks(params, 0.7)
        basis = cached_schur_basis(4)
        dense = blocks_to_dense(point.state, basis)
        a = upper_bound_full(dense, point.state, restarts=2, seed=99, max_outer=6)
        b = upper_bound_full(dense, point.state, restarts=2, seed=99, max_outer=6)
        assert a.to_json() == b.to_json()

    def test_warm_start_accepted(self):
        params = XXZParams(1.0, 1.0, 0.0, 4)
        point = gibbs_blocks(params, 1.5)
        basis = cached_schur_basis(4)
        dense = blocks_to_dense(point.state, basis)
        first = upper_bound_full(dense, point.state, restarts=2, seed=1, max_outer=8)
        warm = [(m.descriptor, m.weight) for m in first.ensemble]
        second = upper_bound_full(
            dense, point.state, restarts=2, seed=2, max_outer=4, warm_start=warm
        )
        assert second.t_bsa <= first.t_bsa + 1e-9


class TestCertificates:
    def test_verify_clean_run(self):
        params = XXZParams(1.0, 1.0, 0.0, 5)
        point = gibbs_blocks(params, 0.9)
        basis = cached_schur_basis(5)
        report = upper_bound_full(
            blocks_to_dense(point.state, basis),
            point.state,
            restarts=2,
            seed=17,
            max_outer=8,
        )
        defects = verify_certificate(report, point.state, basis)
        assert defects["member_rederivation"] < 1e-10
        assert defects["sigma_mismatch"] < 1e-10
        assert defects["t_mismatch"] < 1e-12
        assert defects["cell_negativity"] < 1e-12

    def test_descriptor_json_round_trip(self):
        simple = SimpleAnsatz(k=3, theta=0.25)
        report = UpperBoundReport(
            t_bsa=0.0,
            residual_two_norm=0.0,
            sigma=maximally_mixed(4),
            ensemble=[
                EnsembleMember(1.0, member_from_descriptor(simple, 4), simple)
            ],
            iterations=1,
            termination="converged",
        )
        payload = report.to_json_dict()
        back = descriptor_from_json(payload["ensemble"][0]["descriptor"])
        assert back == simple

    def test_general_product_rederivable(self):
        rng = np.random.default_rng(123)
        vecs = rng.standard_normal((4, 3))
        vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
        desc = GeneralProduct(bloch=tuple(tuple(float(x) for x in v) for v in vecs))
        basis = cached_schur_basis(4)
        a = member_from_descriptor(desc, 4, basis)
        b = member_from_descriptor(
            descriptor_from_json(
                {"type": "product", "bloch": [list(v) for v in desc.bloch]}
            ),
            4,
            basis,
        )
        for tj in a.alpha:
            np.testing.assert_allclose(a.alpha[tj], b.alpha[tj], atol=1e-14)


class TestSeparableBall:
    def test_sigma_equals_target(self):
        state = gibbs_blocks(XXZParams(1.0, 1.0, 0.0, 4), 3.0).state
        assert separable_ball_check(state, state)

    def test_singlet_far_outside(self):
        assert not separable_ball_check(singlet_state(2), maximally_mixed(2))

    def test_hot_thermal_state_fires(self):
        point = gibbs_blocks(XXZParams(1.0, 1.0, 0.0, 4), 10.0)
        report = upper_bound_simple(point.state)
        assert separable_ball_check(point.state, report.sigma)


class TestSandwich:
    def test_separable_target_pair(self):
        target = maximally_mixed(4)
        lower = ssi_parameter(moments_from_blocks(target))
        upper = upper_bound_simple(target)
        rep = sandwich_report(target, lower, upper)
        assert rep.lower_bound == 0.0
        assert rep.t_bsa < 1e-8
        assert rep.gap == pytest.approx(rep.t_bsa)

    def test_violation_raises_integrity_error(self):
        target = singlet_state(2)
        lower = ssi_parameter(moments_from_blocks(target))  # bound = 1
        fake = upper_bound_simple(maximally_mixed(2))  # t ~ 0 for a different state
        with pytest.raises(IntegrityError):
            sandwich_report(target, lower, fake)

    def test_thermal_pair_consistent(self):
        params = XXZParams(1.0, 1.0, 0.0, 6)
        point = gibbs_blocks(params, 0.7)
        basis = cached_schur_basis(6)
        lower = ssi_parameter(moments_from_blocks(point.state))
        upper = upper_bound_full(
            blocks_to_dense(point.state, basis),
            point.state,
            restarts=2,
            seed=41,
            max_outer=10,
        )
        rep = sandwich_report(point.state, lower, upper)
        assert rep.gap >= -1e-9
