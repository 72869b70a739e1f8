"""Model construction, validation, and omega-chain feasibility checks."""

import numpy as np
import pytest

from scalable_ib import (
    ChainCheck,
    DimensionMismatch,
    GaussianScalableModel,
    ModelValidationError,
    OmegaChain,
    Stage,
    check_omega_chain,
    conditional_noise_cov,
    model_violations,
    validate_model,
)

from conftest import random_spd, two_stage_scalar_model


class TestConstruction:
    def test_scalars_coerce_to_one_by_one(self):
        model = GaussianScalableModel.from_scalars(3.0, 1.0, [(2.0, 0.5)])
        assert model.m == 1 and model.T == 1
        assert model.sigma_x.shape == (1, 1)
        assert model.sigma_x[0, 0] == 3.0

    def test_matrices_are_frozen(self):
        model = two_stage_scalar_model()
        with pytest.raises(ValueError):
            model.sigma_x[0, 0] = 9.0
        with pytest.raises(ValueError):
            model.stage(1).sigma_t[0, 0] = 9.0

    def test_stage_indexing_is_one_based(self):
        model = two_stage_scalar_model()
        assert model.stage(1).sigma_0t[0, 0] == 0.5
        for bad in (0, 3, -1):
            with pytest.raises(DimensionMismatch):
                model.stage(bad)

    def test_sigma_t0_is_the_transpose(self):
        st = Stage(np.array([[2.0, 0.1], [0.1, 2.0]]), np.array([[0.5, 0.2], [0.0, 0.5]]))
        assert np.array_equal(st.sigma_t0, st.sigma_0t.T)

    def test_empty_stage_list_rejected(self):
        with pytest.raises(DimensionMismatch):
            GaussianScalableModel(3.0, 1.0, ())

    def test_chain_from_scalars(self):
        chain = OmegaChain.from_scalars(0.1, 0.2, 0.3)
        assert chain.T == 3 and chain.m == 1
        assert chain.omega(2)[0, 0] == 0.2
        with pytest.raises(DimensionMismatch):
            chain.omega(4)

    def test_chain_symmetrizes_roundoff_but_rejects_asymmetry(self):
        tiny = np.array([[1.0, 0.3 + 1e-13], [0.3, 1.0]])
        chain = OmegaChain((tiny,))
        om = chain.omega(1)
        assert np.array_equal(om, om.T)
        with pytest.raises(ValueError):
            OmegaChain((np.array([[1.0, 0.5], [0.1, 1.0]]),))

    def test_empty_chain_rejected(self):
        with pytest.raises(DimensionMismatch):
            OmegaChain(())


class TestValidation:
    def test_reference_instance_is_valid(self):
        model = two_stage_scalar_model()
        assert validate_model(model) is model
        assert model_violations(model) == []

    def test_random_instances_built_from_spd_parts_are_valid(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = int(rng.integers(1, 4))
            sigma_x = random_spd(rng, m)
            sigma_0 = random_spd(rng, m)
            # stage 2 noise is stage 1 minus a small PSD part, so the
            # Loewner ordering holds by construction
            sigma_1 = random_spd(rng, m) + 2.0 * np.eye(m)
            sigma_2 = sigma_1 - random_spd(rng, m, 0.05)
            cross = 0.05 * random_spd(rng, m)
            stages = [Stage(sigma_1, cross), Stage(sigma_2, cross)]
            model = GaussianScalableModel(sigma_x, sigma_0, tuple(stages))
            assert model_violations(model) == []

    def test_degradedness_violation_detected(self):
        # stage 2 noisier than stage 1
        model = GaussianScalableModel.from_scalars(3.0, 1.0, [(1.0, 0.2), (2.0, 0.2)])
        with pytest.raises(ModelValidationError) as err:
            validate_model(model)
        kinds = [v.kind for v in err.value.violations]
        assert kinds == ["DegradednessViolated"]
        v = err.value.violations[0]
        assert v.stage == 2
        assert v.eigenvalue == pytest.approx(-1.0)

    def test_block_covariance_violation_detected(self):
        # |sigma_0t| > sqrt(sigma_0 sigma_t): no joint noise distribution
        model = GaussianScalableModel.from_scalars(3.0, 1.0, [(2.0, 2.0)])
        kinds = [v.kind for v in model_violations(model)]
        assert "BlockCovarianceInvalid" in kinds

    def test_nonsymmetric_and_indefinite_sigmas(self):
        bad_sym = GaussianScalableModel(
            np.array([[1.0, 0.5], [0.0, 1.0]]), np.eye(2), (Stage(np.eye(2), np.zeros((2, 2))),)
        )
        assert [v.kind for v in model_violations(bad_sym)] == ["NonSymmetric"]

        bad_pd = GaussianScalableModel(
            np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2), (Stage(np.eye(2), np.zeros((2, 2))),)
        )
        vs = model_violations(bad_pd)
        assert [v.kind for v in vs] == ["NotPositiveDefinite"]
        assert vs[0].eigenvalue == pytest.approx(-1.0)

    def test_shape_mismatch_reported_before_numeric_checks(self):
        model = GaussianScalableModel(
            np.eye(2),
            np.eye(3),
            (Stage(np.array([[1.0, 3.0], [3.0, 1.0]]), np.zeros((2, 2))),),
        )
        vs = model_violations(model)
        # the indefinite sigma_t is not even inspected while shapes disagree
        assert [v.kind for v in vs] == ["DimensionMismatch"]
        assert "sigma_0" in vs[0].where

    def test_singular_conditional_noise_rejected(self):
        # sigma_0t^2 == sigma_0 sigma_t makes W_0 a deterministic function
        # of W_t; the conditional covariance degenerates to zero
        model = GaussianScalableModel.from_scalars(
            3.0, 1.0, [(2.0, np.sqrt(2.0))]
        )
        vs = model_violations(model)
        assert any(
            v.kind == "NotPositiveDefinite" and "conditional" in v.where for v in vs
        )

    def test_multiple_violations_accumulate(self):
        # the out-of-order pair (stages 1-2) and the impossible noise block
        # (stage 3) are independent defects and both get reported
        model = GaussianScalableModel.from_scalars(
            3.0, 1.0, [(1.0, 0.2), (2.0, 0.2), (2.0, 3.0)]
        )
        kinds = {v.kind for v in model_violations(model)}
        assert "DegradednessViolated" in kinds
        assert "BlockCovarianceInvalid" in kinds


class TestConditionalNoise:
    def test_scalar_value(self):
        model = two_stage_scalar_model()
        cond = conditional_noise_cov(model, 1)
        assert cond[0, 0] == pytest.approx(0.875, abs=1e-15)

    def test_zero_coupling_returns_sigma_0(self):
        model = GaussianScalableModel.from_scalars(3.0, 1.0, [(2.0, 0.0)])
        assert conditional_noise_cov(model, 1)[0, 0] == pytest.approx(1.0)

    def test_matches_schur_complement_of_block(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            m = int(rng.integers(1, 5))
            sigma_0 = random_spd(rng, m)
            sigma_t = random_spd(rng, m)
            s0t = 0.1 * rng.standard_normal((m, m))
            model = GaussianScalableModel(
                np.eye(m), sigma_0, (Stage(sigma_t, s0t),)
            )
            want = sigma_0 - s0t @ np.linalg.inv(sigma_t) @ s0t.T
            got = conditional_noise_cov(model, 1)
            assert np.allclose(got, want, atol=1e-12)
            assert np.array_equal(got, got.T)


class TestChainCheck:
    def test_zero_chain_is_feasible(self, scalar_model):
        res = check_omega_chain(scalar_model, OmegaChain.from_scalars(0.0, 0.0))
        assert isinstance(res, ChainCheck)
        assert res.ok
        assert res.min_eigenvalue >= -1e-15

    def test_interior_chain_is_feasible(self, scalar_model):
        res = check_omega_chain(scalar_model, OmegaChain.from_scalars(0.3, 0.8889))
        assert res.ok

    def test_cap_exceeded_reports_worst_eigenvalue(self, scalar_model):
        # cap is 1/0.875 = 8/7; 1.2 overshoots it by 0.0571
        res = check_omega_chain(scalar_model, OmegaChain.from_scalars(1.2, 1.2))
        assert not res.ok
        assert res.min_eigenvalue == pytest.approx(8.0 / 7.0 - 1.2, abs=1e-12)

    def test_nonmonotone_chain_rejected(self, scalar_model):
        res = check_omega_chain(scalar_model, OmegaChain.from_scalars(0.6, 0.4))
        assert not res.ok
        assert res.min_eigenvalue == pytest.approx(-0.2, abs=1e-12)

    def test_exact_cap_is_feasible_up_to_tolerance(self, scalar_model):
        cap = 8.0 / 7.0
        res = check_omega_chain(scalar_model, OmegaChain.from_scalars(0.5, cap))
        assert res.ok

    def test_dimension_mismatches_raise(self, scalar_model):
        with pytest.raises(DimensionMismatch):
            check_omega_chain(scalar_model, OmegaChain.from_scalars(0.3))
        with pytest.raises(DimensionMismatch):
            check_omega_chain(
                scalar_model, OmegaChain((np.eye(2) * 0.1, np.eye(2) * 0.2))
            )

    def test_matrix_chain_ordering(self):
        rng = np.random.default_rng(3)
        m = 3
        model = GaussianScalableModel(
            random_spd(rng, m), np.eye(m), (Stage(2.0 * np.eye(m), 0.3 * np.eye(m)),)
        )
        inc = random_spd(rng, m, 0.01)
        good = OmegaChain((0.1 * np.eye(m),))
        assert check_omega_chain(model, good).ok
        bad = OmegaChain((0.1 * np.eye(m) - 2 * inc,))
        assert not check_omega_chain(model, bad).ok
