"""Shared builders for the test suites.

Most suites exercise the same scalar two-stage instance: source power 3
observed through unit noise, two decoders whose side information carries
noise 2 with cross-covariance 0.5 (a quarter of the view noise).
"""

import numpy as np
import pytest

from scalable_ib import GaussianScalableModel, OmegaChain, ScalarTwoStageParams


def two_stage_scalar_model() -> GaussianScalableModel:
    return GaussianScalableModel.from_scalars(3.0, 1.0, [(2.0, 0.5), (2.0, 0.5)])


def two_stage_params(sigma_si: float = 2.0) -> ScalarTwoStageParams:
    return ScalarTwoStageParams(
        sigma_x=3.0, sigma_0=1.0, sigma_si=sigma_si, gamma=0.25
    )


def random_spd(rng: np.random.Generator, m: int, scale: float = 1.0) -> np.ndarray:
    """Well-conditioned random SPD matrix."""
    a = rng.standard_normal((m, m))
    return scale * (a @ a.T + m * np.eye(m))


@pytest.fixture
def scalar_model():
    return two_stage_scalar_model()


@pytest.fixture
def scalar_chain():
    return OmegaChain.from_scalars(0.3, 0.5)
