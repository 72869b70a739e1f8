"""Relevance and cumulative-rate bounds of the scalable Gaussian IB region.

For a feasible chain the stage-t constraints read

    delta_t <= log2 |I + [sigma_t^{-1} + A_t Omega_t A_t^T] sigma_x|,
    delta_t <= cum_rate_t + log2 |I - Omega_t cond_t| + log2 |I + sigma_x sigma_t^{-1}|,

with A_t = I - sigma_t^{-1} sigma_t0 and cond_t the conditional noise
covariance of stage t. The second line is exposed rearranged as a lower
bound on the cumulative rate, clamped at zero, because frontier tracing
needs rate as a function of relevance.

The printed middle factor has no transpose on the right A_t; it is
evaluated here as A_t Omega_t A_t^T, which is the symmetric PSD reading,
coincides with the scalar form (1-gamma)^2 Omega_t, and is certified
against the explicit test-channel construction by the verification suite.

Scalar single-stage closed forms (with and without side information) are
provided as named consistency surfaces; they must agree with the general
evaluation to near machine precision and are tested that way.
"""

from __future__ import annotations

import math

import numpy as np

from . import _linalg as la
from .errors import DeltaInfeasible, InfeasibleChain, RelevanceExceedsBound
from .model import (
    GaussianScalableModel,
    OmegaChain,
    check_omega_chain,
    conditional_noise_cov,
)

__all__ = [
    "relevance_bound",
    "min_cum_rate",
    "rate_bound_terms",
    "si_mutual_information",
    "scalar_T1_with_si",
    "scalar_T1_no_si",
    "vector_T1_region",
]


def _require_feasible(model: GaussianScalableModel, chain: OmegaChain) -> None:
    check = check_omega_chain(model, chain)
    if not check.ok:
        raise InfeasibleChain(
            f"chain violates the Loewner ordering (worst eigenvalue "
            f"{check.min_eigenvalue:.3e})"
        )


def si_mutual_information(model: GaussianScalableModel, t: int) -> float:
    """log2 |I + sigma_x sigma_t^{-1}|: what side information alone conveys."""
    st = model.stage(t)
    return la.logdet2(st.sigma_t + model.sigma_x) - la.logdet2(st.sigma_t)


def _relevance_value(model: GaussianScalableModel, omega, t: int) -> float:
    st = model.stage(t)
    m = model.m
    sigma_t_inv = la.inv_spd(st.sigma_t)
    a = np.eye(m) - sigma_t_inv @ st.sigma_t0
    g = sigma_t_inv + a @ omega @ a.T
    sigma_x_inv = la.inv_spd(model.sigma_x)
    return la.logdet2(sigma_x_inv + g) - la.logdet2(sigma_x_inv)


def relevance_bound(model: GaussianScalableModel, chain: OmegaChain, t: int) -> float:
    """Stage-t relevance upper bound in bits."""
    _require_feasible(model, chain)
    return _relevance_value(model, chain.omega(t), t)


def rate_bound_terms(
    model: GaussianScalableModel, chain: OmegaChain, t: int
) -> tuple[float, float]:
    """The two log-det terms of the stage-t rate inequality.

    Returns (log2 |I - Omega_t cond_t|, log2 |I + sigma_x sigma_t^{-1}|).
    The first term is -inf when Omega_t sits on the cap (infinite rate).
    """
    _require_feasible(model, chain)
    cond = conditional_noise_cov(model, t)
    cap = la.inv_spd(cond)
    code = la.logdet2_psd(cap - chain.omega(t)) - la.logdet2(cap)
    return code, si_mutual_information(model, t)


def min_cum_rate(
    model: GaussianScalableModel, chain: OmegaChain, t: int, delta_t: float
) -> float:
    """Smallest cumulative rate through stage t achieving relevance delta_t."""
    bound = relevance_bound(model, chain, t)
    if delta_t > bound + 1e-12:
        raise RelevanceExceedsBound(
            f"delta_t = {delta_t:.6f} exceeds the relevance bound {bound:.6f}"
        )
    code, si = rate_bound_terms(model, chain, t)
    return max(0.0, delta_t - code - si)


def scalar_T1_with_si(
    sigma_x: float, sigma_0: float, sigma_1: float, sigma_01: float, delta: float
) -> float:
    """Single-stage scalar rate bound with correlated side information.

    R >= log2[ sigma_x / (2^{-delta} sigma_x C2 - (sigma_x + sigma_1) C1) ]
    with C1 = (sigma_0 sigma_1 - sigma_01^2) / (sigma_1 - sigma_01)^2 and
    C2 = (sigma_x + sigma_1)^2 / (sigma_x sigma_1) C1 + sigma_x / sigma_1 + 1.
    Clamped at zero: relevance below what side information alone provides
    is free.
    """
    c1 = (sigma_0 * sigma_1 - sigma_01**2) / (sigma_1 - sigma_01) ** 2
    c2 = (sigma_x + sigma_1) ** 2 / (sigma_x * sigma_1) * c1 + sigma_x / sigma_1 + 1.0
    denom = 2.0 ** (-delta) * sigma_x * c2 - (sigma_x + sigma_1) * c1
    if denom <= 0.0:
        raise DeltaInfeasible(
            f"delta = {delta:.6f} exceeds the achievable relevance"
        )
    return max(0.0, math.log2(sigma_x / denom))


def scalar_T1_no_si(sigma_x: float, sigma_0: float, delta: float) -> float:
    """Single-stage scalar rate bound without side information.

    R >= log2[ sigma_x / ((sigma_x + sigma_0) 2^{-delta} - sigma_0) ];
    delta must stay below log2(1 + sigma_x / sigma_0).
    """
    denom = (sigma_x + sigma_0) * 2.0 ** (-delta) - sigma_0
    if denom <= 0.0:
        raise DeltaInfeasible(
            f"delta = {delta:.6f} is at or above the observation information "
            f"{math.log2(1.0 + sigma_x / sigma_0):.6f}"
        )
    return max(0.0, math.log2(sigma_x / denom))


def vector_T1_region(
    model: GaussianScalableModel,
    omega,
    delta: float | None = None,
    no_si: bool = False,
) -> tuple[float, float]:
    """Single-stage region pair (relevance bound, rate bound at `delta`).

    `delta` defaults to the relevance bound itself (the boundary point).
    With no_si=True the side-information channel is removed entirely:
    delta <= log2|I + Omega sigma_x| and rate >= delta - log2|I - Omega sigma_0|,
    using only sigma_x and sigma_0 from the model.
    """
    if model.T != 1:
        raise InfeasibleChain("vector_T1_region expects a single-stage model")
    omega = la.as_cov(omega, "omega")
    if no_si:
        ev = la.min_eig(omega)
        if ev < -la.PSD_TOL:
            raise InfeasibleChain(f"omega has negative eigenvalue {ev:.3e}")
        # |I + Omega sigma_x| through the symmetric ratio |sigma_x^{-1} + Omega|
        # / |sigma_x^{-1}| (the raw product is not symmetric).
        sigma_x_inv = la.inv_spd(model.sigma_x)
        delta_bound = la.logdet2(sigma_x_inv + omega) - la.logdet2(sigma_x_inv)
        sigma_0_inv = la.inv_spd(model.sigma_0)
        code = la.logdet2_psd(sigma_0_inv - omega) - la.logdet2(sigma_0_inv)
        if delta is None:
            delta = delta_bound
        if delta > delta_bound + 1e-12:
            raise RelevanceExceedsBound(
                f"delta = {delta:.6f} exceeds the relevance bound {delta_bound:.6f}"
            )
        return delta_bound, max(0.0, delta - code)
    chain = OmegaChain((omega,))
    delta_bound = relevance_bound(model, chain, 1)
    if delta is None:
        delta = delta_bound
    return delta_bound, min_cum_rate(model, chain, 1, delta)
