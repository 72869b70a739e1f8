"""Independent ground truth for the region formulas.

The achievability scheme describes the observation as U_t = Y + Z_t with
cov(Z_t) = omega_t^{-1} - cond_t. This module assembles the explicit
joint covariance of (X, Y, Y_1..Y_T, U_1..U_T) under that scheme and
computes every mutual information directly from it, by Schur-complement
log-determinants and by Monte-Carlo sampling. The region module never
touches this construction, so agreement between the two is a genuine
cross-check, and it is the central correctness property of the package.

Two structural facts the construction relies on:

* The descriptions must satisfy the Markov chain
  (X, Y_1..Y_T) - Y - U_T - ... - U_1, which forces the stage noises to
  be nested, Z_s = Z_t + fresh noise for s < t, hence
  cov(Z_s, Z_t) = omega-noise of the coarser stage. Drawing the Z_t
  independently would inflate I(Y; U_1..U_t | Y_t) and break the exact
  match with the rate formula. Nesting requires the omega-noise
  covariances to be Loewner-decreasing in t; chains violating that are
  rejected as not realizable by degraded descriptions.
* Pairwise side-information noise covariances are not part of the model;
  they are forced by the requirement that Y_t and Y_s be independent
  given Y: cov(W_t, W_s) = sigma_t0 sigma_0^{-1} sigma_0s.

Monte-Carlo estimation applies the same log-det functional to empirical
second moments (the functional is scale invariant, so uncentered moments
suffice) and reports a delete-one-chunk jackknife standard error.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

from . import _linalg as la
from . import mc
from .errors import (
    ChainNotStrictlyInterior,
    DimensionMismatch,
    InfeasibleChain,
    SingularConditioning,
)
from .model import (
    GaussianScalableModel,
    OmegaChain,
    Stage,
    conditional_noise_cov,
    validate_model,
)

__all__ = [
    "JointCovariance",
    "MCEstimate",
    "FisherCheckReport",
    "build_joint_covariance",
    "mi_logdet",
    "mc_mi_estimate",
    "mc_mi_multi",
    "fisher_mmse_check",
    "random_instance",
]

_EPS_SHIFT = 1e-8


@dataclass(frozen=True)
class JointCovariance:
    """Covariance of the stacked vector with a name-to-slice index.

    Variable names: "x", "y", "y1".."yT", "u1".."uT"; every block is m wide.
    `shifted` records whether a boundary chain was nudged into the interior.
    """

    matrix: NDArray[np.float64]
    index: dict
    m: int
    T: int
    shifted: bool = False

    def slices(self, names) -> np.ndarray:
        if isinstance(names, str):
            names = (names,)
        cols = []
        for name in names:
            if name not in self.index:
                raise DimensionMismatch(f"unknown variable {name!r}")
            cols.append(np.arange(self.index[name].start, self.index[name].stop))
        return np.concatenate(cols) if cols else np.array([], dtype=int)


def _omega_noises(model, chain, eps_shift):
    """Per-stage description-noise covariances, nudging boundary chains
    inward when allowed. Returns (noises, shifted)."""
    noises = []
    shifted = False
    for t in range(1, model.T + 1):
        om = chain.omega(t)
        cond = conditional_noise_cov(model, t)
        cap = la.inv_spd(cond)
        cap_scale = float(la.eigvals_sym(cap)[-1])
        gap = la.min_eig(cap - om)
        if gap < -1e-9 * cap_scale:
            # An additive test channel needs omega <= the stage cap; the
            # model constraint only bounds omega by the last stage's cap,
            # so such chains exist but are not degradable.
            raise InfeasibleChain(
                f"stage {t} description exceeds its own side-information "
                f"cap (eigenvalue {gap:.3e}); the chain cannot be realized "
                "by degraded descriptions"
            )
        if la.min_eig(om) <= 1e-12 * cap_scale or gap <= 1e-12 * cap_scale:
            if not eps_shift:
                raise ChainNotStrictlyInterior(
                    f"stage {t} omega is singular or at the cap; pass "
                    "eps_shift=True to nudge it into the interior"
                )
            om = (1.0 - _EPS_SHIFT) * om + 0.5 * _EPS_SHIFT * cap
            shifted = True
        noise = la.inv_spd(om) - cond
        if la.min_eig(noise) < 0.0:
            noise = la.psd_clip(noise)
        noises.append(noise)
    return noises, shifted


def build_joint_covariance(
    model: GaussianScalableModel,
    chain: OmegaChain,
    eps_shift: bool = False,
) -> JointCovariance:
    """Joint covariance of (X, Y, Y_1..Y_T, U_1..U_T) under the test channel.

    Requires a strictly interior chain (omega positive definite and below
    the stage cap); with eps_shift=True boundary chains are blended 1e-8
    of the way toward the middle of the feasible interval and the result
    is flagged. Chains whose description noises are not nested raise
    InfeasibleChain: they cannot be realized by degraded descriptions.
    """
    if chain.T != model.T or chain.m != model.m:
        raise DimensionMismatch("chain shape does not match the model")
    m, T = model.m, model.T
    noises, shifted = _omega_noises(model, chain, eps_shift)

    # Degraded descriptions need noise increments G_t = noise_t - noise_{t+1}
    # to be PSD; tolerate (and repair) tiny deficits from the eps shift.
    scale = max(float(np.max(np.abs(noises[0]))), 1.0)
    for t in range(T - 1):
        diff = noises[t] - noises[t + 1]
        ev = la.min_eig(diff)
        if ev < -1e-6 * scale:
            raise InfeasibleChain(
                "chain is not realizable by degraded descriptions: stage "
                f"{t + 1} description noise is not >= stage {t + 2}'s "
                f"(eigenvalue {ev:.3e})"
            )
        if ev < 0.0:
            noises[t] = noises[t + 1] + la.psd_clip(diff)

    names = ["x", "y"] + [f"y{t}" for t in range(1, T + 1)] + [
        f"u{t}" for t in range(1, T + 1)
    ]
    index = {name: slice(i * m, (i + 1) * m) for i, name in enumerate(names)}
    d = (2 + 2 * T) * m
    cov = np.zeros((d, d))

    sx = model.sigma_x
    s0 = model.sigma_0
    sigma_0_inv = la.inv_spd(s0)

    def cross_w(t: int, s: int) -> np.ndarray:
        """cov(W_t, W_s): forced by conditional independence given Y."""
        if t == s:
            return model.stage(t).sigma_t
        return model.stage(t).sigma_t0 @ sigma_0_inv @ model.stage(s).sigma_0t

    def put(a: str, b: str, block: np.ndarray) -> None:
        cov[index[a], index[b]] = block
        if a != b:
            cov[index[b], index[a]] = block.T

    put("x", "x", sx)
    put("x", "y", sx)
    put("y", "y", sx + s0)
    for t in range(1, T + 1):
        st = model.stage(t)
        put("x", f"y{t}", sx)
        put("x", f"u{t}", sx)
        put(f"y{t}", f"y{t}", sx + st.sigma_t)
        put("y", f"y{t}", sx + st.sigma_0t)
        put("y", f"u{t}", sx + s0)
        put(f"y{t}", f"u{t}", sx + st.sigma_t0)
        for s in range(1, t):
            put(f"y{s}", f"y{t}", sx + cross_w(s, t))
            put(f"y{s}", f"u{t}", sx + model.stage(s).sigma_t0)
            put(f"u{s}", f"y{t}", sx + st.sigma_t0.T)
        for s in range(1, t + 1):
            # Z_s = Z_t + fresh noise for s < t, so cov(Z_s, Z_t) is the
            # finer stage's (smaller) noise covariance.
            put(f"u{s}", f"u{t}", sx + s0 + noises[t - 1])

    cov = 0.5 * (cov + cov.T)
    return JointCovariance(matrix=cov, index=index, m=m, T=T, shifted=shifted)


def mi_logdet(joint: JointCovariance, group_a, group_b, group_cond=()) -> float:
    """I(A; B | C) in bits via Schur-complement log-determinants."""
    a = joint.slices(group_a)
    b = joint.slices(group_b)
    c = joint.slices(group_cond)
    seen = set(a) | set(b) | set(c)
    if len(seen) != len(a) + len(b) + len(c):
        raise DimensionMismatch("groups must be disjoint")
    try:
        cov_ac = la.conditional_cov(joint.matrix, a, c)
        cov_abc = la.conditional_cov(joint.matrix, a, np.concatenate([b, c]))
        return la.logdet2(cov_ac) - la.logdet2(cov_abc)
    except np.linalg.LinAlgError as exc:
        raise SingularConditioning(str(exc)) from exc


class MCEstimate(NamedTuple):
    bits: float
    stderr: float
    n_samples: int
    n_chunks: int
    seed: int
    backend: str


def _mi_from_moments(s: NDArray, a, b, c) -> float:
    cov_ac = la.conditional_cov(s, a, c)
    cov_abc = la.conditional_cov(s, a, np.concatenate([b, c]))
    return la.logdet2(cov_ac) - la.logdet2(cov_abc)


def mc_mi_multi(
    model: GaussianScalableModel,
    chain: OmegaChain,
    groups_list: Sequence[tuple],
    n_samples: int,
    seed: int,
    chunk: int = mc.DEFAULT_CHUNK,
    eps_shift: bool = False,
) -> list[MCEstimate]:
    """Monte-Carlo estimates for several (A, B, C) groupings from one
    sampling pass over the joint distribution."""
    if n_samples < 10**4:
        raise ValueError("need at least 1e4 samples")
    joint = build_joint_covariance(model, chain, eps_shift=eps_shift)
    mat = joint.matrix
    try:
        chol = np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        # The assembled covariance is PD up to rounding; a relative jitter
        # keeps sampling possible at the boundary.
        jitter = 1e-12 * float(np.trace(mat)) / mat.shape[0]
        chol = np.linalg.cholesky(mat + jitter * np.eye(mat.shape[0]))

    sizes = mc.chunk_sizes(n_samples, chunk)
    sums = [
        mc.accumulate_chunk(seed, k, chol, n_k) for k, n_k in enumerate(sizes)
    ]
    total = np.sum(sums, axis=0)
    n = sum(sizes)

    out = []
    for groups in groups_list:
        ga, gb = groups[0], groups[1]
        gc = groups[2] if len(groups) > 2 else ()
        a, b, c = joint.slices(ga), joint.slices(gb), joint.slices(gc)
        est = _mi_from_moments(total / n, a, b, c)
        if len(sizes) >= 2:
            loo = []
            for s_k, n_k in zip(sums, sizes):
                loo.append(_mi_from_moments((total - s_k) / (n - n_k), a, b, c))
            loo = np.array(loo)
            k = len(loo)
            se = math.sqrt((k - 1) / k * float(np.sum((loo - loo.mean()) ** 2)))
        else:
            se = math.nan
        out.append(
            MCEstimate(
                bits=float(est),
                stderr=se,
                n_samples=n,
                n_chunks=len(sizes),
                seed=seed,
                backend=mc.BACKEND,
            )
        )
    return out


def mc_mi_estimate(
    model: GaussianScalableModel,
    chain: OmegaChain,
    groups: tuple,
    n_samples: int,
    seed: int,
    chunk: int = mc.DEFAULT_CHUNK,
    eps_shift: bool = False,
) -> MCEstimate:
    """Sampling estimate of one mutual information; groups = (A, B) or
    (A, B, C) with variable names as in JointCovariance."""
    return mc_mi_multi(
        model, chain, [groups], n_samples, seed, chunk=chunk, eps_shift=eps_shift
    )[0]


@dataclass(frozen=True)
class FisherCheckReport:
    """Residuals of the three converse identities on one random instance."""

    m: int
    seed: int
    residual_lemma3: float
    residual_error_cov: float
    residual_estimator: float
    description: str

    def max_residual(self) -> float:
        return max(
            self.residual_lemma3, self.residual_error_cov, self.residual_estimator
        )

    def to_csv_row(self, tolerance: float = 1e-9) -> list:
        ok = self.max_residual() <= tolerance
        return [
            self.description,
            self.m,
            self.seed,
            f"{self.residual_lemma3:.3e}",
            f"{self.residual_error_cov:.3e}",
            f"{self.residual_estimator:.3e}",
            f"{tolerance:.1e}",
            "pass" if ok else "fail",
        ]


def fisher_mmse_check(m: int, seed: int) -> FisherCheckReport:
    """Numerically certify the Fisher/MMSE identities used by the converse.

    (i)  mmse(V2 | V1, V2+Z) = cov_Z - cov_Z J(V2+Z | V1) cov_Z, with the
         Fisher information of a Gaussian equal to the inverse conditional
         covariance.
    (ii) The error covariance of estimating X from (Y, Y_t):
         inverse = sigma_x^{-1} + [I I] noise-block-inverse [I I]^T,
         against the Schur-complement conditional covariance.
    (iii) The estimator coefficients sigma_xtilde (P1+P3, P2+P4) built from
         the closed-form inverse blocks (P2 read with the inverse,
         P2 = -cond^{-1} sigma_0t sigma_t^{-1}), against the standard
         conditional-mean coefficients.
    """
    if m > 6:
        raise DimensionMismatch("identity checks are desk scale: m <= 6")
    rng = np.random.default_rng(seed)

    # (i) Lemma-3 on a generic jointly Gaussian (V1, V2) plus independent Z.
    big = la.random_spd(rng, 2 * m, lo=0.5, hi=2.5)
    sigma_z = la.random_spd(rng, m, lo=0.3, hi=2.0)
    v1 = np.arange(m)
    v2 = np.arange(m, 2 * m)
    d = 3 * m
    joint = np.zeros((d, d))
    joint[: 2 * m, : 2 * m] = big
    # Observed channel O = V2 + Z.
    obs = np.arange(2 * m, 3 * m)
    joint[np.ix_(obs, obs)] = big[np.ix_(v2, v2)] + sigma_z
    joint[np.ix_(obs, v1)] = big[np.ix_(v2, v1)]
    joint[np.ix_(v1, obs)] = big[np.ix_(v1, v2)]
    joint[np.ix_(obs, v2)] = big[np.ix_(v2, v2)]
    joint[np.ix_(v2, obs)] = big[np.ix_(v2, v2)]
    lhs = la.conditional_cov(joint, v2, np.concatenate([v1, obs]))
    fisher = la.inv_spd(la.conditional_cov(joint, obs, v1))
    rhs = sigma_z - sigma_z @ fisher @ sigma_z
    residual_lemma3 = float(np.linalg.norm(lhs - rhs))

    # Shared single-stage Gaussian instance for (ii) and (iii).
    sigma_x = la.random_spd(rng, m, lo=0.5, hi=3.0)
    sigma_0 = la.random_spd(rng, m, lo=0.5, hi=2.5)
    sigma_t = la.random_spd(rng, m, lo=0.5, hi=2.5)
    contraction = la.random_contraction(rng, m, max_norm=0.6)
    sigma_0t = la.sqrt_spd(sigma_0) @ contraction @ la.sqrt_spd(sigma_t)
    model = GaussianScalableModel(sigma_x, sigma_0, (Stage(sigma_t, sigma_0t),))
    validate_model(model)

    noise_block = np.block([[sigma_0, sigma_0t], [sigma_0t.T, sigma_t]])
    noise_inv = la.inv_spd(noise_block)
    ones = np.hstack([np.eye(m), np.eye(m)])
    err_inv = la.inv_spd(sigma_x) + ones @ noise_inv @ ones.T
    err_cov = la.inv_spd(err_inv)

    joint3 = np.zeros((3 * m, 3 * m))
    xi = np.arange(m)
    yi = np.arange(m, 2 * m)
    yti = np.arange(2 * m, 3 * m)
    joint3[np.ix_(xi, xi)] = sigma_x
    joint3[np.ix_(xi, yi)] = sigma_x
    joint3[np.ix_(yi, xi)] = sigma_x
    joint3[np.ix_(xi, yti)] = sigma_x
    joint3[np.ix_(yti, xi)] = sigma_x
    joint3[np.ix_(yi, yi)] = sigma_x + sigma_0
    joint3[np.ix_(yti, yti)] = sigma_x + sigma_t
    joint3[np.ix_(yi, yti)] = sigma_x + sigma_0t
    joint3[np.ix_(yti, yi)] = sigma_x + sigma_0t.T
    direct = la.conditional_cov(joint3, xi, np.concatenate([yi, yti]))
    residual_error_cov = float(np.linalg.norm(err_cov - direct))

    cond = conditional_noise_cov(model, 1)
    cond_inv = la.inv_spd(cond)
    sigma_t_inv = la.inv_spd(sigma_t)
    p1 = cond_inv
    p2 = -cond_inv @ sigma_0t @ sigma_t_inv
    p3 = -sigma_t_inv @ sigma_0t.T @ cond_inv
    p4 = sigma_t_inv + sigma_t_inv @ sigma_0t.T @ cond_inv @ sigma_0t @ sigma_t_inv
    coeff = np.hstack([err_cov @ (p1 + p3), err_cov @ (p2 + p4)])
    cov_x_obs = np.hstack([sigma_x, sigma_x])
    cov_obs = joint3[m:, m:]
    coeff_direct = np.linalg.solve(cov_obs, cov_x_obs.T).T
    residual_estimator = float(np.linalg.norm(coeff - coeff_direct))

    digest = hashlib.sha256()
    for arr in (big, sigma_z, sigma_x, sigma_0, sigma_t, sigma_0t):
        digest.update(np.ascontiguousarray(arr).tobytes())
    return FisherCheckReport(
        m=m,
        seed=seed,
        residual_lemma3=residual_lemma3,
        residual_error_cov=residual_error_cov,
        residual_estimator=residual_estimator,
        description=digest.hexdigest()[:12],
    )


def random_instance(
    seed: int,
    m_max: int = 4,
    t_max: int = 3,
    margin: float = 0.05,
) -> tuple[GaussianScalableModel, OmegaChain]:
    """Random validated model plus a strictly interior, degradable chain.

    The chain is generated from the description side: the stage-T noise is
    a random SPD matrix and earlier stages add PSD increments large enough
    to dominate the conditional-noise differences, which makes the omega
    chain Loewner ordered and the description noises nested by
    construction.
    """
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, m_max + 1))
    T = int(rng.integers(1, t_max + 1))

    sigma_x = la.random_spd(rng, m, lo=0.5, hi=3.0)
    sigma_0 = la.random_spd(rng, m, lo=0.5, hi=2.0)

    sigma_ts = [la.random_spd(rng, m, lo=0.6, hi=2.0)]
    for _ in range(T - 1):
        sigma_ts.append(sigma_ts[-1] + la.random_psd(rng, m, scale=0.4))
    sigma_ts.reverse()  # stage 1 noisiest, stage T least

    stages = []
    for sigma_t in sigma_ts:
        c = la.random_contraction(rng, m, max_norm=0.6)
        sigma_0t = la.sqrt_spd(sigma_0) @ c @ la.sqrt_spd(sigma_t)
        stages.append(Stage(sigma_t, sigma_0t))
    model = validate_model(GaussianScalableModel(sigma_x, sigma_0, tuple(stages)))

    conds = [conditional_noise_cov(model, t) for t in range(1, T + 1)]
    noises = [la.random_spd(rng, m, lo=margin + 0.1, hi=1.5)]
    for t in range(T - 1, 0, -1):
        lift = max(0.0, float(la.eigvals_sym(conds[t] - conds[t - 1])[-1]))
        inc = la.random_psd(rng, m, scale=0.3) + (lift + margin) * np.eye(m)
        noises.append(noises[-1] + inc)
    noises.reverse()  # noises[t-1] is stage t's, decreasing in t
    omegas = tuple(
        la.inv_spd(noises[t] + conds[t]) for t in range(T)
    )
    return model, OmegaChain(omegas)
