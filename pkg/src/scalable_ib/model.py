"""Problem instances for the scalable Gaussian information bottleneck.

A model holds the source covariance `sigma_x`, the observation-noise
covariance `sigma_0` (the encoder sees Y = X + W_0), and per stage t the
side-information noise covariance `sigma_t` (decoder t sees Y_t = X + W_t)
together with the cross-covariance `sigma_0t` between W_0 and W_t. Stages
are ordered so later decoders have statistically better side information:
sigma_T <= ... <= sigma_1 in the Loewner order.

The region boundary is swept by an `OmegaChain`, a Loewner-nondecreasing
sequence of PSD matrices capped by the inverse of the stage-T conditional
noise covariance.

All matrices are stored as read-only float arrays; scalars and nested
lists are accepted and coerced on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from numpy.typing import NDArray

from . import _linalg as la
from .errors import DimensionMismatch, ModelValidationError

__all__ = [
    "Stage",
    "GaussianScalableModel",
    "OmegaChain",
    "Violation",
    "ChainCheck",
    "validate_model",
    "model_violations",
    "conditional_noise_cov",
    "check_omega_chain",
]


def _frozen_cov(value, name: str) -> NDArray[np.float64]:
    arr = la.as_cov(value, name)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Stage:
    """Per-stage noise description: sigma_t and the W_0/W_t cross-covariance.

    Only sigma_0t is stored; the transposed block is always derived from it
    so the two can never disagree.
    """

    sigma_t: NDArray[np.float64]
    sigma_0t: NDArray[np.float64]

    def __post_init__(self):
        object.__setattr__(self, "sigma_t", _frozen_cov(self.sigma_t, "sigma_t"))
        object.__setattr__(self, "sigma_0t", _frozen_cov(self.sigma_0t, "sigma_0t"))

    @property
    def sigma_t0(self) -> NDArray[np.float64]:
        return self.sigma_0t.T


@dataclass(frozen=True)
class GaussianScalableModel:
    """Immutable problem instance. Construction coerces shapes but does not
    validate; run validate_model before trusting an instance."""

    sigma_x: NDArray[np.float64]
    sigma_0: NDArray[np.float64]
    stages: tuple[Stage, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma_x", _frozen_cov(self.sigma_x, "sigma_x"))
        object.__setattr__(self, "sigma_0", _frozen_cov(self.sigma_0, "sigma_0"))
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise DimensionMismatch("model needs at least one stage")

    @property
    def m(self) -> int:
        return self.sigma_x.shape[0]

    @property
    def T(self) -> int:
        return len(self.stages)

    def stage(self, t: int) -> Stage:
        """Stage by 1-based index."""
        if not 1 <= t <= self.T:
            raise DimensionMismatch(f"stage index {t} outside 1..{self.T}")
        return self.stages[t - 1]

    @classmethod
    def from_scalars(
        cls,
        sigma_x: float,
        sigma_0: float,
        stage_params: Sequence[tuple[float, float]],
    ) -> "GaussianScalableModel":
        """Scalar model from (sigma_t, sigma_0t) pairs, one per stage."""
        stages = tuple(Stage(st, s0t) for st, s0t in stage_params)
        return cls(sigma_x, sigma_0, stages)


@dataclass(frozen=True)
class OmegaChain:
    """Loewner-ordered boundary parameters Omega_1, ..., Omega_T."""

    omegas: tuple[NDArray[np.float64], ...]

    def __post_init__(self):
        coerced = []
        for i, om in enumerate(self.omegas):
            arr = la.as_cov(om, f"omega_{i + 1}")
            if la.sym_deviation(arr) > la.SYM_RTOL:
                raise ValueError(f"omega_{i + 1} is not symmetric")
            arr = 0.5 * (arr + arr.T)
            arr.setflags(write=False)
            coerced.append(arr)
        object.__setattr__(self, "omegas", tuple(coerced))
        if not self.omegas:
            raise DimensionMismatch("chain needs at least one stage")

    @property
    def T(self) -> int:
        return len(self.omegas)

    @property
    def m(self) -> int:
        return self.omegas[0].shape[0]

    def omega(self, t: int) -> NDArray[np.float64]:
        if not 1 <= t <= self.T:
            raise DimensionMismatch(f"stage index {t} outside 1..{self.T}")
        return self.omegas[t - 1]

    @classmethod
    def from_scalars(cls, *values: float) -> "OmegaChain":
        return cls(tuple(np.array([[float(v)]]) for v in values))


@dataclass(frozen=True)
class Violation:
    """One failed model invariant."""

    kind: str  # NonSymmetric | NotPositiveDefinite | DegradednessViolated |
    #            BlockCovarianceInvalid | DimensionMismatch
    where: str
    message: str
    stage: int | None = None
    eigenvalue: float | None = field(default=None)


class ChainCheck(NamedTuple):
    ok: bool
    min_eigenvalue: float


def _check_sym_pd(mat, where, violations, require_pd=True):
    """Append symmetry/definiteness violations; return True if usable."""
    if la.sym_deviation(mat) > la.SYM_RTOL:
        violations.append(
            Violation("NonSymmetric", where, f"{where} is not symmetric")
        )
        return False
    if require_pd and not la.is_pd(mat):
        ev = la.min_eig(mat)
        violations.append(
            Violation(
                "NotPositiveDefinite",
                where,
                f"{where} is not positive definite (min eigenvalue {ev:.3e})",
                eigenvalue=ev,
            )
        )
        return False
    return True


def model_violations(candidate: GaussianScalableModel) -> list[Violation]:
    """All invariant violations of a candidate model (empty list if valid)."""
    v: list[Violation] = []
    m = candidate.m

    shapes_ok = True
    if candidate.sigma_0.shape != (m, m):
        v.append(
            Violation(
                "DimensionMismatch",
                "sigma_0",
                f"sigma_0 has shape {candidate.sigma_0.shape}, expected {(m, m)}",
            )
        )
        shapes_ok = False
    for t, st in enumerate(candidate.stages, start=1):
        for name, mat in (("sigma_t", st.sigma_t), ("sigma_0t", st.sigma_0t)):
            if mat.shape != (m, m):
                v.append(
                    Violation(
                        "DimensionMismatch",
                        f"stage {t} {name}",
                        f"stage {t} {name} has shape {mat.shape}, expected {(m, m)}",
                        stage=t,
                    )
                )
                shapes_ok = False
    if not shapes_ok:
        return v

    sigma_ok = _check_sym_pd(candidate.sigma_x, "sigma_x", v)
    sigma_ok &= _check_sym_pd(candidate.sigma_0, "sigma_0", v)

    stage_ok = []
    for t, st in enumerate(candidate.stages, start=1):
        ok = _check_sym_pd(st.sigma_t, f"stage {t} sigma_t", v)
        stage_ok.append(ok)
        if not ok:
            continue
        block = np.block([[candidate.sigma_0, st.sigma_0t], [st.sigma_t0, st.sigma_t]])
        ev = la.min_eig(block)
        if ev < -la.PSD_TOL:
            v.append(
                Violation(
                    "BlockCovarianceInvalid",
                    f"stage {t}",
                    f"stage {t} noise block covariance has eigenvalue {ev:.3e} < 0",
                    stage=t,
                    eigenvalue=ev,
                )
            )
            stage_ok[-1] = False

    # Degradedness: sigma_{t+1} <= sigma_t.
    for t in range(1, candidate.T):
        if not (stage_ok[t - 1] and stage_ok[t]):
            continue
        diff = candidate.stages[t - 1].sigma_t - candidate.stages[t].sigma_t
        ev = la.min_eig(diff)
        if ev < -la.PSD_TOL:
            v.append(
                Violation(
                    "DegradednessViolated",
                    f"stage {t + 1}",
                    f"sigma_{t + 1} exceeds sigma_{t} (eigenvalue {ev:.3e})",
                    stage=t + 1,
                    eigenvalue=ev,
                )
            )

    # Conditional noise covariance must stay invertible.
    if sigma_ok:
        for t, (st, ok) in enumerate(zip(candidate.stages, stage_ok), start=1):
            if not ok:
                continue
            cond = candidate.sigma_0 - st.sigma_0t @ np.linalg.solve(
                st.sigma_t, st.sigma_t0
            )
            if not la.is_pd(cond):
                ev = la.min_eig(cond)
                v.append(
                    Violation(
                        "NotPositiveDefinite",
                        f"stage {t} conditional noise covariance",
                        "conditional noise covariance at stage "
                        f"{t} is not positive definite (min eigenvalue {ev:.3e})",
                        stage=t,
                        eigenvalue=ev,
                    )
                )
    return v


def validate_model(candidate: GaussianScalableModel) -> GaussianScalableModel:
    """Return the model unchanged if every invariant holds.

    Raises ModelValidationError carrying the full violation list otherwise;
    use model_violations to inspect without raising.
    """
    violations = model_violations(candidate)
    if violations:
        raise ModelValidationError(violations)
    return candidate


def conditional_noise_cov(model: GaussianScalableModel, t: int) -> NDArray[np.float64]:
    """Covariance of W_0 given W_t: sigma_0 - sigma_0t sigma_t^{-1} sigma_t0."""
    st = model.stage(t)
    out = model.sigma_0 - st.sigma_0t @ np.linalg.solve(st.sigma_t, st.sigma_t0)
    return 0.5 * (out + out.T)


def check_omega_chain(
    model: GaussianScalableModel, chain: OmegaChain, tol: float = la.PSD_TOL
) -> ChainCheck:
    """Check 0 <= Omega_1 <= ... <= Omega_T <= conditional-noise-inverse cap.

    Returns feasibility up to eigenvalue tolerance together with the most
    negative eigenvalue seen across all difference matrices (so the caller
    can report the worst violation magnitude).
    """
    if chain.T != model.T:
        raise DimensionMismatch(
            f"chain has {chain.T} stages, model has {model.T}"
        )
    if chain.m != model.m:
        raise DimensionMismatch(f"chain dimension {chain.m}, model {model.m}")

    worst = np.inf
    prev = np.zeros((model.m, model.m))
    for om in chain.omegas:
        worst = min(worst, la.min_eig(om - prev))
        prev = om
    cap = la.inv_spd(conditional_noise_cov(model, model.T))
    worst = min(worst, la.min_eig(cap - chain.omegas[-1]))
    return ChainCheck(ok=bool(worst >= -tol), min_eigenvalue=float(worst))
