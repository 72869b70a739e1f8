"""Finite-alphabet testbed for the variational objective.

Everything here is exact enumeration over small alphabets (at most 8
symbols per variable): the weighted objective
L = I(U_T; Y) + sum_t beta_t H(X | U_t), its variational upper bound
with free decoders Q(x|u_t) and a free prior Q(u_T), and the optimal Q
at which the bound is tight. The point of the module is to certify the
bound and the tightness numerically, independent of any sampling or
neural machinery, so all quantities are computed from full joint tables.

Only the stage-T prior enters the bound; that asymmetry is deliberate
and mirrors the printed form of the bound. All information quantities
are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from .errors import DimensionMismatch, FormatError, InvalidDistribution

__all__ = [
    "MAX_ALPHABET",
    "DiscreteIBInstance",
    "VariationalQ",
    "VariationalValue",
    "exact_objective",
    "variational_objective",
    "optimal_Q",
    "mutual_information_uT",
    "conditional_entropy_x",
    "marginal_y",
    "marginal_u",
    "joint_xu",
    "joint_yuT",
    "kl_prior_term",
    "cross_entropy_term",
    "kl_bits",
    "entropy_bits",
    "random_instance",
    "random_q",
    "save_instance",
    "load_instance",
    "instance_to_text",
    "instance_from_text",
]

MAX_ALPHABET = 8
_SUM_TOL = 1e-12


def _freeze(a: NDArray) -> NDArray[np.float64]:
    out = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    out.setflags(write=False)
    return out


def _check_pmf_rows(table: NDArray, what: str, axis_from: int = 1) -> None:
    if float(table.min(initial=0.0)) < 0.0:
        raise InvalidDistribution(f"{what} has negative entries")
    sums = table.sum(axis=tuple(range(axis_from, table.ndim)))
    if np.any(np.abs(sums - 1.0) > _SUM_TOL):
        worst = float(np.max(np.abs(sums - 1.0)))
        raise InvalidDistribution(
            f"{what} rows must sum to 1 (worst deviation {worst:.2e})"
        )


@dataclass(frozen=True)
class DiscreteIBInstance:
    """Joint source pmf plus a stochastic multi-stage encoder.

    joint_xy: (|X|, |Y|) pmf of the hidden variable and the observation.
    encoder:  (|Y|, |U_1|, ..., |U_T|) table of P(u_1..u_T | y).
    beta:     per-stage nonnegative weights.

    The descriptions depend on X only through Y, so the full joint is
    joint_xy[x, y] * encoder[y, u_1, ..., u_T].
    """

    joint_xy: NDArray[np.float64]
    encoder: NDArray[np.float64]
    beta: tuple[float, ...]

    def __post_init__(self):
        joint = _freeze(self.joint_xy)
        enc = _freeze(self.encoder)
        object.__setattr__(self, "joint_xy", joint)
        object.__setattr__(self, "encoder", enc)
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if joint.ndim != 2 or enc.ndim < 2:
            raise DimensionMismatch(
                "joint_xy must be 2-d and encoder ndim must be >= 2"
            )
        if enc.shape[0] != joint.shape[1]:
            raise DimensionMismatch(
                f"encoder has {enc.shape[0]} rows but |Y| = {joint.shape[1]}"
            )
        for size in joint.shape + enc.shape:
            if not 1 <= size <= MAX_ALPHABET:
                raise DimensionMismatch(
                    f"alphabet sizes must be in 1..{MAX_ALPHABET}, got {size}"
                )
        if len(self.beta) != self.T:
            raise DimensionMismatch(
                f"{len(self.beta)} weights for {self.T} stages"
            )
        if any(b < 0.0 for b in self.beta):
            raise InvalidDistribution("stage weights must be >= 0")
        if float(joint.min()) < 0.0:
            raise InvalidDistribution("joint_xy has negative entries")
        if abs(float(joint.sum()) - 1.0) > _SUM_TOL:
            raise InvalidDistribution("joint_xy must sum to 1")
        _check_pmf_rows(enc, "encoder")

    @property
    def nx(self) -> int:
        return self.joint_xy.shape[0]

    @property
    def ny(self) -> int:
        return self.joint_xy.shape[1]

    @property
    def T(self) -> int:
        return self.encoder.ndim - 1

    @property
    def u_sizes(self) -> tuple[int, ...]:
        return self.encoder.shape[1:]


@dataclass(frozen=True)
class VariationalQ:
    """Free decoders Q(x|u_t) (one (|U_t|, |X|) table per stage) and a
    free prior over the stage-T description."""

    decoders: tuple[NDArray[np.float64], ...]
    prior_uT: NDArray[np.float64]

    def __post_init__(self):
        decs = tuple(_freeze(d) for d in self.decoders)
        prior = _freeze(self.prior_uT)
        object.__setattr__(self, "decoders", decs)
        object.__setattr__(self, "prior_uT", prior)
        for t, d in enumerate(decs, start=1):
            if d.ndim != 2:
                raise DimensionMismatch(f"stage-{t} decoder must be 2-d")
            _check_pmf_rows(d, f"stage-{t} decoder")
        if prior.ndim != 1:
            raise DimensionMismatch("prior must be 1-d")
        if float(prior.min()) < 0.0:
            raise InvalidDistribution("prior has negative entries")
        if abs(float(prior.sum()) - 1.0) > _SUM_TOL:
            raise InvalidDistribution("prior must sum to 1")

    def matches(self, inst: DiscreteIBInstance) -> None:
        if len(self.decoders) != inst.T:
            raise DimensionMismatch(
                f"{len(self.decoders)} decoders for {inst.T} stages"
            )
        for t, d in enumerate(self.decoders, start=1):
            if d.shape != (inst.u_sizes[t - 1], inst.nx):
                raise DimensionMismatch(
                    f"stage-{t} decoder shape {d.shape} does not match "
                    f"({inst.u_sizes[t - 1]}, {inst.nx})"
                )
        if self.prior_uT.shape != (inst.u_sizes[-1],):
            raise DimensionMismatch("prior length does not match |U_T|")


def _plogp(p: NDArray) -> NDArray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(p > 0.0, p * np.log2(np.where(p > 0.0, p, 1.0)), 0.0)
    return out


def entropy_bits(p: NDArray) -> float:
    """Shannon entropy of a pmf (any shape) in bits; 0 log 0 = 0."""
    return float(-_plogp(np.asarray(p, dtype=np.float64)).sum())


def kl_bits(p: NDArray, q: NDArray) -> float:
    """KL divergence in bits; +inf when p puts mass where q does not."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise DimensionMismatch("KL arguments must have the same shape")
    mask = p > 0.0
    if np.any(q[mask] <= 0.0):
        return math.inf
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def _enc_marginal(inst: DiscreteIBInstance, t: int) -> NDArray:
    """P(u_t | y) as a (|Y|, |U_t|) table."""
    if not 1 <= t <= inst.T:
        raise DimensionMismatch(f"stage index {t} outside 1..{inst.T}")
    axes = tuple(a for a in range(1, inst.T + 1) if a != t)
    return inst.encoder.sum(axis=axes)


def marginal_y(inst: DiscreteIBInstance) -> NDArray[np.float64]:
    return inst.joint_xy.sum(axis=0)


def marginal_u(inst: DiscreteIBInstance, t: int) -> NDArray[np.float64]:
    return marginal_y(inst) @ _enc_marginal(inst, t)


def joint_xu(inst: DiscreteIBInstance, t: int) -> NDArray[np.float64]:
    """P(x, u_t) as an (|X|, |U_t|) table."""
    return inst.joint_xy @ _enc_marginal(inst, t)


def joint_yuT(inst: DiscreteIBInstance) -> NDArray[np.float64]:
    return marginal_y(inst)[:, None] * _enc_marginal(inst, inst.T)


def mutual_information_uT(inst: DiscreteIBInstance) -> float:
    """I(U_T; Y) in bits."""
    pyu = joint_yuT(inst)
    return (
        entropy_bits(pyu.sum(axis=1))
        + entropy_bits(pyu.sum(axis=0))
        - entropy_bits(pyu)
    )


def conditional_entropy_x(inst: DiscreteIBInstance, t: int) -> float:
    """H(X | U_t) in bits."""
    pxu = joint_xu(inst, t)
    return entropy_bits(pxu) - entropy_bits(pxu.sum(axis=0))


def exact_objective(inst: DiscreteIBInstance) -> float:
    """The weighted objective I(U_T;Y) + sum_t beta_t H(X|U_t), in bits."""
    total = mutual_information_uT(inst)
    for t in range(1, inst.T + 1):
        if inst.beta[t - 1] != 0.0:
            total += inst.beta[t - 1] * conditional_entropy_x(inst, t)
    return total


class VariationalValue(NamedTuple):
    """Bound value plus a flag for Q lacking support where P has mass
    (the bound is then genuinely infinite, not an error)."""

    bits: float
    support_mismatch: bool


def kl_prior_term(inst: DiscreteIBInstance, prior_uT: NDArray) -> float:
    """E_Y[ KL( P(u_T | y) || Q(u_T) ) ] in bits; may be +inf."""
    prior = np.asarray(prior_uT, dtype=np.float64)
    py = marginal_y(inst)
    enc_T = _enc_marginal(inst, inst.T)
    total = 0.0
    for y in range(inst.ny):
        if py[y] == 0.0:
            continue
        term = kl_bits(enc_T[y], prior)
        if math.isinf(term):
            return math.inf
        total += float(py[y]) * term
    return total


def cross_entropy_term(inst: DiscreteIBInstance, decoder: NDArray, t: int) -> float:
    """-E[ log2 Q(X | U_t) ] under the true joint, in bits; may be +inf."""
    q = np.asarray(decoder, dtype=np.float64)
    pxu = joint_xu(inst, t)  # (nx, nu)
    mask = pxu > 0.0
    qxu = q.T  # align to (nx, nu)
    if qxu.shape != pxu.shape:
        raise DimensionMismatch(
            f"stage-{t} decoder shape {q.shape} does not match "
            f"({pxu.shape[1]}, {pxu.shape[0]})"
        )
    if np.any(qxu[mask] <= 0.0):
        return math.inf
    out = -np.sum(pxu[mask] * np.log2(qxu[mask]))
    return float(out)


def variational_objective(
    inst: DiscreteIBInstance, q: VariationalQ
) -> VariationalValue:
    """The upper bound KL(P_{U_T|Y} || Q_{U_T}) - sum_t beta_t E[log Q(X|U_t)].

    Zero-weight stages are skipped entirely, so a support mismatch there
    neither raises nor inflates the bound.
    """
    q.matches(inst)
    mismatch = False
    total = kl_prior_term(inst, q.prior_uT)
    if math.isinf(total):
        mismatch = True
    for t in range(1, inst.T + 1):
        if inst.beta[t - 1] == 0.0:
            continue
        term = cross_entropy_term(inst, q.decoders[t - 1], t)
        if math.isinf(term):
            mismatch = True
            total = math.inf
        elif not math.isinf(total):
            total += inst.beta[t - 1] * term
    return VariationalValue(bits=float(total), support_mismatch=mismatch)


def optimal_Q(inst: DiscreteIBInstance) -> VariationalQ:
    """The Q at which the bound meets the objective: the decoders are the
    true posteriors P(x|u_t) and the prior is the true marginal P(u_T).
    Descriptions with zero probability get a uniform (irrelevant) row."""
    decoders = []
    for t in range(1, inst.T + 1):
        pxu = joint_xu(inst, t)
        pu = pxu.sum(axis=0)
        post = np.full((inst.u_sizes[t - 1], inst.nx), 1.0 / inst.nx)
        live = pu > 0.0
        post[live] = (pxu[:, live] / pu[live]).T
        decoders.append(post)
    return VariationalQ(decoders=tuple(decoders), prior_uT=marginal_u(inst, inst.T))


def random_instance(
    seed_or_rng,
    t: int | None = None,
    max_alphabet: int = 4,
    concentration: float = 1.0,
) -> DiscreteIBInstance:
    """Random full-support instance with alphabets in 2..max_alphabet."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    if not 2 <= max_alphabet <= MAX_ALPHABET:
        raise DimensionMismatch(f"max_alphabet must be in 2..{MAX_ALPHABET}")
    nx = int(rng.integers(2, max_alphabet + 1))
    ny = int(rng.integers(2, max_alphabet + 1))
    T = int(rng.integers(1, 3)) if t is None else int(t)
    if T < 1:
        raise DimensionMismatch("need at least one stage")
    u_sizes = tuple(int(rng.integers(2, max_alphabet + 1)) for _ in range(T))
    joint = rng.dirichlet(np.full(nx * ny, concentration)).reshape(nx, ny)
    nu = int(np.prod(u_sizes))
    enc = rng.dirichlet(np.full(nu, concentration), size=ny).reshape(
        (ny,) + u_sizes
    )
    beta = tuple(float(b) for b in rng.uniform(0.2, 2.0, size=T))
    return DiscreteIBInstance(joint_xy=joint, encoder=enc, beta=beta)


def random_q(inst: DiscreteIBInstance, seed_or_rng) -> VariationalQ:
    """Random full-support Q of the right shape for the instance."""
    rng = (
        seed_or_rng
        if isinstance(seed_or_rng, np.random.Generator)
        else np.random.default_rng(seed_or_rng)
    )
    decoders = tuple(
        rng.dirichlet(np.ones(inst.nx), size=inst.u_sizes[t]) for t in range(inst.T)
    )
    prior = rng.dirichlet(np.ones(inst.u_sizes[-1]))
    return VariationalQ(decoders=decoders, prior_uT=prior)


# Plain-text round-trip format for regression fixtures. Floats are written
# with repr so load(save(x)) == x exactly.

_MAGIC = "discrete-ib v1"


def instance_to_text(inst: DiscreteIBInstance) -> str:
    lines = [_MAGIC]
    lines.append(f"x {inst.nx}")
    lines.append(f"y {inst.ny}")
    lines.append("u " + " ".join(str(s) for s in inst.u_sizes))
    lines.append("beta " + " ".join(repr(b) for b in inst.beta))
    lines.append("joint")
    for row in inst.joint_xy:
        lines.append(" ".join(repr(float(v)) for v in row))
    lines.append("encoder")
    flat = inst.encoder.reshape(inst.ny, -1)
    for row in flat:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def _parse_floats(text: str, lineno: int, expect: int) -> list[float]:
    parts = text.split()
    if len(parts) != expect:
        raise FormatError(
            f"line {lineno}: expected {expect} values, got {len(parts)}"
        )
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise FormatError(f"line {lineno}: {exc}") from exc


def instance_from_text(text: str) -> DiscreteIBInstance:
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise FormatError(f"line 1: expected header {_MAGIC!r}")

    def field(i: int, key: str) -> list[str]:
        if i >= len(lines):
            raise FormatError(f"line {i + 1}: missing {key!r} line")
        parts = lines[i].split()
        if not parts or parts[0] != key:
            raise FormatError(f"line {i + 1}: expected {key!r} line")
        return parts[1:]

    try:
        nx = int(field(1, "x")[0])
        ny = int(field(2, "y")[0])
        u_sizes = tuple(int(v) for v in field(3, "u"))
    except (ValueError, IndexError) as exc:
        raise FormatError(f"bad alphabet header: {exc}") from exc
    if not u_sizes:
        raise FormatError("line 4: need at least one stage size")
    beta = tuple(_parse_floats(" ".join(field(4, "beta")), 5, len(u_sizes)))
    if len(lines) < 6 or lines[5].strip() != "joint":
        raise FormatError("line 6: expected 'joint'")
    joint_rows = [_parse_floats(lines[6 + i], 7 + i, ny) for i in range(nx)]
    enc_at = 6 + nx
    if len(lines) <= enc_at or lines[enc_at].strip() != "encoder":
        raise FormatError(f"line {enc_at + 1}: expected 'encoder'")
    nu = int(np.prod(u_sizes))
    enc_rows = []
    for i in range(ny):
        ln = enc_at + 1 + i
        if ln >= len(lines):
            raise FormatError(f"line {ln + 1}: missing encoder row")
        enc_rows.append(_parse_floats(lines[ln], ln + 1, nu))
    try:
        return DiscreteIBInstance(
            joint_xy=np.array(joint_rows),
            encoder=np.array(enc_rows).reshape((ny,) + u_sizes),
            beta=beta,
        )
    except (InvalidDistribution, DimensionMismatch) as exc:
        raise FormatError(f"inconsistent tables: {exc}") from exc


def save_instance(inst: DiscreteIBInstance, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(instance_to_text(inst))


def load_instance(path) -> DiscreteIBInstance:
    try:
        with open(path, "r", encoding="ascii") as fh:
            text = fh.read()
    except OSError as exc:
        raise FormatError(str(exc)) from exc
    return instance_from_text(text)
