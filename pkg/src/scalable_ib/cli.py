"""Command-line surface.

Subcommands:

* ``validate``        check a model config and report violations
* ``fig2``            sweep the symmetric two-stage scalar tradeoff to CSV
* ``oracle``          cross-check the region formulas against the exact
                      joint-covariance oracle and a Monte-Carlo estimate
* ``discrete-check``  run the finite-alphabet bound/equality sweeps

Exit codes: 0 success, 1 usage or parse error, 2 validation failure,
3 infeasible request, 4 verification failure. The default seed is 0,
overridable by the SIB_SEED environment variable and the --seed flag.
All outputs are deterministic for a fixed config + seed.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from importlib import resources

import numpy as np

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import discrete, oracle
from .errors import (
    DimensionMismatch,
    FeasibilityError,
    FormatError,
    InvalidDistribution,
    ModelValidationError,
    NonConvergence,
    ParseError,
    SigmaOutOfRange,
    SingularConditioning,
)
from .frontier import (
    ScalarTwoStageParams,
    max_delta1_given,
    max_delta2_given,
    sigma_si_feasible_range,
)
from .model import (
    GaussianScalableModel,
    OmegaChain,
    Stage,
    Violation,
    model_violations,
    validate_model,
)
from .region import min_cum_rate, relevance_bound

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_VERIFY = 4

_FLOAT_FMT = "%.12g"


def _fmt(x: float) -> str:
    return _FLOAT_FMT % x


def default_seed() -> int:
    raw = os.environ.get("SIB_SEED", "0")
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"SIB_SEED must be an integer, got {raw!r}") from exc


class _UsageError(Exception):
    """Bad flags or argument values; mapped to exit status 1."""


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; remap to 1."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}")


# -- config ------------------------------------------------------------------


def bundled_config_path():
    return resources.files("scalable_ib").joinpath("configs", "fig2.cfg")


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if "model" not in data:
        raise ParseError(f"{path}: missing required key 'model'")
    return data


def _as_matrix(value, key: str) -> np.ndarray:
    """Scalar, row-major flat list (square length), or list of rows."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return np.array([[float(value)]])
    if isinstance(value, list) and value:
        if all(isinstance(v, (int, float)) for v in value):
            side = math.isqrt(len(value))
            if side * side != len(value):
                raise ParseError(
                    f"{key}: flat matrix needs a square number of entries, "
                    f"got {len(value)}"
                )
            return np.array(value, dtype=float).reshape(side, side)
        if all(isinstance(v, list) for v in value):
            try:
                return np.array(value, dtype=float)
            except ValueError as exc:
                raise ParseError(f"{key}: ragged matrix rows ({exc})") from exc
    raise ParseError(f"{key}: expected a number or a row-major matrix")


def build_model(cfg: dict, source: str = "config") -> GaussianScalableModel:
    mdl = cfg["model"]
    if not isinstance(mdl, dict):
        raise ParseError(f"{source}: 'model' must be a table")

    def need(key):
        if key not in mdl:
            raise ParseError(f"{source}: missing key 'model.{key}'")
        return mdl[key]

    sigma_x = _as_matrix(need("sigma_x"), "model.sigma_x")
    sigma_0 = _as_matrix(need("sigma_0"), "model.sigma_0")
    stages_cfg = need("stages")
    if not isinstance(stages_cfg, list) or not stages_cfg:
        raise ParseError(f"{source}: 'model.stages' must be a non-empty array")
    stages = []
    for i, sc in enumerate(stages_cfg, start=1):
        if not isinstance(sc, dict) or "sigma_t" not in sc:
            raise ParseError(f"{source}: missing key 'model.stages[{i}].sigma_t'")
        st = _as_matrix(sc["sigma_t"], f"model.stages[{i}].sigma_t")
        if "sigma_0t" in sc and "gamma" in sc:
            raise ParseError(
                f"{source}: 'model.stages[{i}]' sets both sigma_0t and gamma"
            )
        if "sigma_0t" in sc:
            s0t = _as_matrix(sc["sigma_0t"], f"model.stages[{i}].sigma_0t")
        elif "gamma" in sc:
            s0t = float(sc["gamma"]) * st
        else:
            raise ParseError(
                f"{source}: 'model.stages[{i}]' needs 'sigma_0t' or 'gamma'"
            )
        stages.append(Stage(st, s0t))
    try:
        model = GaussianScalableModel(sigma_x, sigma_0, tuple(stages))
    except DimensionMismatch as exc:
        raise ParseError(f"{source}: {exc}") from exc
    for key, want in (("m", model.m), ("T", model.T)):
        if key in mdl and int(mdl[key]) != want:
            raise ParseError(
                f"{source}: 'model.{key}' = {mdl[key]} conflicts with the "
                f"matrices ({want})"
            )
    return model


def _scalar_params(model: GaussianScalableModel, sigma_si: float) -> ScalarTwoStageParams:
    """Scalar symmetric two-stage parameters from a validated model, with
    the side-information noise replaced by the requested sweep value."""

    def unsupported(reason):
        return ModelValidationError(
            [Violation("UnsupportedShape", "model", f"fig2 needs {reason}")]
        )

    if model.m != 1 or model.T != 2:
        raise unsupported(
            f"a scalar two-stage model (got m = {model.m}, T = {model.T})"
        )
    gammas = []
    for t in (1, 2):
        st = model.stage(t)
        gammas.append(float(st.sigma_0t[0, 0]) / float(st.sigma_t[0, 0]))
    if abs(gammas[0] - gammas[1]) > 1e-9:
        raise unsupported(
            f"a common gamma across both stages (got {gammas[0]:.6g} "
            f"and {gammas[1]:.6g})"
        )
    try:
        return ScalarTwoStageParams(
            sigma_x=float(model.sigma_x[0, 0]),
            sigma_0=float(model.sigma_0[0, 0]),
            sigma_si=float(sigma_si),
            gamma=gammas[0],
        )
    except ValueError as exc:
        # Domain failures here are sigma_si at or past the boundary where
        # the side information stops carrying noise.
        raise SigmaOutOfRange(str(exc)) from exc


# -- commands ----------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = load_config(args.config)
    model = build_model(cfg, source=args.config)
    violations = model_violations(model)
    if violations:
        print(f"invalid model ({len(violations)} violation(s)):")
        for v in violations:
            print(f"  {v.kind}: {v.message}")
        return EXIT_VALIDATION
    print(f"valid model: m={model.m} T={model.T}")
    return EXIT_OK


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _gnuplot_script(csv_path: str, sigma_values, panel: str) -> str:
    values = " ".join(_fmt(s) for s in sigma_values)
    ylabel = "delta_1" if panel == "a" else "delta_2"
    return "\n".join(
        [
            f"# companion plot script for {csv_path}",
            "set datafile separator ','",
            "set xlabel 'R (bits)'",
            f"set ylabel '{ylabel} (bits)'",
            "set key bottom right",
            f"values = '{values}'",
            "plot for [s in values] "
            f"'{csv_path}' using (strcol(1) eq s ? $2 : NaN):3 "
            "with lines title 'sigma_si='.s",
            "",
        ]
    )


def cmd_fig2(args) -> int:
    cfg = load_config(args.config) if args.config else load_bundled_config()
    source = args.config or "fig2.cfg"
    model = validate_model(build_model(cfg, source=source))
    sigma_list = args.sigma_si or [float(model.stage(1).sigma_t[0, 0])]
    delta1 = args.delta1
    delta2 = args.delta2
    # Probe with the config's own (validated) noise value; sweep values are
    # range-checked before any params object is built from them.
    probe = _scalar_params(model, float(model.stage(1).sigma_t[0, 0]))
    lo, hi = sigma_si_feasible_range(
        probe.sigma_x, probe.sigma_0, probe.gamma, delta1, delta2
    )
    for s in sigma_list:
        if not lo - 1e-9 <= s <= hi + 1e-9:
            raise SigmaOutOfRange(
                f"sigma_si = {s:g} outside the feasible range "
                f"[{lo:.6g}, {hi:.6g}] for delta_1 = {delta1:g}, "
                f"delta_2 = {delta2:g}"
            )
    rows = []
    for s in sigma_list:
        params = _scalar_params(model, s)
        if args.panel == "a":
            om2 = params.omega_for_delta(delta2)
            r_min = 0.5 * params.rate_of(om2, delta2)
        else:
            r_min = max_delta2_given(params, delta1).r_sym
        if not math.isfinite(r_min):
            raise SigmaOutOfRange(
                f"sigma_si = {s:g}: the fixed target is reachable only in "
                "the boundary limit (infinite rate)"
            )
        for r in np.linspace(r_min, r_min + args.span, args.points):
            if args.panel == "a":
                delta = max_delta1_given(params, delta2, float(r)).delta1
            else:
                delta = max_delta2_given(params, delta1, float(r)).delta2
            rows.append([_fmt(s), _fmt(float(r)), _fmt(delta)])
    _write_csv(args.out, ["sigma_si", "R", "delta"], rows)
    print(f"wrote {len(rows)} rows to {args.out}")
    if args.gnuplot:
        with open(args.gnuplot, "w", encoding="ascii") as fh:
            fh.write(_gnuplot_script(args.out, sigma_list, args.panel))
        print(f"wrote plot script to {args.gnuplot}")
    return EXIT_OK


def load_bundled_config() -> dict:
    with bundled_config_path().open("rb") as fh:
        return tomllib.load(fh)


def _parse_omega(spec: str, model: GaussianScalableModel) -> OmegaChain:
    if spec.startswith("@"):
        path = spec[1:]
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from exc
        if "omega" not in data or not isinstance(data["omega"], list):
            raise ParseError(f"{path}: missing 'omega' array")
        mats = [
            _as_matrix(entry, f"omega[{i + 1}]")
            for i, entry in enumerate(data["omega"])
        ]
        return OmegaChain(tuple(mats))
    try:
        values = [float(v) for v in spec.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ParseError(f"--omega: {exc}") from exc
    if not values:
        raise ParseError("--omega: no values given")
    if model.m != 1:
        raise DimensionMismatch(
            "scalar --omega values need a scalar model; use @file.toml "
            f"for m = {model.m}"
        )
    return OmegaChain.from_scalars(*values)


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    model = validate_model(build_model(cfg, source=args.config))
    chain = _parse_omega(args.omega, model)

    quantities = []
    groups = []
    for t in range(1, model.T + 1):
        us = tuple(f"u{s}" for s in range(1, t + 1))
        rel = relevance_bound(model, chain, t)
        quantities.append((f"delta_{t}", rel, ("x", us + (f"y{t}",))))
        rate = min_cum_rate(model, chain, t, rel)
        quantities.append((f"rate_{t}", rate, ("y", us, (f"y{t}",))))

    joint = oracle.build_joint_covariance(model, chain, eps_shift=True)
    exact_values = [
        oracle.mi_logdet(joint, *grp) for _, _, grp in quantities
    ]
    estimates = oracle.mc_mi_multi(
        model,
        chain,
        [grp for _, _, grp in quantities],
        n_samples=args.samples,
        seed=args.seed,
        eps_shift=True,
    )

    rows = []
    all_ok = True
    for (name, theorem, _), exact, est in zip(quantities, exact_values, estimates):
        exact_ok = abs(theorem - exact) <= args.tolerance
        mc_ok = abs(est.bits - exact) <= 3.0 * est.stderr
        ok = exact_ok and mc_ok
        all_ok &= ok
        rows.append(
            [
                name,
                _fmt(theorem),
                _fmt(exact),
                _fmt(est.bits),
                _fmt(est.stderr),
                "pass" if ok else "fail",
            ]
        )
    _write_csv(args.out, ["quantity", "theorem", "exact", "mc", "stderr", "pass"], rows)
    status = "all pass" if all_ok else "FAILURES"
    print(
        f"wrote {len(rows)} rows to {args.out} ({status}; "
        f"{args.samples} samples, seed {args.seed}, backend {estimates[0].backend})"
    )
    if joint.shifted:
        print("note: boundary chain nudged into the interior for sampling")
    return EXIT_OK if all_ok else EXIT_VERIFY


def cmd_discrete_check(args) -> int:
    if args.instances <= 0:
        raise _UsageError("discrete-check: --instances must be positive")
    if args.draws <= 0:
        raise _UsageError("discrete-check: --draws must be positive")
    rng = np.random.default_rng(args.seed)
    worst_equality = 0.0
    worst_gap = math.inf
    infinite_bounds = 0
    violations = 0
    for _ in range(args.instances):
        inst = discrete.random_instance(rng, max_alphabet=args.max_alphabet)
        exact = discrete.exact_objective(inst)
        tight = discrete.variational_objective(inst, discrete.optimal_Q(inst))
        worst_equality = max(worst_equality, abs(tight.bits - exact))
        for _ in range(args.draws):
            q = discrete.random_q(inst, rng)
            value = discrete.variational_objective(inst, q)
            if math.isinf(value.bits):
                infinite_bounds += 1
                continue
            gap = value.bits - exact
            worst_gap = min(worst_gap, gap)
            if gap < -1e-12:
                violations += 1
        # one adversarial draw per instance: a decoder zero where P has mass
        q = discrete.random_q(inst, rng)
        dec = np.array(q.decoders[0])
        dec[0] = 0.0
        dec[0, -1] = 1.0
        q_bad = discrete.VariationalQ((dec,) + q.decoders[1:], q.prior_uT)
        value = discrete.variational_objective(inst, q_bad)
        if math.isinf(value.bits):
            infinite_bounds += 1
        elif value.bits - exact < -1e-12:
            violations += 1
    print(f"instances: {args.instances}  draws per instance: {args.draws}")
    print(f"max |L_vb(Q*) - L| = {worst_equality:.3e} (tolerance 1e-12)")
    print(f"min finite bound gap = {worst_gap:.3e} (must be >= -1e-12)")
    print(f"infinite-bound cases (support mismatch): {infinite_bounds}")
    ok = worst_equality <= 1e-12 and violations == 0
    print("all pass" if ok else f"FAILURES: {violations} bound violations")
    return EXIT_OK if ok else EXIT_VERIFY


# -- entry point -------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sib", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a model config")
    p.add_argument("--config", required=True, help="TOML model config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("fig2", help="sweep the scalar two-stage tradeoff")
    p.add_argument("--panel", choices=("a", "b"), required=True)
    p.add_argument(
        "--sigma-si",
        type=_float_list,
        default=None,
        help="comma-separated sigma_si sweep values (default: config value)",
    )
    p.add_argument("--config", default=None, help="model config (default: bundled)")
    p.add_argument("--out", default="fig2.csv")
    p.add_argument("--delta1", type=float, default=1.5, help="panel-b fixed target")
    p.add_argument("--delta2", type=float, default=2.0, help="panel-a fixed target")
    p.add_argument("--points", type=_positive_int, default=200)
    p.add_argument("--span", type=float, default=2.0, help="rate sweep width in bits")
    p.add_argument("--gnuplot", default=None, help="also write a plot script here")
    p.set_defaults(func=cmd_fig2)

    p = sub.add_parser("oracle", help="verify formulas against the exact oracle")
    p.add_argument("--config", required=True)
    p.add_argument(
        "--omega",
        required=True,
        help="comma-separated scalars (one per stage) or @chain.toml",
    )
    p.add_argument("--samples", type=_positive_int, default=10**6)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--out", default="oracle.csv")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("discrete-check", help="finite-alphabet bound sweeps")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--instances", type=int, default=100)
    p.add_argument("--draws", type=int, default=10)
    p.add_argument("--max-alphabet", type=int, default=4)
    p.set_defaults(func=cmd_discrete_check)
    return parser


def _float_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
        if hasattr(args, "seed") and args.seed is None:
            args.seed = default_seed()
        return args.func(args)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse --help
        return 0 if exc.code in (0, None) else int(exc.code)
    except (ParseError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelValidationError as exc:
        print(f"invalid model ({len(exc.violations)} violation(s)):", file=sys.stderr)
        for v in exc.violations:
            print(f"  {v.kind}: {v.message}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DimensionMismatch, InvalidDistribution) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FeasibilityError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (NonConvergence, SingularConditioning) as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
