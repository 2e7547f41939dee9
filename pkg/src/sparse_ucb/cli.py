"""Command-line front end: ``simulate``, ``lower-bound`` and ``presets list``.

Settings come from an optional flat config file (one ``key = value`` per
line, ``#`` starts a comment) and from flags; flags override the file.

Exit codes: 0 success, 2 bad configuration, 3 the computation refused the
instance, 4 output could not be written.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import lemma_diagnostics
from .errors import ConfigError, NonzeroBadArm, ParseError, SparseBanditError, ValidationError
from .experiment import EVENT_NAMES, POLICIES, AggregateResult, ExperimentConfig, run_experiment
from .instance import SparseBanditInstance, equal_gap_instance, validate_instance
from .lower_bound import (
    classical_lower_bound,
    explicit_lower_bound,
    generalized_lower_bound,
    irrelevance_threshold,
    sparsity_regime,
)
from .policies import ForceLogVariant, PolicyConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MODEL = 3
EXIT_IO = 4

REGRET_HEADER = ("t", "policy", "mean_regret", "stderr", "replications")
EVENTS_HEADER = ("policy", "arm", "original_arm", "mean", "good") + EVENT_NAMES
LEMMAS_HEADER = ("lemma", "arm", "empirical_mean", "stderr", "bound", "passed")
BOUND_HEADER = (
    "regime",
    "k",
    "lambda",
    "value",
    "classical_value",
    "irrelevance_threshold",
    "lp_value",
    "lp_gap",
)

# name -> (d, s, mu1, delta_s)
PRESETS: dict[str, tuple[int, int, float, float]] = {
    "fig2-left": (15, 7, 0.9, 0.7),
    "fig2-mid": (15, 7, 0.9, 0.25),
    "fig2-right": (15, 7, 0.9, 0.1),
    "fig3-left": (15, 12, 0.9, 0.3),
    "fig3-mid": (15, 6, 0.9, 0.3),
    "fig3-right": (15, 2, 0.9, 0.3),
}

INSTANCE_KEYS = ("d", "s", "mu1", "delta_s", "means")
KEYS = INSTANCE_KEYS + (
    "policy",
    "horizon",
    "reps",
    "seed",
    "out",
    "preset",
    "epsilon",
    "jobs",
    "forcelog",
)
ALIASES = {"delta-s": "delta_s", "replications": "reps", "base_seed": "seed"}
POLICY_CHOICES = POLICIES + ("both",)


@dataclass
class RunSpec:
    instance: SparseBanditInstance
    policies: tuple[str, ...] = POLICIES
    horizon: int = 10_000
    reps: int = 100
    seed: int = 0
    out: Path = Path(".")
    preset: str | None = None
    epsilons: list[float] = field(default_factory=list)
    jobs: int = 1
    forcelog: ForceLogVariant = ForceLogVariant.ANYTIME

    def experiment(self, policy: str) -> ExperimentConfig:
        pcfg = PolicyConfig(
            s=self.instance.s,
            forcelog_variant=self.forcelog,
            horizon=self.horizon if self.forcelog is ForceLogVariant.HORIZON_AWARE else None,
        )
        return ExperimentConfig(
            instance=self.instance,
            policy=policy,
            horizon=self.horizon,
            replications=self.reps,
            base_seed=self.seed,
            policy_config=pcfg,
        )


def read_config_file(path: str | Path) -> dict[str, tuple[str, int]]:
    """Parse a ``key = value`` file into ``{key: (value, line_number)}``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"{path}: cannot read config file ({exc.strerror})") from exc
    values: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in KEYS:
            raise ParseError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ParseError(f"{path}:{lineno}: key {key!r} repeated (first on line {values[key][1]})")
        values[key] = (value, lineno)
    return values


def _convert(key: str, value, where: str):
    if not isinstance(value, str):
        return value
    try:
        if key in ("d", "s", "horizon", "reps", "seed", "jobs"):
            return int(value)
        if key in ("mu1", "delta_s"):
            return float(value)
        if key == "means":
            return [float(v) for v in value.replace(",", " ").split()]
        if key == "epsilon":
            return parse_epsilons(value.replace(",", " ").split())
    except ValueError as exc:
        raise ParseError(f"{where}: field {key!r}: {exc}") from exc
    return value


def parse_epsilons(tokens) -> list[float]:
    """Each token is a number or a ``lo:hi:n`` linear grid."""
    out: list[float] = []
    for tok in tokens:
        if ":" in tok:
            parts = tok.split(":")
            if len(parts) != 3:
                raise ValueError(f"grid {tok!r} must be lo:hi:n")
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
            if n < 1:
                raise ValueError(f"grid {tok!r} needs n >= 1")
            out.extend(np.linspace(lo, hi, n).tolist())
        else:
            out.append(float(tok))
    return out


def _resolve_instance(v: dict, preset: str | None) -> SparseBanditInstance:
    given = [k for k in INSTANCE_KEYS if v.get(k) is not None]
    if preset is not None:
        if preset not in PRESETS:
            raise ValidationError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        if given:
            raise ValidationError(f"preset {preset!r} cannot be combined with explicit {', '.join(given)}")
        return equal_gap_instance(*PRESETS[preset])
    try:
        if v.get("means") is not None:
            extra = [k for k in ("d", "mu1", "delta_s") if v.get(k) is not None]
            if extra:
                raise ValidationError(f"'means' cannot be combined with {', '.join(extra)}")
            means = v["means"]
            s = v.get("s")
            if s is None:
                s = int(np.count_nonzero(np.asarray(means) > 0.0))
            return validate_instance(means, s)
        missing = [k for k in ("d", "s", "mu1") if v.get(k) is None]
        if missing:
            raise ValidationError(f"instance needs a preset, 'means', or d/s/mu1/delta_s (missing {', '.join(missing)})")
        d, s, mu1 = v["d"], v["s"], v["mu1"]
        delta_s = v.get("delta_s")
        if delta_s is None:
            if s > 1:
                raise ValidationError("delta_s is required when s > 1")
            delta_s = 0.0
        if not mu1 > 0.0:
            raise ValidationError("mu1 must be > 0")
        if s > 1 and not 0.0 <= delta_s < mu1:
            raise ValidationError("delta_s must lie in [0, mu1) so that every good arm has a positive mean")
        return equal_gap_instance(d, s, mu1, delta_s)
    except ConfigError:
        raise
    except (SparseBanditError, ValueError) as exc:
        raise ValidationError(str(exc)) from exc


def resolve_spec(file_values: dict | None = None, flags: dict | None = None) -> RunSpec:
    """Merge config-file values and flags (flags win) into a validated RunSpec."""
    merged: dict = {}
    for key, (value, lineno) in (file_values or {}).items():
        merged[key] = _convert(key, value, f"line {lineno}")
    for key, value in (flags or {}).items():
        if value is not None:
            merged[key] = _convert(key, value, f"--{key.replace('_', '-')}")

    instance = _resolve_instance(merged, merged.get("preset"))
    policy = merged.get("policy", "both")
    if policy not in POLICY_CHOICES:
        raise ValidationError(f"policy must be one of {POLICY_CHOICES}, got {policy!r}")
    try:
        forcelog = ForceLogVariant(merged.get("forcelog", "anytime"))
    except ValueError:
        raise ValidationError("forcelog must be 'anytime' or 'horizon'") from None
    spec = RunSpec(
        instance=instance,
        policies=POLICIES if policy == "both" else (policy,),
        horizon=merged.get("horizon", 10_000),
        reps=merged.get("reps", 100),
        seed=merged.get("seed", 0),
        out=Path(merged.get("out", ".")),
        preset=merged.get("preset"),
        epsilons=list(merged.get("epsilon", [])),
        jobs=merged.get("jobs", 1),
        forcelog=forcelog,
    )
    for name in ("horizon", "reps", "jobs"):
        if getattr(spec, name) < 1:
            raise ValidationError(f"{name} must be >= 1")
    if spec.seed < 0:
        raise ValidationError("seed must be nonnegative")
    if any(not (e > 0.0 and math.isfinite(e)) for e in spec.epsilons):
        raise ValidationError("every epsilon must be a positive finite number")
    return spec


def parse_config(path: str | Path | None = None, flags: dict | None = None) -> RunSpec:
    return resolve_spec(read_config_file(path) if path is not None else None, flags)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def regret_rows(policy: str, agg: AggregateResult):
    for t, m, se in zip(agg.checkpoints, agg.mean_regret, agg.stderr_regret):
        yield int(t), policy, float(m), float(se), agg.replications


def event_rows(policy: str, agg: AggregateResult, instance: SparseBanditInstance):
    for i in range(instance.d):
        yield (
            policy,
            i + 1,
            instance.original_label(i),
            float(instance.means[i]),
            bool(instance.good[i]),
            *(float(x) for x in agg.mean_event_counts[i]),
        )


def cmd_simulate(spec: RunSpec, out=None) -> int:
    out = out or sys.stdout
    results = {}
    for policy in spec.policies:
        results[policy] = run_experiment(spec.experiment(policy), n_jobs=spec.jobs)
    lemmas = []
    sparse = results.get("sparse-ucb")
    if sparse is not None and spec.forcelog is ForceLogVariant.ANYTIME:
        lemmas = lemma_diagnostics(sparse, spec.instance, spec.horizon)

    spec.out.mkdir(parents=True, exist_ok=True)
    _write_csv(
        spec.out / "regret.csv",
        REGRET_HEADER,
        (row for p, agg in results.items() for row in regret_rows(p, agg)),
    )
    _write_csv(
        spec.out / "events.csv",
        EVENTS_HEADER,
        (row for p, agg in results.items() for row in event_rows(p, agg, spec.instance)),
    )
    _write_csv(
        spec.out / "lemmas.csv",
        LEMMAS_HEADER,
        ((c.lemma, None if c.arm is None else c.arm + 1, c.empirical_mean, c.stderr, c.bound, c.passed) for c in lemmas),
    )

    print(f"instance: d={spec.instance.d} s={spec.instance.s} means={spec.instance.means.tolist()}", file=out)
    for p, agg in results.items():
        print(
            f"{p:>10}: final mean regret {agg.mean_regret[-1]:.2f} +/- {agg.stderr_regret[-1]:.2f}"
            f" over {agg.replications} runs at T={agg.horizon}",
            file=out,
        )
    failed = [c for c in lemmas if not c.passed]
    if lemmas:
        print(f"decomposition checks: {len(lemmas) - len(failed)}/{len(lemmas)} within bound + 3 stderr", file=out)
    print(f"wrote {spec.out / 'regret.csv'}, events.csv, lemmas.csv", file=out)
    return EXIT_OK


def _bound_row(instance: SparseBanditInstance, epsilon: float | None):
    res = explicit_lower_bound(instance) if epsilon is None else generalized_lower_bound(instance, epsilon)
    try:
        thr = irrelevance_threshold(instance.d, instance.s, instance.mu_star)
    except SparseBanditError:
        thr = None
    return (
        res.regime.value,
        res.k_label,
        res.lam,
        res.value,
        classical_lower_bound(instance),
        thr,
        res.lp_value,
        abs(res.value - res.lp_value),
    )


def cmd_lower_bound(spec: RunSpec, out=None) -> int:
    out = out or sys.stdout
    inst = spec.instance
    row = _bound_row(inst, None)
    spec.out.mkdir(parents=True, exist_ok=True)
    _write_csv(spec.out / "bound.csv", BOUND_HEADER, [row])
    regime, k, lam, value, classical, thr, lp_value, gap = row
    print(f"instance: d={inst.d} s={inst.s} means={inst.means.tolist()}", file=out)
    print(f"regime: {regime}", file=out)
    print(f"critical index k: {'-' if k is None else k}, lambda = {lam:.6g}", file=out)
    print(f"sparse lower bound  : {value:.10g} * ln T", file=out)
    print(f"classical bound     : {classical:.10g} * ln T", file=out)
    print(f"LP optimum          : {lp_value:.10g} (|diff| = {gap:.2e})", file=out)
    if thr is not None:
        print(f"sparsity irrelevant once mu_s <= {thr:.6g}", file=out)
    if spec.epsilons:
        rows = [(eps,) + _bound_row(inst, eps) for eps in spec.epsilons]
        _write_csv(spec.out / "bound_epsilon.csv", ("epsilon",) + BOUND_HEADER, rows)
        print(f"epsilon sweep: {len(rows)} rows written to {spec.out / 'bound_epsilon.csv'}", file=out)
    return EXIT_OK


def cmd_presets(out=None) -> int:
    out = out or sys.stdout
    print("name,d,s,mu1,delta_s,regime", file=out)
    for name, params in PRESETS.items():
        regime = sparsity_regime(equal_gap_instance(*params)).value
        d, s, mu1, delta = params
        print(f"{name},{d},{s},{mu1!r},{delta!r},{regime}", file=out)
    return EXIT_OK


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat 'key = value' file; flags override it")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--d", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--mu1", type=float)
    p.add_argument("--delta-s", dest="delta_s", type=float)
    p.add_argument("--means", help="comma-separated arm means")
    p.add_argument("--out", help="output directory (default: current directory)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparse-ucb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Monte-Carlo regret of UCB and/or SparseUCB")
    _add_run_flags(sim)
    sim.add_argument("--policy", choices=POLICY_CHOICES)
    sim.add_argument("--horizon", type=int)
    sim.add_argument("--reps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--jobs", type=int, help="worker threads (results do not depend on it)")
    sim.add_argument("--forcelog", choices=[v.value for v in ForceLogVariant])

    lb = sub.add_parser("lower-bound", help="asymptotic regret lower bound and its LP check")
    _add_run_flags(lb)
    lb.add_argument("--epsilon", nargs="+", help="values or lo:hi:n grids for the margin sweep")

    presets = sub.add_parser("presets", help="experiment presets")
    presets.add_argument("action", choices=["list"])
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "presets":
        return cmd_presets()
    flags = {k: v for k, v in vars(args).items() if k in KEYS}
    if flags.get("epsilon") is not None:
        flags["epsilon"] = " ".join(flags["epsilon"])
    try:
        spec = parse_config(args.config, flags)
        if args.command == "simulate":
            return cmd_simulate(spec)
        return cmd_lower_bound(spec)
    except ConfigError as exc:
        print(f"sparse-ucb: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonzeroBadArm as exc:
        print(
            f"sparse-ucb: {exc}. The lower bound assumes every arm outside the top s has mean 0.",
            file=sys.stderr,
        )
        return EXIT_MODEL
    except SparseBanditError as exc:
        print(f"sparse-ucb: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"sparse-ucb: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
