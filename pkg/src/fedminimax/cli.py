"""Command-line entry point.

Subcommands:
    run       execute a configured experiment, one CSV + summary per seed
    validate  evaluate the step-size constraint system; exit 0 iff satisfied
    probe     run numeric assumption probes on the configured problem
    bench     run several variants on one config, print a merged table

Configurations come from a file or a named preset; any key can be
overridden with dotted flags, e.g. `--algorithm.gamma 0.05`.
Constraint violations at run time are warnings, not errors: experiment
rates are grid-searched and need not satisfy the worst-case constants.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import metrics, theory
from .algorithms import (
    VARIANT_ADAFGDA_ADABELIEF,
    VARIANT_ADAFGDA_ADAM,
    VARIANTS,
    run as run_algorithm,
)
from .config import (
    ALGORITHM_SCHEMA,
    OUTPUT_SCHEMA,
    PROBLEM_SCHEMAS,
    ConfigError,
    RunConfig,
    apply_overrides,
    parse_config,
    render_config,
)
from .presets import load_preset, preset_names
from .problems import SampleRef, grad_full, grad_stoch, project_y

PROBE_CHECKS = ("pl", "lipschitz", "gradcheck", "unbiased", "constants")

# Problem-size defaults (k, dim, sample counts) are simulator choices made
# for desk-scale runtime; step sizes, tau, q and the imbalance ratio follow
# the experiment setups they reproduce.
_SIMULATOR_CHOSEN = {"k", "dim", "n_per_client", "n_test", "seed"}


def _defaults_epilog() -> str:
    lines = ["config defaults (missing keys take these values):"]
    for name, schema in PROBLEM_SCHEMAS.items():
        pairs = []
        for key, (_, default) in schema.items():
            mark = "*" if key in _SIMULATOR_CHOSEN else ""
            pairs.append(f"{key}={default}{mark}")
        lines.append(f"  [problem] name={name}: " + ", ".join(pairs))
    lines.append("  [algorithm]: " + ", ".join(f"{k}={d}" for k, (_, d) in ALGORITHM_SCHEMA.items()))
    lines.append("  [output]: " + ", ".join(f"{k}={d}" for k, (_, d) in OUTPUT_SCHEMA.items()))
    lines.append("  (* = simulator-scale choice, not tied to any reproduced setup)")
    lines.append("overrides: --section.key value, e.g. --algorithm.gamma 0.05")
    return "\n".join(lines)


def _load_config(args, overrides: dict[str, str]) -> RunConfig:
    if args.preset and args.config:
        raise ConfigError("give either a config file or --preset, not both")
    if args.preset:
        cfg = load_preset(args.preset)
    elif args.config:
        cfg = parse_config(Path(args.config).read_text())
    else:
        raise ConfigError("a config file or --preset is required")
    return apply_overrides(cfg, overrides) if overrides else cfg


def _split_overrides(argv: list[str]) -> tuple[list[str], dict[str, str]]:
    """Pull dotted-path overrides (--section.key value | --section.key=value)
    out of argv before standard argument parsing sees them."""
    rest: list[str] = []
    overrides: dict[str, str] = {}
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok.startswith("--") and "." in tok.split("=", 1)[0]:
            key = tok[2:]
            if "=" in key:
                key, val = key.split("=", 1)
            else:
                i += 1
                if i >= len(argv):
                    raise ConfigError(f"override {tok!r} is missing a value")
                val = argv[i]
            overrides[key] = val
        else:
            rest.append(tok)
        i += 1
    return rest, overrides


def _constants_for(cfg: RunConfig, problem, hp) -> theory.ConstantSet:
    c = theory.estimate_constants(problem, n_samples=50, seed=hp.seed, rho=hp.rho, rho_u=hp.rho_u)
    return c.with_safety_margin()


def _validate(cfg: RunConfig, problem, hp) -> theory.ConstraintReport:
    c = _constants_for(cfg, problem, hp)
    if hp.variant in (VARIANT_ADAFGDA_ADAM, VARIANT_ADAFGDA_ADABELIEF):
        return theory.validate_theorem1(hp, c, problem.K)
    return theory.validate_theorem2(hp, c, problem.K)


def cmd_run(args, overrides) -> int:
    cfg = _load_config(args, overrides)
    out_dir = Path(cfg.output.csv_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg_text = render_config(cfg)
    chash = metrics.config_hash(cfg_text)
    for seed in cfg.output.seeds:
        problem = cfg.build_problem(seed)
        hp = cfg.hp_for_seed(seed)
        report = _validate(cfg, problem, hp)
        if not report.all_satisfied:
            bad = [c.name for c in report.constraints if not c.satisfied]
            print(f"warning: constraint system not satisfied ({', '.join(bad)})", file=sys.stderr)
        trace = run_algorithm(problem, hp, heavy_cadence=cfg.output.heavy_cadence)
        stem = f"{problem.name}_{hp.variant}_seed{seed}"
        metrics.emit_csv(trace, out_dir / f"{stem}.csv", config_hash=chash)
        (out_dir / f"{stem}.summary.txt").write_text(metrics.render_summary(trace) + "\n")
        last = trace.final()
        print(f"{stem}: T={last.t} objective={last.objective:.6g} sfo={last.sfo} comm={last.comm}")
    return 0


def cmd_validate(args, overrides) -> int:
    cfg = _load_config(args, overrides)
    seed = cfg.output.seeds[0]
    problem = cfg.build_problem(seed)
    hp = cfg.hp_for_seed(seed)
    report = _validate(cfg, problem, hp)
    print(report.render())
    print(report.machine_lines())
    sp = problem.saddle()
    if sp is not None and problem.has_closed_form_inner_max:
        x1 = np.full(problem.d, hp.init_scale)
        y_scale = hp.init_scale if hp.y_init_scale is None else hp.y_init_scale
        y1 = project_y(problem, np.full(problem.p, y_scale))
        c = _constants_for(cfg, problem, hp)
        G = theory.bound_constant_G(
            hp, c, problem.K,
            F_init=problem.inner_max_value(x1),
            f_init=problem.global_value(x1, y1),
            F_star=problem.inner_max_value(sp[0]),
        )
        print(f"bound scale constant (informational, never asserted): G={G:.6g}")
    return 0 if report.all_satisfied else 1


def cmd_probe(args, overrides) -> int:
    cfg = _load_config(args, overrides)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = set(checks) - set(PROBE_CHECKS)
    if unknown:
        raise ConfigError(f"unknown checks {sorted(unknown)}; available: {PROBE_CHECKS}")
    seed = cfg.output.seeds[0]
    problem = cfg.build_problem(seed)
    any_fail = False
    for check in checks:
        if check == "pl":
            if not problem.has_closed_form_inner_max:
                print(f"pl: skipped (no closed-form inner max for {problem.name})", file=sys.stderr)
                continue
            slack = theory.probe_pl(problem, n_points=args.points, seed=seed)
            ok = slack >= -1e-9
            any_fail |= not ok
            print(f"pl: worst_slack={slack:.3e} {'ok' if ok else 'FAIL'}")
        elif check == "lipschitz":
            if not problem.has_closed_form_inner_max:
                print(f"lipschitz: skipped (no closed form for {problem.name})", file=sys.stderr)
                continue
            rep = theory.probe_lipschitz(problem, n_pairs=args.points, seed=seed)
            any_fail |= not rep.ok
            print(
                f"lipschitz: y* ratio {rep.max_ratio_y_star:.4g} <= kappa {rep.kappa:.4g}, "
                f"gradF ratio {rep.max_ratio_grad_F:.4g} <= L {rep.L:.4g} "
                f"{'ok' if rep.ok else 'FAIL'}"
            )
        elif check == "gradcheck":
            rng = np.random.default_rng(seed)
            worst = 0.0
            for _ in range(20):
                k = int(rng.integers(problem.K))
                x = rng.standard_normal(problem.d)
                y = rng.standard_normal(problem.p)
                worst = max(worst, theory.grad_check(problem, k, x, y))
            ok = worst < 1e-5
            any_fail |= not ok
            print(f"gradcheck: max_rel_err={worst:.3e} {'ok' if ok else 'FAIL'}")
        elif check == "unbiased":
            rng = np.random.default_rng(seed)
            worst = 0.0
            for k in range(problem.K):
                x = rng.standard_normal(problem.d)
                y = rng.standard_normal(problem.p)
                gx, gy = grad_full(problem, k, x, y)
                n_k = problem.dataset_size(k)
                sx = np.zeros_like(gx)
                sy = np.zeros_like(gy)
                for item in range(n_k):
                    a, b = grad_stoch(problem, k, x, y, SampleRef(k, item))
                    sx += a
                    sy += b
                worst = max(
                    worst,
                    float(np.linalg.norm(sx / n_k - gx)),
                    float(np.linalg.norm(sy / n_k - gy)),
                )
            ok = worst < 1e-10
            any_fail |= not ok
            print(f"unbiased: worst_gap={worst:.3e} {'ok' if ok else 'FAIL'}")
        elif check == "constants":
            c = theory.estimate_constants(problem, n_samples=args.points, seed=seed)
            print("constants:")
            for name in ("L_f", "mu", "sigma", "delta_x", "delta_y"):
                prov = c.provenance.get(name, "?")
                print(f"  {name}={getattr(c, name):.6g} ({prov})")
            print(f"  kappa={c.kappa:.6g} L={c.L:.6g}")
    return 1 if any_fail else 0


def cmd_bench(args, overrides) -> int:
    cfg = _load_config(args, overrides)
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    unknown = set(variants) - set(VARIANTS)
    if unknown:
        raise ConfigError(f"unknown variants {sorted(unknown)}")
    seed = cfg.output.seeds[0]
    rows = []
    for variant in variants:
        problem = cfg.build_problem(seed)
        hp = cfg.hp_for_seed(seed)
        hp = hp.__class__(**{**hp.__dict__, "variant": variant})
        trace = run_algorithm(problem, hp, heavy_cadence=cfg.output.heavy_cadence)
        last = trace.final()
        rows.append((variant, last))
    print(f"{'variant':<22} {'objective':>12} {'dist_sq':>12} {'auc':>8} {'sfo':>8} {'comm':>6}")
    for variant, last in rows:
        dist = "" if last.dist_x_sq is None else f"{last.dist_x_sq + last.dist_y_sq:.4e}"
        auc = "" if last.auc is None else f"{last.auc:.4f}"
        print(f"{variant:<22} {last.objective:>12.4e} {dist:>12} {auc:>8} {last.sfo:>8} {last.comm:>6}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedmm",
        description="Deterministic federated minimax optimization simulator.",
        epilog=_defaults_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", nargs="?", help="path to a config file")
        p.add_argument("--preset", choices=preset_names(), help="named built-in config")

    p_run = sub.add_parser("run", help="run the configured experiment")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="check the step-size constraint system")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_probe = sub.add_parser("probe", help="run assumption probes")
    common(p_probe)
    p_probe.add_argument("--checks", default=",".join(PROBE_CHECKS),
                         help="comma-separated subset of " + ",".join(PROBE_CHECKS))
    p_probe.add_argument("--points", type=int, default=200, help="probe sample count")
    p_probe.set_defaults(func=cmd_probe)

    p_bench = sub.add_parser("bench", help="compare variants on one config")
    common(p_bench)
    p_bench.add_argument(
        "--variants",
        default="local_sgda,momentum_local_sgda,fgda,adafgda_adam",
        help="comma-separated variant list",
    )
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        rest, overrides = _split_overrides(list(argv))
        args = parser.parse_args(rest)
        return args.func(args, overrides)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
