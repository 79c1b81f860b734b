"""Command-line front end: simulate, bounds, oracle and sweep.

Exit codes: 0 success, 2 configuration error, 3 capability error.
"""

import argparse
import csv
import io
import json
import sys
import zlib

from .bounds import draw_thetas, estimate_bound, w_bts
from .config import BUNDLED, ExperimentConfig, load_config, parse_config
from .errors import CapabilityError, ConfigError
from .harness import BOUND_TAG, _generator, baseline, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAPABILITY = 3

SIMULATE_FIELDS = ("policy", "budget", "episodes", "mean_value", "value_se", "w_bts", "regret",
                   "regret_se", "wall_ms")
BOUNDS_FIELDS = ("bound", "budget", "samples", "mean", "se", "regret_lb")


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render(rows, fields, fmt):
    if fmt == "json":
        return json.dumps([{k: r[k] for k in fields} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([_fmt(r[k]) for k in fields])
    return buf.getvalue()


def emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _policy_groups(cfg: ExperimentConfig):
    """(kind, PolicyConfig) pairs in configured order."""
    return [(p.kind, p.policy_config()) for p in cfg.policies]


def _check_lattice_caps(cfg):
    k = len(cfg.instance.arms)
    for p in cfg.policies:
        if p.kind in ("irs_vemax", "irs_vemax_pext") and k > p.lattice_cap:
            raise CapabilityError(f"{p.kind} supports at most {p.lattice_cap} arms; "
                                  f"the instance has {k}")


def _simulation_rows(cfg: ExperimentConfig, sweep, timing):
    if not cfg.policies:
        raise ConfigError("policies: at least one policy is required")
    _check_lattice_caps(cfg)
    if sweep and any(b1 >= b2 for b1, b2 in zip(cfg.budgets[:-1], cfg.budgets[1:])):
        raise ConfigError("budgets: a sweep needs strictly increasing budgets")
    rows = []
    for budget in cfg.budgets:
        inst = cfg.build_instance(budget)
        ref = baseline(inst, cfg.base_seed, cfg.baseline_samples)
        for kind, pconf in _policy_groups(cfg):
            reports = run_experiment(inst, [kind], cfg.episodes, cfg.base_seed, cfg.parallelism,
                                     pconf, cfg.baseline_samples, timing, reference=ref)
            rows.extend(r.row() for r in reports)
    return rows


def cmd_simulate(cfg, timing=False):
    return render(_simulation_rows(cfg, False, timing), SIMULATE_FIELDS, cfg.output.format)


def cmd_sweep(cfg, timing=False):
    return render(_simulation_rows(cfg, True, timing), SIMULATE_FIELDS, cfg.output.format)


def _bound_rng(seed, budget, kind):
    if kind == "bts":
        return _generator(seed, BOUND_TAG, budget)
    return _generator(seed, BOUND_TAG, budget, zlib.crc32(kind.encode()))


def cmd_bounds(cfg):
    kinds = list(cfg.bounds.kinds)
    if cfg.instance.random_cost and any(k != "bts" for k in kinds):
        raise CapabilityError("random-cost instances support only the 'bts' bound")
    k_arms = len(cfg.instance.arms)
    if "irs_vemax" in kinds and k_arms > 3:
        raise CapabilityError(f"irs_vemax bound supports at most 3 arms; the instance has "
                              f"{k_arms}")
    rows = []
    samples = cfg.bounds.samples
    for budget in cfg.budgets:
        inst = cfg.build_instance(budget)
        thetas = None
        if cfg.bounds.common_random_numbers:
            thetas = draw_thetas(inst, samples, _generator(cfg.base_seed, BOUND_TAG, budget, 1))
        table = None
        if "ideal" in kinds:
            from .oracle import bellman_vstar
            table = bellman_vstar(inst, arithmetic="float")
        ests = {}
        for kind in kinds:
            rng = _bound_rng(cfg.base_seed, budget, kind)
            if kind == "bts" and thetas is None:
                ests[kind] = w_bts(inst, samples, rng)
            else:
                ests[kind] = estimate_bound(kind, inst, samples, rng, thetas, table)
        ref = ests.get("bts")
        if ref is None:
            ref = w_bts(inst, samples, _bound_rng(cfg.base_seed, budget, "bts"))
        for kind in kinds:
            e = ests[kind]
            rows.append({"bound": kind, "budget": budget, "samples": e.samples,
                         "mean": e.mean, "se": e.std_error, "regret_lb": ref.mean - e.mean})
    return render(rows, BOUNDS_FIELDS, cfg.output.format)


def oracle_report(cfg):
    from .oracle import bellman_vstar, exact_bound
    if cfg.instance.random_cost:
        raise CapabilityError("the exact oracle covers deterministic-cost instances only")
    out = []
    for budget in cfg.budgets:
        inst = cfg.build_instance(budget)
        table = bellman_vstar(inst)
        entry = {"budget": budget, "vstar": float(table.root), "states": len(table)}
        for kind in ("bts", "irs_fh", "irs_vzero"):
            entry[f"w_{kind}"] = float(exact_bound(kind, inst))
        tol = 1e-12
        entry["monotone"] = bool(entry["w_bts"] + tol >= entry["w_irs_fh"]
                                 and entry["w_irs_fh"] + tol >= entry["w_irs_vzero"]
                                 and entry["w_irs_vzero"] + tol >= entry["vstar"])
        out.append(entry)
    return out


def cmd_oracle(cfg):
    report = oracle_report(cfg)
    if cfg.output.format == "json":
        return json.dumps(report, indent=2) + "\n"
    lines = []
    for e in report:
        lines.append(f"budget {e['budget']}")
        lines.append(f"  V*            {e['vstar']:.12f}")
        lines.append(f"  W^BTS         {e['w_bts']:.12f}")
        lines.append(f"  W^IRS.FH      {e['w_irs_fh']:.12f}")
        lines.append(f"  W^IRS.V-Zero  {e['w_irs_vzero']:.12f}")
        verdict = "holds" if e["monotone"] else "VIOLATED"
        lines.append(f"  monotonicity W^BTS >= W^IRS.FH >= W^IRS.V-Zero >= V*: {verdict}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="irsbandits",
        description="Budgeted Bayesian bandits: policies, performance bounds and exact oracles.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "estimate policy values and regrets"),
                           ("bounds", "estimate performance bounds"),
                           ("oracle", "exact V* and bounds on small instances"),
                           ("sweep", "regret-vs-budget table over the configured budgets")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True,
                       help=f"config path or bundled name ({', '.join(BUNDLED)})")
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--seed", type=int, default=None, help="base seed override")
        p.add_argument("--threads", type=int, default=None, help="worker processes")
        p.add_argument("--episodes", type=int, default=None, help="episode count override")
        p.add_argument("--timing", action="store_true",
                       help="record wall time (makes outputs run-dependent)")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args):
    update = {}
    if args.seed is not None:
        update["base_seed"] = args.seed
    if args.threads is not None:
        update["parallelism"] = args.threads
    if args.episodes is not None:
        update["episodes"] = args.episodes
    if args.format is not None or args.out is not None:
        out = cfg.output.model_dump()
        if args.format is not None:
            out["format"] = args.format
        if args.out is not None:
            out["path"] = args.out
        update["output"] = out
    if not update:
        return cfg
    data = cfg.model_dump(mode="json")
    data.update(update)
    return parse_config(json.dumps(data), "command line")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "simulate":
            text = cmd_simulate(cfg, args.timing)
        elif args.command == "sweep":
            text = cmd_sweep(cfg, args.timing)
        elif args.command == "bounds":
            text = cmd_bounds(cfg)
        else:
            text = cmd_oracle(cfg)
        emit(text, cfg.output.path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as exc:
        print(f"capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
