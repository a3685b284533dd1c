"""Command-line entry point (``ucbqrl``)."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .dist import mix, quantile
from .driver import ExperimentConfig, OracleMismatchError, run, write_bound_curve
from .mdp import MDPFormatError, InvalidMDPError, gen_random, read_mdp, read_policy, write_mdp
from .optimism import ConfidenceSpec, margin_kappa
from .planning import (
    EnumerationTooLarge,
    brute_force_best,
    brute_force_values,
    eval_policy,
    extract_greedy,
    opt_allocation,
    opt_allocation_grid,
    qmdp_plan,
)

ORACLE_TAUS = (0.1, 0.25, 0.5, 0.75, 0.9)


def _cmd_gen_mdp(args) -> int:
    m = gen_random(args.states, args.actions, args.horizon, args.seed, args.min_atom)
    write_mdp(m, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_plan(args) -> int:
    m = read_mdp(args.mdp)
    vt = qmdp_plan(m.kernel, m.rewards)
    value = vt.value(0, m.start_state, args.tau)
    if args.brute_force:
        pol, bf = brute_force_best(m, args.tau)
        print(f"dp_value {value!r}")
        print(f"brute_force_value {bf!r}")
    else:
        pol = extract_greedy(vt, m.kernel, m.rewards, args.tau)
        print(f"value {value!r}")
    print("policy " + json.dumps(pol.actions.tolist()))
    return 0


def _cmd_evaluate(args) -> int:
    m = read_mdp(args.mdp)
    pol = read_policy(args.policy)
    pol.check_against(m)
    print(repr(eval_policy(m.kernel, m.rewards, pol).value(0, m.start_state, args.tau)))
    return 0


def _cmd_run(args) -> int:
    cfg = ExperimentConfig(
        mdp_path=args.mdp,
        tau=args.tau,
        delta=args.delta,
        episodes=args.episodes,
        seed=args.seed,
        planner_mode="brute_force" if args.brute_force else "envelope",
        output_path=args.out,
    )
    records = run(cfg)
    last = records[-1]
    gap = max(r.optimistic_value - r.representative_value for r in records)
    print(f"episodes {len(records)} cum_regret {last.cum_regret!r} bound {last.bound_t!r}")
    print(f"max envelope-vs-representative gap {gap!r}")
    return 0


def _cmd_margin(args) -> int:
    print(repr(margin_kappa(read_mdp(args.mdp))))
    return 0


def _cmd_bound(args) -> int:
    m = read_mdp(args.mdp)
    spec = ConfidenceSpec(args.delta, args.tau, m.num_states, m.num_actions, args.episodes, m.horizon)
    write_bound_curve(spec, margin_kappa(m), range(1, args.episodes + 1), sys.stdout)
    return 0


def oracle_report(states, actions, horizon, trials, seed, min_atom=0.0, taus=ORACLE_TAUS) -> dict:
    """Compare the DP, exhaustive enumeration, greedy extraction and the
    allocation program on random instances."""
    issues = []
    checked = 0
    for i in range(trials):
        m = gen_random(states, actions, horizon, seed + i, min_atom)
        vt = qmdp_plan(m.kernel, m.rewards)
        bf = brute_force_values(m, taus)
        s0 = m.start_state
        for tau, v_bf in zip(taus, bf):
            checked += 1
            v_dp = vt.value(0, s0, tau)
            greedy = extract_greedy(vt, m.kernel, m.rewards, tau)
            v_greedy = eval_policy(m.kernel, m.rewards, greedy).value(0, s0, tau)
            if v_dp < v_bf - 1e-12:
                issues.append(dict(kind="dp_below_enumeration", seed=seed + i, tau=tau, dp=v_dp, enum=v_bf))
            elif v_dp > v_bf + 1e-9:
                issues.append(dict(kind="dp_above_enumeration", seed=seed + i, tau=tau, dp=v_dp, enum=v_bf))
            if v_greedy < v_bf - 1e-9:
                issues.append(dict(kind="greedy_suboptimal", seed=seed + i, tau=tau, greedy=v_greedy, enum=v_bf))
            for a in range(actions):
                row = m.kernel[0, s0, a]
                v_opt = opt_allocation(row, vt[1], tau)
                v_mix = quantile(mix(row, vt[1]), tau)
                if v_opt != v_mix:
                    issues.append(dict(kind="opt_vs_mixture", seed=seed + i, tau=tau, action=a, opt=v_opt, mix=v_mix))
                if states <= 3:
                    lo = opt_allocation_grid(row, vt[1], tau)
                    hi = opt_allocation_grid(row, vt[1], min(tau + 1e-3, 1.0))
                    if not lo <= v_opt + 1e-12 or not v_opt <= hi + 1e-12:
                        issues.append(dict(kind="opt_vs_grid", seed=seed + i, tau=tau, action=a, opt=v_opt, grid=lo))
    counts = {}
    for it in issues:
        counts[it["kind"]] = counts.get(it["kind"], 0) + 1
    return dict(instances=trials, cells=checked, counts=counts, issues=issues)


def _cmd_oracle_check(args) -> int:
    rep = oracle_report(args.states, args.actions, args.horizon, args.trials, args.seed, args.min_atom)
    for it in rep["issues"]:
        print(json.dumps(it, default=float))
    print(json.dumps({k: rep[k] for k in ("instances", "cells", "counts")}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ucbqrl", description="Optimistic quantile RL on tabular MDPs")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-mdp", help="write a random instance file")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-atom", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_mdp)

    p = sub.add_parser("plan", help="optimal tau-quantile value and greedy policy")
    p.add_argument("--mdp", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--brute-force", action="store_true")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("evaluate", help="exact tau-quantile of a policy file")
    p.add_argument("--mdp", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("run", help="run the learner and write the regret CSV")
    p.add_argument("--mdp", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--brute-force", action="store_true", help="enumerate policies when re-planning")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("margin", help="print the quantile margin kappa")
    p.add_argument("--mdp", required=True)
    p.set_defaults(func=_cmd_margin)

    p = sub.add_parser("bound", help="print the regret bound curve")
    p.add_argument("--mdp", required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--episodes", type=int, required=True)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("oracle-check", help="DP vs enumeration vs allocation-grid report")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-atom", type=float, default=0.0)
    p.set_defaults(func=_cmd_oracle_check)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InvalidMDPError as exc:
        for v in exc.violations:
            print(f"violation: {v}", file=sys.stderr)
        return 2
    except (MDPFormatError, EnumerationTooLarge, OracleMismatchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
