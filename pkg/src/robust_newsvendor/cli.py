"""Command-line front end.

Every subcommand prints one JSON document (or CSV with ``--format csv``)
that embeds the resolved instance.  Exit status is 2 for invalid arguments
and 1 when a size guard is exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import asymptotics, closed_form, dp_oracle, independent, worst_case_sim
from .dp_oracle import GuardError
from .model import InstanceError, ProblemInstance, Step, Trajectory, fmt_rational, to_rational

SCHEMA = "robust-newsvendor/1"


class UsageError(Exception):
    pass


def _rational_arg(text: str) -> Fraction:
    try:
        return to_rational(text)
    except (InstanceError, TypeError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _horizons_arg(text: str) -> list[int]:
    try:
        out = [int(v) for v in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad horizon list {text!r}") from exc
    if not out or any(t < 1 for t in out):
        raise argparse.ArgumentTypeError("horizons must be positive integers")
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-newsvendor",
        description="Minimax multi-stage newsvendor with martingale demand.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--mu", type=_rational_arg, required=True, help="mean demand, p/q")
    common.add_argument("--cap", type=_rational_arg, required=True, help="demand support bound U, p/q")
    common.add_argument("--b", type=_rational_arg, required=True, help="backorder cost per unit, p/q")
    common.add_argument("--horizon", type=int, required=True, help="number of periods T")
    common.add_argument("--x0", type=_rational_arg, default=Fraction(0), help="initial inventory, p/q")
    common.add_argument(
        "--holding",
        type=_rational_arg,
        default=Fraction(1),
        help="holding cost h; b is divided by h and reported costs multiplied by h",
    )
    common.add_argument("--out", type=Path, default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    sub.add_parser("policy", parents=[common], help="closed-form policy and value")

    p = sub.add_parser("verify", parents=[common], help="grid DP oracle against the closed form")
    p.add_argument("--grid", default="closure", help="closure | uniform:N")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo against the worst case")
    p.add_argument("--runs", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--demands", type=Path, default=None, help="CSV of demands to replay instead of sampling")

    sub.add_parser("enumerate", parents=[common], help="exact worst-case trajectory table")
    sub.add_parser("compare", parents=[common], help="martingale vs independent demand")

    p = sub.add_parser("asymptotics", parents=[common], help="convergence to the large-T limit")
    p.add_argument("--horizons", type=_horizons_arg, default=[100, 400, 1600])
    return parser


def _instance(args) -> tuple[ProblemInstance, Fraction]:
    h = args.holding
    if h <= 0:
        raise InstanceError("holding cost h > 0 violated")
    if args.b <= 0:
        raise InstanceError("b > 0 violated")
    inst = ProblemInstance(mu=args.mu, U=args.cap, b=args.b / h, T=args.horizon, x0=args.x0)
    return inst, h


def _header(args, inst: ProblemInstance, h: Fraction) -> dict:
    return {
        "schema": SCHEMA,
        "command": args.command,
        "instance": inst.to_dict(),
        "holding": fmt_rational(h),
    }


def cmd_policy(args, inst, h):
    rep = closed_form.value(inst)
    out = _header(args, inst, h)
    out["policy"] = rep.to_dict()
    out["policy"]["opt"] = fmt_rational(rep.opt * h)
    out["policy"]["value_at_x0"] = fmt_rational(rep.value_at_x0 * h)
    return out


def _parse_grid(choice: str, inst: ProblemInstance) -> dp_oracle.Grid:
    if choice == "closure":
        return dp_oracle.breakpoint_closure_grid(inst)
    if choice.startswith("uniform:"):
        try:
            n = int(choice.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad grid {choice!r}") from None
        if n < 1:
            raise UsageError("uniform grid needs N >= 1")
        return dp_oracle.uniform_grid(inst, n)
    raise UsageError(f"unknown grid {choice!r}; expected closure or uniform:N")


def stagewise_agreement(inst: ProblemInstance, grid: dp_oracle.Grid, tables: dp_oracle.DPTables) -> list[dict]:
    """Max |grid vhat - closed-form value| over the states the policy can reach on the grid."""
    th = closed_form.thresholds_for(inst)
    states = {(inst.x0, inst.mu)}
    report = []
    for s in range(inst.T, 0, -1):
        worst = Fraction(0)
        nxt = set()
        for y, m in states:
            exact = closed_form.g_frak(inst, s, max(th.beta(s, m), y, Fraction(0)), m)
            worst = max(worst, abs(tables.vhat(s, y, m) - exact))
            x = max(y, th.beta(s, m))
            nxt.update((x - q, q) for q in grid.demand_points)
        report.append({"s": s, "states": len(states), "max_abs_deviation": fmt_rational(worst)})
        states = nxt
    return report


def cmd_verify(args, inst, h):
    grid = _parse_grid(args.grid, inst)
    oracle, tables = dp_oracle.solve_martingale_dp(inst, grid)
    exact = closed_form.value(inst).value_at_x0
    zero = inst.replace(x0=Fraction(0))
    ind_oracle = dp_oracle.solve_independent_dp(zero, grid)
    ind_exact = independent.opt_ind(zero)
    out = _header(args, inst, h)
    out.update(
        {
            "grid": {
                "kind": args.grid,
                "demand_points": len(grid.demand_points),
                "order_points": len(grid.order_points),
            },
            "oracle": fmt_rational(oracle * h),
            "closed_form": fmt_rational(exact * h),
            "delta": fmt_rational((oracle - exact) * h),
            "stages": stagewise_agreement(inst, grid, tables),
            "independent_x0_zero": {
                "oracle": fmt_rational(ind_oracle * h),
                "closed_form": fmt_rational(ind_exact * h),
                "delta": fmt_rational((ind_oracle - ind_exact) * h),
            },
        }
    )
    return out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _scaled(paths, h):
    if h == 1:
        return paths
    return [
        Trajectory([Step(s.t, s.y, s.x, s.d, s.cost * h) for s in p.steps], p.weight)
        for p in paths
    ]


def cmd_simulate(args, inst, h):
    if args.demands is not None:
        path = worst_case_sim.simulate_under(
            inst, worst_case_sim.read_demand_csv(args.demands.read_text())
        )
        if args.format == "csv":
            return worst_case_sim.trajectories_to_csv(_scaled([path], h))
        out = _header(args, inst, h)
        out["replay"] = {
            "total_cost": fmt_rational(path.total_cost * h),
            "levels": [fmt_rational(v) for v in path.levels],
            "demands": [fmt_rational(v) for v in path.demands],
        }
        return out
    if args.runs < 1:
        raise UsageError("--runs must be >= 1")
    sink: list = []
    est, demands = worst_case_sim.simulate(
        inst, args.runs, args.seed, sink=sink if args.format == "csv" else None, sample_paths=args.runs
    )
    if args.format == "csv":
        return worst_case_sim.trajectories_to_csv(_scaled(sink, h), sampled=True)
    exact = closed_form.value(inst).value_at_x0
    out = _header(args, inst, h)
    out["seed"] = args.seed
    out["estimate"] = {
        "mean": est.mean * float(h),
        "stderr": est.stderr * float(h),
        "runs": est.runs,
        "exact": fmt_rational(exact * h),
    }
    out["period_demand_means"] = [float(v) for v in demands.mean(axis=0)]
    return out


def cmd_enumerate(args, inst, h):
    paths, total = worst_case_sim.enumerate_exact(inst)
    if args.format == "csv":
        return worst_case_sim.trajectories_to_csv(_scaled(paths, h))
    out = _header(args, inst, h)
    out["expected_cost"] = fmt_rational(total * h)
    out["trajectories"] = [
        {
            "weight": fmt_rational(p.weight),
            "cost": fmt_rational(p.total_cost * h),
            "levels": [fmt_rational(v) for v in p.levels],
            "demands": [fmt_rational(v) for v in p.demands],
        }
        for p in paths
    ]
    return out


def cmd_compare(args, inst, h):
    zero = inst.replace(x0=Fraction(0))
    full = inst.replace(x0=inst.U)
    mar = closed_form.opt_mar(zero)
    ind = independent.opt_ind(zero)
    try:
        ratio = fmt_rational(independent.finite_ratio(zero))
    except independent.DegenerateRatioError:
        ratio = None
    try:
        limit = asymptotics.ratio_limit(inst.mu, inst.U, inst.b)
    except ValueError:
        limit = None
    try:
        full_ind = fmt_rational(independent.full_inventory_value(full) * h)
    except ValueError:
        full_ind = None
    out = _header(args, inst, h)
    out.update(
        {
            "opt_mar": fmt_rational(mar * h),
            "opt_ind": fmt_rational(ind * h),
            "chi_mar": fmt_rational(closed_form.chi_mar(inst, inst.T, inst.mu)),
            "chi_ind": fmt_rational(independent.chi_ind(inst)),
            "ratio": ratio,
            "ratio_limit": limit,
            "full_inventory": {
                "mar": fmt_rational(independent.martingale_full_inventory_value(full) * h),
                "ind": full_ind,
            },
        }
    )
    return out


def cmd_asymptotics(args, inst, h):
    if args.format == "csv":
        rows = asymptotics.path_table(inst, max(args.horizons))
        return _csv_text(("alpha", "D_T", "D_inf", "X_T", "X_inf"), [[repr(v) for v in r] for r in rows])
    law = asymptotics.LimitLaw.of(inst.mu, inst.U, inst.b)
    out = _header(args, inst, h)
    out["limit"] = {"gamma": law.gamma, "lambda_inf": law.lambda_inf, "atom": law.atom}
    out["reports"] = [r.to_dict() for r in asymptotics.convergence_report(inst, args.horizons)]
    return out


COMMANDS = {
    "policy": cmd_policy,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "enumerate": cmd_enumerate,
    "compare": cmd_compare,
    "asymptotics": cmd_asymptotics,
}


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        inst, h = _instance(args)
        if args.format == "csv" and args.command in ("policy", "verify", "compare"):
            raise UsageError(f"{args.command} only emits json")
        result = COMMANDS[args.command](args, inst, h)
    except (InstanceError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = result if isinstance(result, str) else json.dumps(result, indent=2) + "\n"
    if args.out is not None:
        args.out.write_text(text)
    else:
        stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
