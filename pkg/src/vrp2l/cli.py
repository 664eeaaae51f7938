"""Command-line interface: instance generation, packing checks, pricing
debugging, column-generation solves, benchmarking, and dataset sampling."""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import driver, master, neural, packing, pricing
from .core import Route, generate_instance, packing_query, parse_instance, write_instance


_DISTS = {"random": "pure-random", "pure-random": "pure-random",
          "clustered": "clustered", "mixed": "mixed"}


def _read_instance(path: str):
    return parse_instance(Path(path).read_text())


def _parse_route(text: str) -> Route:
    return Route(tuple(int(tok) for tok in text.replace(",", " ").split()))


def _print_verdict(query, verdict) -> None:
    print(f"outcome: {verdict.outcome}")
    print(f"nodes: {verdict.nodes}")
    if verdict.certificate:
        print("certificate (group item x y):")
        for p in verdict.certificate:
            print(f"  {p.group} {p.item} {p.x} {p.y}")


def _cmd_gen(args) -> int:
    inst = generate_instance(seed=args.seed, n=args.n, pc=args.pc, dist=_DISTS[args.dist])
    text = write_instance(inst)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_check(args) -> int:
    inst = _read_instance(args.instance)
    query = packing_query(inst, _parse_route(args.route))
    verdict = packing.check_feasible(query, lifo=not args.no_lifo, node_limit=args.node_limit)
    _print_verdict(query, verdict)
    return 0 if verdict.feasible else 1


def _cmd_oracle(args) -> int:
    inst = _read_instance(args.instance)
    query = packing_query(inst, _parse_route(args.route))
    try:
        feasible = packing.oracle_check(query, lifo=not args.no_lifo)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print("outcome:", "feasible" if feasible else "infeasible")
    return 0 if feasible else 1


def _cmd_price(args) -> int:
    inst = _read_instance(args.instance)
    doc = json.loads(Path(args.duals).read_text())
    duals = pricing.DualSolution(
        pi={int(k): float(v) for k, v in doc["pi"].items()},
        pi_f=float(doc.get("pi_f", 0.0)),
    )
    config = pricing.PricingConfig(mode=args.mode, limit=args.limit)
    for route, rc in pricing.price(inst, duals, config):
        print(f"{rc:.6f}  {','.join(map(str, route.visits))}")
    return 0


def _cg_config(args) -> driver.CgConfig:
    mode = {"stub": "oracle-stub"}.get(args.mode, args.mode)
    weights = None
    if args.weights:
        weights = neural.load_weights(Path(args.weights).read_text())
    pmode = {"elem": "elementary"}.get(args.pricing, args.pricing)
    return driver.CgConfig(
        mode=mode,
        weights=weights,
        tau=args.tau,
        pricing=pricing.PricingConfig(mode=pmode, limit=args.limit),
        lifo=not args.no_lifo,
        time_limit=args.time_limit,
        dataset_path=getattr(args, "log_dataset", None),
        node_limit=args.node_limit,
    )


def _emit_report(report: driver.CgReport, path: str | None) -> None:
    for key, value in report.as_dict().items():
        print(f"{key}: {value}")
    if path:
        Path(path).write_text(json.dumps(report.as_dict(), indent=2) + "\n")


def _cmd_solve(args) -> int:
    inst = _read_instance(args.instance)
    config = _cg_config(args)
    if args.integer:
        result = driver.branch_and_price(inst, config)
        print(f"objective: {result.objective}")
        print(f"root_bound: {result.root_bound}")
        print(f"nodes: {result.nodes}")
        for visits in result.routes:
            print("route:", ",".join(map(str, visits)))
        _emit_report(result.report, args.json_report)
    else:
        report = driver.cg_solve(inst, config)
        _emit_report(report, args.json_report)
    return 0


def _cmd_bench(args) -> int:
    paths = sorted(Path(args.dir).glob("*.txt"))
    if not paths:
        print(f"no *.txt instances under {args.dir}", file=sys.stderr)
        return 2
    instances = [parse_instance(p.read_text()) for p in paths]
    modes = args.modes.split(",")
    config = _cg_config(args)
    table = driver.bench(instances, modes, config)
    header = ["instance"] + [f"{m}_obj" for m in modes] + [f"{m}_time" for m in modes] \
        + [f"{m}_iters" for m in modes] + ["percentage_gap"]
    print("\t".join(header))
    for row in table["rows"]:
        cells = [row["instance"]]
        cells += [f"{row[m]['objective']:.4f}" for m in modes]
        cells += [f"{row[m]['wall_time']:.2f}" for m in modes]
        cells += [str(row[m]["iterations"]) for m in modes]
        cells.append(f"{row.get('percentage_gap', float('nan')):.2f}")
        print("\t".join(cells))
    if "median_percentage_gap" in table:
        print(f"median_percentage_gap: {table['median_percentage_gap']:.2f}")
    if args.json_report:
        Path(args.json_report).write_text(json.dumps(table, indent=2) + "\n")
    return 0


def _cmd_dataset(args) -> int:
    if args.action != "sample":
        print("unknown dataset action", file=sys.stderr)
        return 2
    inst = generate_instance(seed=args.seed, n=args.instance_n, pc=args.pc, dist=_DISTS[args.dist])
    logger = driver.sample_routes_dataset(
        inst, args.n, seed=args.seed, pc=args.pc, node_limit=args.node_limit
    )
    logger.write(args.output)
    pos = sum(r["label"] for r in logger.records)
    print(f"wrote {len(logger.records)} records ({pos} feasible) to {args.output}")
    return 0


def _add_common_solver_args(p) -> None:
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--weights")
    p.add_argument("--pricing", choices=["elem", "elementary", "ng"], default="elem")
    p.add_argument("--limit", type=int, default=50, help="pricing candidates per round")
    p.add_argument("--no-lifo", action="store_true")
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--node-limit", type=int, default=packing.DEFAULT_NODE_LIMIT)
    p.add_argument("--json-report")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vrp2l")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--pc", type=int, choices=[2, 3, 4, 5], required=True)
    p.add_argument("--dist", choices=["random", "pure-random", "clustered", "mixed"], default="random")
    p.add_argument("-o", "--output")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("check", help="exact packing check for a route")
    p.add_argument("--instance", required=True)
    p.add_argument("--route", required=True)
    p.add_argument("--no-lifo", action="store_true")
    p.add_argument("--node-limit", type=int, default=packing.DEFAULT_NODE_LIMIT)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("oracle", help="grid-oracle packing check (small queries)")
    p.add_argument("--instance", required=True)
    p.add_argument("--route", required=True)
    p.add_argument("--no-lifo", action="store_true")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("price", help="print negative-reduced-cost candidates")
    p.add_argument("--instance", required=True)
    p.add_argument("--duals", required=True, help='JSON {"pi": {id: value}, "pi_f": value}')
    p.add_argument("--mode", choices=["elementary", "ng"], default="elementary")
    p.add_argument("--limit", type=int, default=50)
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("solve", help="column generation (or branch-and-price)")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=["exact", "neural", "stub", "oracle-stub"], default="exact")
    p.add_argument("--integer", action="store_true", help="run branch-and-price")
    p.add_argument("--log-dataset")
    _add_common_solver_args(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("bench", help="compare modes over a directory of instances")
    p.add_argument("--dir", required=True)
    p.add_argument("--modes", default="exact,neural")
    p.add_argument("--mode", default="exact", help=argparse.SUPPRESS)
    _add_common_solver_args(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("dataset", help="dataset utilities")
    p.add_argument("action", choices=["sample"])
    p.add_argument("--n", type=int, required=True, help="number of sampled routes")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instance-n", type=int, default=10)
    p.add_argument("--pc", type=int, choices=[2, 3, 4, 5], default=3)
    p.add_argument("--dist", choices=["random", "pure-random", "clustered", "mixed"], default="random")
    p.add_argument("--node-limit", type=int, default=packing.DEFAULT_NODE_LIMIT)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=_cmd_dataset)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
