"""Column-generation driver (exact / neural / oracle-stub screening),
plain branch-and-price on top, benchmark metrics, and dataset logging."""

from __future__ import annotations

import heapq
import itertools
import json
import math
import random
import statistics
import time
from dataclasses import dataclass, field, replace

from . import master, neural, packing, pricing
from .core import Instance, Route, packing_query, route_cost, travel_cost

MODES = ("exact", "neural", "oracle-stub")
INT_TOL = 1e-6


class DriverError(RuntimeError):
    pass


@dataclass(frozen=True)
class CgConfig:
    mode: str = "exact"
    weights: neural.ModelWeights | None = None
    tau: float = 0.5
    pricing: pricing.PricingConfig = field(default_factory=pricing.PricingConfig)
    lifo: bool = True
    time_limit: float = 3600.0
    seed: int = 0
    dataset_path: str | None = None
    node_limit: int = packing.DEFAULT_NODE_LIMIT

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "neural" and self.weights is None:
            raise ValueError("neural mode requires weights")


@dataclass
class CgReport:
    objective: float = math.nan
    iterations: int = 0
    columns_generated: int = 0
    columns_admitted: int = 0
    columns_forbidden: int = 0
    checker_calls: int = 0
    predictor_calls: int = 0
    false_positive_cuts: int = 0
    undecided: int = 0
    wall_time: float = 0.0
    timed_out: bool = False

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class DatasetLogger:
    """Collects distinct exact-checker queries with their verdicts."""

    def __init__(self, pc: int | None = None):
        self.records: list[dict] = []
        self._seen: set = set()
        self.pc = pc

    def record(self, query: packing.PackingQuery, feasible: bool) -> None:
        key = packing.canonical_key(query)
        if key in self._seen:
            return
        self._seen.add(key)
        rec = {
            "surface": list(query.surface),
            "groups": [[list(d) for d in g] for g in query.groups],
            "label": 1 if feasible else 0,
        }
        if self.pc is not None:
            rec["pc"] = self.pc
        self.records.append(rec)

    def write(self, path: str) -> None:
        with open(path, "w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec) + "\n")


def load_dataset(path: str) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


class ExactChecker:
    def __init__(
        self,
        lifo: bool = True,
        node_limit: int = packing.DEFAULT_NODE_LIMIT,
        cache: packing.VerdictCache | None = None,
        logger: DatasetLogger | None = None,
    ):
        self.lifo = lifo
        self.node_limit = node_limit
        self.cache = cache if cache is not None else packing.VerdictCache()
        self.logger = logger
        self.calls = 0
        self.undecided = 0
        # node_limit is fixed for this checker, so re-running an undecided
        # query is pointless; the shared cache itself never stores undecided
        self._undecided_keys: set = set()

    def __call__(self, query: packing.PackingQuery) -> packing.PackingVerdict:
        self.calls += 1
        key = (packing.canonical_key(query), self.lifo)
        if key in self._undecided_keys:
            self.undecided += 1
            return packing.PackingVerdict(packing.UNDECIDED, None, nodes=0, cache_hit=True)
        verdict = packing.check_feasible(
            query, lifo=self.lifo, node_limit=self.node_limit, cache=self.cache
        )
        if not verdict.decided:
            self.undecided += 1
            self._undecided_keys.add(key)
        elif self.logger is not None:
            self.logger.record(query, verdict.feasible)
        return verdict

    def relaxed(self, query: packing.PackingQuery) -> packing.PackingVerdict:
        """Order-independent check (lifo off); not dataset-logged."""
        key = (packing.canonical_key(query), False)
        if key in self._undecided_keys:
            return packing.PackingVerdict(packing.UNDECIDED, None, nodes=0, cache_hit=True)
        verdict = packing.check_feasible(
            query, lifo=False, node_limit=self.node_limit, cache=self.cache
        )
        if not verdict.decided:
            self._undecided_keys.add(key)
        return verdict


@dataclass
class CgState:
    """Shared state between CG invocations (reused across branch-and-price nodes)."""

    inst: Instance
    checker: ExactChecker
    forbidden: set = field(default_factory=set)  # packing-infeasible route keys
    undecidable: set = field(default_factory=set)  # node-limit hits, excluded loudly
    # customer sets proven unpackable without LIFO: every ordering (and every
    # superset, by monotonicity) is excluded
    bad_subsets: set = field(default_factory=set)
    # customer sets where the unordered relaxation hit the node limit;
    # excluded as a whole and recorded, never silently
    undecided_subsets: set = field(default_factory=set)
    # customer sets already screened by the unordered relaxation; screening
    # happens before any ordering can be admitted, in every mode, so all
    # modes price over the identical set of admissible routes
    classified_subsets: set = field(default_factory=set)

    def subset_exclusions(self) -> frozenset:
        return frozenset(self.bad_subsets | self.undecided_subsets)


@dataclass
class CgOutcome:
    report: CgReport
    solution: master.RmpSolution | None
    pool: master.Pool
    feasible: bool  # no artificial column basic at convergence


def _predictor_for(config: CgConfig, state: CgState, report: CgReport):
    if config.mode == "neural":

        def predict(query):
            report.predictor_calls += 1
            return neural.predict(query, config.weights, config.tau).feasible

    else:  # oracle-stub: the predictor wraps the exact checker

        def predict(query):
            report.predictor_calls += 1
            verdict = state.checker(query)
            report.checker_calls += 1
            return verdict.feasible

    return predict


def run_cg(
    inst: Instance,
    config: CgConfig,
    state: CgState,
    pool: master.Pool,
    deadline: float | None = None,
) -> CgOutcome:
    """CG loop on an existing pool; forbidden/cache live in `state`."""
    report = CgReport()
    t0 = time.monotonic()
    predictor = _predictor_for(config, state, report) if config.mode != "exact" else None

    def out_of_time() -> bool:
        return deadline is not None and time.monotonic() > deadline

    def checked(query) -> packing.PackingVerdict:
        verdict = state.checker(query)
        report.checker_calls += 1
        return verdict

    def note_infeasible(route: Route) -> None:
        report.columns_forbidden += 1
        if config.lifo:
            state.forbidden.add(route.key())
        else:
            # without LIFO the verdict is order-independent: exclude the whole
            # customer set (and, by monotonicity, every superset)
            state.bad_subsets.add(frozenset(route.visits))

    def note_undecided(route: Route, query) -> None:
        # the customer set passed screening, so only this ordering is stuck;
        # exclude it at the sequence level and record it
        state.undecidable.add(route.key())

    def screen_subset(route: Route, query) -> bool:
        """True if the route's customer set may be admitted. The first
        encounter of a set runs the order-independent relaxed check, before
        any ordering can enter the pool. The check is run on the sorted
        ordering of the set: feasibility without LIFO ignores order, but the
        search's node count does not, so a fixed ordering is needed to make
        the verdict a pure function of the set — every mode then excludes
        exactly the same customer sets."""
        subset = frozenset(route.visits)
        if subset in state.bad_subsets or subset in state.undecided_subsets:
            return False
        if subset in state.classified_subsets:
            return True
        state.classified_subsets.add(subset)
        canon = packing_query(inst, Route(tuple(sorted(subset))))
        relaxed = state.checker.relaxed(canon)
        report.checker_calls += 1
        if relaxed.decided and relaxed.feasible:
            return True
        if relaxed.decided:
            # unpackable even without LIFO: every ordering and, by
            # monotonicity, every superset is infeasible
            state.bad_subsets.add(subset)
        else:
            state.undecided_subsets.add(subset)
        return False

    def cut_undecided_basics(sol: master.RmpSolution) -> bool:
        """Driver policy for undecided basic columns: same treatment as an
        admission-time UNDECIDED (infeasible-for-admission, recorded, subset
        exclusion), enforced as a cut so verify_basis never sees them."""
        cols = {c.key(): c for c in pool.columns}
        cut = set()
        for key in sorted(sol.basic_route_keys(), key=lambda k: k[1]):
            col = cols.get(key)
            if col is None or col.status != master.UNVERIFIED:
                continue
            query = packing_query(inst, col.route)
            if not checked(query).decided:
                note_undecided(col.route, query)
                cut.add(col.route.key())
        if cut:
            pool.remove_routes(cut)
            state.forbidden |= cut
            report.false_positive_cuts += len(cut)
            report.columns_forbidden += len(cut)
        return bool(cut)

    sol = None
    while True:
        sol = master.solve_rmp(pool)
        report.iterations += 1

        # rectify false positives until the basis is loading-feasible
        while True:
            if cut_undecided_basics(sol):
                sol = master.solve_rmp(pool)
                report.iterations += 1
                continue
            chk = master.verify_basis(sol, pool, checked)
            if chk.clean:
                break
            state.forbidden |= chk.removed
            report.false_positive_cuts += len(chk.removed)
            report.columns_forbidden += len(chk.removed)
            sol = master.solve_rmp(pool)
            report.iterations += 1

        if out_of_time():
            report.timed_out = True
            break

        # price; when a whole round is forbidden, re-price with the grown
        # forbidden set before touching the RMP again
        admitted_any = False
        converged = False
        while True:
            pcfg = replace(
                config.pricing,
                forbidden=frozenset(state.forbidden | state.undecidable),
                forbidden_subsets=state.subset_exclusions(),
            )
            candidates = pricing.price(inst, sol.duals, pcfg)
            report.columns_generated += len(candidates)
            fresh = [r for r, _ in candidates if ("route", r.key()) not in pool]
            if not fresh:
                converged = True
                break
            progressed = False
            for route in fresh:
                query = packing_query(inst, route)
                if not screen_subset(route, query):
                    progressed = True
                    continue
                if config.mode == "exact":
                    verdict = checked(query)
                    if not verdict.decided:
                        note_undecided(route, query)
                        progressed = True
                    elif verdict.feasible:
                        master.add_columns(pool, [route], master.VERIFIED)
                        report.columns_admitted += 1
                        admitted_any = progressed = True
                    else:
                        note_infeasible(route)
                        progressed = True
                else:
                    if predictor(query):
                        status = (
                            master.UNVERIFIED
                            if config.mode == "neural"
                            else master.VERIFIED
                        )
                        master.add_columns(pool, [route], status)
                        report.columns_admitted += 1
                        admitted_any = progressed = True
                    else:
                        verdict = checked(query)
                        if not verdict.decided:
                            note_undecided(route, query)
                            progressed = True
                        elif verdict.feasible:
                            master.add_columns(pool, [route], master.VERIFIED)
                            report.columns_admitted += 1
                            admitted_any = progressed = True
                        else:
                            note_infeasible(route)
                            progressed = True
            if admitted_any or not progressed:
                break
            if out_of_time():
                report.timed_out = True
                converged = True
                break

        if converged and not report.timed_out:
            break
        if report.timed_out:
            break
        if not admitted_any:
            break

    report.objective = sol.objective if sol is not None else math.nan
    report.undecided = len(state.undecidable) + len(state.undecided_subsets)
    report.wall_time = time.monotonic() - t0
    feasible = sol is not None and not any(
        k[0] == "art" for k in sol.values if sol.values[k] > master.BASIC_TOL
    )
    return CgOutcome(report=report, solution=sol, pool=pool, feasible=feasible)


def warm_start_routes(inst: Instance, lifo: bool = True) -> list[Route]:
    """Multi-customer routes whose loading is proved by the greedy banded
    loader: sweep partitions (every rotation of the polar-angle order), each
    arc extended while weight and banded loading allow. Deterministic."""
    dx0, dy0 = inst.depot
    custs = sorted(
        inst.customers,
        key=lambda c: (math.atan2(c.coords[1] - dy0, c.coords[0] - dx0), c.id),
    )
    A = inst.vehicle.A
    found: dict[tuple, Route] = {}

    def loadable(visits: tuple[int, ...]) -> bool:
        q = packing_query(inst, Route(visits))
        if q.total_area > A:
            return False
        # small node budget: a quick feasibility proof or give up on extending
        verdict = packing.check_feasible(q, lifo=lifo, node_limit=50_000)
        return verdict.feasible

    def close(visits: list[int]) -> None:
        for seq in (tuple(visits), tuple(reversed(visits))):
            if len(seq) >= 2 and seq not in found and loadable(seq):
                found[seq] = Route(seq)

    for offset in range(len(custs)):
        order = custs[offset:] + custs[:offset]
        cur: list[int] = []
        weight = 0.0
        for cust in order:
            trial = (*cur, cust.id)
            if (
                cur
                and weight + cust.demand <= inst.vehicle.Q
                and loadable(trial)
            ):
                cur.append(cust.id)
                weight += cust.demand
                continue
            close(cur)
            cur = [cust.id]
            weight = cust.demand
        close(cur)
    return [found[k] for k in sorted(found)]


def _seed_pool(inst: Instance, state: CgState, pool: master.Pool) -> None:
    for route in warm_start_routes(inst, lifo=state.checker.lifo):
        if ("route", route.key()) not in pool:
            state.checker(packing_query(inst, route))  # cache + dataset log
            master.add_columns(pool, [route], master.VERIFIED)


def cg_solve(inst: Instance, config: CgConfig) -> CgReport:
    """Solve the LP relaxation by column generation in the configured mode."""
    logger = DatasetLogger() if config.dataset_path else None
    if logger is not None and config.mode == "neural":
        raise DriverError("dataset logging requires exact or oracle-stub mode")
    checker = ExactChecker(lifo=config.lifo, node_limit=config.node_limit, logger=logger)
    state = CgState(inst=inst, checker=checker)
    pool = master.initial_pool(inst, checker)
    _seed_pool(inst, state, pool)
    deadline = time.monotonic() + config.time_limit
    outcome = run_cg(inst, config, state, pool, deadline)
    if logger is not None:
        logger.write(config.dataset_path)
    return outcome.report


# ---------------------------------------------------------------------------
# Branch and price


def edge_flows(sol: master.RmpSolution, pool: master.Pool) -> dict[tuple[int, int], float]:
    """Aggregated edge usage; keys are sorted vertex pairs, depot = 0."""
    cols = {c.key(): c for c in pool.columns}
    flows: dict[tuple[int, int], float] = {}
    for key, value in sol.values.items():
        col = cols.get(key)
        if col is None or col.route is None:
            continue
        seq = [0, *col.route.visits, 0]
        for a, b in zip(seq, seq[1:]):
            e = (min(a, b), max(a, b))
            flows[e] = flows.get(e, 0.0) + value
    return flows


def _route_allowed(route: Route, forbidden_edges: frozenset, forced: frozenset) -> bool:
    seq = [0, *route.visits, 0]
    for a, b in zip(seq, seq[1:]):
        if frozenset((a, b)) in forbidden_edges:
            return False
    partner = pricing._forced_partner_map(
        pricing.PricingConfig(forced_edges=forced)
    )
    return pricing._route_respects_forced(route.visits, partner)


@dataclass
class BpResult:
    objective: float
    routes: list[tuple[int, ...]]
    root_bound: float
    nodes: int
    report: CgReport


def branch_and_price(inst: Instance, config: CgConfig) -> BpResult:
    """Best-bound branch-and-price over aggregated customer-customer edge flows."""
    checker = ExactChecker(lifo=config.lifo, node_limit=config.node_limit)
    state = CgState(inst=inst, checker=checker)
    deadline = time.monotonic() + config.time_limit
    total = CgReport()
    counter = itertools.count()
    all_routes: dict[tuple, master.Column] = {}
    for route in warm_start_routes(inst, lifo=config.lifo):
        checker(packing_query(inst, route))
        all_routes[route.key()] = master.Column(
            route, route_cost(inst, route), master.VERIFIED
        )

    def merge(report: CgReport) -> None:
        for name in (
            "iterations",
            "columns_generated",
            "columns_admitted",
            "columns_forbidden",
            "checker_calls",
            "predictor_calls",
            "false_positive_cuts",
        ):
            setattr(total, name, getattr(total, name) + getattr(report, name))

    def node_pool(forbidden_edges: frozenset, forced: frozenset) -> master.Pool:
        pool = master.initial_pool(inst, checker)
        keep = [
            col.route
            for col in all_routes.values()
            if _route_allowed(col.route, forbidden_edges, forced)
            and col.route.key() not in state.forbidden
        ]
        for route in keep:
            master.add_columns(pool, [route], master.VERIFIED)
        return pool

    def solve_node(forbidden_edges: frozenset, forced: frozenset):
        pool = node_pool(forbidden_edges, forced)
        node_cfg = replace(
            config,
            pricing=replace(
                config.pricing, forbidden_edges=forbidden_edges, forced_edges=forced
            ),
        )
        while True:
            outcome = run_cg(inst, node_cfg, state, pool, deadline)
            merge(outcome.report)
            for col in outcome.pool.route_columns():
                if col.status == master.VERIFIED:
                    all_routes.setdefault(col.route.key(), col)
            if outcome.report.timed_out:
                raise DriverError("time limit exceeded in branch and price")
            if not outcome.feasible:
                return None  # node infeasible
            sol = outcome.solution
            flows = edge_flows(sol, outcome.pool)
            extraction = _try_extract(inst, sol, outcome.pool, flows, state, checker)
            if extraction == "reprice":
                pool = node_pool(forbidden_edges, forced)
                continue
            return sol, outcome.pool, flows, extraction

    incumbent_obj = math.inf
    incumbent_routes: list[tuple[int, ...]] | None = None
    root_bound = None
    heap: list = []
    nodes_explored = 0

    heap.append((-math.inf, 0, next(counter), frozenset(), frozenset()))
    heapq.heapify(heap)
    while heap:
        bound, depth, _, forbidden_edges, forced = heapq.heappop(heap)
        if bound >= incumbent_obj - 1e-9:
            continue
        solved = solve_node(forbidden_edges, forced)
        nodes_explored += 1
        if solved is None:
            if root_bound is None:
                raise DriverError("instance infeasible: artificials basic at root")
            continue
        sol, pool, flows, extraction = solved
        if root_bound is None:
            root_bound = sol.objective
        if sol.objective >= incumbent_obj - 1e-9:
            continue
        if extraction is not None:
            if sol.objective < incumbent_obj - 1e-9:
                incumbent_obj = sol.objective
                incumbent_routes = extraction
            continue
        # branch on the customer-customer edge flow closest to 0.5
        best_e, best_d = None, None
        for e, x in flows.items():
            if e[0] == 0:
                continue
            frac = x - math.floor(x)
            d = abs(frac - 0.5)
            if frac > INT_TOL and frac < 1 - INT_TOL and (best_d is None or d < best_d):
                best_e, best_d = e, d
        if best_e is None:
            # integral edge flows but no feasible extraction was possible and
            # _try_extract did not ask for a reprice: nothing to branch on
            continue
        heapq.heappush(
            heap,
            (sol.objective, depth + 1, next(counter),
             forbidden_edges | {frozenset(best_e)}, forced),
        )
        heapq.heappush(
            heap,
            (sol.objective, depth + 1, next(counter),
             forbidden_edges, forced | {frozenset(best_e)}),
        )

    if incumbent_routes is None:
        raise DriverError("no integer solution found")
    total.objective = incumbent_obj
    return BpResult(
        objective=incumbent_obj,
        routes=incumbent_routes,
        root_bound=root_bound,
        nodes=nodes_explored,
        report=total,
    )


def _try_extract(inst, sol, pool, flows, state: CgState, checker):
    """If all edge flows are integral, recover an integer route set.

    Returns a route list, None (fractional), or "reprice" when a cycle admits
    no loading-feasible orientation (both orientations get forbidden).
    """
    for x in flows.values():
        if abs(x - round(x)) > INT_TOL:
            return None
    # multigraph walk from the depot; customer degrees are 2
    adj: dict[int, list[int]] = {}
    for (a, b), x in flows.items():
        count = round(x)
        for _ in range(count):
            adj.setdefault(a, []).append(b)
            adj.setdefault(b, []).append(a)
    for v in adj:
        adj[v].sort()
    routes: list[tuple[int, ...]] = []
    while adj.get(0):
        visits = []
        prev, cur = 0, adj[0].pop(0)
        adj[cur].remove(0)
        while cur != 0:
            visits.append(cur)
            nxt = adj[cur].pop(0)
            adj[nxt].remove(cur)
            prev, cur = cur, nxt
        visits = tuple(visits)
        chosen = None
        for cand in (visits, tuple(reversed(visits))):
            verdict = checker(packing_query(inst, Route(cand)))
            if verdict.feasible:
                chosen = cand
                break
        if chosen is None:
            state.forbidden.add(visits)
            state.forbidden.add(tuple(reversed(visits)))
            return "reprice"
        routes.append(chosen)
    if sum(len(r) > 0 for r in routes) != inst.fleet_size:
        return None
    covered = sorted(v for r in routes for v in r)
    if covered != list(range(1, inst.n + 1)):
        return None
    return routes


# ---------------------------------------------------------------------------
# Metrics


def percentage_gap(t_base: float, t_new: float) -> float:
    """Speedup percentage of the new runtime w.r.t. the baseline runtime."""
    if t_new <= 0:
        raise ValueError("new runtime must be positive")
    return (t_base - t_new) / t_new * 100.0


def classification_metrics(labels, decisions) -> dict:
    if len(labels) != len(decisions):
        raise ValueError("length mismatch")
    tp = sum(1 for y, d in zip(labels, decisions) if y and d)
    fn = sum(1 for y, d in zip(labels, decisions) if y and not d)
    tn = sum(1 for y, d in zip(labels, decisions) if not y and not d)
    fp = sum(1 for y, d in zip(labels, decisions) if not y and d)
    out: dict = {"accuracy": (tp + tn) / len(labels) if labels else None}
    out["tpr"] = tp / (tp + fn) if (tp + fn) > 0 else None
    out["tnr"] = tn / (tn + fp) if (tn + fp) > 0 else None
    return out


# ---------------------------------------------------------------------------
# Random-route dataset sampling


def sample_routes_dataset(
    inst: Instance,
    n_samples: int,
    seed: int = 0,
    pc: int | None = None,
    lifo: bool = True,
    node_limit: int = packing.DEFAULT_NODE_LIMIT,
) -> DatasetLogger:
    """Random routes under the weight and area resources, labeled exactly."""
    rng = random.Random(seed)
    logger = DatasetLogger(pc=pc)
    checker = ExactChecker(lifo=lifo, node_limit=node_limit, logger=logger)
    Q, A = inst.vehicle.Q, inst.vehicle.A
    attempts = 0
    while len(logger.records) < n_samples and attempts < 50 * n_samples:
        attempts += 1
        ids = list(range(1, inst.n + 1))
        rng.shuffle(ids)
        visits = []
        load = area = 0.0
        for i in ids:
            cust = inst.customer(i)
            if load + cust.demand > Q or area + cust.area > A:
                continue
            visits.append(i)
            load += cust.demand
            area += cust.area
            if len(visits) >= 2 and rng.random() < 0.35:
                break
        if not visits:
            continue
        checker(packing_query(inst, Route(tuple(visits))))
    return logger


# ---------------------------------------------------------------------------
# Benchmarks


def bench(instances: list[Instance], modes: list[str], config: CgConfig) -> dict:
    """Run each instance under each mode; gather objectives, times, iterations."""
    rows = []
    for inst in instances:
        row: dict = {"instance": inst.name}
        for mode in modes:
            mcfg = replace(config, mode=mode)
            report = cg_solve(inst, mcfg)
            row[mode] = report.as_dict()
        if "exact" in modes and "neural" in modes:
            row["percentage_gap"] = percentage_gap(
                row["exact"]["wall_time"], row["neural"]["wall_time"]
            )
        rows.append(row)
    summary: dict = {"rows": rows}
    gaps = [r["percentage_gap"] for r in rows if "percentage_gap" in r]
    if gaps:
        summary["median_percentage_gap"] = statistics.median(gaps)
    return summary
