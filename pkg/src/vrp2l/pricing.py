"""Pricing: negative-reduced-cost route search by labeling over (weight, area).

Loading feasibility is deliberately NOT checked here; the driver screens the
returned candidates. Supports full elementarity or ng-route relaxation.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace

from .core import Instance, Route, travel_cost

EPS = 1e-9

REJECT = None


@dataclass(frozen=True)
class DualSolution:
    pi: dict[int, float]  # customer id -> dual of the coverage row
    pi_f: float  # dual of the fleet-size row

    def pi_of(self, v: int) -> float:
        # depot duals are identically 0
        return self.pi.get(v, 0.0) if v != 0 else 0.0


@dataclass(frozen=True)
class PricingConfig:
    mode: str = "elementary"  # "elementary" | "ng"
    ng_size: int = 8
    limit: int = 50
    forbidden: frozenset = frozenset()  # route keys excluded from results
    # customer sets whose every superset is excluded (unordered packing proofs)
    forbidden_subsets: frozenset = frozenset()
    forbidden_edges: frozenset = frozenset()  # frozenset({i,j}) pairs, branching
    forced_edges: frozenset = frozenset()  # customer-customer pairs forced to 1
    completion_bounds: bool = False  # elementary mode only


@dataclass
class Label:
    vertex: int
    rcost: float
    load: float
    area: float
    mem: int  # customer bitmask (bit i-1 = customer i)
    parent: Label | None = None
    # path tuple when it is a prefix of some forbidden route, else None; only
    # such labels can ever complete into a filtered route
    taint: tuple[int, ...] | None = None

    def path(self) -> tuple[int, ...]:
        out = []
        lab = self
        while lab is not None and lab.vertex != 0:
            out.append(lab.vertex)
            lab = lab.parent
        return tuple(reversed(out))


def reduced_edge_cost(c_ij: float, pi_i: float, pi_j: float) -> float:
    return c_ij - 0.5 * pi_i - 0.5 * pi_j


def build_ng_sets(inst: Instance, size: int) -> dict[int, frozenset[int]]:
    """NG(i): the `size` customers nearest to i (including i), ties by id."""
    out = {}
    ids = [c.id for c in inst.customers]
    for i in ids:
        ranked = sorted(ids, key=lambda j: (travel_cost(inst, i, j), j))
        out[i] = frozenset(ranked[:size])
    return out


def dominates(l1: Label, l2: Label) -> bool:
    """Pareto dominance on (rcost, load, area, mem); identical labels dominate."""
    if l1.vertex != l2.vertex:
        raise ValueError("dominance compares labels at the same vertex")
    return (
        l1.rcost <= l2.rcost
        and l1.load <= l2.load
        and l1.area <= l2.area
        and (l1.mem & ~l2.mem) == 0
    )


def forbidden_prefixes(forbidden) -> frozenset[tuple[int, ...]]:
    """Every prefix (including () and the full tuple) of a forbidden route."""
    out = set()
    for visits in forbidden:
        for k in range(len(visits) + 1):
            out.add(tuple(visits[:k]))
    return frozenset(out)


def subset_masks(forbidden_subsets) -> tuple[int, ...]:
    out = []
    for s in forbidden_subsets:
        m = 0
        for i in s:
            m |= 1 << (i - 1)
        out.append(m)
    return tuple(out)


def extend(
    label: Label,
    j: int,
    inst: Instance,
    duals: DualSolution,
    config: PricingConfig,
    ng_sets: dict[int, frozenset[int]] | None = None,
    prefix_set: frozenset | None = None,
    bad_masks: tuple[int, ...] | None = None,
) -> Label | None:
    """One labeling extension to customer j, or REJECT (None)."""
    if j == label.vertex:
        raise ValueError("cannot extend a label to its own vertex")
    bit = 1 << (j - 1)
    if label.mem & bit:
        return REJECT
    cust = inst.customer(j)
    if label.load + cust.demand > inst.vehicle.Q + EPS:
        return REJECT
    if label.area + cust.area > inst.vehicle.A + EPS:
        return REJECT
    if frozenset((label.vertex, j)) in config.forbidden_edges:
        return REJECT
    d = reduced_edge_cost(
        travel_cost(inst, label.vertex, j), duals.pi_of(label.vertex), duals.pi_of(j)
    )
    if config.mode == "ng":
        if ng_sets is None:
            ng_sets = build_ng_sets(inst, config.ng_size)
        mem = 0
        for i in ng_sets[j]:
            mem |= label.mem & (1 << (i - 1))
        mem |= bit
    else:
        mem = label.mem | bit
    if bad_masks is None:
        bad_masks = subset_masks(config.forbidden_subsets)
    for bm in bad_masks:
        # mem never over-approximates the visited set, so this only fires
        # when the excluded subset is provably covered
        if bm & ~mem == 0:
            return REJECT
    taint = None
    if label.taint is not None:
        if prefix_set is None:
            prefix_set = forbidden_prefixes(config.forbidden)
        cand = (*label.taint, j)
        if cand in prefix_set:
            taint = cand
    return Label(
        vertex=j,
        rcost=label.rcost + d,
        load=label.load + cust.demand,
        area=label.area + cust.area,
        mem=mem,
        parent=label,
        taint=taint,
    )


def _forced_partner_map(config: PricingConfig) -> dict[int, int]:
    out: dict[int, int] = {}
    for pair in config.forced_edges:
        i, j = sorted(pair)
        out[i] = j
        out[j] = i
    return out


def _route_respects_forced(visits: tuple[int, ...], partner: dict[int, int]) -> bool:
    for k, v in enumerate(visits):
        p = partner.get(v)
        if p is None:
            continue
        before = visits[k - 1] if k > 0 else 0
        after = visits[k + 1] if k + 1 < len(visits) else 0
        if before != p and after != p:
            return False
    return True


def price(
    inst: Instance, duals: DualSolution, config: PricingConfig
) -> list[tuple[Route, float]]:
    """Up to `limit` distinct routes with reduced cost < -EPS, best first.

    Dominance/discard rule: a label is dropped once it is dominated by `limit`
    labels that cannot complete into a forbidden route (untainted), or by
    `limit + |forbidden|` labels of any kind. Untainted dominators extend along
    any suffix into a route that is never filtered, so the exact top `limit`
    surviving candidates are preserved.
    """
    n = inst.n
    ng_sets = build_ng_sets(inst, config.ng_size) if config.mode == "ng" else None
    partner = _forced_partner_map(config)
    prefix_set = forbidden_prefixes(config.forbidden)
    bad_masks = subset_masks(config.forbidden_subsets)
    keep_untainted = max(1, config.limit)
    keep_total = max(1, config.limit + len(config.forbidden))

    by_vertex: dict[int, list[Label]] = {i: [] for i in range(1, n + 1)}
    root = Label(
        vertex=0, rcost=0.0, load=0.0, area=0.0, mem=0,
        taint=() if config.forbidden else None,
    )
    queue: deque[Label] = deque()

    def admit(lab: Label) -> bool:
        bucket = by_vertex[lab.vertex]
        untainted = 0
        total = 0
        for other in bucket:
            if dominates(other, lab):
                total += 1
                if other.taint is None:
                    untainted += 1
                if untainted >= keep_untainted or total >= keep_total:
                    return False
        bucket.append(lab)
        queue.append(lab)
        return True

    completed: list[tuple[float, tuple[int, ...]]] = []

    def complete(lab: Label) -> None:
        # forced-edge rule: may leave vertex v only toward its partner unless
        # the partner is already the predecessor
        p = partner.get(lab.vertex)
        if p is not None and (lab.parent is None or lab.parent.vertex != p):
            return
        if frozenset((lab.vertex, 0)) in config.forbidden_edges:
            return
        d = reduced_edge_cost(travel_cost(inst, lab.vertex, 0), duals.pi_of(lab.vertex), 0.0)
        rc = lab.rcost + d - duals.pi_f
        if rc >= -EPS:
            return
        visits = lab.path()
        if visits in config.forbidden:
            return
        if bad_masks:
            vm = 0
            for i in visits:
                vm |= 1 << (i - 1)
            for bm in bad_masks:
                if bm & ~vm == 0:
                    return
        if partner and not _route_respects_forced(visits, partner):
            return
        completed.append((rc, visits))

    for j in range(1, n + 1):
        lab = extend(root, j, inst, duals, config, ng_sets, prefix_set, bad_masks)
        if lab is not None:
            admit(lab)

    while queue:
        lab = queue.popleft()
        if lab.vertex != 0:
            complete(lab)
        if config.completion_bounds and config.mode == "elementary":
            # cheapest possible completion: collect every remaining positive
            # dual, plus the fleet dual, at zero travel cost
            residual = duals.pi_f + 0.5 * duals.pi_of(lab.vertex)
            for i in range(1, n + 1):
                if not (lab.mem >> (i - 1)) & 1:
                    residual += max(duals.pi_of(i), 0.0)
            if lab.rcost - residual >= -EPS:
                continue
        v = lab.vertex
        forced_next = partner.get(v)
        if forced_next is not None and (lab.parent is None or lab.parent.vertex != forced_next):
            targets = [forced_next]
        else:
            targets = [j for j in range(1, n + 1) if j != v]
        for j in targets:
            nxt = extend(lab, j, inst, duals, config, ng_sets, prefix_set, bad_masks)
            if nxt is not None:
                admit(nxt)

    completed.sort(key=lambda t: (t[0], t[1]))
    out: list[tuple[Route, float]] = []
    seen = set()
    for rc, visits in completed:
        if visits in seen:
            continue
        seen.add(visits)
        out.append((Route(visits), rc))
        if len(out) >= config.limit:
            break
    return out


def route_reduced_cost(inst: Instance, duals: DualSolution, route: Route) -> float:
    """Reference recomputation: c_r minus covered duals minus the fleet dual."""
    from .core import route_cost

    return (
        route_cost(inst, route)
        - sum(duals.pi_of(i) for i in route.visits)
        - duals.pi_f
    )


def enumerate_elementary_routes(inst: Instance, max_len: int | None = None):
    """Brute-force generator of all resource-feasible elementary routes (test oracle)."""
    n = inst.n
    Q, A = inst.vehicle.Q, inst.vehicle.A
    max_len = max_len or n

    def rec(prefix: list[int], load: float, area: float):
        if prefix:
            yield tuple(prefix)
        if len(prefix) >= max_len:
            return
        for j in range(1, n + 1):
            if j in prefix:
                continue
            cust = inst.customer(j)
            if load + cust.demand > Q + EPS or area + cust.area > A + EPS:
                continue
            prefix.append(j)
            yield from rec(prefix, load + cust.demand, area + cust.area)
            prefix.pop()

    yield from rec([], 0.0, 0.0)
