"""Domain types, instance file format, travel costs, and the instance generator."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from . import packing


class InstanceError(ValueError):
    """Semantic error in an instance, with a machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class ParseError(ValueError):
    """Syntax error in an instance document."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Item:
    w: int
    h: int
    q: float

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class Customer:
    id: int
    coords: tuple[float, float]
    items: tuple[Item, ...]

    @property
    def demand(self) -> float:
        return sum(it.q for it in self.items)

    @property
    def area(self) -> int:
        return sum(it.area for it in self.items)

    def dims(self) -> list[tuple[int, int]]:
        """Item dimensions as (w, h) pairs, in stored order."""
        return [(it.w, it.h) for it in self.items]


@dataclass(frozen=True)
class Vehicle:
    H: int
    W: int
    Q: float

    @property
    def A(self) -> int:
        return self.H * self.W


@dataclass(frozen=True)
class Route:
    """Ordered customer visits; depot endpoints are implicit."""

    visits: tuple[int, ...]

    def __post_init__(self):
        if not self.visits:
            raise ValueError("route must visit at least one customer")

    @property
    def elementary(self) -> bool:
        return len(set(self.visits)) == len(self.visits)

    def coverage(self, i: int) -> int:
        return sum(1 for v in self.visits if v == i)

    def key(self) -> tuple[int, ...]:
        # Visit list verbatim: reversed routes are distinct (LIFO makes
        # direction significant).
        return self.visits


@dataclass(frozen=True)
class Instance:
    name: str
    depot: tuple[float, float]
    customers: tuple[Customer, ...]
    vehicle: Vehicle
    fleet_size: int
    cost_rounding: str = "exact"  # "exact" | "round1"

    @property
    def n(self) -> int:
        return len(self.customers)

    def customer(self, i: int) -> Customer:
        return self.customers[i - 1]

    def coords(self, i: int) -> tuple[float, float]:
        if i == 0 or i == self.n + 1:
            return self.depot
        if 1 <= i <= self.n:
            return self.customers[i - 1].coords
        raise KeyError(f"unknown vertex id {i}")

    def validate(self) -> None:
        veh = self.vehicle
        for cust in self.customers:
            if not cust.items:
                raise InstanceError("EMPTY_CUSTOMER", f"customer {cust.id} has no items")
            for it in cust.items:
                if it.w <= 0 or it.h <= 0:
                    raise InstanceError(
                        "NONPOSITIVE_ITEM", f"customer {cust.id} has a degenerate item"
                    )
                if it.w > veh.W or it.h > veh.H:
                    raise InstanceError(
                        "ITEM_EXCEEDS_SURFACE",
                        f"item {it.w}x{it.h} of customer {cust.id} exceeds surface "
                        f"W={veh.W}, H={veh.H}",
                    )
                if it.q < 0:
                    raise InstanceError("NEGATIVE_WEIGHT", f"customer {cust.id}")
            if cust.demand > veh.Q:
                raise InstanceError(
                    "CUSTOMER_EXCEEDS_CAPACITY", f"customer {cust.id} demand > Q"
                )
            if cust.area > veh.A:
                raise InstanceError("CUSTOMER_EXCEEDS_AREA", f"customer {cust.id} area > A")
            query = packing.PackingQuery((veh.H, veh.W), (tuple(cust.dims()),))
            if not packing.check_feasible(query).feasible:
                raise InstanceError(
                    "CUSTOMER_NOT_PACKABLE", f"customer {cust.id} items do not fit alone"
                )
        weight_lb = max(1, math.ceil(sum(c.demand for c in self.customers) / veh.Q))
        if self.fleet_size < weight_lb:
            raise InstanceError(
                "FLEET_BELOW_WEIGHT_BOUND",
                f"K={self.fleet_size} below weight lower bound {weight_lb}",
            )


def travel_cost(inst: Instance, i: int, j: int) -> float:
    """Symmetric Euclidean cost between vertices, rounded per the instance mode."""
    xi, yi = inst.coords(i)
    xj, yj = inst.coords(j)
    d = math.hypot(xi - xj, yi - yj)
    if inst.cost_rounding == "round1":
        d = round(d, 1)
    return d


def route_cost(inst: Instance, route: Route) -> float:
    seq = [0, *route.visits, 0]
    return sum(travel_cost(inst, seq[k], seq[k + 1]) for k in range(len(seq) - 1))


def packing_query(inst: Instance, route: Route) -> packing.PackingQuery:
    """Loading query for a route: one item group per visit, in visit order."""
    groups = tuple(tuple(inst.customer(i).dims()) for i in route.visits)
    return packing.PackingQuery((inst.vehicle.H, inst.vehicle.W), groups)


# ---------------------------------------------------------------------------
# Canonical file format


def write_instance(inst: Instance) -> str:
    lines = [
        f"NAME {inst.name}",
        f"FLEET {inst.fleet_size}",
        f"CAPACITY {_fmt(inst.vehicle.Q)}",
        f"SURFACE {inst.vehicle.H} {inst.vehicle.W}",
        f"NODES {inst.n + 1}",
        f"0 {_fmt(inst.depot[0])} {_fmt(inst.depot[1])}",
    ]
    for cust in inst.customers:
        lines.append(f"{cust.id} {_fmt(cust.coords[0])} {_fmt(cust.coords[1])}")
    lines.append("ITEMS")
    for cust in inst.customers:
        lines.append(f"{cust.id} {len(cust.items)}")
        for it in cust.items:
            lines.append(f"{it.h} {it.w} {_fmt(it.q)}")
    lines.append("END")
    return "\n".join(lines) + "\n"


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def parse_instance(text: str) -> Instance:
    lines: list[tuple[int, str]] = []
    for no, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped:
            lines.append((no, stripped))

    pos = 0

    def next_line(expect: str | None = None) -> tuple[int, str]:
        nonlocal pos
        if pos >= len(lines):
            last = lines[-1][0] if lines else 0
            raise ParseError(last, f"unexpected end of document (wanted {expect or 'more'})")
        no, line = lines[pos]
        pos += 1
        if expect is not None and not line.startswith(expect):
            raise ParseError(no, f"expected {expect!r}, got {line!r}")
        return no, line

    def fields(line: str, no: int, count: int) -> list[str]:
        parts = line.split()
        if len(parts) != count:
            raise ParseError(no, f"expected {count} fields, got {len(parts)}")
        return parts

    no, line = next_line("NAME")
    name = line.split(None, 1)[1] if len(line.split(None, 1)) > 1 else ""
    no, line = next_line("FLEET")
    fleet = _parse_int(fields(line, no, 2)[1], no, "fleet size")
    no, line = next_line("CAPACITY")
    capacity = _parse_num(fields(line, no, 2)[1], no, "capacity")
    no, line = next_line("SURFACE")
    parts = fields(line, no, 3)
    H = _parse_int(parts[1], no, "surface length")
    W = _parse_int(parts[2], no, "surface width")
    no, line = next_line("NODES")
    n_nodes = _parse_int(fields(line, no, 2)[1], no, "node count")
    if n_nodes < 2:
        raise ParseError(no, "need a depot plus at least one customer")

    coords: dict[int, tuple[float, float]] = {}
    for k in range(n_nodes):
        no, line = next_line()
        parts = fields(line, no, 3)
        vid = _parse_int(parts[0], no, "vertex id")
        if vid != k:
            raise ParseError(no, f"vertex ids must run 0..{n_nodes - 1} in order, got {vid}")
        coords[vid] = (_parse_num(parts[1], no, "x"), _parse_num(parts[2], no, "y"))

    next_line("ITEMS")
    n = n_nodes - 1
    customers = []
    for cid in range(1, n + 1):
        no, line = next_line()
        parts = fields(line, no, 2)
        got = _parse_int(parts[0], no, "customer id")
        if got != cid:
            raise ParseError(no, f"expected items for customer {cid}, got {got}")
        count = _parse_int(parts[1], no, "item count")
        if count < 1:
            raise ParseError(no, f"customer {cid} must own at least one item")
        items = []
        for _ in range(count):
            no, line = next_line()
            parts = fields(line, no, 3)
            h = _parse_int(parts[0], no, "item length")
            w = _parse_int(parts[1], no, "item width")
            q = _parse_num(parts[2], no, "item weight")
            items.append(Item(w=w, h=h, q=q))
        customers.append(Customer(id=cid, coords=coords[cid], items=tuple(items)))
    next_line("END")

    inst = Instance(
        name=name,
        depot=coords[0],
        customers=tuple(customers),
        vehicle=Vehicle(H=H, W=W, Q=capacity),
        fleet_size=fleet,
    )
    inst.validate()
    return inst


def _parse_int(tok: str, no: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ParseError(no, f"bad {what}: {tok!r}") from None


def _parse_num(tok: str, no: int, what: str) -> float:
    try:
        return float(tok)
    except ValueError:
        raise ParseError(no, f"bad {what}: {tok!r}") from None


# ---------------------------------------------------------------------------
# Instance generation

# Item dimension ranges, as tenths of H (length) and W (width), per packing
# class and shape category.
_SHAPE_RANGES: dict[int, dict[str, tuple[tuple[int, int], tuple[int, int]]]] = {
    2: {"vertical": ((4, 9), (1, 2)), "homogeneous": ((2, 5), (2, 5)), "horizontal": ((1, 2), (4, 9))},
    3: {"vertical": ((3, 8), (1, 2)), "homogeneous": ((2, 4), (2, 4)), "horizontal": ((1, 2), (3, 8))},
    4: {"vertical": ((2, 7), (1, 2)), "homogeneous": ((3, 4), (1, 4)), "horizontal": ((1, 2), (2, 7))},
    5: {"vertical": ((1, 6), (1, 2)), "homogeneous": ((1, 3), (1, 3)), "horizontal": ((1, 2), (1, 6))},
}

_CATEGORIES = ("vertical", "homogeneous", "horizontal")

DEFAULT_VEHICLE = Vehicle(H=40, W=20, Q=100.0)


def dim_range(tenths: tuple[int, int], total: int) -> tuple[int, int]:
    """Integer sampling range [ceil(a*total/10), floor(b*total/10)]."""
    a, b = tenths
    lo = math.ceil(a * total / 10)
    hi = math.floor(b * total / 10)
    return lo, max(lo, hi)


def sample_item_dims(rng: random.Random, pc: int, vehicle: Vehicle) -> tuple[int, int]:
    """Draw one (w, h) pair: uniform shape category, uniform dims in its range."""
    category = rng.choice(_CATEGORIES)
    (h_tenths, w_tenths) = _SHAPE_RANGES[pc][category]
    h = rng.randint(*dim_range(h_tenths, vehicle.H))
    w = rng.randint(*dim_range(w_tenths, vehicle.W))
    return w, h


def _split_weight(rng: random.Random, total: int, parts: int) -> list[int]:
    if parts == 1:
        return [total]
    cuts = sorted(rng.randint(0, total) for _ in range(parts - 1))
    bounds = [0, *cuts, total]
    return [bounds[k + 1] - bounds[k] for k in range(parts)]


def generate_instance(
    seed: int,
    n: int,
    pc: int,
    dist: str = "pure-random",
    vehicle: Vehicle = DEFAULT_VEHICLE,
    name: str | None = None,
) -> Instance:
    """Random instance: coordinates per `dist`, items per the packing-class table."""
    if n < 1:
        raise ValueError("need at least one customer")
    if pc not in _SHAPE_RANGES:
        raise ValueError(f"unsupported packing class {pc}")
    if dist not in ("pure-random", "clustered", "mixed"):
        raise ValueError(f"unknown distribution {dist!r}")

    rng = random.Random(seed)
    depot, coords = _sample_coords(rng, n, dist)

    customers = []
    for cid in range(1, n + 1):
        count = rng.randint(1, pc)
        dims = []
        for _ in range(count):
            w, h = sample_item_dims(rng, pc, vehicle)
            dims.append((w, h))
        demand = rng.randint(1, math.ceil(0.3 * vehicle.Q))
        weights = _split_weight(rng, demand, count)
        items = tuple(Item(w=w, h=h, q=float(q)) for (w, h), q in zip(dims, weights))
        customers.append(Customer(id=cid, coords=coords[cid - 1], items=items))

    fleet = estimate_fleet_size(customers, vehicle)
    inst = Instance(
        name=name or f"gen-s{seed}-n{n}-pc{pc}-{dist}",
        depot=depot,
        customers=tuple(customers),
        vehicle=vehicle,
        fleet_size=fleet,
    )
    inst.validate()
    return inst


def _sample_coords(
    rng: random.Random, n: int, dist: str
) -> tuple[tuple[float, float], list[tuple[float, float]]]:
    if dist == "pure-random":
        depot = (35.0, 35.0)
        pts = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n)]
        return depot, pts
    if dist == "clustered":
        return (40.0, 50.0), _clustered_points(rng, n)
    # mixed: half uniform, half clustered
    depot = (35.0, 35.0)
    n_random = n // 2
    pts = [(rng.uniform(0, 100), rng.uniform(0, 100)) for _ in range(n_random)]
    pts.extend(_clustered_points(rng, n - n_random))
    return depot, pts


def _clustered_points(rng: random.Random, n: int) -> list[tuple[float, float]]:
    pts: list[tuple[float, float]] = []
    while len(pts) < n:
        cx, cy = rng.uniform(10, 90), rng.uniform(10, 90)
        size = min(rng.randint(8, 9), n - len(pts))
        for _ in range(size):
            angle = rng.uniform(0, 2 * math.pi)
            radius = rng.uniform(3, 5)
            pts.append((cx + radius * math.cos(angle), cy + radius * math.sin(angle)))
    return pts


def estimate_fleet_size(customers, vehicle: Vehicle) -> int:
    """Fleet-size upper bound: max of the weight bound and a shelf-FFD bin count."""
    customers = list(customers)
    for cust in customers:
        query = packing.PackingQuery((vehicle.H, vehicle.W), (tuple(cust.dims()),))
        if not packing.check_feasible(query).feasible:
            raise InstanceError("CUSTOMER_NOT_PACKABLE", f"customer {cust.id}")
    weight_lb = max(1, math.ceil(sum(c.demand for c in customers) / vehicle.Q))
    dims = [(it.w, it.h) for c in customers for it in c.items]
    return max(weight_lb, shelf_ffd_bins(dims, vehicle))


@dataclass
class _Shelf:
    height: int
    used_width: int


@dataclass
class _Bin:
    shelves: list[_Shelf] = field(default_factory=list)
    used_height: int = 0


def shelf_ffd_bins(dims: list[tuple[int, int]], vehicle: Vehicle) -> int:
    """First-fit-decreasing shelf packing; returns the number of bins opened."""
    bins: list[_Bin] = []
    for w, h in sorted(dims, key=lambda d: (-d[1], -d[0])):
        placed = False
        for b in bins:
            for shelf in b.shelves:
                if shelf.used_width + w <= vehicle.W and h <= shelf.height:
                    shelf.used_width += w
                    placed = True
                    break
            if placed:
                break
            if b.used_height + h <= vehicle.H:
                b.shelves.append(_Shelf(height=h, used_width=w))
                b.used_height += h
                placed = True
                break
        if not placed:
            bins.append(_Bin(shelves=[_Shelf(height=h, used_width=w)], used_height=h))
    return max(1, len(bins))
