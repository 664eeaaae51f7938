"""Restricted master problem over a column pool, with basis verification.

LP layer: scipy's HiGHS solves min c'x s.t. the fleet-size row and one
coverage row per customer, both equalities. An independent dense simplex in
the test suite cross-checks objectives and duals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import packing
from .core import Instance, Route, route_cost, travel_cost, packing_query
from .pricing import DualSolution

VERIFIED = "verified-feasible"
UNVERIFIED = "unverified"
ARTIFICIAL = "artificial"

DUAL_TOL = 1e-7
BASIC_TOL = 1e-9


class RmpError(RuntimeError):
    pass


@dataclass(frozen=True)
class Column:
    route: Route | None  # None for artificials
    cost: float
    status: str
    artificial_row: int | None = None  # 0 = fleet row, i = customer i row

    def key(self):
        if self.route is not None:
            return ("route", self.route.key())
        return ("art", self.artificial_row)

    def coverage(self, i: int) -> float:
        if self.route is not None:
            return float(self.route.coverage(i))
        return 1.0 if self.artificial_row == i else 0.0

    def fleet_coeff(self) -> float:
        if self.route is not None:
            return 1.0
        return 1.0 if self.artificial_row == 0 else 0.0


@dataclass
class Pool:
    inst: Instance
    columns: list[Column] = field(default_factory=list)
    _keys: set = field(default_factory=set)

    def __contains__(self, key) -> bool:
        return key in self._keys

    def add(self, col: Column) -> bool:
        if col.key() in self._keys:
            return False
        self.columns.append(col)
        self._keys.add(col.key())
        return True

    def remove_routes(self, keys: set) -> None:
        self.columns = [
            c for c in self.columns if c.route is None or c.route.key() not in keys
        ]
        self._keys = {c.key() for c in self.columns}

    def promote(self, key) -> None:
        for idx, c in enumerate(self.columns):
            if c.route is not None and c.route.key() == key and c.status == UNVERIFIED:
                self.columns[idx] = Column(c.route, c.cost, VERIFIED)

    def route_columns(self) -> list[Column]:
        return [c for c in self.columns if c.route is not None]

    def dump(self) -> str:
        lines = []
        for c in self.columns:
            if c.route is None:
                lines.append(f"{c.status} {c.cost!r} row={c.artificial_row}")
            else:
                lines.append(f"{c.status} {c.cost!r} {','.join(map(str, c.route.visits))}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RmpSolution:
    values: dict  # column key -> value for columns with value > 0
    objective: float
    duals: DualSolution

    def basic_route_keys(self):
        return [k for k, v in self.values.items() if k[0] == "route" and v > BASIC_TOL]


def big_m(inst: Instance) -> float:
    cmax = max(
        travel_cost(inst, i, j)
        for i in range(inst.n + 1)
        for j in range(i + 1, inst.n + 1)
    )
    return 10.0 * inst.n * cmax


def initial_pool(inst: Instance, checker=None) -> Pool:
    """Singleton routes (exact-checked) plus one artificial per constraint row."""
    check = checker or (lambda q: packing.check_feasible(q))
    pool = Pool(inst)
    for cust in inst.customers:
        route = Route((cust.id,))
        verdict = check(packing_query(inst, route))
        if not verdict.feasible:
            raise RmpError(f"singleton route for customer {cust.id} is not packable")
        pool.add(Column(route, route_cost(inst, route), VERIFIED))
    M = big_m(inst)
    pool.add(Column(None, M, ARTIFICIAL, artificial_row=0))
    for cust in inst.customers:
        pool.add(Column(None, M, ARTIFICIAL, artificial_row=cust.id))
    return pool


def solve_rmp(pool: Pool, K: int | None = None) -> RmpSolution:
    inst = pool.inst
    K = inst.fleet_size if K is None else K
    n = inst.n
    cols = pool.columns
    if not cols:
        raise RmpError("empty pool")

    A = np.zeros((n + 1, len(cols)))
    c = np.zeros(len(cols))
    for j, col in enumerate(cols):
        c[j] = col.cost
        A[0, j] = col.fleet_coeff()
        for i in range(1, n + 1):
            A[i, j] = col.coverage(i)
    b = np.zeros(n + 1)
    b[0] = K
    b[1:] = 1.0

    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RmpError(f"LP solve failed: {res.message}")

    duals_raw = np.asarray(res.eqlin.marginals)
    # HiGHS reports equality duals y with objective = y'b for the minimization
    pi_f = float(duals_raw[0])
    pi = {i: float(duals_raw[i]) for i in range(1, n + 1)}
    duals = DualSolution(pi=pi, pi_f=pi_f)

    dual_obj = pi_f * K + sum(pi.values())
    if abs(dual_obj - res.fun) > max(1.0, abs(res.fun)) * DUAL_TOL * 10:
        raise RmpError(f"duality gap {dual_obj - res.fun} too large")

    values = {}
    for j, col in enumerate(cols):
        if res.x[j] > BASIC_TOL:
            values[col.key()] = float(res.x[j])
    return RmpSolution(values=values, objective=float(res.fun), duals=duals)


def add_columns(pool: Pool, routes, status: str = UNVERIFIED) -> int:
    """Append routes as columns with the given status; duplicates are no-ops."""
    added = 0
    for route in routes:
        cost = route_cost(pool.inst, route)
        if pool.add(Column(route, cost, status)):
            added += 1
    return added


@dataclass
class BasisCheck:
    removed: set
    clean: bool
    checked: int = 0


def verify_basis(sol: RmpSolution, pool: Pool, checker) -> BasisCheck:
    """Exact-check unverified basic columns; remove and forbid the infeasible.

    `checker` maps a PackingQuery to a PackingVerdict. Removal order is the
    canonical route order for determinism.
    """
    inst = pool.inst
    cols_by_key = {c.key(): c for c in pool.columns}
    removed = set()
    checked = 0
    for key in sorted(sol.basic_route_keys(), key=lambda k: k[1]):
        col = cols_by_key.get(key)
        if col is None or col.status != UNVERIFIED:
            continue
        verdict = checker(packing_query(inst, col.route))
        checked += 1
        if not verdict.decided:
            raise RmpError(
                f"exact checker undecided on basic column {col.route.visits}"
            )
        if verdict.feasible:
            pool.promote(col.route.key())
        else:
            removed.add(col.route.key())
    if removed:
        pool.remove_routes(removed)
    return BasisCheck(removed=removed, clean=not removed, checked=checked)
