import random

import numpy as np
import pytest

import dense_simplex
from vrp2l import master, packing
from vrp2l.core import Customer, Instance, Item, Route, Vehicle, generate_instance, route_cost
from vrp2l.driver import packing_query
from vrp2l.master import (
    ARTIFICIAL,
    UNVERIFIED,
    VERIFIED,
    Column,
    Pool,
    RmpError,
    add_columns,
    big_m,
    initial_pool,
    solve_rmp,
    verify_basis,
)
from vrp2l.pricing import route_reduced_cost


def single_customer_instance():
    return Instance(
        name="one",
        depot=(0.0, 0.0),
        customers=(Customer(1, (3.0, 4.0), (Item(1, 1, 1.0),)),),
        vehicle=Vehicle(H=4, W=4, Q=10.0),
        fleet_size=1,
    )


def two_customer_instance():
    return Instance(
        name="two",
        depot=(0.0, 0.0),
        customers=(
            Customer(1, (3.0, 4.0), (Item(1, 1, 1.0),)),
            Customer(2, (6.0, 8.0), (Item(1, 1, 1.0),)),
        ),
        vehicle=Vehicle(H=4, W=4, Q=10.0),
        fleet_size=2,
    )


def rmp_matrices(pool, K):
    inst = pool.inst
    n = inst.n
    cols = pool.columns
    A = np.zeros((n + 1, len(cols)))
    c = np.array([col.cost for col in cols])
    for j, col in enumerate(cols):
        A[0, j] = col.fleet_coeff()
        for i in range(1, n + 1):
            A[i, j] = col.coverage(i)
    b = np.zeros(n + 1)
    b[0] = K
    b[1:] = 1.0
    return c, A, b


def random_pool(rng, inst):
    pool = initial_pool(inst)
    routes = {tuple(v) for v in ()}
    customers = list(range(1, inst.n + 1))
    for _ in range(rng.randint(2, 12)):
        size = rng.randint(1, inst.n)
        visits = tuple(rng.sample(customers, size))
        routes.add(visits)
    add_columns(pool, [Route(v) for v in routes], VERIFIED)
    return pool


class TestSolveRmp:
    def test_cheaper_column_wins(self):
        inst = two_customer_instance()
        pool = Pool(inst)
        pool.add(Column(Route((1, 2)), 5.0, VERIFIED))
        pool.add(Column(Route((2, 1)), 7.0, VERIFIED))
        sol = solve_rmp(pool, K=1)
        assert sol.objective == pytest.approx(5.0)
        assert sol.values == {("route", (1, 2)): pytest.approx(1.0)}

    def test_singletons_forced(self):
        inst = two_customer_instance()
        sol = solve_rmp(initial_pool(inst))
        assert sol.objective == pytest.approx(10.0 + 20.0)

    def test_empty_pool_rejected(self):
        with pytest.raises(RmpError):
            solve_rmp(Pool(single_customer_instance()))

    def test_matches_dense_simplex_on_random_pools(self):
        rng = random.Random(1234)
        for trial in range(100):
            inst = generate_instance(seed=2000 + trial, n=rng.randint(2, 6), pc=2)
            pool = random_pool(rng, inst)
            sol = solve_rmp(pool)
            c, A, b = rmp_matrices(pool, inst.fleet_size)
            ref_obj, _, _ = dense_simplex.solve(c, A, b)
            assert sol.objective == pytest.approx(ref_obj, abs=1e-7)

    def test_complementary_slackness_and_reduced_costs(self):
        rng = random.Random(99)
        for trial in range(40):
            inst = generate_instance(seed=3000 + trial, n=rng.randint(2, 6), pc=3)
            pool = random_pool(rng, inst)
            sol = solve_rmp(pool)
            K = inst.fleet_size
            y = np.array(
                [sol.duals.pi_f] + [sol.duals.pi[i] for i in range(1, inst.n + 1)]
            )
            c, A, b = rmp_matrices(pool, K)
            reduced = c - y @ A
            assert reduced.min() >= -1e-7  # dual feasibility at optimum
            x = np.array([sol.values.get(col.key(), 0.0) for col in pool.columns])
            # complementary slackness: positive primal value -> zero reduced cost
            assert float(np.max(np.abs(reduced * x))) <= 1e-6
            # strong duality
            assert sol.objective == pytest.approx(float(y @ b), abs=1e-7)

    def test_primal_feasibility(self):
        inst = generate_instance(seed=41, n=5, pc=2)
        pool = random_pool(random.Random(7), inst)
        sol = solve_rmp(pool)
        cols = {col.key(): col for col in pool.columns}
        fleet = sum(
            v * cols[k].fleet_coeff() for k, v in sol.values.items()
        )
        assert fleet == pytest.approx(inst.fleet_size, abs=1e-7)
        for i in range(1, inst.n + 1):
            cover = sum(v * cols[k].coverage(i) for k, v in sol.values.items())
            assert cover == pytest.approx(1.0, abs=1e-7)


class TestPool:
    def test_initial_pool_counts(self):
        inst = generate_instance(seed=10, n=3, pc=2)
        pool = initial_pool(inst)
        routes = pool.route_columns()
        assert len(routes) == 3
        assert all(c.status == VERIFIED for c in routes)
        assert len(pool.columns) == 3 + 4  # + fleet and coverage artificials

    def test_duplicate_add_is_idempotent(self):
        inst = single_customer_instance()
        pool = initial_pool(inst)
        before = len(pool.columns)
        assert add_columns(pool, [Route((1,))]) == 0
        assert len(pool.columns) == before

    def test_adding_k_new_routes(self):
        inst = two_customer_instance()
        pool = initial_pool(inst)
        before = len(pool.columns)
        assert add_columns(pool, [Route((1, 2)), Route((2, 1))]) == 2
        assert len(pool.columns) == before + 2

    def test_columns_never_hurt(self):
        inst = generate_instance(seed=15, n=4, pc=2)
        pool = initial_pool(inst)
        base = solve_rmp(pool).objective
        add_columns(pool, [Route((1, 2)), Route((3, 4)), Route((2, 3))], VERIFIED)
        assert solve_rmp(pool).objective <= base + 1e-9

    def test_reversed_routes_are_distinct(self):
        inst = two_customer_instance()
        pool = initial_pool(inst)
        assert add_columns(pool, [Route((1, 2))]) == 1
        assert add_columns(pool, [Route((2, 1))]) == 1

    def test_dump_lists_every_column(self):
        inst = two_customer_instance()
        pool = initial_pool(inst)
        dump = pool.dump()
        assert len(dump.strip().splitlines()) == len(pool.columns)
        assert "1,2" not in dump
        add_columns(pool, [Route((1, 2))])
        assert "1,2" in pool.dump()

    def test_big_m_value(self):
        inst = two_customer_instance()
        # max customer-customer/depot cost is 10 (depot->2 cost 10? no: 0->2 is 10)
        cmax = max(
            master.travel_cost(inst, i, j) for i in range(3) for j in range(3)
        )
        assert big_m(inst) == pytest.approx(10.0 * inst.n * cmax)


class TestVerifyBasis:
    @staticmethod
    def exact_checker(query):
        return packing.check_feasible(query, cache=False)

    def test_clean_basis_untouched(self):
        inst = generate_instance(seed=20, n=3, pc=2)
        pool = initial_pool(inst)
        sol = solve_rmp(pool)
        chk = verify_basis(sol, pool, self.exact_checker)
        assert chk.clean and chk.removed == set()

    def test_infeasible_basic_column_removed(self):
        # vehicle surface 2x4 with LIFO: routes of two 2x2-item customers in
        # one vehicle are packable, but a crafted three-customer column is not
        inst = Instance(
            name="tight",
            depot=(0.0, 0.0),
            customers=tuple(
                Customer(i, (float(i), 0.0), (Item(2, 2, 1.0),)) for i in (1, 2, 3)
            ),
            vehicle=Vehicle(H=4, W=2, Q=10.0),
            fleet_size=2,
        )
        pool = initial_pool(inst)
        bad = Route((1, 2, 3))  # area 12 > 8: certainly unpackable
        pool.add(Column(bad, 0.0, UNVERIFIED))  # zero cost lures the LP
        sol = solve_rmp(pool)
        assert ("route", bad.key()) in sol.values
        chk = verify_basis(sol, pool, self.exact_checker)
        assert not chk.clean and bad.key() in chk.removed
        assert ("route", bad.key()) not in pool

    def test_feasible_unverified_column_promoted(self):
        inst = two_customer_instance()
        pool = initial_pool(inst)
        good = Route((1, 2))
        pool.add(Column(good, 1.0, UNVERIFIED))
        sol = solve_rmp(pool, K=1)
        chk = verify_basis(sol, pool, self.exact_checker)
        assert chk.clean
        col = {c.route.key(): c for c in pool.route_columns()}[good.key()]
        assert col.status == VERIFIED

    def test_undecided_basic_column_aborts(self):
        inst = two_customer_instance()
        pool = initial_pool(inst)
        pool.add(Column(Route((1, 2)), 1.0, UNVERIFIED))
        sol = solve_rmp(pool, K=1)

        def undecided_checker(query):
            return packing.PackingVerdict(packing.UNDECIDED, None, nodes=0)

        with pytest.raises(RmpError):
            verify_basis(sol, pool, undecided_checker)

    def test_objective_nondecreasing_after_removal(self):
        inst = generate_instance(seed=25, n=4, pc=2)
        pool = initial_pool(inst)
        lure = Route((1, 2, 3, 4))
        pool.add(Column(lure, 0.0, UNVERIFIED))
        before = solve_rmp(pool)

        def reject_all(query):
            return packing.PackingVerdict(packing.INFEASIBLE, None, nodes=0)

        chk = verify_basis(before, pool, reject_all)
        if chk.removed:
            assert solve_rmp(pool).objective >= before.objective - 1e-9
