import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vrp2l import packing
from vrp2l.packing import (
    FEASIBLE,
    INFEASIBLE,
    UNDECIDED,
    PackingQuery,
    Placement,
    VerdictCache,
    banded_certificate,
    canonical_key,
    check_feasible,
    lifo_blocks,
    normal_positions,
    oracle_check,
    push_normalize,
    validate_packing,
)

# The three-visit query where sequential unloading needs more length than the
# surface has, while plain packing fits: W=2, H=3, groups 1x2 / 2x1 / 1x2.
LIFO_GAP_QUERY = PackingQuery((3, 2), (((1, 2),), ((2, 1),), ((1, 2),)))


def random_query(rng: random.Random, max_items=5, max_side=10, max_groups=3):
    H = rng.randint(1, max_side)
    W = rng.randint(1, max_side)
    n_items = rng.randint(1, max_items)
    n_groups = rng.randint(1, min(max_groups, n_items))
    sizes = [1] * n_groups
    for _ in range(n_items - n_groups):
        sizes[rng.randrange(n_groups)] += 1
    groups = tuple(
        tuple((rng.randint(1, W), rng.randint(1, H)) for _ in range(size))
        for size in sizes
    )
    return PackingQuery((H, W), groups)


class TestLifoBlocks:
    def test_touching_behind_is_clear(self):
        assert not lifo_blocks((0, 1, 2, 1), (0, 0, 2, 1))

    def test_doorward_overlap_blocks(self):
        assert lifo_blocks((0, 0, 2, 1), (1, 1, 1, 1))

    def test_disjoint_x_intervals_clear(self):
        assert not lifo_blocks((0, 0, 1, 2), (1, 1, 1, 1))

    def test_side_by_side_touching_clear(self):
        assert not lifo_blocks((0, 0, 2, 2), (2, 0, 2, 2))

    def test_same_cell_blocks(self):
        assert lifo_blocks((0, 0, 1, 1), (0, 0, 1, 1))


class TestValidatePacking:
    def test_overlap_reported(self):
        q = PackingQuery((2, 2), (((1, 1), (1, 1)),))
        [(kind, pair)] = validate_packing(
            q, [Placement(0, 0, 0, 0), Placement(0, 1, 0, 0)]
        )
        assert kind == "overlap"

    def test_out_of_bounds_reported(self):
        q = PackingQuery((2, 2), (((2, 2),),))
        [(kind, _)] = validate_packing(q, [Placement(0, 0, 1, 0)])
        assert kind == "bounds"

    def test_lifo_violation_names_the_pair(self):
        # second-visit item parked doorward of the first-visit item
        q = PackingQuery((3, 2), (((1, 1),), ((1, 1),)))
        violations = validate_packing(
            q, [Placement(0, 0, 0, 0), Placement(1, 0, 0, 1)]
        )
        assert ("lifo", ((0, 0), (1, 0))) in violations
        # no LIFO complaint when the check is relaxed
        assert not validate_packing(
            q, [Placement(0, 0, 0, 0), Placement(1, 0, 0, 1)], lifo=False
        )

    def test_feasible_certificates_validate(self):
        rng = random.Random(7)
        for _ in range(50):
            q = random_query(rng)
            verdict = check_feasible(q, cache=False)
            if verdict.feasible:
                assert validate_packing(q, verdict.certificate) == []

    def test_count_mismatch_rejected(self):
        q = PackingQuery((2, 2), (((1, 1), (1, 1)),))
        with pytest.raises(ValueError):
            validate_packing(q, [Placement(0, 0, 0, 0)])


class TestNormalPositions:
    def test_subset_sums(self):
        xs, _ = normal_positions([(1, 1), (2, 1)], (1, 4))
        assert xs == [0, 1, 2, 3]

    def test_single_item(self):
        xs, ys = normal_positions([(3, 2)], (2, 3))
        assert xs == [0] and ys == [0]

    def test_three_widths(self):
        xs, _ = normal_positions([(2, 1), (2, 1), (3, 1)], (1, 6))
        assert xs == [0, 2, 3, 4, 5]


class TestCheckFeasible:
    def test_exact_fit(self):
        verdict = check_feasible(PackingQuery((2, 2), (((2, 2),),)), cache=False)
        assert verdict.feasible
        assert verdict.certificate == (Placement(0, 0, 0, 0),)

    def test_area_bound(self):
        q = PackingQuery((2, 2), (((2, 2), (1, 1)),))
        assert check_feasible(q, cache=False).outcome == INFEASIBLE

    def test_lifo_gap_query(self):
        assert check_feasible(LIFO_GAP_QUERY, cache=False).outcome == INFEASIBLE
        relaxed = check_feasible(LIFO_GAP_QUERY, lifo=False, cache=False)
        assert relaxed.outcome == FEASIBLE
        assert validate_packing(LIFO_GAP_QUERY, relaxed.certificate, lifo=False) == []

    def test_node_limit_reports_undecided(self):
        verdict = check_feasible(LIFO_GAP_QUERY, node_limit=1, cache=False)
        assert verdict.outcome == UNDECIDED
        assert not verdict.decided

    def test_banded_certificates_are_valid(self):
        rng = random.Random(13)
        produced = 0
        for _ in range(200):
            q = random_query(rng)
            for lifo in (True, False):
                cert = banded_certificate(q, lifo=lifo)
                if cert is not None:
                    produced += 1
                    assert validate_packing(q, cert, lifo=lifo) == []
        assert produced > 0


class TestOracleAgreement:
    @pytest.mark.parametrize("lifo", [True, False])
    def test_randomized_agreement(self, lifo):
        rng = random.Random(20_000 + lifo)
        for _ in range(150):
            q = random_query(rng)
            verdict = check_feasible(q, lifo=lifo, cache=False)
            assert verdict.decided
            assert verdict.feasible == oracle_check(q, lifo=lifo)

    def test_lifo_gap_query_oracle(self):
        assert not oracle_check(LIFO_GAP_QUERY, lifo=True)
        assert oracle_check(LIFO_GAP_QUERY, lifo=False)

    def test_size_guard(self):
        big = PackingQuery((40, 20), (((1, 1),),))
        with pytest.raises(ValueError):
            oracle_check(big)


class TestCacheAndKeys:
    def test_within_group_permutation_same_key(self):
        a = PackingQuery((3, 3), (((2, 1), (1, 1)),))
        b = PackingQuery((3, 3), (((1, 1), (2, 1)),))
        assert canonical_key(a) == canonical_key(b)

    def test_group_swap_different_key(self):
        a = PackingQuery((3, 3), (((2, 1),), ((1, 1),)))
        b = PackingQuery((3, 3), (((1, 1),), ((2, 1),)))
        assert canonical_key(a) != canonical_key(b)

    def test_repeat_query_hits_cache(self):
        store = VerdictCache()
        q = PackingQuery((3, 3), (((2, 1), (1, 2)),))
        first = check_feasible(q, cache=store)
        second = check_feasible(q, cache=store)
        assert not first.cache_hit and second.cache_hit
        assert first.outcome == second.outcome

    def test_permuted_query_hits_cache(self):
        store = VerdictCache()
        check_feasible(PackingQuery((3, 3), (((2, 1), (1, 1)),)), cache=store)
        hit = check_feasible(PackingQuery((3, 3), (((1, 1), (2, 1)),)), cache=store)
        assert hit.cache_hit

    def test_cached_certificate_remains_valid(self):
        # the certificate must be remapped onto the permuted item order
        store = VerdictCache()
        a = PackingQuery((4, 4), (((2, 1), (1, 3), (1, 1)),))
        b = PackingQuery((4, 4), (((1, 1), (2, 1), (1, 3)),))
        va = check_feasible(a, cache=store)
        vb = check_feasible(b, cache=store)
        assert va.feasible and vb.feasible and vb.cache_hit
        assert validate_packing(b, vb.certificate) == []

    def test_cache_transparency(self):
        rng = random.Random(31)
        store = VerdictCache()
        for _ in range(80):
            q = random_query(rng)
            lifo = rng.random() < 0.5
            with_cache = check_feasible(q, lifo=lifo, cache=store)
            without = check_feasible(q, lifo=lifo, cache=False)
            assert with_cache.outcome == without.outcome

    def test_lru_bound(self):
        store = VerdictCache(maxsize=2)
        qs = [PackingQuery((3, 3), (((1, k),),)) for k in (1, 2, 3)]
        for q in qs:
            check_feasible(q, cache=store)
        assert len(store) <= 2
        assert not check_feasible(qs[0], cache=store).cache_hit


@st.composite
def queries(draw):
    H = draw(st.integers(1, 8))
    W = draw(st.integers(1, 8))
    n_groups = draw(st.integers(1, 3))
    groups = tuple(
        tuple(
            (draw(st.integers(1, W)), draw(st.integers(1, H)))
            for _ in range(draw(st.integers(1, 2)))
        )
        for _ in range(n_groups)
    )
    return PackingQuery((H, W), groups)


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(queries(), st.randoms(use_true_random=False))
    def test_within_group_permutation_invariance(self, q, rnd):
        permuted = tuple(
            tuple(rnd.sample(list(g), len(g))) for g in q.groups
        )
        shuffled = PackingQuery(q.surface, permuted)
        assert (
            check_feasible(q, cache=False).outcome
            == check_feasible(shuffled, cache=False).outcome
        )

    @settings(max_examples=60, deadline=None)
    @given(queries(), st.data())
    def test_group_deletion_monotonicity(self, q, data):
        if len(q.groups) < 2:
            return
        if not check_feasible(q, cache=False).feasible:
            return
        drop = data.draw(st.integers(0, len(q.groups) - 1))
        remaining = q.groups[:drop] + q.groups[drop + 1 :]
        smaller = PackingQuery(q.surface, remaining)
        assert check_feasible(smaller, cache=False).feasible

    @settings(max_examples=60, deadline=None)
    @given(queries())
    def test_lifo_false_is_a_relaxation(self, q):
        if check_feasible(q, cache=False).feasible:
            assert check_feasible(q, lifo=False, cache=False).feasible

    @settings(max_examples=40, deadline=None)
    @given(queries())
    def test_push_normalization(self, q):
        verdict = check_feasible(q, cache=False)
        if not verdict.feasible:
            return
        normalized = push_normalize(q, verdict.certificate)
        assert validate_packing(q, normalized) == []
        dims = [d for g in q.groups for d in g]
        xs, ys = normal_positions(dims, q.surface)
        for p in normalized:
            assert p.x in xs and p.y in ys

    @settings(max_examples=60, deadline=None)
    @given(queries())
    def test_verdicts_are_deterministic(self, q):
        a = check_feasible(q, cache=False)
        b = check_feasible(q, cache=False)
        assert a.outcome == b.outcome and a.certificate == b.certificate
