"""Exact 2D orthogonal packing feasibility with the LIFO sequential-unloading rule.

Geometry convention (fixed for the whole project): x spans the width W,
y spans the length H, the unloading door sits at y = H, and extraction moves
items in the +y direction. Orientation is fixed; items never rotate.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

DEFAULT_NODE_LIMIT = 5_000_000

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNDECIDED = "undecided"


@dataclass(frozen=True)
class PackingQuery:
    """Ordered loading problem: groups[0] is unloaded first."""

    surface: tuple[int, int]  # (H, W)
    groups: tuple[tuple[tuple[int, int], ...], ...]  # per group: (w, h) items

    def __post_init__(self):
        H, W = self.surface
        if H < 1 or W < 1:
            raise ValueError("degenerate surface")
        if not self.groups or any(not g for g in self.groups):
            raise ValueError("groups must be non-empty")
        for g in self.groups:
            for w, h in g:
                if w < 1 or h < 1 or w > W or h > H:
                    raise ValueError(f"item {w}x{h} does not fit surface W={W}, H={H}")

    @property
    def item_count(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def total_area(self) -> int:
        return sum(w * h for g in self.groups for w, h in g)


@dataclass(frozen=True)
class Placement:
    group: int
    item: int
    x: int
    y: int


@dataclass(frozen=True)
class PackingVerdict:
    outcome: str  # FEASIBLE | INFEASIBLE | UNDECIDED
    certificate: tuple[Placement, ...] | None
    nodes: int
    cache_hit: bool = False

    @property
    def feasible(self) -> bool:
        return self.outcome == FEASIBLE

    @property
    def decided(self) -> bool:
        return self.outcome != UNDECIDED


def lifo_blocks(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    """True iff b (unloaded later) obstructs extraction of a (unloaded earlier).

    a and b are (x, y, w, h) rectangles. b blocks a when their x-intervals
    overlap and b is not entirely behind a (touching is non-blocking).
    """
    xa, ya, wa, _ = a
    xb, yb, wb, hb = b
    if xa + wa <= xb or xb + wb <= xa:
        return False
    return yb + hb > ya


def canonical_key(q: PackingQuery):
    """Cache key invariant to within-group item permutation."""
    H, W = q.surface
    return (H, W, tuple(tuple(sorted(g, key=lambda d: (d[1], d[0]))) for g in q.groups))


def normal_positions(
    dims: list[tuple[int, int]], surface: tuple[int, int]
) -> tuple[list[int], list[int]]:
    """Candidate coordinates: subset sums of widths below W and heights below H."""
    H, W = surface
    xbits = 1
    ybits = 1
    for w, h in dims:
        xbits |= xbits << w
        ybits |= ybits << h
    xs = [x for x in range(W) if (xbits >> x) & 1]
    ys = [y for y in range(H) if (ybits >> y) & 1]
    return xs, ys


# ---------------------------------------------------------------------------
# Bitmask geometry helpers (one mask bit per surface cell, index y*W + x)

_rect_masks: dict[tuple[int, int], dict[tuple[int, int, int, int], int]] = {}
_rows_ge: dict[tuple[int, int], list[int]] = {}


def _surface_tables(surface: tuple[int, int]):
    H, W = surface
    if surface not in _rows_ge:
        full_row = (1 << W) - 1
        tails = []
        for y in range(H + 1):
            m = 0
            for yy in range(y, H):
                m |= full_row << (yy * W)
            tails.append(m)
        _rows_ge[surface] = tails
        _rect_masks[surface] = {}
    return _rect_masks[surface], _rows_ge[surface]


def _rect_mask(cache: dict, surface: tuple[int, int], x: int, y: int, w: int, h: int) -> int:
    key = (x, y, w, h)
    m = cache.get(key)
    if m is None:
        H, W = surface
        base = ((1 << w) - 1) << x
        m = 0
        for yy in range(y, y + h):
            m |= base << (yy * W)
        cache[key] = m
    return m


def _strip_mask(cache: dict, surface: tuple[int, int], rows_ge: list[int], x: int, y: int, w: int) -> int:
    # Extraction strip of an item at (x, y): its x-span, from y to the door.
    H, W = surface
    return _rect_mask(cache, surface, x, 0, w, H) & rows_ge[y]


# ---------------------------------------------------------------------------
# Verdict cache


class VerdictCache:
    """Bounded LRU over (canonical key, lifo flag). Undecided results are not kept."""

    def __init__(self, maxsize: int = 1_000_000):
        self.maxsize = maxsize
        self._store: OrderedDict = OrderedDict()
        self.hits = 0
        self.misses = 0

    def get(self, key):
        entry = self._store.get(key)
        if entry is not None:
            self._store.move_to_end(key)
            self.hits += 1
        else:
            self.misses += 1
        return entry

    def put(self, key, value):
        self._store[key] = value
        self._store.move_to_end(key)
        if len(self._store) > self.maxsize:
            self._store.popitem(last=False)

    def __len__(self):
        return len(self._store)

    def clear(self):
        self._store.clear()
        self.hits = 0
        self.misses = 0


default_cache = VerdictCache()


class _NodeLimit(Exception):
    pass


def banded_certificate(q: PackingQuery, lifo: bool = True) -> tuple[Placement, ...] | None:
    """Greedy sufficient check: shelf-pack each group into its own y-band,
    later-unloaded groups closer to the floor. Fast path only; None on failure."""
    H, W = q.surface
    placements: list[Placement] = []
    y_base = 0
    group_order = (
        range(len(q.groups) - 1, -1, -1) if lifo else range(len(q.groups))
    )
    for g in group_order:
        group = q.groups[g]
        members = sorted(range(len(group)), key=lambda m: (-group[m][1], -group[m][0], m))
        shelves: list[list[int]] = []  # [y, used_width, height]
        for m in members:
            w, h = group[m]
            placed = False
            for shelf in shelves:
                if shelf[1] + w <= W and h <= shelf[2]:
                    placements.append(Placement(g, m, x=shelf[1], y=shelf[0]))
                    shelf[1] += w
                    placed = True
                    break
            if not placed:
                new_y = shelves[-1][0] + shelves[-1][2] if shelves else y_base
                if new_y + h > H:
                    return None
                shelves.append([new_y, w, h])
                placements.append(Placement(g, m, x=0, y=new_y))
        if shelves:
            y_base = shelves[-1][0] + shelves[-1][2]
    if not lifo:
        # bands in visit order are fine without LIFO; nothing more to check
        pass
    cert = tuple(sorted(placements, key=lambda p: (p.group, p.item)))
    return cert if not validate_packing(q, cert, lifo=lifo) else None


def check_feasible(
    q: PackingQuery,
    lifo: bool = True,
    node_limit: int = DEFAULT_NODE_LIMIT,
    cache: VerdictCache | bool = True,
) -> PackingVerdict:
    """Exact feasibility decision by depth-first branch and bound.

    Items are placed group by group in reverse visit order (the deepest-loaded
    group first), within a group by non-increasing area; candidate coordinates
    are restricted to normal positions, which is complete for this search by
    push-normalization. Under LIFO, free cells beneath the top edge of an
    already-placed later-unloaded item are unusable by every remaining item,
    which gives the dominant area prune.
    """
    store: VerdictCache | None
    if cache is True:
        store = default_cache
    elif cache is False:
        store = None
    else:
        store = cache

    key = None
    if store is not None:
        key = (canonical_key(q), lifo)
        entry = store.get(key)
        if entry is not None:
            outcome, canon_cert = entry
            cert = _from_canonical(q, canon_cert) if canon_cert is not None else None
            return PackingVerdict(outcome, cert, nodes=0, cache_hit=True)

    H, W = q.surface
    area = H * W

    def finish(outcome: str, cert) -> PackingVerdict:
        if store is not None:
            store.put(key, (outcome, _to_canonical(q, cert) if cert else None))
        return PackingVerdict(outcome, cert, nodes=nodes)

    nodes = 0
    if q.total_area > area:
        return finish(INFEASIBLE, None)

    greedy = banded_certificate(q, lifo=lifo)
    if greedy is not None:
        return finish(FEASIBLE, greedy)

    order = []
    for g, group in enumerate(q.groups):
        members = sorted(
            range(len(group)),
            key=lambda m: (-group[m][0] * group[m][1], group[m][1], group[m][0], m),
        )
        order.append([(g, m, *group[m]) for m in members])
    order = [entry for g in sorted(range(len(order)), reverse=True) for entry in order[g]]
    suffix_area = [0] * (len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        suffix_area[k] = suffix_area[k + 1] + order[k][2] * order[k][3]

    full_mask = (1 << (H * W)) - 1
    all_dims = [(w, h) for grp in q.groups for w, h in grp]
    xs_all, ys_all = normal_positions(all_dims, q.surface)
    placements: list[tuple[int, int, int, int] | None] = [None] * len(order)

    # base bit pattern per (w, h); a rect at (x, y) is the base shifted by
    # y*W + x (rows never wrap because x + w <= W is enforced)
    bases: dict[tuple[int, int], int] = {}

    def base_mask(w: int, h: int) -> int:
        m = bases.get((w, h))
        if m is None:
            row = (1 << w) - 1
            m = 0
            for r in range(h):
                m |= row << (r * W)
            bases[(w, h)] = m
        return m

    def dfs(k: int, occ: int, shadow: int, waste: int) -> bool:
        nonlocal nodes
        if k == len(order):
            return True
        g, m, w, h = order[k]
        if k > 0 and order[k - 1][0] != g:
            # previous (later-unloaded) group complete: extend the shadow with
            # everything beneath each of its items' top edges
            if lifo:
                kk = k - 1
                while kk >= 0 and order[kk][0] == order[k - 1][0]:
                    px, py, pw, ph = placements[kk]
                    shadow |= base_mask(pw, py + ph) << px
                    kk -= 1
                waste = ((shadow & ~occ) & full_mask).bit_count()
        if suffix_area[k] > area - occ.bit_count() - waste:
            return False
        min_off = -1
        if k > 0 and order[k - 1][0] == g and order[k - 1][2:] == (w, h):
            px, py, _, _ = placements[k - 1]
            min_off = py * W + px  # lexicographic (y, x) symmetry break
        blocked = occ | shadow if lifo else occ
        base = base_mask(w, h)
        ymax = H - h
        xmax = W - w
        local_limit = node_limit
        for y in ys_all:
            if y > ymax:
                break
            rowoff = y * W
            for x in xs_all:
                if x > xmax:
                    break
                off = rowoff + x
                if off < min_off:
                    continue
                nodes += 1
                if nodes > local_limit:
                    raise _NodeLimit
                rect = base << off
                if rect & blocked:
                    continue
                placements[k] = (x, y, w, h)
                if dfs(k + 1, occ | rect, shadow, waste):
                    return True
        placements[k] = None
        return False

    try:
        found = dfs(0, 0, 0, 0)
    except _NodeLimit:
        return PackingVerdict(UNDECIDED, None, nodes=nodes)

    if found:
        cert = tuple(
            Placement(group=g, item=m, x=placements[k][0], y=placements[k][1])
            for k, (g, m, _, _) in enumerate(order)
        )
        cert = tuple(sorted(cert, key=lambda p: (p.group, p.item)))
        return finish(FEASIBLE, cert)
    return finish(INFEASIBLE, None)


def _group_sort_indices(group) -> list[int]:
    return sorted(range(len(group)), key=lambda m: (group[m][1], group[m][0], m))


def _to_canonical(q: PackingQuery, cert: tuple[Placement, ...]):
    """Re-index a certificate onto the canonical (h, w)-sorted item order."""
    by_pos = {(p.group, p.item): p for p in cert}
    out = []
    for g, group in enumerate(q.groups):
        for canon_m, actual_m in enumerate(_group_sort_indices(group)):
            p = by_pos[(g, actual_m)]
            out.append(Placement(group=g, item=canon_m, x=p.x, y=p.y))
    return tuple(out)


def _from_canonical(q: PackingQuery, canon_cert) -> tuple[Placement, ...]:
    by_pos = {(p.group, p.item): p for p in canon_cert}
    out = []
    for g, group in enumerate(q.groups):
        for canon_m, actual_m in enumerate(_group_sort_indices(group)):
            p = by_pos[(g, canon_m)]
            out.append(Placement(group=g, item=actual_m, x=p.x, y=p.y))
    return tuple(sorted(out, key=lambda p: (p.group, p.item)))


# ---------------------------------------------------------------------------
# Validation and normalization


def validate_packing(
    q: PackingQuery, placements, lifo: bool = True
) -> list[tuple[str, tuple]]:
    """All violations among out-of-bounds, pairwise overlap, and LIFO blocking."""
    if len(placements) != q.item_count:
        raise ValueError(
            f"expected {q.item_count} placements, got {len(placements)}"
        )
    H, W = q.surface
    rects = []
    seen = set()
    for p in placements:
        if (p.group, p.item) in seen:
            raise ValueError(f"duplicate placement for item {(p.group, p.item)}")
        seen.add((p.group, p.item))
        w, h = q.groups[p.group][p.item]
        rects.append((p, (p.x, p.y, w, h)))

    violations: list[tuple[str, tuple]] = []
    for p, (x, y, w, h) in rects:
        if x < 0 or y < 0 or x + w > W or y + h > H:
            violations.append(("bounds", ((p.group, p.item),)))
    for i in range(len(rects)):
        pi, ri = rects[i]
        for j in range(i + 1, len(rects)):
            pj, rj = rects[j]
            if _overlap(ri, rj):
                violations.append(("overlap", ((pi.group, pi.item), (pj.group, pj.item))))
    if lifo:
        for pa, ra in rects:
            for pb, rb in rects:
                if pa.group < pb.group and lifo_blocks(ra, rb):
                    violations.append(("lifo", ((pa.group, pa.item), (pb.group, pb.item))))
    return violations


def _overlap(a: tuple[int, int, int, int], b: tuple[int, int, int, int]) -> bool:
    xa, ya, wa, ha = a
    xb, yb, wb, hb = b
    return xa < xb + wb and xb < xa + wa and ya < yb + hb and yb < ya + ha


def push_normalize(q: PackingQuery, placements, lifo: bool = True) -> list[Placement]:
    """Fixpoint of unit moves in -y (then -x) that preserve validity.

    The result has y-coordinates in the subset sums of heights and
    x-coordinates in the subset sums of widths (the completeness lemma
    behind normal-position search).
    """
    current = list(placements)
    if validate_packing(q, current, lifo=lifo):
        raise ValueError("can only normalize a valid packing")

    def try_move(idx: int, dx: int, dy: int) -> bool:
        p = current[idx]
        moved = Placement(p.group, p.item, p.x + dx, p.y + dy)
        if moved.x < 0 or moved.y < 0:
            return False
        trial = current[:idx] + [moved] + current[idx + 1:]
        if validate_packing(q, trial, lifo=lifo):
            return False
        current[idx] = moved
        return True

    outer = True
    while outer:
        outer = False
        settling = True
        while settling:
            settling = any(try_move(i, 0, -1) for i in range(len(current)))
            outer = outer or settling
        for i in range(len(current)):
            if try_move(i, -1, 0):
                outer = True
    return current


# ---------------------------------------------------------------------------
# Brute-force oracle

ORACLE_MAX_ITEMS = 6
ORACLE_MAX_AREA = 144


def oracle_check(q: PackingQuery, lifo: bool = True) -> bool:
    """Exhaustive DFS over the full integer grid; exact by construction."""
    H, W = q.surface
    if q.item_count > ORACLE_MAX_ITEMS or H * W > ORACLE_MAX_AREA:
        raise ValueError("query exceeds oracle size guard")
    if q.total_area > H * W:
        return False

    flat = [
        (g, w, h) for g, group in enumerate(q.groups) for (w, h) in group
    ]
    placed: list[tuple[int, tuple[int, int, int, int]]] = []

    def ok(g: int, rect: tuple[int, int, int, int]) -> bool:
        for g2, r2 in placed:
            if _overlap(rect, r2):
                return False
            if lifo and g2 != g:
                if g < g2 and lifo_blocks(rect, r2):
                    return False
                if g2 < g and lifo_blocks(r2, rect):
                    return False
        return True

    def dfs(k: int) -> bool:
        if k == len(flat):
            return True
        g, w, h = flat[k]
        for y in range(H - h + 1):
            for x in range(W - w + 1):
                rect = (x, y, w, h)
                if ok(g, rect):
                    placed.append((g, rect))
                    if dfs(k + 1):
                        return True
                    placed.pop()
        return False

    return dfs(0)
