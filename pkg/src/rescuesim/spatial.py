"""R-tree over 2D integer points with insert, remove, and range query.

Guttman-style tree with quadratic node splits and condense-and-reinsert
deletion. Points are unique; the observable contract is the query result
set. Iteration and query order are deterministic for reproducible runs.
"""

from __future__ import annotations

Point = tuple[int, int]
Rect = tuple[int, int, int, int]  # inclusive (min_x, min_y, max_x, max_y)


def _mbr_of_point(p: Point) -> Rect:
    return (p[0], p[1], p[0], p[1])


def _union(a: Rect, b: Rect) -> Rect:
    return (min(a[0], b[0]), min(a[1], b[1]), max(a[2], b[2]), max(a[3], b[3]))


def _area(r: Rect) -> int:
    return (r[2] - r[0]) * (r[3] - r[1])


def _intersects(a: Rect, b: Rect) -> bool:
    return a[0] <= b[2] and b[0] <= a[2] and a[1] <= b[3] and b[1] <= a[3]


def _contains_point(r: Rect, p: Point) -> bool:
    return r[0] <= p[0] <= r[2] and r[1] <= p[1] <= r[3]


class _Node:
    __slots__ = ("leaf", "entries", "mbr")

    def __init__(self, leaf: bool):
        self.leaf = leaf
        self.entries: list = []
        self.mbr: Rect | None = None

    def recompute_mbr(self):
        if not self.entries:
            self.mbr = None
            return
        if self.leaf:
            rects = [_mbr_of_point(p) for p in self.entries]
        else:
            rects = [c.mbr for c in self.entries]
        mbr = rects[0]
        for r in rects[1:]:
            mbr = _union(mbr, r)
        self.mbr = mbr

    def entry_mbrs(self) -> list[Rect]:
        if self.leaf:
            return [_mbr_of_point(p) for p in self.entries]
        return [c.mbr for c in self.entries]


class RTreeIndex:
    """Dynamic spatial index over unique integer points."""

    def __init__(self, node_capacity: int = 16):
        if node_capacity < 4:
            raise ValueError("node capacity must be at least 4")
        self.capacity = node_capacity
        self.min_fill = max(2, node_capacity // 4)
        self._root = _Node(leaf=True)
        self._members: set[Point] = set()

    def __len__(self) -> int:
        return len(self._members)

    def __contains__(self, point: Point) -> bool:
        return tuple(point) in self._members

    def __iter__(self):
        out: list[Point] = []
        self._collect(self._root, out)
        return iter(out)

    def insert(self, point: Point) -> bool:
        """Add a point; returns False if it was already stored."""
        point = (int(point[0]), int(point[1]))
        if point in self._members:
            return False
        self._members.add(point)
        split = self._insert(self._root, point)
        if split is not None:
            old_root = self._root
            self._root = _Node(leaf=False)
            self._root.entries = [old_root, split]
            self._root.recompute_mbr()
        return True

    def remove(self, point: Point) -> bool:
        """Drop a point; returns False if it was not stored."""
        point = (int(point[0]), int(point[1]))
        if point not in self._members:
            return False
        self._members.discard(point)
        found, orphans = self._delete(self._root, point)
        assert found, "membership set out of sync with tree"
        for node in orphans:
            reinsert: list[Point] = []
            self._collect(node, reinsert)
            for p in reinsert:
                split = self._insert(self._root, p)
                if split is not None:
                    old_root = self._root
                    self._root = _Node(leaf=False)
                    self._root.entries = [old_root, split]
                    self._root.recompute_mbr()
        while not self._root.leaf and len(self._root.entries) == 1:
            self._root = self._root.entries[0]
        return True

    def query(self, rect: Rect) -> list[Point]:
        """All stored points inside the inclusive rectangle."""
        out: list[Point] = []
        self._query(self._root, rect, out)
        return out

    # internals

    def _collect(self, node: _Node, out: list[Point]):
        if node.leaf:
            out.extend(node.entries)
            return
        for child in node.entries:
            self._collect(child, out)

    def _query(self, node: _Node, rect: Rect, out: list[Point]):
        if node.mbr is None or not _intersects(node.mbr, rect):
            return
        if node.leaf:
            out.extend(p for p in node.entries if _contains_point(rect, p))
            return
        for child in node.entries:
            self._query(child, rect, out)

    def _insert(self, node: _Node, point: Point) -> _Node | None:
        px, py = point
        if node.leaf:
            node.entries.append(point)
            if node.mbr is None:
                node.mbr = (px, py, px, py)
            else:
                x0, y0, x1, y1 = node.mbr
                node.mbr = (min(x0, px), min(y0, py), max(x1, px), max(y1, py))
        else:
            child = self._choose_child(node, px, py)
            split = self._insert(child, point)
            x0, y0, x1, y1 = node.mbr
            node.mbr = (min(x0, px), min(y0, py), max(x1, px), max(y1, py))
            if split is not None:
                node.entries.append(split)
        if len(node.entries) > self.capacity:
            return self._split(node)
        return None

    @staticmethod
    def _choose_child(node: _Node, px: int, py: int) -> _Node:
        best = None
        best_grow = None
        best_area = None
        for child in node.entries:
            x0, y0, x1, y1 = child.mbr
            area = (x1 - x0) * (y1 - y0)
            grow = (max(x1, px) - min(x0, px)) * (max(y1, py) - min(y0, py)) - area
            if best_grow is None or grow < best_grow or \
                    (grow == best_grow and area < best_area):
                best = child
                best_grow = grow
                best_area = area
        return best

    def _split(self, node: _Node) -> _Node:
        """Quadratic split: keep one group in `node`, return the other."""
        entries = node.entries
        mbrs = node.entry_mbrs()
        n = len(entries)
        areas = [(r[2] - r[0]) * (r[3] - r[1]) for r in mbrs]

        worst = None
        seeds = (0, 1)
        for i in range(n):
            xi0, yi0, xi1, yi1 = mbrs[i]
            for j in range(i + 1, n):
                xj0, yj0, xj1, yj1 = mbrs[j]
                dead = (
                    (max(xi1, xj1) - min(xi0, xj0)) * (max(yi1, yj1) - min(yi0, yj0))
                    - areas[i] - areas[j]
                )
                if worst is None or dead > worst:
                    worst = dead
                    seeds = (i, j)

        group_a = [seeds[0]]
        group_b = [seeds[1]]
        mbr_a = mbrs[seeds[0]]
        mbr_b = mbrs[seeds[1]]
        rest = [k for k in range(n) if k not in seeds]
        while rest:
            remaining = len(rest)
            if len(group_a) + remaining <= self.min_fill:
                group_a.extend(rest)
                for k in rest:
                    mbr_a = _union(mbr_a, mbrs[k])
                break
            if len(group_b) + remaining <= self.min_fill:
                group_b.extend(rest)
                for k in rest:
                    mbr_b = _union(mbr_b, mbrs[k])
                break
            pick = None
            pick_diff = -1
            for k in rest:
                da = _area(_union(mbr_a, mbrs[k])) - _area(mbr_a)
                db = _area(_union(mbr_b, mbrs[k])) - _area(mbr_b)
                diff = abs(da - db)
                if diff > pick_diff:
                    pick_diff = diff
                    pick = k
            rest.remove(pick)
            da = _area(_union(mbr_a, mbrs[pick])) - _area(mbr_a)
            db = _area(_union(mbr_b, mbrs[pick])) - _area(mbr_b)
            if da < db or (da == db and len(group_a) <= len(group_b)):
                group_a.append(pick)
                mbr_a = _union(mbr_a, mbrs[pick])
            else:
                group_b.append(pick)
                mbr_b = _union(mbr_b, mbrs[pick])

        sibling = _Node(leaf=node.leaf)
        sibling.entries = [entries[k] for k in group_b]
        sibling.mbr = mbr_b
        node.entries = [entries[k] for k in group_a]
        node.mbr = mbr_a
        return sibling

    def _delete(self, node: _Node, point: Point) -> tuple[bool, list[_Node]]:
        if node.leaf:
            if point in node.entries:
                node.entries.remove(point)
                node.recompute_mbr()
                return True, []
            return False, []
        for child in list(node.entries):
            if child.mbr is not None and _contains_point(child.mbr, point):
                found, orphans = self._delete(child, point)
                if found:
                    low = self.min_fill if child.leaf else 2
                    if len(child.entries) < low and node is not child:
                        node.entries.remove(child)
                        orphans.append(child)
                    node.recompute_mbr()
                    return True, orphans
        return False, []
