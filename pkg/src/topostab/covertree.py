"""Cover trees over points in the plane (any fixed dimension works).

Levels use base-2 scales. For every level i the set C_i of points with
top level >= i satisfies, with strict inequalities:

  nesting     C_i is a subset of C_{i-1}
  covering    every p in C_{i-1} has a parent q in C_i with d(p,q) < 2^i
  separation  distinct p, q in C_i have d(p,q) > 2^i

Behavior when a distance hits a power of two exactly is undefined; callers
with generic (random, float) data never encounter it.

Insertion is deterministic in input order. Exact duplicate points are
collapsed structurally and their multiplicity recorded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexes import ValidationReport
from .errors import EmptyInput


@dataclass
class CoverBall:
    """A tree node viewed at a level: center point plus its scale."""

    node: int          # index into tree.points
    level: int
    center: np.ndarray

    @property
    def radius(self) -> float:
        return 2.0 ** self.level

    @property
    def region_radius(self) -> float:
        # descendants of a level-i node all lie within 2^(i+1) of it
        return 2.0 ** (self.level + 1)


class CoverTree:
    def __init__(self, points: np.ndarray, multiplicity: np.ndarray):
        self.points = points
        self.multiplicity = multiplicity
        n = len(points)
        self.top = np.zeros(n, dtype=int)
        self.parent = np.full(n, -1, dtype=int)
        self.children: dict = {}
        self.min_child_level: dict = {}
        self.root = 0
        self.max_level = 0

    # -- construction ---------------------------------------------------

    def _dist(self, idx, p) -> np.ndarray:
        return np.linalg.norm(self.points[idx] - p, axis=1)

    def _insert(self, k: int):
        p = self.points[k]
        droot = float(np.linalg.norm(self.points[self.root] - p))
        while droot >= 2.0 ** self.max_level:
            self.max_level += 1
            self.top[self.root] = self.max_level

        cover_sets = {self.max_level: [self.root]}
        j = self.max_level
        while True:
            cand = list(cover_sets[j])
            for q in cover_sets[j]:
                cand.extend(self.children.get((q, j - 1), []))
            dists = self._dist(cand, p)
            near = [q for q, d in zip(cand, dists) if d < 2.0 ** j]
            if not near:
                break
            cover_sets[j - 1] = near
            j -= 1

        # attach at the deepest level whose cover set has a point in range
        for level in range(j - 1, self.max_level):
            cand = cover_sets[level + 1]
            dists = self._dist(cand, p)
            in_range = [(d, q) for q, d in zip(cand, dists)
                        if d < 2.0 ** (level + 1)]
            if in_range:
                _, q = min(in_range)
                self.top[k] = level
                self.parent[k] = q
                self.children.setdefault((q, level), []).append(k)
                prev = self.min_child_level.get(q, level)
                self.min_child_level[q] = min(prev, level)
                return
        raise AssertionError("unreachable: root always covers")

    # -- queries ---------------------------------------------------------

    @property
    def min_level(self) -> int:
        return int(self.top.min())

    def level_set(self, level: int) -> list:
        return [int(i) for i in np.flatnonzero(self.top >= level)]

    def root_ball(self) -> CoverBall:
        return CoverBall(node=self.root, level=self.max_level,
                         center=self.points[self.root])

    def _has_children_below(self, node: int, level: int) -> bool:
        return self.min_child_level.get(node, level + 1) <= level

    def ancestor_at(self, q: int, level: int) -> int:
        cur = q
        while self.top[cur] < level:
            cur = int(self.parent[cur])
        return cur

    def members(self, node: int, level: int) -> list:
        """Indices of all points whose level-`level` ancestor is this node."""
        return [q for q in range(len(self.points))
                if self.ancestor_at(q, level) == node]


def build(points) -> CoverTree:
    points = np.asarray(points, dtype=float)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    if len(points) == 0:
        raise EmptyInput("cover tree needs at least one point")

    seen: dict = {}
    unique = []
    counts = []
    for row in points:
        key = row.tobytes()
        if key in seen:
            counts[seen[key]] += 1
        else:
            seen[key] = len(unique)
            unique.append(row)
            counts.append(1)

    tree = CoverTree(np.array(unique), np.array(counts, dtype=int))
    for k in range(1, len(unique)):
        tree._insert(k)
    return tree


def descend(tree: CoverTree, ball: CoverBall) -> list:
    """Child balls at level-1: explicit children plus the node itself.

    A node with no structure below the current level is a leaf and yields
    nothing, which terminates any repeated self-descent.
    """
    if not tree._has_children_below(ball.node, ball.level - 1):
        return []
    out = [CoverBall(node=c, level=ball.level - 1, center=tree.points[c])
           for c in tree.children.get((ball.node, ball.level - 1), [])]
    out.append(CoverBall(node=ball.node, level=ball.level - 1,
                         center=tree.points[ball.node]))
    return out


def check_axioms(tree: CoverTree) -> ValidationReport:
    """Exhaustively verify nesting, covering, and separation."""
    lo, hi = tree.min_level, tree.max_level
    prev = None
    for level in range(hi, lo - 1, -1):
        cur = set(tree.level_set(level))
        if prev is not None and not prev.issubset(cur):
            return ValidationReport(
                False, f"nesting violated between {level + 1} and {level}")
        prev = cur

    for level in range(lo, hi + 1):
        idx = tree.level_set(level)
        if len(idx) > 1:
            pts = tree.points[idx]
            dist = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
            iu = np.triu_indices(len(idx), k=1)
            bad = np.flatnonzero(~(dist[iu] > 2.0 ** level))
            if len(bad):
                a, b = iu[0][bad[0]], iu[1][bad[0]]
                return ValidationReport(
                    False,
                    f"separation violated at level {level}: points "
                    f"{idx[a]}, {idx[b]} at distance {dist[a, b]}")

    for q in range(len(tree.points)):
        if q == tree.root:
            continue
        level = int(tree.top[q])
        par = int(tree.parent[q])
        if par < 0 or tree.top[par] < level + 1:
            return ValidationReport(
                False, f"covering violated: point {q} has no parent in "
                f"C_{level + 1}")
        d = float(np.linalg.norm(tree.points[q] - tree.points[par]))
        if not d < 2.0 ** (level + 1):
            return ValidationReport(
                False, f"covering violated: point {q} at distance {d} "
                f"from parent, level {level + 1}")
    return ValidationReport(True, "ok")
