"""Finite depth truncations of rooted directed trees.

Vertices are numbered in BFS order: the root is 0, every level occupies a
contiguous id range, and within a level vertices are grouped by parent (in
parent id order) and then by generator order.  Consequently the children of
any vertex form a contiguous id range, and so do the descendants of a vertex
at any fixed generation.  Everything downstream relies on this layout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DepthExceeded, MalformedSpec

KINDS = ("path", "kary_root", "comb", "widening", "explicit")

EXCEEDS_TRUNCATION = "exceeds-truncation"
UNBOUNDED_AT_TRUNCATION = "unbounded-at-truncation"


@dataclass(frozen=True)
class TreeGenSpec:
    """Declarative description of a tree family plus a truncation depth.

    ``kary_root`` accepts an optional ``stem``: a chain of ``stem`` edges from
    the root before the k-fold branching.  ``stem=0`` is the tree with k arms
    hanging off the root.
    """

    kind: str
    truncate_depth: int = 0
    k: int | None = None
    stem: int = 0
    edges: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise MalformedSpec(f"unknown tree kind {self.kind!r}")
        if not isinstance(self.truncate_depth, (int, np.integer)) or self.truncate_depth < 0:
            raise MalformedSpec("truncate_depth must be a non-negative integer")
        if self.kind == "kary_root":
            if self.k is None or int(self.k) < 2:
                raise MalformedSpec("kary_root requires k >= 2")
            if self.stem < 0:
                raise MalformedSpec("stem must be non-negative")
        if self.kind == "explicit":
            edges = tuple((int(p), int(c)) for p, c in self.edges)
            object.__setattr__(self, "edges", edges)

    def with_depth(self, depth: int) -> "TreeGenSpec":
        return replace(self, truncate_depth=int(depth))

    @classmethod
    def from_dict(cls, data: dict) -> "TreeGenSpec":
        if not isinstance(data, dict) or "kind" not in data:
            raise MalformedSpec("tree spec must be an object with a 'kind' field")
        try:
            return cls(
                kind=data["kind"],
                truncate_depth=int(data.get("truncate_depth", 0)),
                k=None if data.get("k") is None else int(data["k"]),
                stem=int(data.get("stem", 0)),
                edges=tuple(tuple(e) for e in data.get("edges", ())),
            )
        except (TypeError, ValueError) as exc:
            raise MalformedSpec(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "TreeGenSpec":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise MalformedSpec(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "truncate_depth": self.truncate_depth}
        if self.kind == "kary_root":
            out["k"] = self.k
            if self.stem:
                out["stem"] = self.stem
        if self.kind == "explicit":
            out["edges"] = [list(e) for e in self.edges]
        return out


@dataclass(frozen=True, eq=False)
class RootedTree:
    parent: np.ndarray
    depth: np.ndarray
    child_ptr: np.ndarray
    level_ptr: np.ndarray
    frontier: np.ndarray
    truncation_depth: int
    spec: TreeGenSpec
    labels: np.ndarray | None = field(default=None)

    root = 0

    @property
    def vertex_count(self) -> int:
        return len(self.parent)

    @property
    def level_sizes(self) -> np.ndarray:
        return np.diff(self.level_ptr)

    @property
    def levels(self) -> list[range]:
        lp = self.level_ptr
        return [range(int(lp[i]), int(lp[i + 1])) for i in range(len(lp) - 1)]

    @property
    def num_children(self) -> np.ndarray:
        return np.diff(self.child_ptr)

    def children(self, v: int) -> range:
        return range(int(self.child_ptr[v]), int(self.child_ptr[v + 1]))

    def size_to_depth(self, N: int) -> int:
        """Number of vertices of depth <= N (a prefix of the id range)."""
        if N < 0:
            return 0
        N = min(N, self.truncation_depth)
        return int(self.level_ptr[N + 1])

    def ancestors(self, v: int) -> list[int]:
        """par^0(v), par^1(v), ..., root."""
        chain = [int(v)]
        while self.parent[chain[-1]] >= 0:
            chain.append(int(self.parent[chain[-1]]))
        return chain

    def descendant_ranges(self, w: int):
        """Yield (lo, hi) id ranges of Chi<j>(w) for j = 0, 1, ... within the truncation."""
        lo, hi = int(w), int(w) + 1
        while lo < hi:
            yield lo, hi
            lo, hi = int(self.child_ptr[lo]), int(self.child_ptr[hi])

    def check(self) -> None:
        """Assert the structural invariants; used by tests."""
        n = self.vertex_count
        assert self.parent[0] == -1 and np.all(self.parent[1:] >= 0)
        assert np.all(self.parent[1:] < np.arange(1, n))
        assert self.depth[0] == 0
        assert np.all(self.depth[1:] == self.depth[self.parent[1:]] + 1)
        assert self.level_ptr[-1] == n and self.level_sizes.sum() == n
        for d, lvl in enumerate(self.levels):
            assert np.all(self.depth[lvl.start:lvl.stop] == d)
        for v in range(n):
            for c in self.children(v):
                assert self.parent[c] == v
        assert self.child_ptr[-1] == n
        assert not np.any(self.frontier & (self.depth != self.truncation_depth))


def _assemble(parent, depth, frontier, truncation_depth, spec, labels=None) -> RootedTree:
    parent = np.ascontiguousarray(parent, dtype=np.int64)
    depth = np.ascontiguousarray(depth, dtype=np.int64)
    n = len(parent)
    counts = np.bincount(parent[1:], minlength=n) if n > 1 else np.zeros(n, dtype=np.int64)
    child_ptr = np.empty(n + 1, dtype=np.int64)
    child_ptr[0] = 1
    np.cumsum(counts, out=child_ptr[1:])
    child_ptr[1:] += 1
    level_sizes = np.bincount(depth, minlength=truncation_depth + 1)
    level_ptr = np.zeros(len(level_sizes) + 1, dtype=np.int64)
    np.cumsum(level_sizes, out=level_ptr[1:])
    for arr in (parent, depth, child_ptr, level_ptr, frontier):
        arr.setflags(write=False)
    return RootedTree(parent, depth, child_ptr, level_ptr, frontier,
                      int(truncation_depth), spec, labels)


def _path(N):
    parent = np.arange(-1, N, dtype=np.int64)
    depth = np.arange(N + 1, dtype=np.int64)
    frontier = depth == N
    return parent, depth, frontier


def _kary(k, stem, N):
    s = min(stem, N)
    parent = [np.arange(-1, s, dtype=np.int64)]
    depth = [np.arange(s + 1, dtype=np.int64)]
    arm_levels = N - stem
    if arm_levels > 0:
        ids = stem + 1 + np.arange(arm_levels * k, dtype=np.int64)
        lvl = np.arange(arm_levels * k, dtype=np.int64) // k
        parent.append(np.where(lvl == 0, stem, ids - k))
        depth.append(stem + 1 + lvl)
    parent = np.concatenate(parent)
    depth = np.concatenate(depth)
    return parent, depth, depth == N


def _comb(N):
    ids = np.arange(2 * N + 1, dtype=np.int64)
    depth = (ids + 1) // 2
    # trunk vertex at depth d has id 2d-1 (root is 0); its leaf child follows it
    trunk_prev = np.maximum(2 * (depth - 1) - 1, 0)
    parent = np.where(ids == 0, -1, trunk_prev)
    frontier = np.zeros(len(ids), dtype=bool)
    frontier[2 * N - 1 if N > 0 else 0] = True
    return parent, depth, frontier


def _widening(N):
    sizes = np.maximum(np.arange(N + 1, dtype=np.int64), 1)
    level_ptr = np.concatenate([[0], np.cumsum(sizes)])
    depth = np.repeat(np.arange(N + 1, dtype=np.int64), sizes)
    # every vertex of level d >= 1 hangs off the trunk vertex v_{d-1}, the first of level d-1
    parent = np.where(depth == 0, -1, level_ptr[np.maximum(depth - 1, 0)])
    frontier = np.zeros(len(depth), dtype=bool)
    frontier[level_ptr[N]] = True
    return parent, depth, frontier


def _explicit(edges):
    children: dict[int, list[int]] = {0: []}
    parent_of: dict[int, int] = {}
    seen = set()
    for p, c in edges:
        if p < 0 or c < 0:
            raise MalformedSpec(f"negative vertex index in edge ({p}, {c})")
        if p == c:
            raise MalformedSpec(f"self-loop at vertex {p}")
        if (p, c) in seen:
            raise MalformedSpec(f"duplicate child edge ({p}, {c})")
        seen.add((p, c))
        if c in parent_of:
            raise MalformedSpec(f"vertex {c} has two parents ({parent_of[c]} and {p})")
        parent_of[c] = p
        children.setdefault(p, []).append(c)
        children.setdefault(c, [])
    if 0 in parent_of:
        raise MalformedSpec("vertex 0 is the root and cannot have a parent")
    roots = sorted(v for v in children if v not in parent_of)
    if roots != [0]:
        raise MalformedSpec(f"multiple roots: {roots}")

    order, parent, depth = [0], [-1], [0]
    new_id = {0: 0}
    head = 0
    while head < len(order):
        v = order[head]
        for c in children[v]:
            new_id[c] = len(order)
            order.append(c)
            parent.append(new_id[v])
            depth.append(depth[head] + 1)
        head += 1
    if len(order) != len(children):
        missing = sorted(set(children) - set(new_id))
        raise MalformedSpec(f"vertices unreachable from root (cycle or disconnected): {missing[:10]}")
    depth = np.array(depth, dtype=np.int64)
    return (np.array(parent, dtype=np.int64), depth,
            np.zeros(len(order), dtype=bool), np.array(order, dtype=np.int64))


def build_tree(spec: TreeGenSpec) -> RootedTree:
    """Materialize the depth-``spec.truncate_depth`` restriction of the tree family."""
    N = spec.truncate_depth
    labels = None
    if spec.kind == "path":
        parent, depth, frontier = _path(N)
    elif spec.kind == "kary_root":
        parent, depth, frontier = _kary(int(spec.k), spec.stem, N)
    elif spec.kind == "comb":
        parent, depth, frontier = _comb(N)
    elif spec.kind == "widening":
        parent, depth, frontier = _widening(N)
    else:
        parent, depth, frontier, labels = _explicit(spec.edges)
        # explicit trees are complete finite objects; the requested depth is ignored
        N = int(depth.max())
    return _assemble(parent, depth, frontier, N, spec, labels)


# --- generator knowledge beyond the truncation --------------------------------


def continuation_counts(tree: RootedTree, v: int, depths: np.ndarray) -> np.ndarray:
    """Descendants of frontier vertex ``v`` at each absolute depth in ``depths`` (> N)."""
    depths = np.asarray(depths, dtype=np.int64)
    spec = tree.spec
    if not tree.frontier[v]:
        return np.zeros(len(depths), dtype=np.int64)
    if spec.kind == "path":
        return np.ones(len(depths), dtype=np.int64)
    if spec.kind == "kary_root":
        if tree.depth[v] <= spec.stem:
            return np.where(depths <= spec.stem, 1, int(spec.k)).astype(np.int64)
        return np.ones(len(depths), dtype=np.int64)
    if spec.kind == "comb":
        return np.full(len(depths), 2, dtype=np.int64)
    if spec.kind == "widening":
        return np.maximum(depths, 1)
    return np.zeros(len(depths), dtype=np.int64)


def eventual_count(tree: RootedTree, v: int) -> float:
    """Limit of continuation_counts(v, d) as d grows; math.inf when unbounded."""
    if not tree.frontier[v]:
        return 0
    kind = tree.spec.kind
    if kind == "widening":
        return math.inf
    if kind == "comb":
        return 2
    if kind == "kary_root" and tree.depth[v] <= tree.spec.stem:
        return int(tree.spec.k)
    return 1


def descendant_level_counts(tree: RootedTree, w: int, J: int) -> np.ndarray:
    """card(Chi<j>(w)) for j = 0..J, extended past the truncation by generator knowledge."""
    counts = np.zeros(J + 1, dtype=np.int64)
    frontier_desc = []
    for j, (lo, hi) in enumerate(tree.descendant_ranges(w)):
        if j > J:
            break
        counts[j] = hi - lo
        if tree.depth[w] + j == tree.truncation_depth:
            frontier_desc = np.flatnonzero(tree.frontier[lo:hi]) + lo
    dw = int(tree.depth[w])
    first = tree.truncation_depth - dw + 1
    if first <= J:
        depths = np.arange(first, J + 1, dtype=np.int64) + dw
        for u in frontier_desc:
            counts[first:] += continuation_counts(tree, int(u), depths)
    return counts


def frontier_descendants(tree: RootedTree, w: int) -> np.ndarray:
    for lo, hi in tree.descendant_ranges(w):
        if tree.depth[lo] == tree.truncation_depth:
            return np.flatnonzero(tree.frontier[lo:hi]) + lo
    return np.zeros(0, dtype=np.int64)


# --- metrics ------------------------------------------------------------------


@dataclass
class TreeMetrics:
    level_sizes: list[int]
    width: int | str
    branching_index: int | str
    is_leafless: bool
    branching_vertices: list[int]
    leaf_count: int

    def to_dict(self) -> dict:
        return {
            "level_sizes": self.level_sizes,
            "width": self.width,
            "branching_index": self.branching_index,
            "is_leafless": self.is_leafless,
            "branching_vertices": self.branching_vertices,
            "leaf_count": self.leaf_count,
        }


def compute_metrics(tree: RootedTree, spec: TreeGenSpec | None = None) -> TreeMetrics:
    spec = spec or tree.spec
    sizes = tree.level_sizes
    nch = tree.num_children
    branching = np.flatnonzero(nch >= 2)
    leaves = int(np.count_nonzero((nch == 0) & ~tree.frontier))

    if spec.kind == "path":
        width, k_T, leafless = 1, 0, True
    elif spec.kind == "kary_root":
        width, k_T, leafless = int(spec.k), spec.stem + 1, True
    elif spec.kind == "comb":
        width, k_T, leafless = 2, UNBOUNDED_AT_TRUNCATION, False
    elif spec.kind == "widening":
        width, k_T, leafless = EXCEEDS_TRUNCATION, UNBOUNDED_AT_TRUNCATION, False
    else:
        width = int(sizes.max())
        k_T = 1 + int(tree.depth[branching].max()) if len(branching) else 0
        leafless = leaves == 0

    return TreeMetrics(
        level_sizes=[int(s) for s in sizes],
        width=width,
        branching_index=k_T,
        is_leafless=leafless,
        branching_vertices=[int(v) for v in branching],
        leaf_count=leaves,
    )


def m_alpha_sequence(tree: RootedTree, alpha: float, J: int):
    """M_{alpha,j} = card(Chi<j>(root)) / (j+1)^alpha for j = 0..J, and its sup."""
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if J > tree.truncation_depth:
        raise DepthExceeded(f"J={J} exceeds truncation depth {tree.truncation_depth}")
    j = np.arange(J + 1, dtype=np.float64)
    values = tree.level_sizes[: J + 1] / (j + 1.0) ** alpha
    return values, float(values.max())


def enumerate_paths(tree: RootedTree, limit: int) -> list[list[int]]:
    """Up to ``limit`` maximal root-to-frontier (or root-to-leaf) chains, smallest child first."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    paths: list[list[int]] = []
    chain = [0]
    # next child to try below each chain vertex
    cursor = [int(tree.child_ptr[0])]
    while chain and len(paths) < limit:
        v = chain[-1]
        end = int(tree.child_ptr[v + 1])
        if int(tree.child_ptr[v]) == end and cursor[-1] == end:
            paths.append(list(chain))
            chain.pop()
            cursor.pop()
            continue
        if cursor[-1] < end:
            c = cursor[-1]
            cursor[-1] += 1
            chain.append(c)
            cursor.append(int(tree.child_ptr[c]))
        else:
            chain.pop()
            cursor.pop()
    return paths
