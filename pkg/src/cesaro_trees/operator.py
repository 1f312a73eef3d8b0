"""The Cesaro operator C_T and its adjoint on a truncated tree.

(C f)(v) averages f over the ancestor chain of v, root to v inclusive, and
(C* g)(u) = sum over descendants-or-self v of u of g(v)/(dep(v)+1).  On the
truncation we work with the compression P_N C P_N: mass below depth N is
dropped, never approximated.  Series that do run past the truncation (domain
membership, norms of C f) are closed with generator knowledge of the infinite
tree plus integral-test tail enclosures.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import NotInDomain, TooLarge, TreeMismatch
from .series import Interval
from .tree import (
    RootedTree,
    TreeGenSpec,
    build_tree,
    continuation_counts,
    descendant_level_counts,
    eventual_count,
    frontier_descendants,
)

DENSE_CAP = 4096
SERIES_CAP = 10**6


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    tree: RootedTree

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.tree.vertex_count,):
            raise TreeMismatch(
                f"vector of length {amps.shape} does not match tree with "
                f"{self.tree.vertex_count} vertices"
            )
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zeros(cls, tree):
        return cls(np.zeros(tree.vertex_count, dtype=np.complex128), tree)

    @classmethod
    def basis(cls, tree, v):
        out = np.zeros(tree.vertex_count, dtype=np.complex128)
        out[v] = 1.0
        return cls(out, tree)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def inner(self, other: "StateVector") -> complex:
        """<self, other> = sum self(v) * conj(other(v))."""
        return complex(np.vdot(other.amplitudes, self.amplitudes))

    def to_json(self) -> str:
        return json.dumps([[float(z.real), float(z.imag)] for z in self.amplitudes])

    @classmethod
    def from_json(cls, text: str, tree: RootedTree) -> "StateVector":
        pairs = json.loads(text)
        amps = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
        return cls(amps, tree)


class CesaroContext:
    """Cached traversal orders for a tree; cheap to build, safe to share."""

    def __init__(self, tree: RootedTree):
        self.tree = tree
        # BFS ids already visit parents before children
        self.topo_order = np.arange(tree.vertex_count, dtype=np.int64)
        self.reverse_order = self.topo_order[::-1]

    def section_size(self, N: int | None) -> int:
        if N is None:
            return self.tree.vertex_count
        return self.tree.size_to_depth(N)


def _as_complex(x):
    return np.ascontiguousarray(x, dtype=np.complex128)


def cesaro_apply(tree: RootedTree, x: np.ndarray, n: int | None = None) -> np.ndarray:
    """P_N C P_N on the first ``n`` vertices (a depth prefix); raw arrays in and out."""
    n = tree.vertex_count if n is None else n
    x = _as_complex(x)
    out = np.empty(n, dtype=np.complex128)
    _kernels.ancestor_mean(tree.parent[:n], tree.depth[:n], x[:n], out)
    return out


def cesaro_adjoint(tree: RootedTree, x: np.ndarray, n: int | None = None) -> np.ndarray:
    n = tree.vertex_count if n is None else n
    x = _as_complex(x)
    out = np.empty(n, dtype=np.complex128)
    _kernels.descendant_sum(tree.parent[:n], tree.depth[:n], x[:n], out)
    return out


def ancestor_sums(tree: RootedTree, x: np.ndarray) -> np.ndarray:
    out = np.empty(tree.vertex_count, dtype=np.complex128)
    return _kernels.ancestor_mean(tree.parent, tree.depth, _as_complex(x), out)


def shifted_solve(tree, b, lam, n=None) -> np.ndarray:
    """(P C P - lam)^{-1} b; lam must avoid the diagonal values 1/(d+1)."""
    n = tree.vertex_count if n is None else n
    out = np.empty(n, dtype=np.complex128)
    _kernels.shifted_lower_solve(tree.parent[:n], tree.depth[:n], _as_complex(b)[:n],
                                 complex(lam), out)
    return out


def shifted_adjoint_solve(tree, b, lam, n=None) -> np.ndarray:
    """(P C* P - conj(lam))^{-1} b."""
    n = tree.vertex_count if n is None else n
    out = np.empty(n, dtype=np.complex128)
    _kernels.shifted_upper_solve(tree.parent[:n], tree.depth[:n], _as_complex(b)[:n],
                                 complex(lam).conjugate(), out)
    return out


def _check_bound(ctx, f):
    if f.tree is not ctx.tree:
        raise TreeMismatch("state vector is bound to a different tree")


def apply_C(ctx: CesaroContext, f: StateVector) -> StateVector:
    _check_bound(ctx, f)
    return StateVector(cesaro_apply(ctx.tree, f.amplitudes), ctx.tree)


def apply_C_adjoint(ctx: CesaroContext, g: StateVector) -> StateVector:
    _check_bound(ctx, g)
    return StateVector(cesaro_adjoint(ctx.tree, g.amplitudes), ctx.tree)


def assemble_dense(ctx: CesaroContext, N: int | None = None, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense matrix of P_N C P_N built from the ancestor relation directly."""
    tree = ctx.tree
    n = ctx.section_size(N)
    if n > cap:
        raise TooLarge(f"{n} vertices exceed the dense cap of {cap}")
    anc = np.zeros((n, n), dtype=bool)
    for v in range(n):
        p = tree.parent[v]
        if p >= 0:
            anc[v] = anc[p]
        anc[v, v] = True
    weights = 1.0 / (tree.depth[:n] + 1.0)
    return anc * weights[:, None].astype(np.complex128)


def dense_to_csv(matrix: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    n = matrix.shape[1]
    writer.writerow(["row"] + [str(i) for i in range(n)])
    real = np.all(matrix.imag == 0)
    for i, row in enumerate(matrix):
        cells = [repr(float(z.real)) if real else repr(complex(z)) for z in row]
        writer.writerow([str(i)] + cells)
    return buf.getvalue()


# --- series beyond the truncation -------------------------------------------


def _tail(first_denominator: int) -> Interval:
    """Enclosure of sum_{m >= first_denominator + 1} 1/m^2."""
    return Interval(1.0 / (first_denominator + 1), 1.0 / first_denominator)


@dataclass
class DomainReport:
    vertex: int
    J: int
    partial_sum: float
    tail_lo: float
    tail_hi: float
    tail_bound: float | str
    member: bool | str
    partial_sums: np.ndarray | None = None

    @property
    def enclosure(self) -> Interval:
        return Interval(self.partial_sum + self.tail_lo, self.partial_sum + self.tail_hi)

    def to_dict(self) -> dict:
        return {
            "vertex": self.vertex,
            "J": self.J,
            "partial_sum": self.partial_sum,
            "tail_bound": self.tail_bound,
            "tail_interval": [self.tail_lo, self.tail_hi],
            "member": self.member,
        }


def domain_membership(spec: TreeGenSpec, w: int, J: int, tree: RootedTree | None = None) -> DomainReport:
    """Partial sums of sum_j card(Chi<j>(w)) / (dep(w)+j+1)^2 and a membership verdict."""
    if J < 1:
        raise ValueError("J must be >= 1")
    tree = tree if tree is not None else build_tree(spec)
    dw = int(tree.depth[w])
    counts = descendant_level_counts(tree, w, J + 1)
    j = np.arange(J + 1, dtype=np.float64)
    partial = np.cumsum(counts[: J + 1] / (dw + j + 1.0) ** 2)
    frontier = frontier_descendants(tree, w)
    c = sum(eventual_count(tree, int(u)) for u in frontier)

    if spec.kind == "explicit" or c == 0:
        # the count sequence is eventually zero: a finite sum
        lo = hi = 0.0
        tail_bound, member = 0.0, True
        if counts[J + 1] > 0:
            # support still present past J on a finite tree: bound by what remains
            rest = descendant_level_counts(tree, w, tree.truncation_depth - dw)[J + 1:]
            d = dw + np.arange(J + 1, J + 1 + len(rest), dtype=np.float64) + 1.0
            lo = hi = float(np.sum(rest / d**2))
            tail_bound = hi
    elif math.isinf(c):
        lo, hi = math.inf, math.inf
        tail_bound, member = "unknown", False
    else:
        enc = _tail(dw + J + 1)
        lo = float(counts[J + 1]) * enc.lo
        hi = float(c) * enc.hi
        tail_bound, member = hi, True
    return DomainReport(
        vertex=int(w), J=J, partial_sum=float(partial[-1]), tail_lo=lo, tail_hi=hi,
        tail_bound=tail_bound, member=member, partial_sums=partial,
    )


def basis_image_norm_sq(spec: TreeGenSpec, w: int, J: int = SERIES_CAP,
                        tree: RootedTree | None = None) -> Interval:
    """||C e_w||^2 as an enclosure; ``.mid`` is the point estimate."""
    report = domain_membership(spec, w, J, tree=tree)
    if report.member is not True:
        raise NotInDomain(f"e_{w} is not in the domain of C_T")
    return report.enclosure


def image_norm_sq(tree: RootedTree, f: np.ndarray, J: int = SERIES_CAP) -> Interval:
    """||C f||^2 on the infinite tree for f supported in the truncation.

    Below a frontier vertex u every descendant sees the same ancestor sum S(u),
    so the missing mass is |S(u)|^2 * sum_{d > N} count_u(d) / (d+1)^2.
    """
    f = _as_complex(f)
    out = np.empty(tree.vertex_count, dtype=np.complex128)
    S = _kernels.ancestor_mean(tree.parent, tree.depth, f, out)
    inside = float(np.sum(np.abs(out) ** 2))
    N = tree.truncation_depth
    total = Interval(inside, inside)
    frontier = np.flatnonzero(tree.frontier)
    if len(frontier) == 0:
        return total
    J = max(J, N + 1)
    depths = np.arange(N + 1, J + 1, dtype=np.int64)
    inv_sq = 1.0 / (depths + 1.0) ** 2
    tail = _tail(J + 1)
    cache = {}
    for u in frontier:
        s2 = abs(S[u]) ** 2
        if s2 == 0.0:
            continue
        c = eventual_count(tree, int(u))
        if math.isinf(c):
            return Interval(math.inf, math.inf)
        key = (int(tree.depth[u]), c)
        if key not in cache:
            counts = continuation_counts(tree, int(u), depths)
            part = float(np.cumsum(counts * inv_sq)[-1]) if len(depths) else 0.0
            cache[key] = Interval(part + counts[-1] * tail.lo, part + c * tail.hi)
        total = total + cache[key].scale(s2)
    return total


def adjoint_norm_sq(tree: RootedTree, f: np.ndarray) -> float:
    """||C* f||^2, exact for f supported in the truncation (C* only reaches ancestors)."""
    return float(np.sum(np.abs(cesaro_adjoint(tree, f)) ** 2))
