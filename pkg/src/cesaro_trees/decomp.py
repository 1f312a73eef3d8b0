"""Trunk/branch block structure of C_T for trees of finite branching index.

Below depth k_T the tree is d disjoint chains, so l2(V) splits into the
finite trunk M = span{e_v : dep(v) < k_T} and one chain space per branch
head.  C_T is block lower triangular in that order, each diagonal branch
block B_i being a shifted copy of the classical Cesaro matrix.  The
difference C_0 - U_i B_i U_i* is the explicit matrix with entries
k/((k+m+1)(m+1)) on and below the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfiniteBranchingIndex, MalformedSpec, TruncationTooShallow
from .operator import DENSE_CAP, CesaroContext, assemble_dense
from .tree import RootedTree, TreeGenSpec, compute_metrics

DEFAULT_SECTION = 512


@dataclass
class DecompositionReport:
    k_T: int
    d: int
    trunk_dim: int
    trunk_vertices: list
    branch_heads: list
    branch_chains: list
    block_pattern_ok: bool | None = None

    def to_dict(self) -> dict:
        return {
            "k_T": self.k_T,
            "d": self.d,
            "trunk_dim": self.trunk_dim,
            "trunk_vertices": self.trunk_vertices,
            "branch_heads": self.branch_heads,
            "branch_chains": self.branch_chains,
            "block_pattern_ok": self.block_pattern_ok,
        }

    @property
    def ordering(self) -> np.ndarray:
        """Vertex permutation (trunk, branch_1, ..., branch_d)."""
        return np.concatenate([np.asarray(self.trunk_vertices, dtype=np.int64)]
                              + [np.asarray(c, dtype=np.int64) for c in self.branch_chains])


def decompose(tree: RootedTree, spec: TreeGenSpec | None = None, check_blocks: bool = True,
              dense_cap: int = DENSE_CAP) -> DecompositionReport:
    spec = spec or tree.spec
    if spec.kind == "explicit":
        raise MalformedSpec("explicit trees are finite; the chain decomposition needs generator knowledge")
    k_T = compute_metrics(tree, spec).branching_index
    if not isinstance(k_T, int):
        raise InfiniteBranchingIndex(f"{spec.kind} tree is not of finite branching index")
    if k_T >= tree.truncation_depth:
        raise TruncationTooShallow(f"truncation depth {tree.truncation_depth} <= k_T = {k_T}")

    lp = tree.level_ptr
    trunk = list(range(int(lp[k_T])))
    heads = list(range(int(lp[k_T]), int(lp[k_T + 1])))
    chains = []
    for h in heads:
        chain = [h]
        while True:
            kids = tree.children(chain[-1])
            if len(kids) == 0:
                break
            if len(kids) != 1:
                raise MalformedSpec(f"vertex {chain[-1]} below depth k_T branches")
            chain.append(kids[0])
        chains.append(chain)
    report = DecompositionReport(k_T=k_T, d=len(heads), trunk_dim=len(trunk), trunk_vertices=trunk,
                                 branch_heads=heads, branch_chains=chains)
    if check_blocks and tree.vertex_count <= dense_cap:
        report.block_pattern_ok = block_pattern_holds(tree, report, dense_cap)
    return report


def extract_blocks(tree: RootedTree, report: DecompositionReport, dense_cap: int = DENSE_CAP) -> dict:
    """Dense blocks T, A_i, B_i plus the full permuted matrix."""
    dense = assemble_dense(CesaroContext(tree), cap=dense_cap)
    t = np.asarray(report.trunk_vertices, dtype=np.int64)
    blocks = {"T": dense[np.ix_(t, t)], "A": [], "B": []}
    for chain in report.branch_chains:
        c = np.asarray(chain, dtype=np.int64)
        blocks["A"].append(dense[np.ix_(c, t)])
        blocks["B"].append(dense[np.ix_(c, c)])
    order = report.ordering
    blocks["permuted"] = dense[np.ix_(order, order)]
    return blocks


def block_pattern_holds(tree: RootedTree, report: DecompositionReport,
                        dense_cap: int = DENSE_CAP) -> bool:
    """Zero blocks exactly at (trunk -> branch) columns and (branch_i -> branch_j), i != j."""
    P = extract_blocks(tree, report, dense_cap)["permuted"]
    bounds = np.cumsum([0, report.trunk_dim] + [len(c) for c in report.branch_chains])
    nb = len(bounds) - 1
    for bi in range(nb):
        rows = slice(bounds[bi], bounds[bi + 1])
        for bj in range(nb):
            cols = slice(bounds[bj], bounds[bj + 1])
            must_vanish = (bj != 0) and (bi != bj)
            if must_vanish and np.any(P[rows, cols] != 0):
                return False
    # the diagonal branch blocks are nonzero lower triangular
    for bi in range(1, nb):
        B = P[bounds[bi]:bounds[bi + 1], bounds[bi]:bounds[bi + 1]]
        if np.any(np.triu(B, 1) != 0) or np.any(np.diag(B) == 0):
            return False
    return True


@dataclass
class PerturbationMatrix:
    k: int
    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def perturbation_entries(k: int, M: int) -> PerturbationMatrix:
    """a_{m,n} = k/((k+m+1)(m+1)) for m >= n, 0 otherwise."""
    if k < 1 or M < 1:
        raise ValueError("k and M must be >= 1")
    m = np.arange(M, dtype=np.float64)
    row = k / ((k + m + 1.0) * (m + 1.0))
    return PerturbationMatrix(k, np.tril(np.repeat(row[:, None], M, axis=1)))


def classical_section(M: int) -> np.ndarray:
    """Leading M x M block of C_0: 1/(m+1) on and below the diagonal."""
    m = np.arange(M, dtype=np.float64)
    return np.tril(np.repeat((1.0 / (m + 1.0))[:, None], M, axis=1))


def perturbation_identity_error(tree: RootedTree, report: DecompositionReport,
                                M: int | None = None, dense_cap: int = DENSE_CAP) -> list[float]:
    """max |C0_M - U_i B_i U_i*|_M - A| per branch i."""
    length = min(len(c) for c in report.branch_chains)
    M = min(length, DEFAULT_SECTION) if M is None else M
    if M > length:
        raise TruncationTooShallow(f"branches have {length} vertices, section needs {M}")
    blocks = extract_blocks(tree, report, dense_cap)
    A = perturbation_entries(report.k_T, M).entries
    C0 = classical_section(M)
    return [float(np.max(np.abs(C0 - B[:M, :M] - A))) for B in blocks["B"]]


@dataclass
class CompactnessDiagnostics:
    k: int
    delta: np.ndarray
    delta_closed: np.ndarray
    gamma: np.ndarray
    gamma_closed: np.ndarray

    @property
    def delta_error(self) -> float:
        return float(np.max(np.abs(self.delta - self.delta_closed)))

    @property
    def gamma_error(self) -> float:
        return float(np.max(np.abs(self.gamma - self.gamma_closed)))

    def to_csv(self) -> str:
        lines = ["index,delta,delta_closed,gamma,gamma_closed"]
        for i in range(len(self.delta)):
            lines.append(f"{i},{self.delta[i]!r},{self.delta_closed[i]!r},"
                         f"{self.gamma[i]!r},{self.gamma_closed[i]!r}")
        return "\n".join(lines) + "\n"


def gamma_closed_form(k: int, n) -> np.ndarray:
    """sum_{i=n+1}^{n+k} 1/i (telescoped column sums)."""
    n = np.atleast_1d(np.asarray(n, dtype=np.float64))
    i = np.arange(1, k + 1, dtype=np.float64)
    return np.sum(1.0 / (n[:, None] + i[None, :]), axis=1)


def _tail_midpoint(k: int, X: float) -> float:
    """Midpoint of the enclosure of sum_{m >= X} k/((m+1)(m+k+1)).

    The summand is decreasing, so the sum lies between the integrals from X
    and from X-1; both have the closed form log((x+k+1)/(x+1)).
    """
    lo = np.log1p(k / (X + 1.0))
    hi = np.log1p(k / X)
    return 0.5 * (lo + hi)


def gamma_direct(k: int, n, terms: int = 10**6) -> np.ndarray:
    """Column sums summed term by term to ``terms`` rows past n, plus an integral-test tail."""
    n = np.atleast_1d(np.asarray(n, dtype=np.int64))
    out = np.empty(len(n), dtype=np.float64)
    for idx, start in enumerate(n):
        m = np.arange(start, start + terms, dtype=np.float64)
        a = k / ((k + m + 1.0) * (m + 1.0))
        # small terms first
        partial = float(np.cumsum(a[::-1])[-1])
        X = float(start + terms)
        out[idx] = partial + _tail_midpoint(k, X)
    return out


def compactness_diagnostics(k: int, M: int, terms: int = 10**6) -> CompactnessDiagnostics:
    """Row sums delta(m) and column sums gamma(n) of the perturbation matrix, two ways each."""
    if k < 1:
        raise ValueError("k must be >= 1")
    A = perturbation_entries(k, M).entries
    delta = np.array([float(np.cumsum(A[m, : m + 1])[-1]) for m in range(M)])
    m = np.arange(M, dtype=np.float64)
    delta_closed = k / (k + m + 1.0)
    # every column has the same entries below the diagonal, so suffix sums give all gammas
    rows = np.arange(M + terms, dtype=np.float64)
    a = k / ((k + rows + 1.0) * (rows + 1.0))
    suffix = np.cumsum(a[::-1])[::-1]
    X = float(M + terms)
    gamma = suffix[:M] + _tail_midpoint(k, X)
    return CompactnessDiagnostics(k, delta, delta_closed, gamma, gamma_closed_form(k, np.arange(M)))
