"""Norm estimates, eigenvector certificates and hyponormality gaps for C_T."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import comb, polygamma

from .errors import (
    LeafEncountered,
    NegativeEntry,
    NoBranchingVertex,
    NoConvergence,
    OutsideDisc,
)
from .operator import (
    SERIES_CAP,
    CesaroContext,
    adjoint_norm_sq,
    cesaro_adjoint,
    cesaro_apply,
    image_norm_sq,
    shifted_adjoint_solve,
    shifted_solve,
)
from .series import Interval, inverse_square_series
from .tree import TreeGenSpec, build_tree, compute_metrics, enumerate_paths

MAX_ITERS = 10**5
# cap on structured certificates per family, keeps the comb (every trunk vertex branches) linear
MAX_CERT_VERTICES = 32
PATH_EIGVEC_LAMBDAS = (1.5, 1.9)


@dataclass
class NormReport:
    N: int
    section_norm: float
    lower_certificates: list
    upper_bound: float | str
    iterations: int
    tolerance: float
    display_values: list = field(default_factory=list)
    spectral_radius_proxy: float | None = None

    def envelope_ok(self) -> bool:
        tol = self.tolerance * max(1.0, self.section_norm)
        ok = all(v <= self.section_norm + tol for _, v in self.lower_certificates)
        if isinstance(self.upper_bound, float):
            ok = ok and self.section_norm <= self.upper_bound + tol
        return ok

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "section_norm": self.section_norm,
            "lower_certificates": [[lbl, v] for lbl, v in self.lower_certificates],
            "upper_bound": self.upper_bound,
            "iterations": self.iterations,
            "tolerance": self.tolerance,
            "display_values": [[lbl, v] for lbl, v in self.display_values],
            "spectral_radius_proxy": self.spectral_radius_proxy,
            "envelope_ok": self.envelope_ok(),
        }


def power_iteration_norm(ctx: CesaroContext, N: int | None = None, tol: float = 1e-10,
                         max_iters: int = MAX_ITERS):
    """Largest singular value of P_N C P_N by power iteration on C*C.

    Returns (sigma, iterations).  sigma = ||C x|| for a unit x, so every
    iterate is itself a lower bound.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    tree = ctx.tree
    n = ctx.section_size(N)
    x = np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128)
    prev = None
    for it in range(1, max_iters + 1):
        y = cesaro_apply(tree, x, n)
        sigma = float(np.linalg.norm(y))
        z = cesaro_adjoint(tree, y, n)
        x = z / np.linalg.norm(z)
        if prev is not None and abs(sigma - prev) <= tol * sigma:
            return sigma, it
        prev = sigma
    raise NoConvergence(max_iters, estimate=sigma)


def _rayleigh(tree, f, n):
    return float(np.linalg.norm(cesaro_apply(tree, f, n)) / np.linalg.norm(f))


def path_eigvec_coefficients(lam: complex, length: int) -> np.ndarray:
    """x_lam(0..length-1): x(0) = 1, x(n) = prod_{j<=n} (1 - 1/(j lam))."""
    mu = 1.0 / complex(lam)
    # lam = 1/m must give an exactly finite support
    if abs(mu.imag) <= 1e-12 * abs(mu) and abs(mu.real - round(mu.real)) <= 1e-12 * abs(mu):
        mu = complex(round(mu.real))
    j = np.arange(1, length, dtype=np.float64)
    factors = 1.0 - mu / j
    return np.concatenate([[1.0 + 0.0j], np.cumprod(factors)])


def lower_bound_certificates(ctx: CesaroContext, N: int | None = None):
    """Rayleigh quotients ||P C P f|| / ||f|| for structured f, plus display values.

    Returns (certificates, display_values); only the former are bounds.
    """
    tree = ctx.tree
    n = ctx.section_size(N)
    depth_cap = int(tree.depth[n - 1])
    certs = []
    e = np.zeros(n, dtype=np.complex128)
    e[0] = 1.0
    certs.append(("e_root", _rayleigh(tree, e, n)))

    display = []
    nch = tree.num_children[:n]
    branching = [int(w) for w in np.flatnonzero(nch >= 2) if tree.depth[w] < depth_cap]
    for w in branching[:MAX_CERT_VERTICES]:
        dw = int(tree.depth[w])
        if w != 0:
            e = np.zeros(n, dtype=np.complex128)
            e[w] = 1.0
            certs.append((f"e_{w}", _rayleigh(tree, e, n)))
        for j, (lo, hi) in enumerate(tree.descendant_ranges(w)):
            if j == 0:
                continue
            if j > 3 or dw + j > depth_cap:
                break
            f = np.zeros(n, dtype=np.complex128)
            f[lo:hi] = 1.0
            certs.append((f"siblings[{w},gen={j}]", _rayleigh(tree, f, n)))
        tail = inverse_square_series(dw + 1).mid
        display.append((f"display[{w}]", int(nch[w]) * math.sqrt(tail)))

    path = [v for v in enumerate_paths(tree, 1)[0] if v < n]
    for lam in PATH_EIGVEC_LAMBDAS:
        x = np.zeros(n, dtype=np.complex128)
        x[path] = path_eigvec_coefficients(lam, len(path))
        val = float(np.linalg.norm(cesaro_adjoint(tree, x, n)) / np.linalg.norm(x))
        certs.append((f"adjoint_eigvec[path0,lam={lam}]", val))
    return certs, display


def section_norm(ctx: CesaroContext, N: int | None = None, tol: float = 1e-10,
                 max_iters: int = MAX_ITERS, certificates: bool = True) -> NormReport:
    tree = ctx.tree
    N = tree.truncation_depth if N is None else min(N, tree.truncation_depth)
    sigma, iters = power_iteration_norm(ctx, N, tol, max_iters)
    metrics = compute_metrics(tree)
    width = metrics.width
    upper = 2.0 * math.sqrt(width) if isinstance(width, int) else "none"
    certs, display = lower_bound_certificates(ctx, N) if certificates else ([], [])
    radius = 2.0 if (metrics.is_leafless and isinstance(width, int)) else None
    return NormReport(N=N, section_norm=sigma, lower_certificates=certs, upper_bound=upper,
                      iterations=iters, tolerance=tol, display_values=display,
                      spectral_radius_proxy=radius)


# --- adjoint eigenvectors ----------------------------------------------------


@dataclass
class EigenCertificate:
    lam: complex
    path_vertices: list
    coefficients: np.ndarray
    residual: float
    excluded_residual: float
    excluded_mass: float
    norm_sq_partial: float
    window: int

    def to_dict(self) -> dict:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "path_vertices": self.path_vertices,
            "residual": self.residual,
            "excluded_residual": self.excluded_residual,
            "excluded_mass": self.excluded_mass,
            "norm_sq_partial": self.norm_sq_partial,
            "window": self.window,
        }

    def vector(self, size: int) -> np.ndarray:
        x = np.zeros(size, dtype=np.complex128)
        x[self.path_vertices] = self.coefficients
        return x


def adjoint_path_eigenvector(ctx: CesaroContext, lam: complex, path_index: int = 0,
                             N: int | None = None) -> EigenCertificate:
    """Place x_lam along a root-to-frontier path and measure (C* - lam) x on the section.

    The last max(3, L/10) path coordinates are excluded from ``residual``; their
    share is reported as ``excluded_residual``.
    """
    lam = complex(lam)
    if abs(lam - 1) >= 1:
        raise OutsideDisc(f"|lambda - 1| = {abs(lam - 1):.6g} >= 1")
    tree = ctx.tree
    n = ctx.section_size(N)
    paths = enumerate_paths(tree, path_index + 1)
    if path_index >= len(paths):
        raise IndexError(f"tree has only {len(paths)} root-to-frontier paths")
    path = [v for v in paths[path_index] if v < n]
    coeffs = path_eigvec_coefficients(lam, len(path))
    x = np.zeros(n, dtype=np.complex128)
    x[path] = coeffs
    r = cesaro_adjoint(tree, x, n) - lam * x

    L = len(path) - 1
    W = max(3, L // 10)
    keep = np.ones(n, dtype=bool)
    keep[path[max(L - W + 1, 0):]] = False
    xnorm = float(np.linalg.norm(x))
    return EigenCertificate(
        lam=lam,
        path_vertices=path,
        coefficients=coeffs,
        residual=float(np.linalg.norm(r[keep])) / xnorm,
        excluded_residual=float(np.linalg.norm(r[~keep])) / xnorm,
        excluded_mass=float(np.linalg.norm(x[~keep]) ** 2) / xnorm**2,
        norm_sq_partial=xnorm**2,
        window=W,
    )


def smallest_singular_value(ctx: CesaroContext, lam: complex, N: int | None = None,
                            tol: float = 1e-10, max_iters: int = MAX_ITERS) -> float:
    """sigma_min(P_N C P_N - lam) by inverse power iteration with triangular solves."""
    tree = ctx.tree
    n = ctx.section_size(N)
    x = np.full(n, 1.0 / math.sqrt(n), dtype=np.complex128)
    prev = None
    for _ in range(max_iters):
        y = shifted_adjoint_solve(tree, x, lam, n)
        est = float(np.linalg.norm(y))
        z = shifted_solve(tree, y, lam, n)
        x = z / np.linalg.norm(z)
        if prev is not None and abs(est - prev) <= tol * est:
            return 1.0 / est
        prev = est
    raise NoConvergence(max_iters, estimate=1.0 / est)


def spectrum_certificates(ctx: CesaroContext, lambdas, N: int | None = None,
                          margin: float = 0.05, tol: float = 1e-10) -> list[dict]:
    """Per-lambda evidence: eigen-residuals inside the disc, sigma_min well outside it."""
    rows = []
    for lam in lambdas:
        lam = complex(lam)
        dist = abs(lam - 1)
        row = {"lambda": [lam.real, lam.imag], "distance_from_1": dist}
        if dist < 1:
            cert = adjoint_path_eigenvector(ctx, lam, 0, N)
            row.update(region="inside", residual=cert.residual,
                       excluded_residual=cert.excluded_residual)
        elif dist > 1 + margin:
            row.update(region="outside", sigma_min=smallest_singular_value(ctx, lam, N, tol))
        else:
            row.update(region="boundary")
        rows.append(row)
    return rows


# --- point spectrum of C -----------------------------------------------------


@dataclass
class PointSpectrumReport:
    seed_vertex: int
    seed_depth: int
    lam: Fraction
    chain: list
    coefficients: list
    binomial_ok: bool
    partial_sums: list
    verdict: str

    def first_exceeding(self, bound) -> int | None:
        for n, s in enumerate(self.partial_sums):
            if s > bound:
                return n
        return None

    def to_dict(self) -> dict:
        return {
            "seed_vertex": self.seed_vertex,
            "seed_depth": self.seed_depth,
            "lambda": str(self.lam),
            "chain": self.chain,
            "coefficients": [str(c) for c in self.coefficients],
            "binomial_ok": self.binomial_ok,
            "partial_sums": [str(s) for s in self.partial_sums],
            "verdict": self.verdict,
        }


def point_spectrum_forward_solve(ctx: CesaroContext, seed_vertex: int, n_max: int = 60,
                                 N: int | None = None) -> PointSpectrumReport:
    """Forward-solve (C - lam) f = 0 down one child chain with f(seed) = 1.

    lam is forced to 1/(dep(seed)+1).  Arithmetic is exact (Fractions); the
    coefficients must come out as binomial(dep(seed)+n, n).
    """
    tree = ctx.tree
    N = tree.truncation_depth if N is None else min(N, tree.truncation_depth)
    nch = tree.num_children

    def is_leaf(v):
        return nch[v] == 0 and not tree.frontier[v]

    seed = int(seed_vertex)
    if is_leaf(seed):
        raise LeafEncountered(seed, int(tree.depth[seed]))
    d = int(tree.depth[seed])
    chain = [seed]
    while len(chain) <= n_max and tree.depth[chain[-1]] < N:
        kids = tree.children(chain[-1])
        if len(kids) == 0:
            break
        nxt = next((c for c in kids if not is_leaf(c)), None)
        if nxt is None:
            raise LeafEncountered(kids[0], int(tree.depth[kids[0]]))
        chain.append(int(nxt))

    lam = Fraction(1, d + 1)
    coeffs = [Fraction(1)]
    running = Fraction(1)
    for n in range(1, len(chain)):
        denom = lam * (d + n + 1) - 1
        value = running / denom
        coeffs.append(value)
        running += value
    ok = all(c.denominator == 1 and c.numerator == comb(d + n, n, exact=True)
             for n, c in enumerate(coeffs))
    ints = [c.numerator if c.denominator == 1 else c for c in coeffs]
    partial, acc = [], 0
    for c in ints:
        acc += c * c
        partial.append(acc)
    verdict = "not l2: partial sums of |f(v_n)|^2 grow without bound" if len(chain) > 1 else "inconclusive"
    return PointSpectrumReport(seed_vertex=seed, seed_depth=d, lam=lam, chain=chain,
                               coefficients=ints, binomial_ok=ok, partial_sums=partial,
                               verdict=verdict)


# --- hyponormality -----------------------------------------------------------


@dataclass
class HypoReport:
    test_vector_label: str
    gap: Interval
    closed_form: float | str
    k_T: int | str
    image_norm_sq: Interval
    adjoint_norm_sq: float

    def consistent(self, slack: float = 1e-12) -> bool:
        if isinstance(self.closed_form, str):
            return True
        return self.gap.contains(self.closed_form, slack)

    def to_dict(self) -> dict:
        return {
            "test_vector_label": self.test_vector_label,
            "gap": self.gap.to_dict(),
            "closed_form": self.closed_form,
            "k_T": self.k_T,
            "image_norm_sq": self.image_norm_sq.to_dict(),
            "adjoint_norm_sq": self.adjoint_norm_sq,
        }


def canonical_gap_closed_form(k_T: int) -> float:
    """2 sum_{j>=1} 1/(k_T+j+1)^2 - 4 k_T/(k_T+1)^2 via the trigamma function."""
    return float(2.0 * polygamma(1, k_T + 2) - 4.0 * k_T / (k_T + 1) ** 2)


def hyponormality_gap(spec: TreeGenSpec, vector_choice="canonical", J: int = SERIES_CAP,
                      tree=None) -> HypoReport:
    """||C f||^2 - ||C* f||^2 with the C f series closed by tail enclosures.

    ``vector_choice`` is "canonical" (e_{v1} + e_{v2} for two children of a
    deepest branching vertex) or a mapping vertex -> amplitude.
    """
    metrics = None
    if vector_choice == "canonical":
        k_T = compute_metrics(build_tree(spec.with_depth(0)) if tree is None else tree, spec).branching_index
        if not isinstance(k_T, int) or k_T == 0:
            raise NoBranchingVertex(f"{spec.kind} tree has no deepest branching vertex")
        if tree is None or tree.truncation_depth < k_T:
            tree = build_tree(spec.with_depth(max(spec.truncate_depth, k_T)))
        metrics = compute_metrics(tree, spec)
        candidates = [w for w in metrics.branching_vertices if tree.depth[w] == k_T - 1]
        if not candidates:
            raise NoBranchingVertex("no branching vertex at depth k_T - 1")
        u = candidates[0]
        v1, v2 = list(tree.children(u))[:2]
        f = np.zeros(tree.vertex_count, dtype=np.complex128)
        f[[v1, v2]] = 1.0
        label = f"e_{v1}+e_{v2}"
        closed = canonical_gap_closed_form(k_T) if spec.kind == "kary_root" else "n/a"
    else:
        tree = tree if tree is not None else build_tree(spec)
        metrics = compute_metrics(tree, spec)
        k_T = metrics.branching_index
        f = np.zeros(tree.vertex_count, dtype=np.complex128)
        for v, a in dict(vector_choice).items():
            f[int(v)] = a
        label = " + ".join(f"({complex(a):g})e_{int(v)}" for v, a in sorted(dict(vector_choice).items()))
        closed = "n/a"
    img = image_norm_sq(tree, f, J)
    adj = adjoint_norm_sq(tree, f)
    return HypoReport(test_vector_label=label, gap=img - adj, closed_form=closed, k_T=k_T,
                      image_norm_sq=img, adjoint_norm_sq=adj)


def hardy_oracle(a) -> tuple[float, float, bool]:
    """Both sides of Hardy's inequality sum((1/(n+1)) sum_{j<=n} a_j)^2 <= 4 sum a_n^2."""
    a = np.asarray(a, dtype=np.float64)
    if np.any(a < 0):
        raise NegativeEntry("Hardy's inequality needs a nonnegative sequence")
    means = np.cumsum(a) / np.arange(1, len(a) + 1)
    lhs = float(np.sum(means**2))
    rhs = 4.0 * float(np.sum(a**2))
    return lhs, rhs, lhs <= rhs + 1e-12
