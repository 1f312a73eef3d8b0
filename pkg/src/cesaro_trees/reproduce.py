"""Reference-value reproduction table and the unbounded-operator demo."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decomp import compactness_diagnostics, decompose, perturbation_identity_error
from .operator import CesaroContext, basis_image_norm_sq
from .spectral import adjoint_path_eigenvector, hyponormality_gap, section_norm
from .tree import TreeGenSpec, build_tree, m_alpha_sequence

ZETA2 = math.pi**2 / 6
DEMO_SCHEDULE = (10**2, 10**3, 10**4, 10**5, 10**6)


@dataclass
class UnboundedDemo:
    schedule: tuple
    S: list
    f_norm_sq: float
    strictly_increasing: bool
    note: str = "f(v_0) = 0 since 1/n is undefined at n = 0; K_n is then the harmonic number H_n"

    def to_dict(self) -> dict:
        return {
            "schedule": list(self.schedule),
            "S": self.S,
            "f_norm_sq": self.f_norm_sq,
            "strictly_increasing": self.strictly_increasing,
            "note": self.note,
        }

    def to_csv(self) -> str:
        rows = ["N,S_N"] + [f"{N},{s!r}" for N, s in zip(self.schedule, self.S)]
        return "\n".join(rows) + "\n"


def lower_bound_partial_sums(n_max: int) -> np.ndarray:
    """S_N = sum_{n=1}^N n (K_n/(n+2))^2 for N = 1..n_max, K_n = sum_{j<=n} 1/j."""
    n = np.arange(1, n_max + 1, dtype=np.float64)
    K = np.cumsum(1.0 / n)
    return np.cumsum(n * (K / (n + 2.0)) ** 2)


def demo_unbounded(schedule=DEMO_SCHEDULE) -> UnboundedDemo:
    schedule = tuple(int(N) for N in schedule)
    S = lower_bound_partial_sums(max(schedule))
    values = [float(S[N - 1]) for N in schedule]
    increasing = all(b > a for a, b in zip(values, values[1:]))
    return UnboundedDemo(schedule, values, ZETA2, increasing)


def widening_witness(N: int) -> np.ndarray:
    """The demo's f on the widening tree truncated at depth N: f(v_n) = 1/n, n >= 1."""
    tree = build_tree(TreeGenSpec("widening", N))
    f = np.zeros(tree.vertex_count, dtype=np.complex128)
    trunk = tree.level_ptr[1:-1]
    f[trunk] = 1.0 / np.arange(1, len(trunk) + 1)
    return tree, f


@dataclass
class Row:
    claim: str
    reference_value: str
    computed: float
    tolerance: float
    passed: bool

    def to_dict(self) -> dict:
        return {"claim": self.claim, "reference_value": self.reference_value, "computed": self.computed,
                "tolerance": self.tolerance, "pass": self.passed}


def reproduction_rows(series_cap: int = 10**6, tol: float = 1e-10) -> list[Row]:
    rows = []

    ctx = CesaroContext(build_tree(TreeGenSpec("path", 4096)))
    sigma = section_norm(ctx, tol=tol, certificates=False).section_norm
    rows.append(Row("C_0 section norm <= 2 (N=4096)", "2", sigma, 1e-9, sigma <= 2 + 1e-9))

    for k in range(1, 7):
        spec = TreeGenSpec("path", 2) if k == 1 else TreeGenSpec("kary_root", 2, k=k)
        value = basis_image_norm_sq(spec, 0, series_cap).mid
        target = 1 + k * (ZETA2 - 1)
        rows.append(Row(f"T_{k} basis norm ||C e_root||^2", f"1 + {k}(pi^2/6 - 1) = {target:.8f}",
                        value, 1e-6, abs(value - target) <= 1e-6))
        if k == 5:
            rows.append(Row("T_5 norm exceeds 2", "> 2", math.sqrt(value), 0.0, math.sqrt(value) > 2))

    gap = hyponormality_gap(TreeGenSpec("kary_root", 2, k=2), J=series_cap)
    target = math.pi**2 / 3 - 3.5
    rows.append(Row("hypo-gap k_T=1", f"pi^2/3 - 7/2 ~ -0.2101 ({target:.10f})", float(gap.gap.mid), 1e-6,
                    abs(gap.gap.mid - target) <= 1e-6))
    for k_T in range(2, 7):
        gap = hyponormality_gap(TreeGenSpec("kary_root", k_T + 1, k=2, stem=k_T - 1), J=series_cap)
        rows.append(Row(f"hypo-gap k_T={k_T} < 0", "< 0", float(gap.gap.hi), 0.0, gap.gap.hi < 0))

    for k in (2, 4, 9):
        ctx = CesaroContext(build_tree(TreeGenSpec("kary_root", 512, k=k)))
        sigma = section_norm(ctx, tol=tol, certificates=False).section_norm
        bound = 2 * math.sqrt(k)
        rows.append(Row(f"kary_root({k}) section norm <= 2 sqrt(width)", f"{bound:g}", sigma, 1e-9,
                        sigma <= bound + 1e-9))

    for k in (1, 2, 3):
        diag = compactness_diagnostics(k, 64)
        H = sum(1.0 / i for i in range(1, k + 1))
        rows.append(Row(f"gamma(0) = H_{k}", f"{H:.12f}", float(diag.gamma[0]), 1e-10,
                        abs(diag.gamma[0] - H) <= 1e-10))
        rows.append(Row(f"delta(0) = {k}/{k + 1}", f"{k / (k + 1):.12f}", float(diag.delta[0]), 1e-12,
                        abs(diag.delta[0] - k / (k + 1)) <= 1e-12))

    tree = build_tree(TreeGenSpec("kary_root", 260, k=2))
    err = max(perturbation_identity_error(tree, decompose(tree), 256))
    rows.append(Row("C_0 - U B U* equals the perturbation matrix (M=256)", "0", err, 1e-12, err <= 1e-12))

    cert = adjoint_path_eigenvector(CesaroContext(build_tree(TreeGenSpec("path", 64))), 0.5)
    rows.append(Row("x_{1/2} is a finite-support eigenvector of C*", "0", cert.residual, 1e-12,
                    cert.residual <= 1e-12))

    demo = demo_unbounded()
    ratio = demo.S[-1] / demo.S[1]
    rows.append(Row("unbounded-demo lower bound grows: S_1e6 / S_1e3", "divergent", ratio, 5.0,
                    demo.strictly_increasing and ratio > 5))

    values, sup = m_alpha_sequence(build_tree(TreeGenSpec("widening", 1000)), 1.0, 1000)
    rows.append(Row("widening tree sup_j M_{1,j} finite", "< infinity", sup, 1.0, sup <= 1.0))
    positive = float(values[1:].max())
    rows.append(Row("widening tree sup_{j>=1} M_{1,j} < 1", "j/(j+1) < 1", positive, 0.0, positive < 1.0))
    return rows
