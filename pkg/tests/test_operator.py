import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cesaro_trees.errors import NotInDomain, TooLarge, TreeMismatch
from cesaro_trees.operator import (
    CesaroContext,
    StateVector,
    adjoint_norm_sq,
    apply_C,
    apply_C_adjoint,
    assemble_dense,
    basis_image_norm_sq,
    cesaro_adjoint,
    cesaro_apply,
    domain_membership,
    image_norm_sq,
    shifted_adjoint_solve,
    shifted_solve,
)
from cesaro_trees.series import inverse_square_tail
from cesaro_trees.tree import TreeGenSpec

from conftest import ctx_for, make

ZETA2 = math.pi**2 / 6


def naive_apply(tree, f):
    out = np.empty(tree.vertex_count, dtype=complex)
    for v in range(tree.vertex_count):
        out[v] = sum(f[a] for a in tree.ancestors(v)) / (tree.depth[v] + 1)
    return out


def test_path_root_image():
    ctx = ctx_for("path", 10)
    g = apply_C(ctx, StateVector.basis(ctx.tree, 0))
    np.testing.assert_allclose(g.amplitudes, 1 / np.arange(1, 12))


def test_comb_leaf_image():
    ctx = ctx_for("comb", 6)
    leaf = 6  # depth-3 leaf
    assert ctx.tree.depth[leaf] == 3 and ctx.tree.num_children[leaf] == 0
    g = apply_C(ctx, StateVector.basis(ctx.tree, leaf))
    expected = np.zeros(ctx.tree.vertex_count)
    expected[leaf] = 1 / 4
    np.testing.assert_allclose(g.amplitudes, expected)


def test_kary2_root_image():
    ctx = ctx_for("kary_root", 2, k=2)
    g = apply_C(ctx, StateVector.basis(ctx.tree, 0)).amplitudes
    np.testing.assert_allclose(g, [1, 1 / 2, 1 / 2, 1 / 3, 1 / 3])


def test_adjoint_examples():
    for kind, kw in [("path", {}), ("comb", {}), ("kary_root", {"k": 3}), ("widening", {})]:
        ctx = ctx_for(kind, 8, **kw)
        h = apply_C_adjoint(ctx, StateVector.basis(ctx.tree, 0)).amplitudes
        np.testing.assert_array_equal(h, np.eye(ctx.tree.vertex_count)[0])
    ctx = ctx_for("path", 9)
    for n in range(10):
        h = apply_C_adjoint(ctx, StateVector.basis(ctx.tree, n)).amplitudes
        expected = np.where(np.arange(10) <= n, 1 / (n + 1), 0)
        np.testing.assert_allclose(h, expected)


def test_tree_mismatch():
    a, b = ctx_for("path", 3), ctx_for("path", 3)
    with pytest.raises(TreeMismatch):
        apply_C(a, StateVector.basis(b.tree, 0))
    with pytest.raises(TreeMismatch):
        StateVector(np.zeros(3), a.tree)


def test_dense_path_block():
    M = assemble_dense(ctx_for("path", 4)).real
    expected = np.tril(np.ones((5, 5))) / np.arange(1, 6)[:, None]
    np.testing.assert_array_equal(M, expected)


def test_dense_kary2_block():
    M = assemble_dense(ctx_for("kary_root", 2, k=2)).real
    expected = np.array([
        [1, 0, 0, 0, 0],
        [1 / 2, 1 / 2, 0, 0, 0],
        [1 / 2, 0, 1 / 2, 0, 0],
        [1 / 3, 1 / 3, 0, 1 / 3, 0],
        [1 / 3, 0, 1 / 3, 0, 1 / 3],
    ])
    np.testing.assert_array_equal(M, expected)


def test_dense_cap():
    with pytest.raises(TooLarge):
        assemble_dense(ctx_for("path", 100), cap=50)


def test_statevector_json_roundtrip():
    t = make("comb", 4)
    f = StateVector(np.arange(t.vertex_count) * (1 + 2j), t)
    g = StateVector.from_json(f.to_json(), t)
    np.testing.assert_array_equal(f.amplitudes, g.amplitudes)


@pytest.mark.parametrize("k", range(2, 7))
def test_kary_basis_norm(k):
    spec = TreeGenSpec("kary_root", 3, k=k)
    enc = basis_image_norm_sq(spec, 0)
    target = 1 + k * (ZETA2 - 1)
    assert enc.contains(target, 1e-12)
    assert enc.width < 1e-5


def test_kary5_exceeds_two():
    enc = basis_image_norm_sq(TreeGenSpec("kary_root", 2, k=5), 0)
    assert math.isclose(enc.mid, 4.22467, abs_tol=1e-5)
    assert math.sqrt(enc.lo) > 2.055


def test_path_basis_norm():
    assert abs(basis_image_norm_sq(TreeGenSpec("path", 5), 0).mid - ZETA2) < 1e-6
    for w in range(5):
        assert domain_membership(TreeGenSpec("path", 5), w, 1000).member is True


def test_comb_leaf_basis_norm():
    spec = TreeGenSpec("comb", 8)
    enc = basis_image_norm_sq(spec, 6, 100)
    assert enc.lo == enc.hi == pytest.approx(1 / 16, abs=1e-15)


def test_widening_not_in_domain():
    spec = TreeGenSpec("widening", 50)
    rep = domain_membership(spec, 0, 50)
    assert rep.member is False and rep.tail_bound == "unknown"
    # the partial sums follow the divergent sum 1 + sum j/(j+1)^2
    j = np.arange(1, 51)
    assert rep.partial_sum == pytest.approx(1 + np.sum(j / (j + 1.0) ** 2))
    with pytest.raises(NotInDomain):
        basis_image_norm_sq(spec, 0, 50)


def test_explicit_member():
    spec = TreeGenSpec("explicit", edges=((0, 1), (1, 2), (0, 3)))
    rep = domain_membership(spec, 0, 1)
    assert rep.member is True
    assert rep.enclosure.mid == pytest.approx(1 + 2 / 4 + 1 / 9)


def test_tail_enclosure_brackets_exact():
    exact = ZETA2 - sum(1 / m**2 for m in range(1, 101))
    t = inverse_square_tail(100)
    assert t.lo < exact < t.hi


def test_image_norm_matches_basis_norm():
    t = make("kary_root", 5, k=3)
    f = np.zeros(t.vertex_count)
    f[0] = 1
    a = image_norm_sq(t, f)
    b = basis_image_norm_sq(TreeGenSpec("kary_root", 5, k=3), 0)
    assert abs(a.mid - b.mid) < 1e-9


def test_shifted_solves():
    rng = np.random.default_rng(1)
    for kind, kw in [("kary_root", {"k": 3}), ("comb", {}), ("widening", {})]:
        ctx = ctx_for(kind, 10, **kw)
        D = assemble_dense(ctx)
        b = rng.standard_normal(ctx.tree.vertex_count) + 1j * rng.standard_normal(ctx.tree.vertex_count)
        lam = 1.7 + 0.4j
        x = shifted_solve(ctx.tree, b, lam)
        np.testing.assert_allclose((D - lam * np.eye(len(b))) @ x, b, atol=1e-12)
        y = shifted_adjoint_solve(ctx.tree, b, lam)
        np.testing.assert_allclose((D.conj().T - np.conj(lam) * np.eye(len(b))) @ y, b, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["path", "kary_root", "comb", "widening"]), st.integers(0, 12), st.integers(0, 2**31))
def test_matches_naive_and_dense(kind, N, seed):
    kw = {"k": 3} if kind == "kary_root" else {}
    ctx = ctx_for(kind, N, **kw)
    rng = np.random.default_rng(seed)
    n = ctx.tree.vertex_count
    f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    g = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    Cf = cesaro_apply(ctx.tree, f)
    np.testing.assert_allclose(Cf, naive_apply(ctx.tree, f), atol=1e-12)
    D = assemble_dense(ctx)
    np.testing.assert_allclose(cesaro_adjoint(ctx.tree, g), D.conj().T @ g, atol=1e-12)
    lhs, rhs = np.vdot(g, Cf), np.vdot(cesaro_adjoint(ctx.tree, g), f)
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**31))
def test_prefix_section(N, seed):
    # the depth-<=M section is an id prefix, so sections commute with the kernels
    ctx = ctx_for("kary_root", N, k=2)
    M = N // 2
    n = ctx.section_size(M)
    f = np.random.default_rng(seed).standard_normal(ctx.tree.vertex_count)
    np.testing.assert_allclose(cesaro_apply(ctx.tree, f, n), cesaro_apply(ctx.tree, f)[:n])


def test_adjoint_norm_exact():
    t = make("path", 6)
    f = np.zeros(t.vertex_count)
    f[3] = 1
    assert adjoint_norm_sq(t, f) == pytest.approx(4 * (1 / 4) ** 2)
