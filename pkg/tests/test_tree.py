import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cesaro_trees.errors import DepthExceeded, MalformedSpec
from cesaro_trees.tree import (
    TreeGenSpec,
    build_tree,
    compute_metrics,
    enumerate_paths,
    m_alpha_sequence,
)

from conftest import make


def test_path_levels():
    t = make("path", 3)
    assert t.vertex_count == 4
    assert t.level_sizes.tolist() == [1, 1, 1, 1]


def test_kary_root_levels():
    t = make("kary_root", 2, k=2)
    assert t.vertex_count == 5
    assert t.level_sizes.tolist() == [1, 2, 2]
    assert t.parent.tolist() == [-1, 0, 0, 1, 2]


def test_two_roots_rejected():
    with pytest.raises(MalformedSpec):
        build_tree(TreeGenSpec("explicit", edges=((0, 1), (2, 3))))


@pytest.mark.parametrize("edges", [
    ((0, 1), (0, 1)),            # duplicate edge
    ((0, 1), (1, 2), (2, 1)),    # two parents / cycle
    ((0, 0),),                   # self loop
    ((0, 1), (2, 3), (3, 2)),    # disconnected cycle
])
def test_explicit_malformed(edges):
    with pytest.raises(MalformedSpec):
        build_tree(TreeGenSpec("explicit", edges=edges))


def test_explicit_relabels_bfs():
    t = build_tree(TreeGenSpec("explicit", edges=((0, 5), (5, 2), (0, 7))))
    t.check()
    assert t.level_sizes.tolist() == [1, 2, 1]
    assert sorted(t.labels.tolist()) == [0, 2, 5, 7]
    m = compute_metrics(t)
    assert m.branching_index == 1 and not m.is_leafless


def test_spec_json_roundtrip(tmp_path):
    spec = TreeGenSpec("kary_root", 7, k=3)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(spec.to_dict()))
    assert TreeGenSpec.from_json(p) == spec


@pytest.mark.parametrize("bad", [
    {"kind": "nope", "truncate_depth": 1},
    {"kind": "kary_root", "truncate_depth": 1},
    {"kind": "kary_root", "truncate_depth": 1, "k": 1},
    {"kind": "path", "truncate_depth": -1},
])
def test_spec_validation(bad):
    with pytest.raises(MalformedSpec):
        TreeGenSpec.from_dict(bad)


def test_metrics_path():
    m = compute_metrics(make("path", 10))
    assert (m.width, m.branching_index, m.is_leafless) == (1, 0, True)


def test_metrics_kary3():
    for N in (1, 5):
        m = compute_metrics(make("kary_root", N, k=3))
        assert (m.width, m.branching_index) == (3, 1)


def test_metrics_comb():
    m = compute_metrics(make("comb", 10))
    assert m.width == 2
    assert m.branching_index == "unbounded-at-truncation"
    assert m.is_leafless is False


def test_widening_levels():
    t = make("widening", 6)
    assert t.level_sizes.tolist() == [1, 1, 2, 3, 4, 5, 6]


def test_m_alpha():
    v, sup = m_alpha_sequence(make("path", 20), 0.0, 20)
    assert np.all(v == 1) and sup == 1
    v, sup = m_alpha_sequence(make("comb", 20), 0.0, 20)
    assert sup == 2
    v, sup = m_alpha_sequence(make("widening", 100), 1.0, 100)
    j = np.arange(1, 101)
    np.testing.assert_allclose(v[1:], j / (j + 1), rtol=0, atol=1e-15)
    assert v[1:].max() < 1
    # j = 0 contributes card({root})/1 = 1, so the full sup is exactly 1
    assert sup == 1.0
    with pytest.raises(DepthExceeded):
        m_alpha_sequence(make("path", 3), 1.0, 4)


def test_enumerate_paths():
    assert len(enumerate_paths(make("path", 10), 5)) == 1
    assert enumerate_paths(make("kary_root", 2, k=2), 5) == [[0, 1, 3], [0, 2, 4]]
    paths = enumerate_paths(make("comb", 30), 3)
    assert len(paths) == 3
    for a in paths:
        for b in paths:
            if a is not b:
                assert len(set(a) & set(b)) < len(a)


specs = st.one_of(
    st.builds(lambda N: TreeGenSpec("path", N), st.integers(0, 40)),
    st.builds(lambda N, k, s: TreeGenSpec("kary_root", N, k=k, stem=s),
              st.integers(0, 25), st.integers(2, 5), st.integers(0, 4)),
    st.builds(lambda N: TreeGenSpec("comb", N), st.integers(0, 40)),
    st.builds(lambda N: TreeGenSpec("widening", N), st.integers(0, 25)),
)


@settings(max_examples=80, deadline=None)
@given(specs)
def test_structure_invariants(spec):
    t = build_tree(spec)
    t.check()
    assert t.level_sizes.sum() == t.vertex_count
    assert len(t.level_sizes) == spec.truncate_depth + 1
    # parents precede children and sit one level up
    v = np.arange(1, t.vertex_count)
    assert np.all(t.parent[v] < v)
    assert np.all(t.depth[t.parent[v]] == t.depth[v] - 1)
    # children ranges tile 1..n-1
    assert t.child_ptr[0] == 1 and t.child_ptr[-1] == t.vertex_count
    # only depth-N vertices may be frontier
    assert np.all(t.depth[t.frontier] == spec.truncate_depth)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 30), st.randoms(use_true_random=False))
def test_random_explicit_tree(n, rnd):
    perm = list(range(1, n))
    rnd.shuffle(perm)
    order = [0] + perm
    edges = [(order[rnd.randrange(i)], order[i]) for i in range(1, n)]
    rnd.shuffle(edges)
    t = build_tree(TreeGenSpec("explicit", edges=tuple(edges)))
    t.check()
    assert t.vertex_count == n
    # relabelled parent relation matches the original edges
    orig = {c: p for p, c in edges}
    for v in range(1, n):
        assert orig[int(t.labels[v])] == int(t.labels[t.parent[v]])
