import numpy as np
import pytest

from cesaro_trees.operator import CesaroContext
from cesaro_trees.tree import TreeGenSpec, build_tree


def make(kind, N, **kw):
    return build_tree(TreeGenSpec(kind, N, **kw))


def ctx_for(kind, N, **kw):
    return CesaroContext(make(kind, N, **kw))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(mod.RESULTS, key=lambda s: int(s.split()[0])):
        terminalreporter.write_line(mod.RESULTS[name])
