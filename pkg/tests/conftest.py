import functools

import numpy as np
import pytest

from hpsscatter import build_scene, builtin
from hpsscatter.bie import build_boundary_mesh, layer_matrices
from hpsscatter.quadtree import build_tree


@functools.lru_cache(maxsize=None)
def scene(name, kappa, M):
    return build_scene(builtin(name), float(kappa), M)


@functools.lru_cache(maxsize=None)
def mesh_and_layers(M, kappa):
    tree = build_tree(M)
    mesh = build_boundary_mesh(tree)
    return tree, mesh, layer_matrices(mesh, float(kappa))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_acceptance(number, title, ok, detail):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
