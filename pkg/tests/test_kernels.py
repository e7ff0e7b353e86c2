import os
import subprocess
import sys

import numpy as np
import pytest

from pitnet import _kernels_py, kernels
from pitnet.mining import _parent_masks, generate_instance

compiled = pytest.importorskip("pitnet._kernels", reason="compiled kernels not built")


@pytest.mark.parametrize("width,depth", [(1, 1), (3, 2), (5, 3), (6, 3), (7, 4)])
def test_compiled_matches_fallback(width, depth):
    for seed in range(4):
        inst = generate_instance(width, depth, seed)
        w = np.ascontiguousarray(inst.block_weights)
        m = _parent_masks(inst)
        a, b = compiled.best_feasible(w, m), _kernels_py.best_feasible(w, m)
        assert a[0] == b[0] and a[1] == pytest.approx(b[1], abs=1e-12)
        assert compiled.count_feasible(m) == _kernels_py.count_feasible(m)


def test_ties_broken_identically():
    w = np.array([1.0, 0.0, 1.0, 0.0])
    m = np.zeros(4, dtype=np.uint64)
    assert compiled.best_feasible(w, m)[0] == _kernels_py.best_feasible(w, m)[0] == 0b1010


@pytest.mark.skipif(bool(os.environ.get("PITNET_PURE_PYTHON")), reason="fallback forced")
def test_compiled_is_selected_by_default():
    assert kernels.COMPILED


def test_environment_forces_fallback():
    env = dict(os.environ, PITNET_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from pitnet import kernels; print(kernels.COMPILED)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
