import os
import subprocess
import sys

import numpy as np
import pytest

from ttcsd import _kernels_py, kernels
from ttcsd.core import Profile
from ttcsd.ttc import ttc_assignment

try:
    from ttcsd import _kernels as compiled
except ImportError:  # pragma: no cover - depends on the build
    compiled = None

needs_compiled = pytest.mark.skipif(compiled is None, reason="compiled kernels not built")


def _random_tables(n, count, seed):
    """Deterministic tables: TTC with some rows replaced by random permutations."""
    rng = np.random.default_rng(seed)
    base = kernels.ttc_table(n)
    out = []
    for _ in range(count):
        t = base.copy()
        rows = rng.choice(len(t), size=max(1, len(t) // 20), replace=False)
        for r in rows:
            t[r] = rng.permutation(n)
        out.append(t)
    return out


@pytest.mark.parametrize("n", [2, 3])
def test_fallback_ttc_matches_reference(n):
    perms, _ = kernels.permutation_tables(n)
    table = _kernels_py.ttc_table(n, perms)
    for code in range(len(table)):
        assert tuple(int(x) + 1 for x in table[code]) == ttc_assignment(Profile.decode(n, code))


@needs_compiled
@pytest.mark.parametrize("n", [2, 3, 4])
def test_backends_agree_on_ttc(n):
    perms, _ = kernels.permutation_tables(n)
    assert np.array_equal(compiled.ttc_table(n, perms), _kernels_py.ttc_table(n, perms))


@needs_compiled
@pytest.mark.parametrize("n", [2, 3])
def test_backends_agree_on_scans(n):
    _, ranks = kernels.permutation_tables(n)
    for t in [kernels.ttc_table(n)] + _random_tables(n, 6, n):
        for top_only in (False, True):
            assert compiled.scan_sp(t, ranks, n, top_only) == _kernels_py.scan_sp(t, ranks, n, top_only)
        assert compiled.scan_ir_eff(t, ranks, n) == _kernels_py.scan_ir_eff(t, ranks, n)


@needs_compiled
def test_backends_agree_on_n4_ranges():
    _, ranks = kernels.permutation_tables(4)
    (t,) = _random_tables(4, 1, 9)
    for lo, hi in [(0, 4000), (150_000, 154_000), (327_776, 331_776)]:
        for top_only in (False, True):
            assert compiled.scan_sp(t, ranks, 4, top_only, lo, hi) == _kernels_py.scan_sp(t, ranks, 4, top_only, lo, hi)
        assert compiled.scan_ir_eff(t, ranks, 4, lo, hi) == _kernels_py.scan_ir_eff(t, ranks, 4, lo, hi)


def test_ranges_partition_the_scan():
    _, ranks = kernels.permutation_tables(3)
    (t,) = _random_tables(3, 1, 1)
    whole = kernels.scan_sp(t, ranks, 3, False)
    parts = [kernels.scan_sp(t, ranks, 3, False, lo, hi) for lo, hi in [(0, 70), (70, 150), (150, 216)]]
    assert sum(p[0] for p in parts) == whole[0]
    assert next(p[1] for p in parts if p[1] is not None) == whole[1]


def test_ttc_table_is_cached_and_read_only():
    t = kernels.ttc_table(3)
    assert t is kernels.ttc_table(3)
    with pytest.raises(ValueError):
        t[0, 0] = 1


def test_env_forces_fallback():
    code = "from ttcsd import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, TTCSD_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    if compiled is not None:
        env.pop("TTCSD_PURE_PYTHON")
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "compiled"
