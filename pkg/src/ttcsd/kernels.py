"""Selects the compiled kernels when available, else the pure-Python ones.

Set ``TTCSD_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import itertools
import math
import os
from functools import lru_cache

import numpy as np

if os.environ.get("TTCSD_PURE_PYTHON"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = "compiled" if _impl.__name__.endswith("._kernels") else "python"

ttc_table_raw = _impl.ttc_table
scan_sp = _impl.scan_sp
scan_ir_eff = _impl.scan_ir_eff


@lru_cache(maxsize=None)
def permutation_tables(n: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based rankings in lexicographic order, and each ranking's rank table."""
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int8)
    ranks = np.empty_like(perms)
    for k, p in enumerate(perms):
        ranks[k, p] = np.arange(n, dtype=np.int8)
    return perms, ranks


@lru_cache(maxsize=8)
def ttc_table(n: int) -> np.ndarray:
    """0-based TTC assignment at every profile code, shape ``(n!**n, n)``."""
    perms, _ = permutation_tables(n)
    table = ttc_table_raw(n, perms)
    table.setflags(write=False)
    return table


def space_size(n: int) -> int:
    return math.factorial(n) ** n
