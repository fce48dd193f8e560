"""Kernel selection: the compiled extension when importable, NumPy otherwise.

Set ``LANDAU_TAILS_PURE=1`` to force the NumPy path.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
lattice_potential = _kernels_py.lattice_potential

if os.environ.get("LANDAU_TAILS_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        lattice_potential = _kernels.lattice_potential
        BACKEND = "cython"

GAUSSIAN, CORE_TAIL, TABULATED = _kernels_py.GAUSSIAN, _kernels_py.CORE_TAIL, _kernels_py.TABULATED
profile = _kernels_py.profile
