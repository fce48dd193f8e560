"""Time the compiled and NumPy lattice-sum kernels on an alloy quadrature grid.

    python3 benchmarks/bench_kernels.py [--repeat 3]
"""

from __future__ import annotations

import argparse
import math
import timeit

import numpy as np

from landau_tails import _kernels_py
from landau_tails.alloy_operator import AlloySample, BoxConfig, CouplingLaw, SingleSite, alloy_rule
from landau_tails.landau_basis import FieldConfig

try:
    from landau_tails import _kernels
except ImportError:
    _kernels = None


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--n", type=int, default=2, help="box index n; L = (2n+1) a / 2")
    args = parser.parse_args()

    cfg = FieldConfig(1.0)
    site = SingleSite("gaussian", 1.0, 1.0)
    box = BoxConfig.make(cfg, math.sqrt(2 * math.pi), args.n)
    sample = AlloySample.draw(CouplingLaw(1.0, 0.0, 0.3), box, site, seed=7)
    rule = alloy_rule(cfg, 0, box, box.default_K(cfg))
    x1, x2 = box.fold(rule.x1, rule.x2)
    x1, x2 = np.ascontiguousarray(x1), np.ascontiguousarray(x2)
    call = (x1, x2, np.ascontiguousarray(sample.omega_grid), *sample.grid_origin, *site.kernel_args())
    print(f"points={x1.size} sites={sample.omega_grid.size} cutoff={site.cutoff}")

    backends = {"numpy": _kernels_py.lattice_potential}
    if _kernels is not None:
        backends["cython"] = _kernels.lattice_potential
    results = {}
    for name, fn in backends.items():
        best = min(timeit.repeat(lambda: fn(*call), number=1, repeat=args.repeat))
        results[name] = (best, fn(*call))
        print(f"{name:>7}: {best:.3f} s")
    if len(results) == 2:
        diff = np.abs(results["cython"][1] - results["numpy"][1]).max()
        print(f"speedup {results['numpy'][0] / results['cython'][0]:.1f}x, max |difference| {diff:.2e}")


if __name__ == "__main__":
    main()
