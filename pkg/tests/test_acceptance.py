"""Acceptance criteria, one test each; a PASS/FAIL line per criterion is printed in the summary.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from landau_tails.alloy_operator import assemble_matrix, disk_rule
from landau_tails.config import smoke_config
from landau_tails.disk_spectrum import AsymWindow, DiskSpec, nu_exact, verify_f1
from landau_tails.enlargement import EnlargementParams, certify_le2
from landau_tails.landau_basis import FieldConfig, LandauIndex
from landau_tails.pipeline import fit_lifshitz_exponent, ids_estimate, thr2_certificates, upper_bound_chain
from landau_tails.smallball import CouplingLaw, small_ball_asymptotic, small_ball_exact

B1 = FieldConfig(1.0)
SMOKE_E = math.exp(-9)


def record(number, ok, detail, elapsed, limit):
    ok = ok and elapsed <= limit
    ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f}s / {limit:g}s]")
    return ok


def test_criterion_1_diagonality():
    start = time.perf_counter()
    worst_off, worst_diag = 0.0, 0.0
    K = 7
    for q in (0, 1):
        for rho in (1.0, 4.0):
            disk = DiskSpec.from_rho(B1, rho)
            inside = lambda x1, x2, R=disk.R: (np.hypot(x1, x2) <= R).astype(float)
            M = assemble_matrix(B1, q, inside, K, disk_rule(B1, q, K, disk.R)).matrix
            nu = np.array([nu_exact(B1, LandauIndex(q, k), disk) for k in range(K)])
            worst_off = max(worst_off, np.abs(M - np.diag(np.diag(M))).max())
            worst_diag = max(worst_diag, np.abs(np.diag(M).real - nu).max())
    ok = worst_off <= 1e-6 and worst_diag <= 1e-6
    assert record(1, ok, f"max offdiag {worst_off:.1e}, max |diag - nu| {worst_diag:.1e} (tol 1e-6)", time.perf_counter() - start, 120)


def test_criterion_2_asymptotic_ratio_certificate():
    start = time.perf_counter()
    ks = [100, 1000, 10000]
    parts, ok = [], True
    for q in (0, 1, 2):
        cert = verify_f1(B1, q, AsymWindow.power(0.75, 1.0), ks)
        devs = [p["max_ratio_dev"] for p in cert.extra["per_k"]]
        dominated = all(r["ratio_dev"] <= cert.constants["fitted_C"] * r["bound"] * (1 + 1e-12) for r in cert.rows)
        decreasing = all(b < a for a, b in zip(devs, devs[1:]))
        ok &= cert.passed and dominated and decreasing
        if q == 0:
            ok &= devs[-1] <= 0.05
        parts.append(f"q={q} dev@1e4={devs[-1]:.4f} C={cert.constants['fitted_C']:.3g} pass={cert.passed}")
    assert record(2, ok, "; ".join(parts), time.perf_counter() - start, 300)


def test_criterion_3_enlargement_certificate():
    start = time.perf_counter()
    parts, ok = [], True
    for q in (0, 1):
        for R in (8.0, 12.0):
            cert = certify_le2(B1, q, EnlargementParams.make(B1, 0.4, R, 3.0, 0.5))
            c = cert.constants
            c2_ok = c["log_C2"] <= -R * R / 10
            c1_ok = c["log_C1"] >= -8 * R * R * math.log(R)
            ok &= cert.passed and c1_ok and c2_ok
            parts.append(
                f"q={q} R={R:g}: per-k inequality {'ok' if cert.passed else 'FAIL'}, "
                f"logC2={c['log_C2']:.1f} (<= {-R * R / 10:.1f} {'ok' if c2_ok else 'FAIL'}), "
                f"logC1={c['log_C1']:.1f} (>= {-8 * R * R * math.log(R):.1f} {'ok' if c1_ok else 'FAIL'})"
            )
    assert record(3, ok, "; ".join(parts), time.perf_counter() - start, 600)


def test_criterion_4_small_ball():
    start = time.perf_counter()
    uniform = CouplingLaw(1.0, 0.0, 1.0)
    ok = True
    for n, t in [(2, 0.1), (3, 0.5), (5, 0.2)]:
        res = small_ball_exact(uniform, n, t)
        target = t**n / math.factorial(n)
        ok &= res.lower <= target <= res.upper and (res.upper - res.lower) <= 1e-3 * res.upper
    worst = 1.0
    for kappa in (0.5, 1.0, 2.0):
        law = CouplingLaw(kappa, 0.0, 1.0)
        for n in range(1, 9):
            for frac in (0.05, 0.01):
                t = frac * n
                ratio = small_ball_asymptotic(law, n, t) / small_ball_exact(law, n, t).value
                worst = max(worst, ratio, 1 / ratio)
    ok &= worst <= 1.5
    assert record(4, ok, f"closed forms bracketed; worst asymptotic/exact factor {worst:.4f} (<= 1.5)", time.perf_counter() - start, 60)


def test_criterion_5_thr2_certificates():
    start = time.perf_counter()
    certs = thr2_certificates(smoke_config(), SMOKE_E)
    margins = [c.rows[0]["margin"] + c.rows[0]["tolerance"] for c in certs]
    ok = len(certs) == 8 and all(c.passed for c in certs)
    assert record(5, ok, f"{sum(c.passed for c in certs)}/8 samples pass, min margin {min(margins):.3g}", time.perf_counter() - start, 600)


def test_criterion_6_exponent_fit():
    start = time.perf_counter()
    E = [math.exp(-x) for x in range(4, 13)]
    s2 = fit_lifshitz_exponent(E, [math.exp(-math.log(e) ** 2) for e in E]).slope
    s1 = fit_lifshitz_exponent(E, [e**3 for e in E]).slope
    ok = abs(s2 - 2) <= 1e-10 and abs(s1 - 1) <= 1e-10
    assert record(6, ok, f"slopes {s2!r} and {s1!r}", time.perf_counter() - start, 10)


def test_criterion_7_pipeline_consistency():
    start = time.perf_counter()
    cfg = smoke_config()
    rows = upper_bound_chain(cfg, ids_estimate(cfg))
    live = [r for r in rows if not r["vacuous"]]
    bad = [r["E"] for r in live if r["N_hat"] > r["bound"] + 3 * r["stderr"]]
    ok = not bad and len(live) > 0
    assert record(7, ok, f"{len(live)} nonvacuous energies, {len(bad)} exceed bound + 3 stderr", time.perf_counter() - start, 1800)


def test_criterion_8_determinism(tmp_path):
    start = time.perf_counter()
    cfg_path = tmp_path / "smoke.cfg"
    cfg_path.write_text(smoke_config().to_text())
    outs = []
    for workers in (1, 2):
        out = tmp_path / f"w{workers}.csv"
        subprocess.run(
            [sys.executable, "-m", "landau_tails.cli", "ids", "--config", str(cfg_path), "--out", str(out), "--workers", str(workers)],
            check=True,
        )
        outs.append(out.read_bytes())
    ok = outs[0] == outs[1] and len(outs[0]) > 0
    assert record(8, ok, f"workers=1 vs workers=2 CSVs {'identical' if ok else 'differ'} ({len(outs[0])} bytes)", time.perf_counter() - start, 1800)
