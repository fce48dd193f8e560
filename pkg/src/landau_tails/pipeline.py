"""Monte Carlo IDS estimates, per-sample operator certificates and the analytic upper-bound chain.

Energies are measured from the Landau level ``2bq``. When the couplings are
nonnegative (``omega_minus = 0``) the studied edge is the bottom of the band
and eigenvalues ``<= E`` are counted; when ``omega_plus = 0`` everything is
mirrored and eigenvalues ``>= -E`` are counted.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .alloy_operator import AlloySample, Assembler, AssemblyError, BoxConfig, eigenvalues
from .certificate import Certificate, NumericalFailure
from .config import ExperimentConfig
from .smallball import lattice_disk_count, log_small_ball_asymptotic

MAX_DROP_FRACTION = 0.25

ESTIMATE_COLUMNS = ["E", "N_half", "N_hat", "N_double", "stderr", "n_samples", "n_dropped", "L_used", "capped", "status"]
CHAIN_COLUMNS = [
    "E", "log_E", "L_used", "radius", "n_sites", "t", "log_p", "log_tail", "log_bound", "bound",
    "vacuous", "N_hat", "stderr", "exceeds",
]


@dataclass(frozen=True)
class IdsEstimate:
    E: float
    N_hat: float
    stderr: float
    n_samples: int
    L_used: float
    N_half: float = math.nan
    N_double: float = math.nan
    n_dropped: int = 0
    capped: bool = False
    status: str = "ok"

    def as_row(self) -> dict:
        return {c: getattr(self, c) for c in ESTIMATE_COLUMNS}


def _edge_sign(cfg: ExperimentConfig) -> float:
    return 1.0 if cfg.law.omega_minus == 0 else -1.0


_ASSEMBLERS: dict = {}


def _assembler(cfg: ExperimentConfig, box: BoxConfig) -> Assembler:
    key = (cfg.b, cfg.q, box.a, box.n, cfg.K)
    if key not in _ASSEMBLERS:
        _ASSEMBLERS.clear()
        _ASSEMBLERS[key] = Assembler.for_box(cfg.field_cfg, cfg.q, box, cfg.K)
    return _ASSEMBLERS[key]


def sample_for(cfg: ExperimentConfig, box: BoxConfig, index: int) -> AlloySample:
    return AlloySample.draw(cfg.law, box, cfg.site, cfg.seed, index)


def _edge_spectrum(task) -> np.ndarray | None:
    """Eigenvalues of one sample, sign-flipped so the studied edge is at the bottom."""
    cfg, n_box, index = task
    box = BoxConfig.make(cfg.field_cfg, cfg.a, n_box)
    try:
        pm = _assembler(cfg, box).sample(sample_for(cfg, box, index), cfg.site)
        return np.sort(_edge_sign(cfg) * eigenvalues(pm))
    except (AssemblyError, NumericalFailure, np.linalg.LinAlgError):
        return None


def _spectra(cfg: ExperimentConfig, boxes: Sequence[int], workers: int) -> dict:
    tasks = [(cfg, n_box, i) for n_box in boxes for i in range(cfg.n_samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_edge_spectrum, tasks, chunksize=1))
    else:
        results = [_edge_spectrum(t) for t in tasks]
    out: dict = {}
    for (_, n_box, _), spec in zip(tasks, results):
        out.setdefault(n_box, []).append(spec)
    return out


def ids_estimate(cfg: ExperimentConfig, workers: int = 1) -> list[IdsEstimate]:
    """Sample mean of the counting proxy at ``E/2``, ``E`` and ``2E`` for every ``E`` in the grid.

    Spectra are computed once per (box, sample) and reused across energies.
    """
    plan = [(E, *cfg.box_for(E)) for E in cfg.E_grid]
    spectra = _spectra(cfg, sorted({box.n for _, box, _ in plan}), workers)
    rows = []
    for E, box, capped in plan:
        specs = spectra[box.n]
        good = [s for s in specs if s is not None]
        dropped = len(specs) - len(good)
        if not good or dropped > MAX_DROP_FRACTION * len(specs):
            rows.append(IdsEstimate(E, math.nan, math.nan, len(good), box.L, n_dropped=dropped, capped=capped, status="failed"))
            continue

        def mean_count(e):
            counts = np.array([np.count_nonzero(s <= e) for s in good], dtype=float) / box.area
            return counts.mean(), counts

        n_half, _ = mean_count(E / 2)
        n_hat, counts = mean_count(E)
        n_double, _ = mean_count(2 * E)
        stderr = float(counts.std(ddof=1) / math.sqrt(len(counts))) if len(counts) > 1 else math.nan
        rows.append(IdsEstimate(E, float(n_hat), stderr, len(good), box.L, float(n_half), float(n_double), dropped, capped))
    return rows


def lattice_infimum(sample: AlloySample, R: float, sign: float = 1.0) -> tuple[float, tuple[int, int]]:
    """``min over box sites g of sum_{|beta - g| <= R} sign*omega_beta``, with the minimizing site."""
    grid = sign * sample.omega_grid
    r = int(math.floor(R))
    offs = [(dx, dy) for dx in range(-r, r + 1) for dy in range(-r, r + 1) if dx * dx + dy * dy <= R * R + 1e-9]
    best, arg = math.inf, (0, 0)
    ox, oy = sample.grid_origin
    for gx, gy in sample.box.sites():
        total = 0.0
        for dx, dy in offs:
            ix, iy = gx + dx - ox, gy + dy - oy
            if not (0 <= ix < grid.shape[0] and 0 <= iy < grid.shape[1]):
                raise NumericalFailure(f"disk of radius {R} around site ({gx}, {gy}) leaves the materialized halo")
            total += grid[ix, iy]
        if total < best:
            best, arg = total, (int(gx), int(gy))
    return float(best), arg


def certify_thr2(cfg: ExperimentConfig, sample: AlloySample, E: float, pm=None, rel_tol: float = 1e-6) -> Certificate:
    """Per-sample check of ``s(E) lambda_min >= inf_g sum omega - exp(-|ln E|^(1-eta)/C_eta)``.

    ``s(E) = exp(|ln E|^(1-eta) ln|ln E|)`` and ``lambda_min`` is the lowest
    eigenvalue of the truncated projected operator.
    """
    if not 0 < E < 1:
        raise ValueError(f"E must lie in (0, 1), got {E}")
    sign = _edge_sign(cfg)
    lE = abs(math.log(E))
    R = round(lE ** ((1 - cfg.eta) / 2))
    if pm is None:
        pm = _assembler(cfg, sample.box).sample(sample, cfg.site)
    ev = np.sort(sign * eigenvalues(pm))
    lam_min = float(ev[0])
    norm = float(np.abs(ev).max())
    log_scalar = lE ** (1 - cfg.eta) * math.log(lE) if lE > 1 else 0.0
    inf_sum, argmin = lattice_infimum(sample, R, sign)
    correction = math.exp(-(lE ** (1 - cfg.eta)) / cfg.C_eta)
    lhs = math.exp(log_scalar) * lam_min
    rhs = inf_sum - correction
    tol = rel_tol * norm
    passed = lhs >= rhs - tol
    return Certificate(
        "thr2",
        {"E": E, "eta": cfg.eta, "C_eta": cfg.C_eta, "R": R, "seed": sample.seed, "sample_index": sample.sample_index,
         "L": sample.box.L, "K": pm.K, "edge": sample.law.edge_at_zero},
        [{"lambda_min": lam_min, "lhs": lhs, "rhs": rhs, "margin": lhs - rhs, "tolerance": tol}],
        {"log_scalar": log_scalar, "inf_sum": inf_sum, "inf_site": list(argmin), "correction": correction,
         "matrix_norm": norm, "asymmetry": pm.asymmetry, "gram_deviation": pm.gram_deviation},
        passed,
        f"double precision; margin tolerance {rel_tol:g} * ||M||",
    )


def thr2_certificates(cfg: ExperimentConfig, E: float) -> list[Certificate]:
    box, _ = cfg.box_for(E)
    return [certify_thr2(cfg, sample_for(cfg, box, i), E) for i in range(cfg.n_samples)]


def log_chain_bound(cfg: ExperimentConfig, E: float, L: float) -> dict:
    """Log of ``C L^2 P(sum_{|beta| <= r} omega_beta <= t) + exp(-E^-eta)``.

    ``P`` is the power-law small-ball formula (an upper bound for every ``t``),
    ``r = |ln E|^((1-eta)/2)`` and ``t = 2 exp(-|ln E|^(1-eta)/C_eta)``.
    """
    lE = abs(math.log(E))
    radius = lE ** ((1 - cfg.eta) / 2)
    n_sites = lattice_disk_count(radius)
    t = 2.0 * math.exp(-(lE ** (1 - cfg.eta)) / cfg.C_eta)
    log_p = min(log_small_ball_asymptotic(cfg.law, n_sites, t), 0.0)
    log_main = math.log(cfg.bound_C) + 2 * math.log(L) + log_p
    log_tail = -(E ** -cfg.eta)
    log_bound = float(np.logaddexp(log_main, log_tail))
    return {"E": E, "log_E": math.log(E), "L_used": L, "radius": radius, "n_sites": n_sites, "t": t,
            "log_p": log_p, "log_tail": log_tail, "log_bound": log_bound, "bound": math.exp(min(log_bound, 700.0)),
            "vacuous": log_bound >= 0.0}


def upper_bound_chain(cfg: ExperimentConfig, estimates: Sequence[IdsEstimate]) -> list[dict]:
    """Analytic bound next to the Monte Carlo value; ``exceeds`` flags MC > bound + 3 stderr."""
    rows = []
    for est in estimates:
        row = log_chain_bound(cfg, est.E, est.L_used)
        se = 0.0 if math.isnan(est.stderr) else est.stderr
        row.update(N_hat=est.N_hat, stderr=est.stderr,
                   exceeds=bool(not row["vacuous"] and est.N_hat > row["bound"] + 3 * se))
        rows.append(row)
    return rows


@dataclass(frozen=True)
class LifshitzFit:
    slope: float
    intercept: float
    residual: float
    n_points: int
    ratios: tuple[float, ...]

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual,
                "n_points": self.n_points, "ratios": list(self.ratios)}


def fit_lifshitz_exponent(E: Sequence[float], N: Sequence[float]) -> LifshitzFit:
    """Least-squares slope of ``ln|ln N|`` against ``ln|ln E|`` over points with ``0 < N < 1``."""
    pts = [(e, n) for e, n in zip(E, N) if 0 < n < 1 and 0 < e < 1 and e != 1 / math.e]
    if len(pts) < 4:
        raise ValueError(f"need at least 4 points with 0 < N < 1 and E != 1/e, got {len(pts)}")
    x = np.array([math.log(abs(math.log(e))) for e, _ in pts])
    y = np.array([math.log(abs(math.log(n))) for _, n in pts])
    (slope, intercept), res, *_ = np.polyfit(x, y, 1, full=True)
    residual = float(math.sqrt(res[0] / len(x))) if len(res) else 0.0
    return LifshitzFit(float(slope), float(intercept), residual, len(pts), tuple(float(v) for v in y / x))


def fit_estimates(estimates: Sequence[IdsEstimate]) -> LifshitzFit:
    ok = [e for e in estimates if e.status == "ok"]
    return fit_lifshitz_exponent([e.E for e in ok], [e.N_hat for e in ok])
