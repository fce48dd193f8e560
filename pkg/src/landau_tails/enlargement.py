"""Enlargement of obstacles: certify

    Pi_q 1_{D(0,eps)} Pi_q >= C1 (Pi_q 1_{D(0,R)} Pi_q - C2 Pi_q 1_{D(0,2R)} Pi_q)

one angular index at a time. All three operators are diagonal in the
``phi_{q,k}`` basis, so the operator inequality is the family of scalar
inequalities ``nu_k(eps) >= C1 (nu_k(R) - C2 nu_k(2R))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .certificate import Certificate, NumericalFailure
from .disk_spectrum import DiskSpec, log_nu_exact
from .landau_basis import FieldConfig, LandauIndex
from .specfun import LogValue, log_sum

MARGIN_TOL = 1e-12


@dataclass(frozen=True)
class EnlargementParams:
    epsilon: float
    R: float
    C: float
    delta: float
    k0: int
    k_max: int

    @classmethod
    def make(
        cls,
        cfg: FieldConfig,
        epsilon: float,
        R: float,
        C: float,
        delta: float = 0.5,
        k_max: int | None = None,
    ) -> "EnlargementParams":
        k0 = math.ceil(C * R * R - 1e-9)
        params = cls(epsilon, R, C, delta, k0, 4 * k0 if k_max is None else k_max)
        params.validate(cfg)
        return params

    def validate(self, cfg: FieldConfig) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not self.C > 2 * cfg.b:
            raise ValueError(f"C={self.C} must exceed 2b={2 * cfg.b}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.k0 < cfg.rho(2 * self.R):
            raise ValueError(f"k0={self.k0} < rho(2R)={cfg.rho(2 * self.R)}")

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "R": self.R,
            "C": self.C,
            "delta": self.delta,
            "k0": self.k0,
            "k_max": self.k_max,
        }


class C1Result(NamedTuple):
    log_value: float
    argmin_k: int
    log_comparator: float  # -2 C R^2 ln R
    exponent: float  # log C1 / (R^2 ln R)

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


class C2Result(NamedTuple):
    log_value: float
    exponent: float  # -log C2 / R^2, so C2 = exp(-R^2 / C0') with C0' = 1/exponent

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def log_nu_table(cfg: FieldConfig, q: int, radius: float, k_max: int) -> np.ndarray:
    """``ln nu_{q,k}(radius)`` for ``k = 0..k_max``."""
    disk = DiskSpec.of(cfg, radius)
    out = np.empty(k_max + 1)
    for k in range(k_max + 1):
        try:
            out[k] = log_nu_exact(cfg, LandauIndex(q, k), disk)
        except NumericalFailure as exc:
            raise NumericalFailure(f"nu_{{{q},{k}}}(R={radius}) failed: {exc}") from exc
    return out


def _c1_from_tables(params: EnlargementParams, log_eps: np.ndarray, log_r: np.ndarray) -> C1Result:
    ratios = log_eps[: params.k0 + 1] - log_r[: params.k0 + 1]
    k = int(np.argmin(ratios))
    log_c1 = float(ratios[k])
    r2logr = params.R**2 * math.log(params.R)
    return C1Result(log_c1, k, -2 * params.C * r2logr, log_c1 / r2logr if r2logr > 0 else math.nan)


def compute_C1(cfg: FieldConfig, q: int, params: EnlargementParams) -> C1Result:
    """``C1 = min_{k <= k0} nu_k(eps) / nu_k(R)`` in the log domain."""
    if params.epsilon > params.R:
        raise ValueError(f"compute_C1 needs eps <= R, got eps={params.epsilon}, R={params.R}")
    return _c1_from_tables(
        params,
        log_nu_table(cfg, q, params.epsilon, params.k0),
        log_nu_table(cfg, q, params.R, params.k0),
    )


def compute_C2(cfg: FieldConfig, q: int, params: EnlargementParams) -> C2Result:
    """``C2 = (1+d)/(1-d) (C/(C-2b))^(2q-1) 2^(-2(k0-q+1)) exp(rho(2R) - rho(R))``."""
    d, C, b = params.delta, params.C, cfg.b
    log_c2 = (
        math.log((1 + d) / (1 - d))
        + (2 * q - 1) * math.log(C / (C - 2 * b))
        - 2 * (params.k0 - q + 1) * math.log(2.0)
        - cfg.rho(params.R)
        + cfg.rho(2 * params.R)
    )
    return C2Result(log_c2, -log_c2 / params.R**2)


def _relative_margin(lhs: LogValue, rhs: LogValue) -> float:
    # (lhs - rhs) / (|lhs| + |rhs|), computed without leaving the log domain
    diff, _ = log_sum([lhs, -rhs])
    scale, _ = log_sum([LogValue(lhs.log_abs, 1), LogValue(rhs.log_abs, 1)])
    if scale.sign == 0:
        return 0.0
    if diff.sign == 0:
        return 0.0
    return diff.sign * math.exp(diff.log_abs - scale.log_abs)


def certify_le2(cfg: FieldConfig, q: int, params: EnlargementParams) -> Certificate:
    """Check ``nu_k(eps) >= C1 (nu_k(R) - C2 nu_k(2R))`` for ``k = 0..k_max``.

    Rows store natural logs of both sides (with the sign of the right side)
    and the relative margin ``(lhs - rhs) / (|lhs| + |rhs|)``. Beyond ``k0``
    the tail mechanism ``nu_k(R) - C2 nu_k(2R) <= 0`` is also required.
    """
    params.validate(cfg)
    log_eps = log_nu_table(cfg, q, params.epsilon, params.k_max)
    log_r = log_nu_table(cfg, q, params.R, params.k_max)
    log_2r = log_nu_table(cfg, q, 2 * params.R, params.k_max)
    c1 = _c1_from_tables(params, log_eps, log_r)
    c2 = compute_C2(cfg, q, params)
    rows = []
    tail_ok = True
    crossover = None
    all_ok = True
    for k in range(params.k_max + 1):
        lhs = LogValue(float(log_eps[k]), 1)
        bracket, _ = log_sum([LogValue(float(log_r[k]), 1), LogValue(c2.log_value + float(log_2r[k]), -1)])
        rhs = LogValue(c1.log_value, 1) * bracket
        margin = _relative_margin(lhs, rhs)
        if bracket.sign <= 0 and crossover is None:
            crossover = k
        elif bracket.sign > 0:
            crossover = None
        if k > params.k0 and bracket.sign > 0:
            tail_ok = False
        ok = margin >= -MARGIN_TOL
        all_ok &= ok
        rows.append(
            {
                "k": k,
                "lhs": float(log_eps[k]),
                "rhs": rhs.log_abs if rhs.sign else None,
                "rhs_sign": rhs.sign,
                "margin": margin,
                "regime": "c1" if k <= params.k0 else "tail",
            }
        )
    r2logr = params.R**2 * math.log(params.R)
    return Certificate(
        lemma_id="le2",
        params={"q": q, "b": cfg.b, **params.as_dict()},
        rows=rows,
        constants={
            "C1": c1.value,
            "C2": c2.value,
            "log_C1": c1.log_value,
            "log_C2": c2.log_value,
            "C1_argmin_k": c1.argmin_k,
            "log_C1_comparator": c1.log_comparator,
            "log_C1_over_R2logR": c1.exponent,
            "neg_log_C2_over_R2": c2.exponent,
            "R2logR": r2logr,
        },
        passed=bool(all_ok and tail_ok),
        precision_note=(
            "lhs/rhs are natural logs of |value| (rhs_sign carries the sign); margin is "
            f"(lhs-rhs)/(|lhs|+|rhs|); pass iff every margin >= -{MARGIN_TOL:g} and "
            "nu_k(R) - C2 nu_k(2R) <= 0 for every k > k0"
        ),
        extra={"tail_ok": tail_ok, "crossover_k": crossover},
    )


@dataclass(frozen=True)
class OperatorBound:
    lhs: np.ndarray
    rhs: np.ndarray
    min_eigenvalue: float
    min_relative_margin: float


def enlargement_operator_bound(cfg: FieldConfig, q: int, params: EnlargementParams, K: int) -> OperatorBound:
    """Both sides of the operator inequality as diagonal matrices on ``k = 0..K``.

    Entries underflow to zero for large ``k``; ``min_relative_margin`` is the
    scale-free version of the smallest eigenvalue of ``lhs - rhs``.
    """
    if K > 200:
        raise ValueError(f"K={K} exceeds the desk-scale limit 200")
    log_eps = log_nu_table(cfg, q, params.epsilon, K)
    log_r = log_nu_table(cfg, q, params.R, K)
    log_2r = log_nu_table(cfg, q, 2 * params.R, K)
    c1 = compute_C1(cfg, q, params)
    c2 = compute_C2(cfg, q, params)
    lhs = np.diag(np.exp(log_eps))
    rhs = np.diag(c1.value * (np.exp(log_r) - c2.value * np.exp(log_2r)))
    margins = []
    for k in range(K + 1):
        bracket, _ = log_sum([LogValue(float(log_r[k]), 1), LogValue(c2.log_value + float(log_2r[k]), -1)])
        margins.append(_relative_margin(LogValue(float(log_eps[k]), 1), LogValue(c1.log_value, 1) * bracket))
    return OperatorBound(lhs, rhs, float(np.linalg.eigvalsh(lhs - rhs).min()), min(margins))
