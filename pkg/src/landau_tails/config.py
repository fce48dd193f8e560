"""Experiment configuration: a flat ``key = value`` text file.

Blank lines and ``#`` comments are ignored. Lists (``E_grid``, ``site_table``,
``site_x0``) are comma separated. Unknown keys are an error.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property

from .alloy_operator import BoxConfig, CouplingLaw, SingleSite, band_layout
from .landau_basis import FieldConfig


class ConfigError(ValueError):
    pass


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    b: float
    q: int
    kappa: float
    omega_plus: float
    a: float
    n: int
    eta: float
    E_grid: tuple[float, ...]
    n_samples: int
    seed: int
    omega_minus: float = 0.0
    nu_exponent: float = 0.1
    L_cap: float | None = None
    K: int | None = None
    C_eta: float = 10.0
    bound_C: float = 1.0
    site_kind: str = "gaussian"
    site_amplitude: float = 1.0
    site_width: float = 1.0
    site_x0: tuple[float, ...] = (0.0, 0.0)
    site_radius: float = 0.0
    site_table: tuple[float, ...] = field(default=())
    site_table_step: float = 1.0

    def __post_init__(self):
        if self.q < 0:
            raise ConfigError(f"q must be >= 0, got {self.q}")
        if not 0 < self.eta < 1:
            raise ConfigError(f"eta must lie in (0, 1), got {self.eta}")
        if self.n_samples < 8:
            raise ConfigError(f"n_samples must be >= 8, got {self.n_samples}")
        if not self.nu_exponent > 0:
            raise ConfigError("nu_exponent must be positive")
        if len(self.site_x0) != 2:
            raise ConfigError("site_x0 needs two coordinates")
        E = self.E_grid
        if len(E) == 0 or any(not e > 0 for e in E) or any(x <= y for x, y in zip(E, E[1:])):
            raise ConfigError("E_grid must be nonempty, positive and strictly decreasing")
        try:
            self.field_cfg, self.site, self.law, self.box
            gap = min(2 * self.field_cfg.b - (self.band.upper - self.band.lower), 1.0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if E[0] >= gap:
            raise ConfigError(f"E_grid must stay below min(2b - M+ + M-, 1) = {gap:.6g}")
        if self.L_cap is not None and self.L_cap < self.box.L:
            raise ConfigError(f"L_cap={self.L_cap} is below the box half-width L={self.box.L}")

    @cached_property
    def field_cfg(self) -> FieldConfig:
        return FieldConfig(self.b)

    @cached_property
    def site(self) -> SingleSite:
        return SingleSite(
            self.site_kind, self.site_amplitude, self.site_width, tuple(self.site_x0),
            self.site_radius, tuple(self.site_table), self.site_table_step,
        )

    @cached_property
    def law(self) -> CouplingLaw:
        return CouplingLaw(self.kappa, self.omega_minus, self.omega_plus, self.seed)

    @cached_property
    def box(self) -> BoxConfig:
        return BoxConfig.make(self.field_cfg, self.a, self.n)

    @cached_property
    def band(self):
        return band_layout(self.field_cfg, self.site, self.law, self.q)[self.q]

    @property
    def cap(self) -> float:
        return self.box.L if self.L_cap is None else self.L_cap

    def box_for(self, E: float) -> tuple[BoxConfig, bool]:
        """Box with the smallest ``n`` reaching ``min(max(L, E**-nu), L_cap)``; flag if the cap bit."""
        want = max(self.box.L, E ** (-self.nu_exponent))
        capped = want > self.cap
        target = min(want, self.cap)
        n = max(self.n, math.ceil((2 * target / self.a - 1) / 2 - 1e-9))
        while (2 * n + 1) * self.a / 2 > self.cap + 1e-9 and n > self.n:
            n -= 1
        return BoxConfig.make(self.field_cfg, self.a, n), capped

    def manifest(self) -> dict:
        return {"seed": self.seed, "kappa": self.kappa, "omega_plus": self.omega_plus, "a": self.a,
                "n": self.n, "b": self.b, "q": self.q, "K": self.box.default_K(self.field_cfg) if self.K is None else self.K}

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(repr(x) for x in v)
            lines.append(f"{f.name} = {v!r}" if isinstance(v, float) else f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _convert(name: str, raw: str):
    kind = _FIELDS[name].type
    if "tuple" in kind:
        return _floats(raw)
    if "None" in kind and raw.lower() in ("none", ""):
        return None
    if kind.startswith("int"):
        return int(raw)
    if kind.startswith("float"):
        return float(raw)
    return raw


def parse_config(text: str) -> ExperimentConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected key = value")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {raw!r}") from exc
    missing = [f.name for f in _FIELDS.values() if f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING and f.name not in values]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}")
    return ExperimentConfig(**values)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


SMOKE_E_GRID = (0.6, 0.5, 0.45, 0.4, 0.35, 0.3, math.exp(-2), math.exp(-4), math.exp(-9), math.exp(-16), math.exp(-36), math.exp(-64))


def smoke_config(**overrides) -> ExperimentConfig:
    """The desk-scale reference experiment (gaussian site, uniform couplings on [0, 0.3])."""
    base = dict(b=1.0, q=0, kappa=1.0, omega_plus=0.3, a=math.sqrt(2 * math.pi), n=2, eta=0.5,
                E_grid=SMOKE_E_GRID, n_samples=8, seed=20240601)
    base.update(overrides)
    return ExperimentConfig(**base)
