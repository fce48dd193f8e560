"""Random alloy potential, its box periodization and the projected operator.

A sample assigns a coupling ``omega_g`` to every lattice site ``g``; the
potential is ``V(x) = sum_g omega_g u(x - g)``. The periodized potential
restricts ``V`` to the box ``(-L, L)**2`` and repeats it with period ``2L``.
"""

from __future__ import annotations

import math
import struct
import zlib
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import optimize

from . import kernels
from .landau_basis import FieldConfig, LandauIndex, basis_matrix, matrix_elements
from .quadrature import PlaneRule, panel_breaks, polar_rule, tensor_rule

SITE_KINDS = {"gaussian": kernels.GAUSSIAN, "indicator-plus-gaussian-tail": kernels.CORE_TAIL, "tabulated-radial": kernels.TABULATED}


class HypothesisViolation(ValueError):
    """A model assumption (site shape, coupling support, band gap) fails."""


@dataclass(frozen=True)
class CouplingLaw:
    """Couplings on ``[omega_minus, omega_plus]`` with ``P(|omega| <= x) = (x / width)**kappa``."""

    kappa: float
    omega_minus: float
    omega_plus: float
    sampler_seed: int = 0

    def __post_init__(self):
        if not self.kappa > 0:
            raise HypothesisViolation(f"kappa must be positive, got {self.kappa}")
        if not self.omega_minus < self.omega_plus:
            raise HypothesisViolation(f"need omega_minus < omega_plus, got [{self.omega_minus}, {self.omega_plus}]")
        if self.omega_minus * self.omega_plus != 0:
            raise HypothesisViolation("coupling support must end at 0 (omega_minus * omega_plus = 0)")

    @property
    def width(self) -> float:
        return self.omega_plus - self.omega_minus

    @property
    def edge_at_zero(self) -> str:
        return "lower" if self.omega_minus == 0 else "upper"

    def cdf(self, x):
        """Distribution function of ``|omega|``."""
        x = np.clip(np.asarray(x, dtype=float) / self.width, 0.0, 1.0)
        return x**self.kappa

    def from_uniform(self, u):
        """Inverse transform ``omega = omega_plus u**(1/kappa)`` (mirrored when ``omega_plus = 0``)."""
        mag = self.width * np.asarray(u, dtype=float) ** (1.0 / self.kappa)
        return mag if self.omega_minus == 0 else -mag


@dataclass(frozen=True)
class SingleSite:
    """Radial single-site profile centered at ``x0``.

    ``gaussian``: ``A exp(-r^2/w^2)``; ``indicator-plus-gaussian-tail``: ``A``
    on ``r <= radius`` and ``A exp(-(r-radius)^2/w^2)`` outside (``w = 0``
    gives a plain indicator); ``tabulated-radial``: linear interpolation of
    ``table`` on nodes ``0, step, 2 step, ...``, zero beyond.
    """

    kind: str
    amplitude: float
    width: float
    x0: tuple[float, float] = (0.0, 0.0)
    radius: float = 0.0
    table: tuple[float, ...] = ()
    table_step: float = 1.0
    h1_constant: float | None = None
    tail_widths: float = 10.0

    def __post_init__(self):
        if self.kind not in SITE_KINDS:
            raise ValueError(f"unknown site kind {self.kind!r}; expected one of {sorted(SITE_KINDS)}")
        if not self.amplitude > 0:
            raise HypothesisViolation(f"site amplitude must be positive, got {self.amplitude}")
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError("gaussian site needs width > 0")
        if self.kind == "tabulated-radial" and len(self.table) < 2:
            raise ValueError("tabulated site needs at least two table values")
        c = self.h1_constant if self.h1_constant is not None else find_h1_constant(self)
        if c is None or not check_h1(self, c):
            raise HypothesisViolation(f"site {self.kind} does not satisfy the two-sided bound with C={c}")
        object.__setattr__(self, "h1_constant", float(c))

    @property
    def code(self) -> int:
        return SITE_KINDS[self.kind]

    @property
    def cutoff(self) -> float:
        """Radius beyond which the profile is treated as zero."""
        if self.kind == "gaussian":
            return self.tail_widths * self.width
        if self.kind == "indicator-plus-gaussian-tail":
            return self.radius + self.tail_widths * self.width
        return (len(self.table) - 1) * self.table_step

    def profile(self, r):
        """``u`` as a function of the distance to ``x0``."""
        return kernels.profile(r, self.code, self.amplitude, self.width, self.radius, np.asarray(self.table, float), self.table_step)

    def __call__(self, x1, x2):
        return self.profile(np.hypot(np.asarray(x1) - self.x0[0], np.asarray(x2) - self.x0[1]))

    def kernel_args(self) -> tuple:
        table = np.ascontiguousarray(self.table if self.table else (0.0, 0.0), dtype=float)
        return (self.code, self.amplitude, self.width, self.radius, self.x0[0], self.x0[1], self.cutoff, table, self.table_step)


def _h1_grid(site: SingleSite, n: int = 201) -> tuple[np.ndarray, np.ndarray]:
    reach = site.cutoff + math.hypot(*site.x0) + 1.0
    g = np.linspace(-reach, reach, n)
    x1, x2 = np.meshgrid(g, g)
    return x1.ravel(), x2.ravel()


def check_h1(site: SingleSite, C: float) -> bool:
    """``(1/C) 1_{D(x0, 1/C)} <= u <= C exp(-|x|^2/C)`` on a test grid."""
    r = np.linspace(0.0, 1.0 / C, 400)
    if site.profile(r).min() < 1.0 / C:
        return False
    x1, x2 = _h1_grid(site)
    u = site(x1, x2)
    return bool(np.all(u <= C * np.exp(-(x1 * x1 + x2 * x2) / C) * (1 + 1e-12)))


def find_h1_constant(site: SingleSite) -> float | None:
    """Smallest ``C`` on a geometric ladder satisfying the two-sided bound."""
    for C in np.geomspace(1.0, 1e4, 400):
        if check_h1(site, float(C)):
            return float(C)
    return None


@dataclass(frozen=True)
class BoxConfig:
    a: float
    n: int
    flux: int

    @classmethod
    def make(cls, cfg: FieldConfig, a: float, n: int) -> "BoxConfig":
        flux = cfg.b * a * a / (2 * math.pi)
        if abs(flux - round(flux)) > 1e-9 * max(1.0, flux) or round(flux) < 1:
            raise HypothesisViolation(f"b a^2 / 2pi = {flux} is not a positive integer")
        if n < 0:
            raise ValueError(f"n must be >= 0, got {n}")
        return cls(a, n, int(round(flux)))

    @property
    def L(self) -> float:
        return (2 * self.n + 1) * self.a / 2

    @property
    def area(self) -> float:
        return (2 * self.L) ** 2

    def flux_count(self, cfg: FieldConfig) -> float:
        """Flux quanta through the box, ``b (2L)^2 / 2pi``."""
        return cfg.b * self.area / (2 * math.pi)

    def default_K(self, cfg: FieldConfig) -> int:
        return math.ceil(1.25 * math.ceil(self.flux_count(cfg) - 1e-9))

    def sites(self) -> np.ndarray:
        """Lattice sites in the open box ``(-L, L)^2``, row-major."""
        m = math.ceil(self.L) - 1 if float(self.L).is_integer() else math.floor(self.L)
        g = np.arange(-m, m + 1)
        gx, gy = np.meshgrid(g, g, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=1)

    def fold(self, x1, x2) -> tuple[np.ndarray, np.ndarray]:
        """Map points into ``[-L, L)^2`` modulo ``2L Z^2``."""
        L = self.L
        return np.mod(np.asarray(x1) + L, 2 * L) - L, np.mod(np.asarray(x2) + L, 2 * L) - L


def coupling_uniforms(seed: int, sample_index: int, sites: np.ndarray) -> np.ndarray:
    """Counter-based uniforms in (0, 1) keyed by ``(seed, sample_index, site)``.

    Each site gets its own Philox counter, so a site's coupling does not depend
    on which other sites are materialized or in what order.
    """
    key = np.array([seed % (1 << 64), sample_index % (1 << 64)], dtype=np.uint64)
    out = np.empty(len(sites))
    for i, (gx, gy) in enumerate(sites):
        bg = np.random.Philox(key=key, counter=np.array([int(gx) % (1 << 64), int(gy) % (1 << 64), 0, 0], dtype=np.uint64))
        raw = int(bg.random_raw())
        out[i] = ((raw >> 11) + 0.5) * 2.0**-53
    return out


@dataclass(frozen=True)
class AlloySample:
    """Couplings on the lattice sites of the box plus a halo of outside sites.

    Halo sites lie outside the box but within reach of the site profile, so
    their tails enter the potential inside the box.
    """

    law: CouplingLaw
    box: BoxConfig
    seed: int
    sample_index: int
    grid_origin: tuple[int, int]
    omega_grid: np.ndarray = field(repr=False)

    @staticmethod
    def _halo_grid(box: BoxConfig, reach: float) -> tuple[int, np.ndarray]:
        lo = -math.ceil(box.L + reach)
        g = np.arange(lo, -lo + 1)
        gx, gy = np.meshgrid(g, g, indexing="ij")
        return lo, np.stack([gx.ravel(), gy.ravel()], axis=1)

    @classmethod
    def draw(cls, law: CouplingLaw, box: BoxConfig, site: SingleSite, seed: int, sample_index: int = 0) -> "AlloySample":
        lo, sites = cls._halo_grid(box, site.cutoff + math.hypot(*site.x0) + 1.0)
        omegas = law.from_uniform(coupling_uniforms(seed, sample_index, sites))
        n = int(round(math.sqrt(len(sites))))
        return cls(law, box, seed, sample_index, (lo, lo), omegas.reshape(n, n))

    @classmethod
    def from_function(
        cls, law: CouplingLaw, box: BoxConfig, site: SingleSite, fn: Callable[[int, int], float], seed: int = 0
    ) -> "AlloySample":
        lo, sites = cls._halo_grid(box, site.cutoff + math.hypot(*site.x0) + 1.0)
        n = int(round(math.sqrt(len(sites))))
        vals = np.array([fn(int(gx), int(gy)) for gx, gy in sites], dtype=float)
        if np.any(vals < law.omega_minus) or np.any(vals > law.omega_plus):
            raise HypothesisViolation("couplings outside the law's support")
        return cls(law, box, seed, -1, (lo, lo), vals.reshape(n, n))

    def coupling(self, gx: int, gy: int) -> float:
        ix, iy = gx - self.grid_origin[0], gy - self.grid_origin[1]
        if not (0 <= ix < self.omega_grid.shape[0] and 0 <= iy < self.omega_grid.shape[1]):
            raise KeyError(f"site ({gx}, {gy}) outside the materialized halo")
        return float(self.omega_grid[ix, iy])

    @property
    def couplings(self) -> dict[tuple[int, int], float]:
        """``omega_g`` for the sites inside the box."""
        return {(int(gx), int(gy)): self.coupling(int(gx), int(gy)) for gx, gy in self.box.sites()}


def alloy_potential_values(sample: AlloySample, site: SingleSite, x1, x2) -> np.ndarray:
    """``V_omega`` (not periodized) at arrays of points."""
    x1 = np.ascontiguousarray(np.ravel(x1), dtype=float)
    x2 = np.ascontiguousarray(np.ravel(x2), dtype=float)
    return kernels.lattice_potential(
        x1, x2, np.ascontiguousarray(sample.omega_grid), sample.grid_origin[0], sample.grid_origin[1], *site.kernel_args()
    )


def periodic_potential_values(sample: AlloySample, site: SingleSite, x1, x2) -> np.ndarray:
    """Periodized potential: fold into the box, then sum the site contributions."""
    shape = np.shape(x1)
    f1, f2 = sample.box.fold(x1, x2)
    return alloy_potential_values(sample, site, f1, f2).reshape(shape)


def periodic_potential(sample: AlloySample, site: SingleSite, x) -> float:
    return float(periodic_potential_values(sample, site, np.array([x.x1]), np.array([x.x2]))[0])


@dataclass(frozen=True)
class Band:
    q: int
    lower: float
    upper: float
    E_minus: float | None
    E_plus: float | None


def periodic_site_sum_max(site: SingleSite, gamma_cut: float = 6.0, n: int = 101) -> float:
    """``max_x W(x)`` for ``W = sum_g u(x - g)``: grid scan of the unit cell then local polish."""
    reach = int(math.ceil(gamma_cut)) + 2
    g = np.arange(-reach, reach + 1)
    omega = np.ones((g.size, g.size))
    args = list(site.kernel_args())
    args[6] = min(args[6], gamma_cut)

    def W(x1, x2):
        x1 = np.ascontiguousarray(np.ravel(x1), dtype=float)
        x2 = np.ascontiguousarray(np.ravel(x2), dtype=float)
        return kernels.lattice_potential(x1, x2, omega, -reach, -reach, *args)

    c = np.linspace(0.0, 1.0, n, endpoint=False)
    x1, x2 = np.meshgrid(c, c)
    vals = W(x1, x2)
    i = int(np.argmax(vals))
    res = optimize.minimize(lambda p: -W(p[:1], p[1:])[0], [x1.ravel()[i], x2.ravel()[i]], method="Nelder-Mead",
                            options={"xatol": 1e-10, "fatol": 1e-14})
    return float(max(vals[i], -res.fun))


def band_layout(cfg: FieldConfig, site: SingleSite, law: CouplingLaw, q_max: int, gamma_cut: float = 6.0) -> list[Band]:
    """Intervals ``[2bq + M_-, 2bq + M_+]`` containing the almost-sure spectrum."""
    w_max = periodic_site_sum_max(site, gamma_cut)
    m_plus = law.omega_plus * w_max
    m_minus = law.omega_minus * w_max
    if not m_plus - m_minus < 2 * cfg.b:
        raise HypothesisViolation(f"band gap closes: M+ - M- = {m_plus - m_minus} >= 2b = {2 * cfg.b}")
    bands = []
    for q in range(q_max + 1):
        level = cfg.level_energy(q)
        bands.append(
            Band(
                q,
                level + m_minus,
                level + m_plus,
                level if law.omega_minus == 0 else None,
                level if law.omega_plus == 0 else None,
            )
        )
    return bands


@dataclass(frozen=True)
class Minorant:
    epsilon: float
    weight: float
    centers_offset: tuple[float, float]


def minorant_couplings(sample: AlloySample | None, site: SingleSite, tol: float = 1e-6) -> Minorant:
    """Largest grid-certified ``eps`` with ``u >= 1/C`` on ``D(x0, eps)``, and the floor of ``u`` there.

    ``eps`` is capped so that ``|x0| + eps < 1/2`` (disks around distinct
    sites stay disjoint).
    """
    cap = min(0.49, 0.5 - math.hypot(*site.x0) - 1e-3)
    level = 1.0 / site.h1_constant
    best = None
    for i in range(int(math.floor(cap * 1000)), 0, -1):
        eps = i / 1000
        r = np.append(np.linspace(0.0, eps, 2001), eps)
        u = site.profile(r)
        if u.min() >= level:
            best = (eps, float(u.min()), float(u.max()))
            break
    if best is None:
        raise HypothesisViolation("no disk around x0 on which the site potential stays above 1/C")
    eps, lo, hi = best
    weight = lo if hi == lo else lo * (1 - tol)
    return Minorant(eps, weight, site.x0)


def minorant_potential_values(sample: AlloySample, minorant: Minorant, box_clip: bool, x1, x2) -> np.ndarray:
    """``sum_g omega_g weight 1_{D(g + x0, eps)}``, periodized through the box like the alloy potential."""
    shape = np.shape(x1)
    if box_clip:
        x1, x2 = sample.box.fold(x1, x2)
    x1 = np.ascontiguousarray(np.ravel(x1), dtype=float)
    x2 = np.ascontiguousarray(np.ravel(x2), dtype=float)
    table = np.zeros(2)
    vals = kernels.lattice_potential(
        x1, x2, np.ascontiguousarray(sample.omega_grid), sample.grid_origin[0], sample.grid_origin[1],
        kernels.CORE_TAIL, minorant.weight, 0.0, minorant.epsilon,
        minorant.centers_offset[0], minorant.centers_offset[1], minorant.epsilon, table, 1.0,
    )
    return vals.reshape(shape)


def alloy_rule(cfg: FieldConfig, q: int, box: BoxConfig, K: int, panel: float = 0.5, order: int = 8) -> PlaneRule:
    """Tensor Gauss-Legendre rule on the box plus margin, with panel edges on the box walls."""
    L = box.L
    half = max(L + 6.0, math.sqrt(2.0 * (K + q + 40) / cfg.b))
    walls = [(2 * j + 1) * L for j in range(-int(half / L) - 1, int(half / L) + 1)]
    breaks = panel_breaks(-half, half, panel, walls)
    return tensor_rule(breaks, breaks, order)


@dataclass(frozen=True)
class ProjectedMatrix:
    matrix: np.ndarray
    asymmetry: float
    gram_deviation: float
    K: int
    center: tuple[float, float]


class AssemblyError(ArithmeticError):
    pass


class Assembler:
    """Quadrature rule and sampled basis for repeated ``<V phi_k^c, phi_j^c>`` assemblies."""

    def __init__(self, cfg: FieldConfig, q: int, K: int, rule: PlaneRule, center=(0.0, 0.0), asym_tol: float = 1e-6):
        if K > 400:
            raise ValueError(f"K={K} exceeds the desk-scale limit 400")
        self.cfg, self.q, self.K, self.rule, self.center, self.asym_tol = cfg, q, K, rule, tuple(center), asym_tol
        self.phi = basis_matrix(cfg.b, q, range(K), rule.x1, rule.x2, self.center)
        gram = matrix_elements(self.phi, rule.w, np.ones_like(rule.w))
        self.gram_deviation = float(np.abs(gram - np.eye(K)).max()) if K else 0.0

    @classmethod
    def for_box(cls, cfg: FieldConfig, q: int, box: BoxConfig, K: int | None = None, center=(0.0, 0.0)) -> "Assembler":
        K = box.default_K(cfg) if K is None else K
        return cls(cfg, q, K, alloy_rule(cfg, q, box, K), center)

    def from_values(self, V: np.ndarray) -> ProjectedMatrix:
        raw = matrix_elements(self.phi, self.rule.w, V)
        asym = float(np.abs(raw - raw.conj().T).max()) if self.K else 0.0
        if asym > self.asym_tol:
            raise AssemblyError(f"assembled matrix asymmetry {asym:.2e} exceeds {self.asym_tol:g}")
        return ProjectedMatrix(0.5 * (raw + raw.conj().T), asym, self.gram_deviation, self.K, self.center)

    def __call__(self, potential: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> ProjectedMatrix:
        return self.from_values(potential(self.rule.x1, self.rule.x2))

    def sample(self, sample: AlloySample, site: SingleSite) -> ProjectedMatrix:
        return self(lambda x1, x2: periodic_potential_values(sample, site, x1, x2))


def assemble_matrix(
    cfg: FieldConfig,
    q: int,
    potential: Callable[[np.ndarray, np.ndarray], np.ndarray],
    K: int,
    rule: PlaneRule,
    center: tuple[float, float] = (0.0, 0.0),
) -> ProjectedMatrix:
    """``M[k, j] = <V phi_k^c, phi_j^c>`` for ``k, j < K`` on the given rule."""
    return Assembler(cfg, q, K, rule, center)(potential)


def assemble_projected(
    cfg: FieldConfig,
    q: int,
    sample: AlloySample,
    site: SingleSite,
    K: int | None = None,
    center: tuple[float, float] = (0.0, 0.0),
) -> ProjectedMatrix:
    """Truncated ``Pi_q V^per Pi_q`` in the basis ``phi_{q,k}`` carried to ``center``."""
    return Assembler.for_box(cfg, q, sample.box, K, center).sample(sample, site)


def disk_rule(cfg: FieldConfig, q: int, K: int, R: float, center=(0.0, 0.0)) -> PlaneRule:
    """Polar rule around ``center`` with a radial break at ``R`` (for disk indicators)."""
    r_cut = math.sqrt(2.0 * (K + q + 40) / cfg.b)
    return polar_rule(max(r_cut, R + 1.0), 4 * (K + q) + 64, center=center, radial_breaks=[R])


def counting_proxy(eigenvalues: np.ndarray, E: float, box: BoxConfig) -> float:
    """``#{eigenvalues <= E} / (2L)^2``, the finite-truncation stand-in for the IDS."""
    return int(np.count_nonzero(np.asarray(eigenvalues) <= E)) / box.area


def eigenvalues(pm: ProjectedMatrix) -> np.ndarray:
    return np.linalg.eigvalsh(pm.matrix)


MATRIX_MAGIC = int.from_bytes(b"LTMATRX1", "little")
_HEADER = struct.Struct("<QQdQdqQQ")


def write_matrix(path, pm: ProjectedMatrix, cfg: FieldConfig, q: int, box: BoxConfig, seed: int) -> None:
    """Little-endian dump: 8-field header then the complex128 matrix row-major."""
    payload = np.ascontiguousarray(pm.matrix, dtype="<c16").tobytes()
    header = _HEADER.pack(MATRIX_MAGIC, pm.K, cfg.b, q, box.L, seed, zlib.crc32(payload), 0)
    with open(path, "wb") as fh:
        fh.write(header + payload)


def read_matrix(path) -> tuple[dict, np.ndarray]:
    data = open(path, "rb").read()
    magic, K, b, q, L, seed, checksum, _ = _HEADER.unpack_from(data)
    if magic != MATRIX_MAGIC:
        raise ValueError("not a matrix dump (bad magic)")
    payload = data[_HEADER.size:]
    if zlib.crc32(payload) != checksum:
        raise ValueError("matrix dump checksum mismatch")
    mat = np.frombuffer(payload, dtype="<c16").reshape(K, K)
    return {"K": K, "b": b, "q": q, "L": L, "seed": seed}, mat
