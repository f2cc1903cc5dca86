"""Catalog of hyperpolar actions on SU(n) and the Sutherland potential fit."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable

import numpy as np

from .lie import direct_sum, so, su, su_root_data
from .polar import (
    CONJUGATION,
    HERMANN,
    TWISTED,
    DensityFactor,
    IsotropySplit,
    PolarActionModel,
    SectionChart,
    WeylElement,
    make_model,
    section_point,
    validate_section,
)


def _su_alcove_vertices(emap: np.ndarray, n: int, period: float) -> np.ndarray:
    pinv = np.linalg.pinv(emap)
    verts = [np.zeros(n)]
    for k in range(1, n):
        theta = np.full(n, -period * (n - k) / n)
        theta[k:] += period
        verts.append(theta)
    return np.array([pinv @ t for t in verts])


def _permutation_elements(emap: np.ndarray, n: int, max_n: int = 4):
    """Signed permutation matrices in SU(n) and their linear action on q."""
    pinv = np.linalg.pinv(emap)
    perms = permutations(range(n)) if n <= max_n else (
        [tuple(range(n))] + [tuple(np.r_[0:k, k + 1, k, k + 2:n]) for k in range(n - 1)])
    out = []
    for perm in perms:
        p = np.zeros((n, n), dtype=complex)
        p[list(perm), list(range(n))] = 1.0
        if np.real(np.linalg.det(p)) < 0:
            p[:, 0] *= -1.0
        # Ad_p diag(theta) permutes entries: theta'_{perm[k]} = theta_k
        pm = np.zeros((n, n))
        pm[list(perm), list(range(n))] = 1.0
        out.append((pinv @ pm @ emap, p))
    return out


def build_conjugation(n: int) -> PolarActionModel:
    """SU(n) acting on itself by conjugation; section = diagonal maximal torus."""
    if n < 2:
        raise ValueError("conjugation model needs n >= 2")
    alg = su(n)
    roots = su_root_data(n)
    d = alg.dimension
    eye = np.eye(d)
    cartan = eye[roots.cartan_basis]
    kperp = eye[[i for pl in roots.root_planes for i in pl]]
    weyl = tuple(WeylElement(lin, np.zeros(n - 1), g)
                 for lin, g in _permutation_elements(roots.eigenphase_map, n))
    chart = SectionChart(alg, cartan, _su_alcove_vertices(roots.eigenphase_map, n, 2 * np.pi), weyl)
    factors = tuple(DensityFactor(a / 2.0, 0.0, 1.0) for a in roots.roots)
    return make_model(f"su{n}-conj", CONJUGATION, alg, alg, chart,
                      IsotropySplit(cartan, kperp, kperp.copy()),
                      roots=roots, density_factors=factors)


def build_twisted(n: int) -> PolarActionModel:
    """SU(n) acting by a -> conj(a) y a^{-1}; section = torus of SO(n)."""
    if n < 3:
        raise ValueError("twisted conjugation needs n >= 3 for an outer automorphism")
    if n != 3:
        raise NotImplementedError("alcove data for twisted conjugation is tabulated for n = 3 only")
    alg = su(3)
    # basis index 1 is -(E_12 - E_21)/2, a unit vector spanning the so(3) torus
    abel = np.eye(alg.dimension)[[1]]
    nflip = np.diag([1.0, -1.0, -1.0]).astype(complex)
    mshift = np.diag([1j, 1j, -1.0])
    weyl = (
        WeylElement(np.eye(1), np.zeros(1), np.eye(3, dtype=complex)),
        WeylElement(-np.eye(1), np.zeros(1), nflip),
        WeylElement(np.eye(1), np.array([2 * np.pi]), mshift),
        WeylElement(-np.eye(1), np.array([2 * np.pi]), mshift @ nflip),
    )
    chart = SectionChart(alg, abel, np.array([[0.0], [np.pi]]), weyl)
    return make_model("su3-twisted", TWISTED, alg, alg, chart, automorphism=np.conj,
                      density_factors=(DensityFactor(np.array([1.0]), 0.0, 1.0),))


def build_hermann(n: int, k1_kind: str = "SO", k2_kind: str = "SO",
                  section_basis=None) -> PolarActionModel:
    """SO(n) x SO(n) acting on SU(n) by (a, b).y = a y b^{-1}.

    The default section is the diagonal torus, which lies in the orthogonal
    complement of so(n) = T_e(G.e); ``section_basis`` (rows of su(n)
    coordinates) replaces it for validation experiments.
    """
    if (k1_kind, k2_kind) != ("SO", "SO"):
        raise NotImplementedError("only K1 = K2 = SO(n) is implemented")
    if n < 2:
        raise ValueError("Hermann model needs n >= 2")
    alg = su(n)
    sym = direct_sum(so(n), so(n))
    roots = su_root_data(n)
    eye = np.eye(alg.dimension)
    abel = eye[roots.cartan_basis] if section_basis is None else np.atleast_2d(section_basis)
    emap = roots.eigenphase_map
    weyl = []
    for lin, p in _permutation_elements(emap, n):
        g = np.zeros((2 * n, 2 * n), dtype=complex)
        g[:n, :n] = p.real
        g[n:, n:] = p.real
        weyl.append(WeylElement(lin, np.zeros(n - 1), g))
    if n == 2:
        w = np.array([[0.0, -1.0], [1.0, 0.0]])
        g = np.zeros((4, 4), dtype=complex)
        g[:2, :2] = -w
        g[2:, 2:] = w
        weyl.append(WeylElement(-np.eye(1), np.array([2 * np.pi]), g))
    chart = SectionChart(alg, abel, _su_alcove_vertices(emap, n, np.pi), tuple(weyl))
    factors = tuple(DensityFactor(a, 0.0, 0.5) for a in roots.roots)
    name = f"su{n}-hermann-so{n}"
    return make_model(name, HERMANN, alg, sym, chart, roots=roots, density_factors=factors)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    builder: Callable[..., PolarActionModel]
    params: dict = field(default_factory=dict)
    expected_k_dimension: int = 0
    enabled: bool = True

    def build(self) -> PolarActionModel:
        return self.builder(**self.params)


CATALOG = {
    e.name: e
    for e in (
        CatalogEntry("su2-conj", build_conjugation, {"n": 2}, 1),
        CatalogEntry("su3-conj", build_conjugation, {"n": 3}, 2),
        CatalogEntry("su4-conj", build_conjugation, {"n": 4}, 3),
        CatalogEntry("su3-twisted", build_twisted, {"n": 3}, 1),
        CatalogEntry("su2-hermann-so2", build_hermann, {"n": 2}, 0),
        CatalogEntry("su3-hermann-so3", build_hermann, {"n": 3}, 0),
    )
}


def build(name: str) -> PolarActionModel:
    try:
        entry = CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; choose from {sorted(CATALOG)}") from None
    return entry.build()


@dataclass
class SutherlandFit:
    n: int
    orbit: str
    coefficient: float
    relative_residuals: np.ndarray
    free_model: bool
    tolerance: float = 1e-10

    @property
    def max_residual(self) -> float:
        return float(np.max(self.relative_residuals)) if len(self.relative_residuals) else 0.0

    @property
    def passed(self) -> bool:
        return self.free_model or self.max_residual < self.tolerance

    def as_dict(self) -> dict:
        return {"n": self.n, "orbit": self.orbit, "coefficient": self.coefficient,
                "free_model": self.free_model, "max_relative_residual": self.max_residual,
                "samples": len(self.relative_residuals), "passed": self.passed}


def pair_profile(model: PolarActionModel, q) -> float:
    """sum_{i<j} 1 / sin^2((theta_i - theta_j)/2) with theta the eigenphases of y(q)."""
    theta = model.roots.eigenphase_map @ np.asarray(q, dtype=float)
    n = len(theta)
    return float(sum(1.0 / np.sin((theta[i] - theta[j]) / 2) ** 2
                     for i in range(n) for j in range(i + 1, n)))


def derive_sutherland(n: int, orbit=None, q_samples: int = 50, seed: int = 0,
                      model: PolarActionModel | None = None) -> SutherlandFit:
    """Fit the reduced spin potential by c * sum 1/sin^2 of eigenphase differences.

    The potential is evaluated from the numerical Gram matrix, so the fit
    tests the functional form rather than assuming it.  ``orbit`` defaults
    to the KKS orbit with nu = 1.
    """
    from .classical import inertia_gram, orbit_kks, orbit_kperp

    model = model or build_conjugation(n)
    if model.kind != CONJUGATION:
        raise ValueError("the Sutherland fit needs a conjugation model")
    orbit = orbit if orbit is not None else orbit_kks(model, 1.0)
    xi = orbit_kperp(model, orbit)
    qs = model.section.sample(np.random.default_rng(seed), q_samples)
    pot = np.array([0.5 * xi @ inertia_gram(model, q).b_inv @ xi for q in qs])
    prof = np.array([pair_profile(model, q) for q in qs])
    if np.max(np.abs(pot)) == 0.0:
        return SutherlandFit(n, orbit.description, 0.0, np.zeros(q_samples), True)
    c = float(np.linalg.lstsq(prof[:, None], pot, rcond=None)[0][0])
    return SutherlandFit(n, orbit.description, c, np.abs(pot - c * prof) / np.abs(pot), False)
