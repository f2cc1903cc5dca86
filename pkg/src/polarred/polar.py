"""Isometric actions ``y -> a y b^{-1}`` of compact groups on a compact group Y.

The symmetry algebra is embedded into Y's algebra twice, ``zeta -> (zeta_L,
zeta_R)``, which covers plain conjugation, twisted conjugation and Hermann
actions with one formula for the infinitesimal generator:

    L_y zeta = zeta_L - Ad_y zeta_R        (right-trivialized, tangent = U y)

Tangent vectors and covectors at y are carried as right-trivialized algebra
coordinates, so the bi-invariant metric is the constant form B.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import schur

from .lie import (
    LieAlgebraModel,
    RootData,
    exp_map,
    adjoint_matrix,
)

EPS_REG = 1e-8

CONJUGATION = "conjugation"
TWISTED = "twisted_conjugation"
HERMANN = "hermann"
KINDS = (CONJUGATION, TWISTED, HERMANN)


class RegularityError(ValueError):
    """Raised when a point is within EPS_REG of the singular set."""


def worker_count() -> int:
    cap = os.environ.get("POLARRED_THREADS")
    if cap:
        return max(1, int(cap))
    return min(4, os.cpu_count() or 1)


@dataclass(frozen=True)
class WeylElement:
    """Affine map q -> linear @ q + shift realized by ``g`` in N(section)."""

    linear: np.ndarray
    shift: np.ndarray
    g: np.ndarray

    def __call__(self, q):
        return self.linear @ np.asarray(q, dtype=float) + self.shift


@dataclass(frozen=True, eq=False)
class SectionChart:
    """Exponential chart q -> exp(sum q_i A_i) with a simplex alcove."""

    algebra: LieAlgebraModel
    abelian_basis: np.ndarray  # (r, dim Y) coordinates
    vertices: np.ndarray  # (r + 1, r) alcove corners
    weyl_action: tuple[WeylElement, ...] = ()

    @property
    def rank(self) -> int:
        return self.abelian_basis.shape[0]

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def barycentric(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        m = np.vstack([self.vertices.T, np.ones(self.rank + 1)])
        rhs = np.concatenate([q.T, np.ones((1,) + q.shape[:-1])]) if q.ndim > 1 else np.append(q, 1.0)
        return np.linalg.solve(m, rhs).T

    def contains(self, q, closed: bool = False, tol: float = 0.0) -> bool:
        lam = self.barycentric(q)
        return bool(np.all(lam >= -tol) if closed else np.all(lam > tol))

    def sample(self, rng: np.random.Generator, count: int, margin: float = 0.02) -> np.ndarray:
        w = rng.dirichlet(np.ones(self.rank + 1), size=count)
        pts = w @ self.vertices
        c = self.centroid
        return c + (1.0 - margin) * (pts - c)


def section_point(chart: SectionChart, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape != (chart.rank,):
        raise ValueError(f"expected {chart.rank} section coordinates, got shape {q.shape}")
    return exp_map(chart.algebra, q @ chart.abelian_basis)


@dataclass(frozen=True, eq=False)
class IsotropySplit:
    """B-orthogonal split of the symmetry algebra into K and its complement.

    ``kperp_basis`` rows are T_alpha and ``kperp_dual`` rows are T^beta with
    B(T_alpha, T^beta) = delta (all in symmetry-algebra coordinates).
    """

    k_basis: np.ndarray
    kperp_basis: np.ndarray
    kperp_dual: np.ndarray

    @property
    def dim_k(self) -> int:
        return self.k_basis.shape[0]

    @property
    def dim_kperp(self) -> int:
        return self.kperp_basis.shape[0]


@dataclass(frozen=True)
class DensityFactor:
    """One factor |sin(a . q + c)|^m of the square root of the orbit density."""

    a: np.ndarray
    c: float
    m: float


@dataclass(frozen=True, eq=False)
class PolarActionModel:
    name: str
    kind: str
    group_model: LieAlgebraModel
    symmetry_model: LieAlgebraModel
    section: SectionChart
    isotropy_split: IsotropySplit
    automorphism: Callable[[np.ndarray], np.ndarray] | None = None
    roots: RootData | None = None
    density_factors: tuple[DensityFactor, ...] = ()
    _embed: tuple[np.ndarray, np.ndarray] = field(default=None, repr=False)

    def pair(self, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Left/right factors (a, b) of a symmetry-group element or algebra matrix."""
        if self.kind == CONJUGATION:
            return g, g
        if self.kind == TWISTED:
            return self.automorphism(g), g
        n = self.group_model.matrix_size
        return g[..., :n, :n], g[..., n:, n:]

    @property
    def embedding(self) -> tuple[np.ndarray, np.ndarray]:
        return self._embed

    @property
    def symmetry_size(self) -> int:
        return self.symmetry_model.matrix_size

    def identity(self) -> np.ndarray:
        return np.eye(self.symmetry_size, dtype=complex)


def make_model(name, kind, group_model, symmetry_model, section, isotropy_split=None, **kw):
    """Assemble a model, caching the algebra embedding and deriving K if not given."""
    if kind not in KINDS:
        raise ValueError(f"unknown action kind {kind!r}")
    model = PolarActionModel(name, kind, group_model, symmetry_model, section,
                             isotropy_split, **kw)
    left, right = model.pair(symmetry_model.basis)
    object.__setattr__(model, "_embed", (np.asarray(left), np.asarray(right)))
    if isotropy_split is None:
        object.__setattr__(model, "isotropy_split", numeric_isotropy_split(model))
    return model


def act(model: PolarActionModel, g: np.ndarray, y: np.ndarray) -> np.ndarray:
    g = np.asarray(g)
    if g.shape != (model.symmetry_size,) * 2 or y.shape != (model.group_model.matrix_size,) * 2:
        raise ValueError("dimension mismatch in act")
    a, b = model.pair(g)
    return a @ y @ b.conj().T


def generator_matrix(model: PolarActionModel, y: np.ndarray) -> np.ndarray:
    """L_y as a (dim Y) x (dim G) matrix in the two model bases."""
    left, right = model.embedding
    u = left - np.einsum("ab,kbc,dc->kad", y, right, y.conj())
    return model.group_model.coords(u).T


def generator(model: PolarActionModel, zeta, y: np.ndarray) -> np.ndarray:
    return generator_matrix(model, y) @ model.symmetry_model.check_vector(zeta)


def pushforward(model: PolarActionModel, g: np.ndarray, u) -> np.ndarray:
    """Differential of phi_g in right-trivialized coordinates: U -> Ad_a U."""
    a, _ = model.pair(g)
    return adjoint_matrix(model.group_model, a) @ np.asarray(u, dtype=float)


def _vertical_frame(model: PolarActionModel, y: np.ndarray) -> np.ndarray:
    lmat = generator_matrix(model, y)
    u, s, _ = np.linalg.svd(lmat, full_matrices=False)
    m = model.isotropy_split.dim_kperp
    if m and s[m - 1] ** 2 < EPS_REG:
        raise RegularityError(f"orbit Gram eigenvalue {s[m - 1] ** 2:.3e} below {EPS_REG}")
    return u[:, :m]


def split_tangent(model: PolarActionModel, y: np.ndarray, v) -> tuple[np.ndarray, np.ndarray]:
    """Split v into its vertical (orbit) and horizontal parts."""
    v = model.group_model.check_vector(v)
    frame = _vertical_frame(model, y)
    vert = frame @ (frame.T @ v)
    return vert, v - vert


def numeric_isotropy_split(model: PolarActionModel) -> IsotropySplit:
    y = section_point(model.section, model.section.centroid)
    _, s, vt = np.linalg.svd(generator_matrix(model, y))
    d = model.symmetry_model.dimension
    s = np.concatenate([s, np.zeros(d - len(s))])
    null = s < 1e-9
    k = vt[null]
    kperp = vt[~null]
    return IsotropySplit(k, kperp, kperp.copy())


@dataclass
class SectionReport:
    model: str
    samples: int
    max_orthogonality: float = 0.0
    max_isotropy: float = 0.0
    max_flatness: float = 0.0
    min_gram_eigenvalue: float = np.inf
    isotropy_dimension_ok: bool = True
    worst_point: list | None = None
    failures: list = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: {
        "orthogonality": 1e-10, "isotropy": 1e-10, "flatness": 1e-12})

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "samples": self.samples,
            "passed": self.passed,
            "max_orthogonality": self.max_orthogonality,
            "max_isotropy": self.max_isotropy,
            "max_flatness": self.max_flatness,
            "min_gram_eigenvalue": self.min_gram_eigenvalue,
            "isotropy_dimension_ok": self.isotropy_dimension_ok,
            "worst_point": self.worst_point,
            "failures": self.failures,
        }


class SectionValidationError(ValueError):
    def __init__(self, report: SectionReport):
        super().__init__(f"section validation failed for {report.model}: {report.failures}")
        self.report = report


def _check_point(model: PolarActionModel, q: np.ndarray) -> tuple[float, float, float, int]:
    y = section_point(model.section, q)
    lmat = generator_matrix(model, y)
    ortho = float(np.max(np.abs(model.section.abelian_basis @ model.group_model.bform @ lmat)))
    split = model.isotropy_split
    iso = float(np.max(np.abs(lmat @ split.k_basis.T), initial=0.0))
    if split.dim_kperp:
        gram = (lmat @ split.kperp_basis.T).T @ model.group_model.bform @ (lmat @ split.kperp_basis.T)
        gmin = float(np.linalg.eigvalsh(gram)[0])
    else:
        gmin = np.inf
    s = np.linalg.svd(lmat, compute_uv=False)
    s = np.concatenate([s, np.zeros(model.symmetry_model.dimension - len(s))])
    null_dim = int(np.sum(s < 1e-7))
    return ortho, iso, gmin, null_dim


def validate_section(model: PolarActionModel, samples: int = 100, seed: int = 0,
                     strict: bool = False) -> SectionReport:
    """Check orthogonality, constant isotropy and flatness at random alcove points."""
    report = SectionReport(model.name, samples)
    alg = model.group_model
    mats = alg.matrix(model.section.abelian_basis)
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            comm = mats[i] @ mats[j] - mats[j] @ mats[i]
            report.max_flatness = max(report.max_flatness, float(np.max(np.abs(comm))))
    if report.max_flatness > report.tolerances["flatness"]:
        report.failures.append(f"flatness: max |[A_i, A_j]| = {report.max_flatness:.3e}")

    children = np.random.SeedSequence(seed).spawn(samples)
    points = [model.section.sample(np.random.default_rng(c), 1)[0] for c in children]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(lambda q: _check_point(model, q), points))

    dim_k = model.isotropy_split.dim_k
    worst = -1.0
    for q, (ortho, iso, gmin, null_dim) in zip(points, results):
        score = max(ortho / 1e-10, iso / 1e-10)
        if score > worst:
            worst = score
            report.worst_point = [float(v) for v in q]
        report.max_orthogonality = max(report.max_orthogonality, ortho)
        report.max_isotropy = max(report.max_isotropy, iso)
        report.min_gram_eigenvalue = min(report.min_gram_eigenvalue, gmin)
        if null_dim != dim_k:
            report.isotropy_dimension_ok = False
            report.worst_point = [float(v) for v in q]
    if report.max_orthogonality > report.tolerances["orthogonality"]:
        report.failures.append(
            f"orthogonality: max |B(A_i, L_y zeta)| = {report.max_orthogonality:.3e}")
    if report.max_isotropy > report.tolerances["isotropy"] or not report.isotropy_dimension_ok:
        report.failures.append(
            f"isotropy: max |L_y K| = {report.max_isotropy:.3e}, "
            f"dimension ok = {report.isotropy_dimension_ok}")
    if report.min_gram_eigenvalue < EPS_REG:
        report.failures.append(f"regularity: min Gram eigenvalue {report.min_gram_eigenvalue:.3e}")
    if strict and not report.passed:
        raise SectionValidationError(report)
    return report


# --- projection onto the section -------------------------------------------------

def _lift_to_alcove(phases: np.ndarray, period: float = 2 * np.pi):
    """Sorted lift of eigenphases with zero sum and spread below ``period``.

    Returns (theta, order) with theta ascending and order the permutation of
    the input entries.
    """
    order = np.argsort(phases)
    theta = phases[order].copy()
    m = int(np.rint(theta.sum() / period))
    if m > 0:
        theta[len(theta) - m:] -= period
    elif m < 0:
        theta[:-m] += period
    perm = np.argsort(theta, kind="stable")
    theta = theta[perm]
    order = order[perm]
    gaps = np.append(np.diff(theta), period - (theta[-1] - theta[0]))
    if np.min(gaps) < EPS_REG:
        raise RegularityError(f"coincident eigenphases (gap {np.min(gaps):.3e})")
    return theta, order


def _special(g: np.ndarray) -> np.ndarray:
    g = g.copy()
    g[:, 0] *= np.conj(np.linalg.det(g))
    return g


def _project_conjugation(model: PolarActionModel, y: np.ndarray):
    t, z = schur(y, output="complex")
    theta, order = _lift_to_alcove(np.angle(np.diag(t)))
    emap = model.roots.eigenphase_map
    q = np.linalg.lstsq(emap, theta, rcond=None)[0]
    return q, _special(z[:, order])


def _project_hermann(model: PolarActionModel, y: np.ndarray):
    n = y.shape[0]
    m = y @ y.T
    for t in (0.6180339887, 1.7320508, -0.4142135, 2.7182818):
        w, o = np.linalg.eigh(m.real + t * m.imag)
        if np.min(np.diff(w)) > 1e-6:
            break
    phases = np.angle(np.einsum("ak,ab,bk->k", o, m, o))
    theta2, order = _lift_to_alcove(phases)
    a = o[:, order]
    if np.linalg.det(a) < 0:
        a[:, 0] *= -1.0
    emap = model.roots.eigenphase_map
    q = np.linalg.lstsq(emap, theta2 / 2.0, rcond=None)[0]
    s = section_point(model.section, q)
    b = y.conj().T @ a @ s
    if np.max(np.abs(b.imag)) > 1e-8:
        raise RegularityError("Hermann projection produced a non-real right factor")
    g = np.zeros((2 * n, 2 * n), dtype=complex)
    g[:n, :n] = a
    g[n:, n:] = b.real
    return q, g


def _project_twisted(model: PolarActionModel, y: np.ndarray):
    # y = U s U^T with U = theta(a); y conj(y) = U s^2 U^dagger
    t, v = schur(y @ y.conj(), output="complex")
    lam = np.angle(np.diag(t))
    rank_idx = np.argsort(-np.abs(lam))
    qv = float(np.abs(lam[rank_idx[0]]))
    q = np.array([qv])
    if not model.section.contains(q, tol=0.0):
        raise RegularityError(f"twisted projection left the alcove (q = {qv})")
    s = section_point(model.section, q)
    ts, w = schur(s @ s, output="complex")
    mu = np.angle(np.diag(ts))
    # align eigenvectors of s^2 with those of y conj(y)
    perm = [int(np.argmin(np.abs(np.exp(1j * mu) - np.exp(1j * l)))) for l in lam]
    if len(set(perm)) != len(perm):
        raise RegularityError("twisted projection: coincident eigenphases")
    w = w[:, perm]
    nmat = v.conj().T @ y @ v.conj()
    mmat = w.conj().T @ s @ w.conj()
    p = np.full(len(lam), np.nan, dtype=complex)
    self_paired = []
    for k in range(len(lam)):
        if not np.isnan(p[k]):
            continue
        partners = [l for l in range(len(lam)) if abs(mmat[k, l]) > 0.5]
        l = partners[0]
        if l == k:
            p[k] = np.sqrt(nmat[k, k] / mmat[k, k])
            self_paired.append(k)
        else:
            p[k] = 1.0
            p[l] = nmat[k, l] / mmat[k, l]
    u = v @ np.diag(p) @ w.conj().T
    if np.real(np.linalg.det(u)) < 0:
        if not self_paired:
            raise RegularityError("twisted projection: determinant cannot be fixed")
        p[self_paired[0]] *= -1.0
        u = v @ np.diag(p) @ w.conj().T
    return q, u.conj()


def project_to_section(model: PolarActionModel, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Return (q, g) with q in the closed alcove and act(g, section_point(q)) = y."""
    if model.kind == CONJUGATION:
        q, g = _project_conjugation(model, y)
    elif model.kind == HERMANN:
        q, g = _project_hermann(model, y)
    else:
        q, g = _project_twisted(model, y)
    if not model.section.contains(q, closed=True, tol=1e-9):
        raise RegularityError(f"projected point {q} outside the alcove")
    return q, g


def weyl_reduce(model: PolarActionModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Alcove representative of the orbit through section_point(q)."""
    return project_to_section(model, section_point(model.section, np.asarray(q, dtype=float)))
