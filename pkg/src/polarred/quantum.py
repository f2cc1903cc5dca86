"""Reduced quantum Hamiltonian on the alcove and its spectrum.

In the delta^{1/2}-transformed picture the reduced operator acts on
V^K-valued functions of q and reads

    -1/2 Lap_red = -1/2 Lap_Sigma + 1/2 m(q) - 1/2 S(q),

with m = delta^{-1/2} Lap_Sigma delta^{1/2} the measure term and
S = P (b^{ab} rho'(T_a) rho'(T_b)) P the spin term on V^K.  Wall conditions
are Dirichlet because delta^{1/2} vanishes on the alcove boundary.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh, eigh_tridiagonal, null_space
from scipy.sparse.linalg import eigsh

from .classical import inertia_gram, kperp_generators, section_metric
from .lie import haar_batch
from .polar import CONJUGATION, EPS_REG, PolarActionModel, RegularityError, section_point

FD_STEP_MEASURE = 1e-2  # relative to the distance from the wall
FD_RICHARDSON_LEVELS = 4
OPERATOR_MAGIC = b"PRDMAT01"


# --- spin representations -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpinRep:
    name: str
    rep_matrices: np.ndarray  # rho'(X_i), anti-hermitian, one per symmetry basis vector
    vk_basis: np.ndarray  # columns: orthonormal basis of V^K

    @property
    def dim(self) -> int:
        return self.rep_matrices.shape[1]

    @property
    def dim_vk(self) -> int:
        return self.vk_basis.shape[1]

    @cached_property
    def vk_projector(self) -> np.ndarray:
        return self.vk_basis @ self.vk_basis.conj().T


def _invariant_subspace(mats: np.ndarray, dim: int) -> np.ndarray:
    if len(mats) == 0:
        return np.eye(dim, dtype=complex)
    return null_space(np.concatenate(list(mats), axis=0), rcond=1e-10)


def make_rep(model: PolarActionModel, name: str) -> SpinRep:
    """The trivial or adjoint representation of the symmetry algebra."""
    alg = model.symmetry_model
    if name == "trivial":
        mats = np.zeros((alg.dimension, 1, 1), dtype=complex)
    elif name == "adjoint":
        mats = alg.ad_basis.astype(complex)
    else:
        raise ValueError(f"unknown representation {name!r}; use 'trivial' or 'adjoint'")
    k_mats = np.einsum("ki,iab->kab", model.isotropy_split.k_basis, mats)
    vk = _invariant_subspace(k_mats, mats.shape[1])
    if vk.shape[1] == 0:
        raise ValueError(f"{name} representation has no K-invariant vectors on {model.name}")
    return SpinRep(name, mats, vk)


# --- density and measure term -------------------------------------------------------

def density(model: PolarActionModel, q, scale: float = 1.0) -> float:
    """delta(q) = scale * |det b(q)|^{1/2}."""
    return scale * inertia_gram(model, q).delta


def _factor_terms(model: PolarActionModel, q):
    q = np.asarray(q, dtype=float)
    a = np.array([f.a for f in model.density_factors])
    arg = a @ q + np.array([f.c for f in model.density_factors])
    m = np.array([f.m for f in model.density_factors])
    s = np.sin(arg)
    if np.min(np.abs(s)) ** 2 < EPS_REG:
        raise RegularityError(f"alcove wall reached at q = {q}")
    return a, m, s, np.cos(arg)


def _gram_derivatives(model: PolarActionModel, q):
    """b, its first and second q-derivatives, from exact commutator formulas."""
    q = np.asarray(q, dtype=float)
    y = section_point(model.section, q)
    lk = kperp_generators(model, y)
    left, _ = model.embedding
    alg = model.group_model
    kperp = model.isotropy_split.kperp_basis
    left_coords = alg.coords(np.einsum("ki,iab->kab", kperp, left)).T
    moved = left_coords - lk  # Ad_y of the right components
    ads = [alg.ad(a) for a in model.section.abelian_basis]
    r = len(ads)
    d1 = [-ad @ moved for ad in ads]
    d2 = [[-ads[j] @ ads[i] @ moved for j in range(r)] for i in range(r)]
    b = lk.T @ lk
    db = [d.T @ lk + lk.T @ d for d in d1]
    ddb = [[d2[i][j].T @ lk + d1[i].T @ d1[j] + d1[j].T @ d1[i] + lk.T @ d2[i][j]
            for j in range(r)] for i in range(r)]
    return b, db, ddb


def log_density_gradient(model: PolarActionModel, q) -> np.ndarray:
    """grad log delta^{1/2} = 1/4 tr(b^{-1} d_i b) (Jacobi's formula)."""
    b, db, _ = _gram_derivatives(model, q)
    binv = np.linalg.inv(b)
    return np.array([0.25 * np.trace(binv @ d) for d in db])


def _measure_from_log(model, grad, hess) -> float:
    ginv = np.linalg.inv(section_metric(model))
    return float(np.trace(ginv @ hess) + grad @ ginv @ grad)


def measure_term(model: PolarActionModel, q, method: str = "analytic") -> float:
    """delta^{-1/2} Lap_Sigma delta^{1/2} at q.

    ``analytic`` uses the product form of delta^{1/2} when the model carries
    density factors and exact Gram derivatives otherwise; ``gram`` forces the
    latter; ``fd`` differentiates the log-density gradient by central
    differences with a wall-scaled step and Richardson extrapolation.
    """
    q = np.asarray(q, dtype=float)
    if method == "analytic" and model.density_factors:
        a, m, s, c = _factor_terms(model, q)
        cot = c / s
        grad = (m * cot) @ a
        hess = -np.einsum("k,ki,kj->ij", m / s ** 2, a, a)
        return _measure_from_log(model, grad, hess)
    if method in ("analytic", "gram"):
        b, db, ddb = _gram_derivatives(model, q)
        if np.linalg.eigvalsh(b)[0] < EPS_REG:
            raise RegularityError(f"alcove wall reached at q = {q}")
        binv = np.linalg.inv(b)
        r = len(db)
        grad = np.array([0.25 * np.trace(binv @ d) for d in db])
        hess = np.array([[0.25 * np.trace(binv @ ddb[i][j] - binv @ db[j] @ binv @ db[i])
                          for j in range(r)] for i in range(r)])
        return _measure_from_log(model, grad, hess)
    if method == "fd":
        # central differences of the exact gradient; the step shrinks with the
        # distance to the wall (smallest Gram singular value) and a Richardson
        # table over h, 2h, 4h, 8h removes the error through O(h^6)
        b = _gram_derivatives(model, q)[0]
        h = FD_STEP_MEASURE * min(1.0, float(np.sqrt(max(np.linalg.eigvalsh(b)[0], 0.0))))
        r = len(q)
        grad = log_density_gradient(model, q)
        hess = np.empty((r, r))
        for i in range(r):
            e = np.zeros(r)
            e[i] = 1.0
            table = [(log_density_gradient(model, q + h * 2 ** k * e)
                      - log_density_gradient(model, q - h * 2 ** k * e)) / (2 * h * 2 ** k)
                     for k in range(FD_RICHARDSON_LEVELS)]
            for lev in range(1, FD_RICHARDSON_LEVELS):
                table = [(4 ** lev * table[k] - table[k + 1]) / (4 ** lev - 1)
                         for k in range(len(table) - 1)]
            hess[i] = table[0]
        return _measure_from_log(model, grad, 0.5 * (hess + hess.T))
    raise ValueError(f"unknown measure-term method {method!r}")


def spin_potential_matrix(model: PolarActionModel, rep: SpinRep, q) -> np.ndarray:
    """vk_basis^dagger (b^{ab} rho'(T_a) rho'(T_b)) vk_basis."""
    kperp = model.isotropy_split.kperp_basis
    if kperp.shape[0] == 0 or not np.any(rep.rep_matrices):
        return np.zeros((rep.dim_vk, rep.dim_vk), dtype=complex)
    binv = inertia_gram(model, q).b_inv
    rho = np.einsum("ai,ixy->axy", kperp, rep.rep_matrices)
    s = np.einsum("ab,axy,byz->xz", binv, rho, rho)
    out = rep.vk_basis.conj().T @ s @ rep.vk_basis
    return 0.5 * (out + out.conj().T)


# --- grids ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Uniform lattice strictly inside the alcove with a symmetric Laplacian stencil.

    ``edges`` lists interior neighbour pairs with weight ``edge_weight``; each
    node carries total stencil weight ``diag_weight``, so that
    Lap u_i = sum_j w (u_j - u_i) with u = 0 outside the grid (Dirichlet).
    Stencil edges leaving the grid are kept as (midpoint, node) pairs.
    """

    dimension: int
    n: int
    nodes: np.ndarray
    spacing: float
    edges: np.ndarray
    edge_weight: float
    diag_weight: float
    boundary_mid: np.ndarray
    boundary_node: np.ndarray
    boundary: str = "dirichlet"

    @property
    def size(self) -> int:
        return len(self.nodes)

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[self.edges[:, 0]] + self.nodes[self.edges[:, 1]])


def make_grid(model: PolarActionModel, n: int) -> RadialGrid:
    """Rank 1: n interior nodes. Rank 2 (equilateral alcove): n subdivisions per edge."""
    verts = model.section.vertices
    r = model.section.rank
    if n < 2:
        raise ValueError("grid size must be at least 2")
    if r == 1:
        lo, hi = float(verts[0, 0]), float(verts[1, 0])
        lo, hi = min(lo, hi), max(lo, hi)
        h = (hi - lo) / (n + 1)
        nodes = lo + h * np.arange(1, n + 1)
        edges = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1)
        return RadialGrid(1, n, nodes[:, None], h, edges, 1 / h ** 2, 2 / h ** 2,
                          np.array([[lo + h / 2], [hi - h / 2]]), np.array([0, n - 1]))
    if r == 2:
        e1, e2 = verts[1] - verts[0], verts[2] - verts[0]
        lens = [np.linalg.norm(e1), np.linalg.norm(e2), np.linalg.norm(e2 - e1)]
        if max(lens) - min(lens) > 1e-9 * max(lens):
            raise NotImplementedError("triangular lattice needs an equilateral alcove")
        if n < 3:
            raise ValueError("rank-2 grid needs at least 3 subdivisions")
        ij = [(i, j) for i in range(1, n) for j in range(1, n) if i + j <= n - 1]
        index = {p: k for k, p in enumerate(ij)}
        nodes = np.array([verts[0] + (i * e1 + j * e2) / n for i, j in ij])
        steps = [(1, 0), (0, 1), (1, -1), (-1, 0), (0, -1), (-1, 1)]
        edges, bm, bi = [], [], []
        for k, (i, j) in enumerate(ij):
            for di, dj in steps:
                nb = index.get((i + di, j + dj))
                if nb is None:
                    bm.append(nodes[k] + 0.5 * (di * e1 + dj * e2) / n)
                    bi.append(k)
                elif nb > k:
                    edges.append((k, nb))
        h = lens[0] / n
        w = 2.0 / (3.0 * h ** 2)
        return RadialGrid(2, n, nodes, h, np.array(edges), w, 6 * w, np.array(bm), np.array(bi))
    raise NotImplementedError("radial grids are implemented for rank 1 and rank 2 alcoves")


# --- operator assembly ----------------------------------------------------------------

@dataclass
class ReducedOperator:
    matrix: sp.csr_matrix
    kinetic: sp.csr_matrix
    measure_diagonal: np.ndarray
    spin_blocks: np.ndarray  # (nodes, dimVK, dimVK)
    grid: RadialGrid
    rep_name: str
    model_name: str
    scheme: str = "direct"

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def hermiticity_residual(self) -> float:
        d = self.matrix - self.matrix.conj().T
        return float(abs(d).max()) if d.nnz else 0.0

    def is_tridiagonal(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(np.abs(coo.row - coo.col) <= 1))


def _laplacian(grid: RadialGrid) -> sp.csr_matrix:
    m = grid.size
    i, j = grid.edges[:, 0], grid.edges[:, 1]
    w = np.full(len(i), grid.edge_weight)
    off = sp.coo_matrix((np.r_[w, w], (np.r_[i, j], np.r_[j, i])), shape=(m, m))
    return (off - sp.identity(m) * grid.diag_weight).tocsr()


def _weighted_laplacian(model: PolarActionModel, grid: RadialGrid, scale: float) -> sp.csr_matrix:
    """delta^{1/2} (delta^{-1} div delta grad) delta^{-1/2} in flux form.

    delta is sampled at edge midpoints; the wall flux is zero because delta
    vanishes there, which is the Dirichlet condition on delta^{1/2} u.
    """
    dn = np.array([density(model, x, scale) for x in grid.nodes])
    dm = np.array([density(model, x, scale) for x in grid.midpoints()])
    m = grid.size
    i, j = grid.edges[:, 0], grid.edges[:, 1]
    w = grid.edge_weight
    offv = w * dm / np.sqrt(dn[i] * dn[j])
    diag = np.zeros(m)
    np.add.at(diag, i, w * dm)
    np.add.at(diag, j, w * dm)
    off = sp.coo_matrix((np.r_[offv, offv], (np.r_[i, j], np.r_[j, i])), shape=(m, m))
    return (off - sp.diags(diag / dn)).tocsr()


def assemble_reduced_operator(model: PolarActionModel, rep: SpinRep, grid: RadialGrid,
                              scheme: str = "direct", density_scale: float = 1.0,
                              measure_method: str = "analytic") -> ReducedOperator:
    """Matrix of -1/2 Lap_red on grid functions with values in V^K.

    ``direct``: flat Laplacian plus measure-term diagonal.  ``conjugated``:
    delta^{1/2} Lap_eff delta^{-1/2} discretized in flux form, where the
    measure term is implicit and the normalization of delta cancels.
    """
    if section_metric(model).shape != (grid.dimension, grid.dimension):
        raise ValueError("grid rank does not match the section")
    if not np.allclose(section_metric(model), np.eye(grid.dimension), atol=1e-12):
        raise NotImplementedError("operator assembly assumes an orthonormal section basis")
    dv = rep.dim_vk
    if scheme == "direct":
        lap = _laplacian(grid)
        mt = np.array([measure_term(model, x, measure_method) for x in grid.nodes])
        scalar = -0.5 * lap + sp.diags(0.5 * mt)
    elif scheme == "conjugated":
        lap = _weighted_laplacian(model, grid, density_scale)
        mt = np.zeros(grid.size)
        scalar = -0.5 * lap
    else:
        raise ValueError(f"unknown assembly scheme {scheme!r}")
    spin = np.array([spin_potential_matrix(model, rep, x) for x in grid.nodes])
    mat = sp.kron(scalar, sp.identity(dv)) + sp.block_diag(list(-0.5 * spin), format="csr")
    mat = sp.csr_matrix(mat)
    if not np.any(spin.imag) and not np.any(mat.imag.data if mat.nnz else 0):
        mat = sp.csr_matrix(mat.real)
    mat.eliminate_zeros()
    mat.sort_indices()
    return ReducedOperator(mat, lap, mt, spin, grid, rep.name, model.name, scheme)


def spectrum(op: ReducedOperator, k: int) -> np.ndarray:
    """k lowest eigenvalues, ascending."""
    m = op.size
    if k < 1 or k > m:
        raise ValueError(f"k = {k} outside 1..{m}")
    a = op.matrix
    if op.is_tridiagonal() and not np.iscomplexobj(a.data):
        d = a.diagonal()
        e = a.diagonal(1)
        return eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, k - 1))
    if m <= 1500 or k >= m - 1:
        return eigh(a.toarray(), eigvals_only=True, subset_by_index=(0, k - 1))
    absrow = np.asarray(abs(a).sum(axis=1)).ravel()
    diag = np.real(a.diagonal())
    sigma = float(np.min(2 * diag - absrow)) - 1.0  # Gershgorin lower bound
    w = eigsh(a.tocsc(), k=k, sigma=sigma, which="LM", v0=np.ones(m), return_eigenvectors=False)
    return np.sort(np.real(w))


def write_operator(op: ReducedOperator, path) -> None:
    """Dense row-major complex128 dump behind a 16-byte header (magic, rows, cols)."""
    dense = op.matrix.toarray().astype("<c16")
    with open(path, "wb") as fh:
        fh.write(OPERATOR_MAGIC + struct.pack("<II", *dense.shape))
        fh.write(np.ascontiguousarray(dense).tobytes())


def read_operator(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if head[:8] != OPERATOR_MAGIC:
            raise ValueError("not an operator dump")
        rows, cols = struct.unpack("<II", head[8:])
        return np.frombuffer(fh.read(), dtype="<c16").reshape(rows, cols)


# --- oracles ------------------------------------------------------------------------

def su2_branching_ladder(rep_spin: int, k: int) -> np.ndarray:
    """Energies j(j+1)/2 over j with V_{rep_spin} inside V_j (x) V_j (Peter-Weyl)."""
    js = [j2 / 2 for j2 in range(0, 4 * k + 4 * rep_spin) if j2 >= rep_spin]
    return np.array([j * (j + 1) / 2 for j in js[:k]])


def casimir_ladder(model: PolarActionModel, k: int, span: int = 12) -> np.ndarray:
    """Lowest k values of (|mu|^2 - |rho|^2)/2 over strictly dominant weights mu.

    Valid for the trivial representation of SU(n) conjugation models, where
    L^2(Y)^G is spanned by characters.
    """
    if model.kind != CONJUGATION or model.roots is None:
        raise ValueError("character ladder is defined for conjugation models")
    rd = model.roots
    n = rd.n
    rho = 0.5 * rd.roots.sum(axis=0)
    seen, vals = set(), []
    for m in product(range(span), repeat=n - 1):
        # weight with theta-coefficients m_1 >= ... (shifted to m_n = 0)
        coeff = np.r_[np.cumsum(np.array(m)[::-1])[::-1], 0.0]
        mu = rd.eigenphase_map.T @ coeff
        if np.all(rd.roots @ mu < -1e-12):
            mu = -mu
        key = tuple(np.round(mu, 9))
        if np.all(rd.roots @ mu > 1e-12) and key not in seen:
            seen.add(key)
            vals.append(0.5 * (mu @ mu - rho @ rho))
    out = np.sort(np.array(vals))
    if len(out) < k:
        raise ValueError("increase span for this many eigenvalues")
    return out[:k]


def oracle_ladder(model: PolarActionModel, rep: SpinRep, k: int) -> np.ndarray | None:
    if model.kind != CONJUGATION:
        return None
    if rep.name == "trivial":
        return casimir_ladder(model, k)
    if rep.name == "adjoint" and model.roots.n == 2:
        return su2_branching_ladder(1, k)
    return None


# --- Weyl integration formula -------------------------------------------------------

def gauss_alcove_rule(model: PolarActionModel, order: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on the alcove (collapsed product rule for triangles)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    v = model.section.vertices
    if model.section.rank == 1:
        length = float(v[1, 0] - v[0, 0])
        return (v[0, 0] + length * x)[:, None], abs(length) * w
    if model.section.rank == 2:
        s, t = np.meshgrid(x, x, indexing="ij")
        ws = np.outer(w, w)
        pts = v[0] + s[..., None] * (v[1] - v[0]) + (s * t)[..., None] * (v[2] - v[1])
        area2 = abs(np.linalg.det(np.stack([v[1] - v[0], v[2] - v[0]])))
        return pts.reshape(-1, 2), (ws * s * area2).ravel()
    raise NotImplementedError("quadrature is implemented for rank 1 and rank 2")


def radial_inner_product(model: PolarActionModel, f: Callable, g: Callable,
                         order: int = 64) -> complex:
    """int conj(f) g delta / int delta over the alcove."""
    pts, w = gauss_alcove_rule(model, order)
    dens = np.array([_density_safe(model, x) for x in pts])
    fv = np.array([f(x) for x in pts])
    gv = np.array([g(x) for x in pts])
    return complex(np.sum(w * dens * np.conj(fv) * gv) / np.sum(w * dens))


def _density_safe(model, q) -> float:
    try:
        return inertia_gram(model, q).delta
    except RegularityError:
        return 0.0


def class_coordinates(model: PolarActionModel, ys: np.ndarray) -> np.ndarray:
    """Alcove coordinates of a batch of SU(n) elements under conjugation."""
    if model.kind != CONJUGATION:
        raise ValueError("batched class coordinates need a conjugation model")
    phases = np.sort(np.angle(np.linalg.eigvals(ys)), axis=1)
    n = phases.shape[1]
    wind = np.rint(phases.sum(axis=1) / (2 * np.pi)).astype(int)
    for m in np.unique(wind):
        sel = wind == m
        ph = phases[sel]
        if m > 0:
            ph[:, n - m:] -= 2 * np.pi
        elif m < 0:
            ph[:, :-m] += 2 * np.pi
        phases[sel] = np.sort(ph, axis=1)
    return phases @ np.linalg.pinv(model.roots.eigenphase_map).T


@dataclass
class QuadratureReport:
    quadrature: complex
    monte_carlo: complex
    mc_stderr: float
    samples: int

    @property
    def residual(self) -> float:
        return abs(self.monte_carlo - self.quadrature)

    @property
    def within_3sigma(self) -> bool:
        return self.residual <= 3.0 * self.mc_stderr + 1e-15

    def as_dict(self) -> dict:
        return {"quadrature": [self.quadrature.real, self.quadrature.imag],
                "monte_carlo": [self.monte_carlo.real, self.monte_carlo.imag],
                "mc_stderr": self.mc_stderr, "samples": self.samples,
                "residual": self.residual, "within_3sigma": self.within_3sigma}


def weyl_quadrature_check(model: PolarActionModel, f: Callable, g: Callable,
                          samples: int = 1_000_000, seed: int = 0, order: int = 64,
                          chunk: int = 100_000) -> QuadratureReport:
    """Haar average of conj(f) g against its radial reduction.

    ``f`` and ``g`` are radial profiles evaluated on (batches of) alcove
    coordinates of shape (..., r).
    """
    quad = radial_inner_product(model, f, g, order)
    rng = np.random.default_rng(seed)
    n = model.group_model.matrix_size
    total, total2, done = 0.0 + 0.0j, 0.0, 0
    while done < samples:
        m = min(chunk, samples - done)
        qs = class_coordinates(model, haar_batch(n, m, rng))
        v = np.conj(f(qs)) * g(qs)
        total += v.sum()
        total2 += float(np.sum(np.abs(v) ** 2))
        done += m
    mean = total / samples
    var = total2 / samples - abs(mean) ** 2
    return QuadratureReport(quad, complex(mean), float(np.sqrt(max(var, 0.0) / samples)), samples)


def su2_character(j: float) -> Callable:
    """chi_j on the su(2) alcove coordinate: sin((2j+1)q/2) / sin(q/2)."""
    def chi(q):
        q = np.asarray(q, dtype=float)[..., 0]
        return np.sin((2 * j + 1) * q / 2) / np.sin(q / 2)
    return chi
