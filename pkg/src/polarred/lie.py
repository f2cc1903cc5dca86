"""Compact Lie algebra and group arithmetic in a matrix realization.

Every algebra is realized by anti-hermitian matrices and carries the invariant
scalar product ``B(X, Y) = -2 tr(XY)``.  With this normalization the standard
generators ``T_a = -(i/2) sigma_a`` of su(2) are orthonormal and satisfy
``[T_1, T_2] = T_3``.  Algebra elements are passed around as real coordinate
vectors in the model basis; group elements are plain complex matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np

ATOL = 1e-12


class DimensionError(ValueError):
    pass


def bform_matrices(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.real(-2.0 * np.trace(x @ y)))


@dataclass(frozen=True, eq=False)
class LieAlgebraModel:
    """A real compact Lie algebra given by a basis of anti-hermitian matrices."""

    name: str
    basis: np.ndarray
    structure_constants: np.ndarray = field(repr=False)
    bform: np.ndarray = field(repr=False)

    @classmethod
    def from_basis(cls, name: str, basis) -> "LieAlgebraModel":
        basis = np.asarray(basis, dtype=complex)
        d = basis.shape[0]
        gram = np.array([[bform_matrices(a, b) for b in basis] for a in basis])
        gram = 0.5 * (gram + gram.T)
        # c[i, j, k]: coefficient of X_k in [X_i, X_j]
        brackets = np.einsum("iab,jbc->ijac", basis, basis)
        brackets = brackets - brackets.transpose(1, 0, 2, 3)
        pair = np.real(-2.0 * np.einsum("ijab,kba->ijk", brackets, basis))
        c = np.einsum("ijl,lk->ijk", pair, np.linalg.inv(gram))
        c[np.abs(c) < 1e-15] = 0.0
        obj = cls(name, basis, c, gram)
        return obj

    @property
    def dimension(self) -> int:
        return self.basis.shape[0]

    @property
    def matrix_size(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def _bform_inv(self) -> np.ndarray:
        return np.linalg.inv(self.bform)

    def check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            raise DimensionError(
                f"{self.name}: expected {self.dimension} coordinates, got {x.shape[-1]}"
            )
        return x

    def matrix(self, x) -> np.ndarray:
        x = self.check_vector(x)
        return np.tensordot(x, self.basis, axes=(-1, 0))

    def coords(self, m) -> np.ndarray:
        """Coordinates of a matrix (or stack of matrices) in the model basis."""
        m = np.asarray(m)
        if m.shape[-2:] != self.basis.shape[1:]:
            raise DimensionError(f"{self.name}: matrix shape {m.shape[-2:]} mismatch")
        pair = np.real(-2.0 * np.einsum("...ab,kba->...k", m, self.basis))
        return pair @ self._bform_inv

    def B(self, x, y) -> float:
        return float(self.check_vector(x) @ self.bform @ self.check_vector(y))

    def ad(self, x) -> np.ndarray:
        """Matrix of ad_x acting on coordinate vectors: (ad_x y)_k = c_ijk x_i y_j."""
        return np.einsum("ijk,i->kj", self.structure_constants, self.check_vector(x))

    @cached_property
    def ad_basis(self) -> np.ndarray:
        return np.stack([self.ad(e) for e in np.eye(self.dimension)])


def bracket(alg: LieAlgebraModel, x, y) -> np.ndarray:
    x = alg.check_vector(x)
    y = alg.check_vector(y)
    return np.einsum("ijk,i,j->k", alg.structure_constants, x, y)


def expm_antihermitian(m: np.ndarray) -> np.ndarray:
    """exp(M) for anti-hermitian M by unitary diagonalization of the hermitian iM."""
    h = 1j * m
    if np.max(np.abs(h - h.conj().swapaxes(-1, -2)), initial=0.0) > 1e-10 * max(
        1.0, float(np.max(np.abs(h), initial=0.0))
    ):
        raise ValueError("matrix is not anti-hermitian")
    h = 0.5 * (h + h.conj().swapaxes(-1, -2))
    w, v = np.linalg.eigh(h)
    # exp(M) = exp(-i H)
    return (v * np.exp(-1j * w)[..., None, :]) @ v.conj().swapaxes(-1, -2)


def exp_map(alg: LieAlgebraModel, x, t: float = 1.0) -> np.ndarray:
    return expm_antihermitian(t * alg.matrix(x))


def log_unitary(u: np.ndarray) -> np.ndarray:
    """Principal logarithm of a unitary matrix (eigenphases in (-pi, pi])."""
    from scipy.linalg import schur

    t, z = schur(u, output="complex")
    phases = np.angle(np.diag(t))
    return (z * (1j * phases)[None, :]) @ z.conj().T


def adjoint(alg: LieAlgebraModel, g: np.ndarray, x) -> np.ndarray:
    g = np.asarray(g)
    if g.shape != alg.basis.shape[1:]:
        raise DimensionError(f"{alg.name}: group element shape {g.shape} mismatch")
    return alg.coords(g @ alg.matrix(x) @ g.conj().T)


def adjoint_matrix(alg: LieAlgebraModel, g: np.ndarray) -> np.ndarray:
    """Matrix of Ad_g on coordinates (columns are images of basis vectors)."""
    conj = np.einsum("ab,kbc,dc->kad", g, alg.basis, g.conj())
    return alg.coords(conj).T


def is_special_unitary(g: np.ndarray, tol: float = 1e-10) -> bool:
    n = g.shape[0]
    return (
        np.linalg.norm(g.conj().T @ g - np.eye(n)) < tol
        and abs(np.linalg.det(g) - 1.0) < tol
    )


def haar_batch(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed SU(n) matrices: QR of complex Ginibre with phase fix."""
    z = (rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    q = q * (d / np.abs(d))[:, None, :]
    det = np.linalg.det(q)
    return q * (det ** (-1.0 / n))[:, None, None]


def haar_sample(n: int, seed: int) -> np.ndarray:
    return haar_batch(n, 1, np.random.default_rng(seed))[0]


def _unit(n: int, i: int, j: int) -> np.ndarray:
    e = np.zeros((n, n), dtype=complex)
    e[i, j] = 1.0
    return e


def su_basis(n: int) -> tuple[np.ndarray, list[tuple[int, int]], list[int]]:
    """-(i/2) times generalized Gell-Mann matrices.

    Order: for each pair i<j the symmetric then antisymmetric off-diagonal
    generator, then the n-1 diagonal generators.  For n = 2 this is
    (T_1, T_2, T_3).
    """
    mats = []
    pairs = []
    for i, j in combinations(range(n), 2):
        mats.append(-0.5j * (_unit(n, i, j) + _unit(n, j, i)))
        mats.append(-0.5 * (_unit(n, i, j) - _unit(n, j, i)))
        pairs.append((i, j))
    cartan = []
    for k in range(1, n):
        d = np.zeros(n)
        d[:k] = 1.0
        d[k] = -k
        d *= np.sqrt(2.0 / (k * (k + 1)))
        cartan.append(len(mats))
        mats.append(-0.5j * np.diag(d).astype(complex))
    return np.array(mats), pairs, cartan


def su(n: int) -> LieAlgebraModel:
    if n < 2:
        raise ValueError("su(n) needs n >= 2")
    basis, _, _ = su_basis(n)
    return LieAlgebraModel.from_basis(f"su({n})", basis)


def so(n: int) -> LieAlgebraModel:
    mats = [0.5 * (_unit(n, j, i) - _unit(n, i, j)) for i, j in combinations(range(n), 2)]
    return LieAlgebraModel.from_basis(f"so({n})", np.array(mats))


def direct_sum(a: LieAlgebraModel, b: LieAlgebraModel) -> LieAlgebraModel:
    """Block-diagonal realization of a + b; B is the sum of the two forms."""
    na, nb = a.matrix_size, b.matrix_size
    mats = []
    for x in a.basis:
        m = np.zeros((na + nb, na + nb), dtype=complex)
        m[:na, :na] = x
        mats.append(m)
    for x in b.basis:
        m = np.zeros((na + nb, na + nb), dtype=complex)
        m[na:, na:] = x
        mats.append(m)
    return LieAlgebraModel.from_basis(f"{a.name}+{b.name}", np.array(mats))


@dataclass(frozen=True, eq=False)
class RootData:
    """Analytic root data of su(n) relative to the diagonal Cartan subalgebra.

    ``roots[k]`` is the covector a with alpha_k(q) = a . q in orthonormal Cartan
    coordinates q; ``root_planes[k]`` holds the two algebra indices spanning the
    corresponding real root plane.  Positive roots are theta_j - theta_i for
    i < j where i*theta are the diagonal entries of the Cartan element.
    """

    n: int
    cartan_basis: list[int]
    pairs: list[tuple[int, int]]
    roots: np.ndarray
    root_planes: list[tuple[int, int]]
    weyl_generators: list[np.ndarray]
    eigenphase_map: np.ndarray  # theta = eigenphase_map @ q

    def values(self, q) -> np.ndarray:
        return self.roots @ np.asarray(q, dtype=float)


def su_root_data(n: int) -> RootData:
    basis, pairs, cartan = su_basis(n)
    # theta_k(q) = Im diag(sum_i q_i H_i)_k
    emap = np.array([np.imag(np.diag(basis[c])) for c in cartan]).T
    roots = np.array([emap[j] - emap[i] for i, j in pairs])
    planes = [(2 * k, 2 * k + 1) for k in range(len(pairs))]
    # Simple reflections act on q through the pseudo-inverse of the eigenphase map.
    pinv = np.linalg.pinv(emap)
    gens = []
    for k in range(n - 1):
        perm = np.eye(n)
        perm[[k, k + 1]] = perm[[k + 1, k]]
        gens.append(pinv @ perm @ emap)
    return RootData(n, cartan, pairs, roots, planes, gens, emap)
