"""Reduced classical dynamics of free geodesic motion under a polar action.

The reduced phase space is modelled on the alcove: points (q, p, xi) with q
alcove coordinates, p conjugate momenta and xi a spin vector in K-perp.  The
reduced Hamiltonian is

    H = 1/2 |p|^2 + 1/2 xi . b(q)^{-1} xi,    b_{ab}(q) = B(L_y T_a, L_y T_b),

and the spin moves by the Lie-Poisson flow xi' = [b^{-1} xi, xi].  The
unreduced oracle is the exact geodesic exp(tU) y0 of the bi-invariant metric.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .lie import adjoint_matrix, exp_map
from .polar import (
    CONJUGATION,
    EPS_REG,
    PolarActionModel,
    RegularityError,
    generator_matrix,
    project_to_section,
    section_point,
)

FD_STEP_FORCE = 1e-6


@dataclass
class ReducedState:
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray  # K-perp coordinates

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)


@dataclass
class ExtendedPoint:
    """Point of T*Y x O: alpha is the metric dual of the covector at y."""

    y: np.ndarray
    alpha: np.ndarray
    xi: np.ndarray  # symmetry-algebra coordinates


@dataclass
class InertiaEvaluation:
    b: np.ndarray
    b_inv: np.ndarray
    delta: float


@dataclass(frozen=True)
class CoadjointOrbitSpec:
    description: str  # zero | su2_equator | kks | generic
    base_point: np.ndarray
    params: dict = field(default_factory=dict)


def orbit_zero(model: PolarActionModel) -> CoadjointOrbitSpec:
    return CoadjointOrbitSpec("zero", np.zeros(model.symmetry_model.dimension))


def orbit_su2_equator(model: PolarActionModel, r: float) -> CoadjointOrbitSpec:
    if model.symmetry_model.name != "su(2)":
        raise ValueError("su2_equator orbit needs an su(2) symmetry algebra")
    return CoadjointOrbitSpec("su2_equator", np.array([r, 0.0, 0.0]), {"r": r})


def orbit_kks(model: PolarActionModel, nu: float) -> CoadjointOrbitSpec:
    """Base point i nu (v v^dagger - 1/n) with |v_k| = 1/sqrt(n)."""
    if model.kind != CONJUGATION:
        raise ValueError("KKS orbits are defined for conjugation models")
    n = model.group_model.matrix_size
    v = np.ones(n) / np.sqrt(n)
    mu = 1j * nu * (np.outer(v, v.conj()) - np.eye(n) / n)
    return CoadjointOrbitSpec("kks", model.symmetry_model.coords(mu), {"n": n, "nu": nu})


def orbit_generic(model: PolarActionModel, mu) -> CoadjointOrbitSpec:
    return CoadjointOrbitSpec("generic", model.symmetry_model.check_vector(mu).copy())


def orbit_kperp(model: PolarActionModel, orbit: CoadjointOrbitSpec) -> np.ndarray:
    """K-perp coordinates of the orbit base point; it must satisfy xi_K = 0."""
    split = model.isotropy_split
    xk = split.k_basis @ orbit.base_point
    if np.linalg.norm(xk) > 1e-12:
        raise ValueError(
            f"moment condition xi_K = 0 fails for the {orbit.description} orbit base point "
            f"(|xi_K| = {np.linalg.norm(xk):.3e}); the orbit slice O & K-perp is not reached")
    return split.kperp_basis @ orbit.base_point


# --- inertia -----------------------------------------------------------------------

def kperp_generators(model: PolarActionModel, y: np.ndarray) -> np.ndarray:
    """Columns L_y T_alpha for the K-perp basis."""
    return generator_matrix(model, y) @ model.isotropy_split.kperp_basis.T


def inertia_gram(model: PolarActionModel, q) -> InertiaEvaluation:
    lk = kperp_generators(model, section_point(model.section, q))
    b = lk.T @ lk
    b = 0.5 * (b + b.T)
    w = np.linalg.eigvalsh(b) if b.size else np.array([np.inf])
    if w[0] < EPS_REG:
        raise RegularityError(f"inertia Gram eigenvalue {w[0]:.3e} below {EPS_REG} at q = {q}")
    return InertiaEvaluation(b, np.linalg.inv(b), float(np.sqrt(abs(np.linalg.det(b)))))


def _has_root_formula(model: PolarActionModel) -> bool:
    return model.kind == CONJUGATION and model.roots is not None


def _root_gram(model: PolarActionModel, q) -> np.ndarray:
    """Diagonal of b(q) for conjugation models: 4 sin^2(alpha/2) per root plane."""
    alpha = model.roots.values(q)
    return np.repeat(4.0 * np.sin(alpha / 2.0) ** 2, 2)


def section_metric(model: PolarActionModel) -> np.ndarray:
    a = model.section.abelian_basis
    return a @ model.group_model.bform @ a.T


def spin_potential(model: PolarActionModel, q, xi) -> float:
    """1/2 B(J(q)^{-1} xi, xi) for xi in K-perp coordinates."""
    xi = np.asarray(xi, dtype=float)
    if _has_root_formula(model):
        bd = _root_gram(model, q)
        if np.min(bd) < EPS_REG:
            raise RegularityError(f"alcove wall reached at q = {q}")
        return 0.5 * float(np.sum(xi * xi / bd))
    ev = inertia_gram(model, q)
    return 0.5 * float(xi @ ev.b_inv @ xi)


def spin_force(model: PolarActionModel, q, xi) -> np.ndarray:
    """-d/dq of the spin potential; analytic for root models, else central differences."""
    q = np.asarray(q, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if _has_root_formula(model):
        alpha = model.roots.values(q)
        s = np.sin(alpha / 2.0)
        if np.min(4 * s * s) < EPS_REG:
            raise RegularityError(f"alcove wall reached at q = {q}")
        w = xi.reshape(-1, 2)
        norms = np.sum(w * w, axis=1)
        coef = 0.5 * norms * np.cos(alpha / 2.0) / (4.0 * s ** 3)
        return coef @ model.roots.roots
    h = FD_STEP_FORCE
    out = np.empty_like(q)
    for i in range(len(q)):
        e = np.zeros_like(q)
        e[i] = h
        out[i] = -(spin_potential(model, q + e, xi) - spin_potential(model, q - e, xi)) / (2 * h)
    return out


# --- momentum map and constraint -----------------------------------------------------

def momentum_map(model: PolarActionModel, point: ExtendedPoint) -> np.ndarray:
    """psi(alpha_y)(zeta) = alpha_y(L_y zeta), returned in symmetry-algebra coordinates."""
    lmat = generator_matrix(model, point.y)
    return lmat.T @ model.group_model.bform @ point.alpha


def constraint_residual(model: PolarActionModel, point: ExtendedPoint) -> float:
    return float(np.linalg.norm(momentum_map(model, point) + point.xi))


def extended_hamiltonian(model: PolarActionModel, point: ExtendedPoint) -> float:
    return 0.5 * model.group_model.B(point.alpha, point.alpha)


def solve_constraint(model: PolarActionModel, state: ReducedState,
                     vertical_sign: float = -1.0) -> ExtendedPoint:
    """Build the point of the zero momentum level over the section.

    alpha = alpha_H + alpha_V with alpha_H the horizontal lift of p and
    alpha_V = -A_y^*(xi).  ``vertical_sign`` exists for negative controls only.
    """
    split = model.isotropy_split
    xi = np.asarray(state.xi, dtype=float)
    if xi.shape != (split.dim_kperp,):
        raise ValueError(f"xi must have {split.dim_kperp} K-perp coordinates")
    y = section_point(model.section, state.q)
    lk = kperp_generators(model, y)
    b = lk.T @ lk
    if split.dim_kperp and np.linalg.eigvalsh(b)[0] < EPS_REG:
        raise RegularityError(f"constraint solve too close to a wall at q = {state.q}")
    a = model.section.abelian_basis
    alpha_h = np.linalg.solve(section_metric(model), state.p) @ a
    alpha_v = vertical_sign * (lk @ np.linalg.solve(b, xi)) if split.dim_kperp else 0.0 * alpha_h
    xi_full = xi @ split.kperp_basis
    return ExtendedPoint(y, alpha_h + alpha_v, xi_full)


def reduced_hamiltonian(model: PolarActionModel, state: ReducedState) -> float:
    kin = 0.5 * float(state.p @ np.linalg.solve(section_metric(model), state.p))
    return kin + spin_potential(model, state.q, state.xi)


def kinetic_identity_terms(model: PolarActionModel, q, xi) -> tuple[float, float]:
    """Both sides of eta*(A^* xi, A^* xi) = B(I^{-1} xi, xi), evaluated independently.

    The left side inverts L_y on the vertical space through an SVD
    pseudo-inverse; the right side solves with the Gram matrix.
    """
    xi = np.asarray(xi, dtype=float)
    y = section_point(model.section, q)
    lk = kperp_generators(model, y)
    conn = np.linalg.pinv(lk, rcond=1e-12)  # A_y: V_y -> K-perp
    lhs_vec = conn.T @ xi
    ev = inertia_gram(model, q)
    return float(lhs_vec @ lhs_vec), float(xi @ np.linalg.solve(ev.b, xi))


def kinetic_identity_residual(model: PolarActionModel, q, xi, scaled: bool = False) -> float:
    """|lhs - rhs| of the kinetic-energy identity; ``scaled`` divides by max(1, |rhs|)."""
    lhs, rhs = kinetic_identity_terms(model, q, xi)
    return abs(lhs - rhs) / (max(1.0, abs(rhs)) if scaled else 1.0)


# --- equations of motion -----------------------------------------------------------

def _xi_rate(model: PolarActionModel, q, xi_full: np.ndarray) -> np.ndarray:
    split = model.isotropy_split
    xi_perp = split.kperp_basis @ xi_full
    if _has_root_formula(model):
        jinv_xi = xi_perp / _root_gram(model, q)
    else:
        jinv_xi = inertia_gram(model, q).b_inv @ xi_perp
    x = jinv_xi @ split.kperp_basis
    c = model.symmetry_model.structure_constants
    return np.einsum("ijk,i,j->k", c, x, xi_full)


def reduced_vector_field(model: PolarActionModel, state: ReducedState):
    """(q', p', xi') with xi' in K-perp coordinates."""
    split = model.isotropy_split
    qdot = np.linalg.solve(section_metric(model), state.p)
    pdot = spin_force(model, state.q, state.xi)
    xidot = split.kperp_basis @ _xi_rate(model, state.q, state.xi @ split.kperp_basis)
    return qdot, pdot, xidot


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray
    p: np.ndarray
    xi: np.ndarray
    H: np.ndarray
    casimir: np.ndarray
    xi_k_norm: np.ndarray
    scheme: str
    wall_collision: bool = False

    @property
    def energy_drift(self) -> float:
        return float(np.max(np.abs(self.H - self.H[0])))

    @property
    def casimir_drift(self) -> float:
        return float(np.max(np.abs(self.casimir - self.casimir[0])))

    def state(self, k: int) -> ReducedState:
        return ReducedState(self.q[k], self.p[k], self.xi[k])

    def header(self) -> list[str]:
        r, m = self.q.shape[1], self.xi.shape[1]
        return (["t"] + [f"q_{i + 1}" for i in range(r)] + [f"p_{i + 1}" for i in range(r)]
                + [f"xi_{i + 1}" for i in range(m)] + ["H", "casimir", "xi_k_norm"])

    def rows(self):
        for k in range(len(self.times)):
            yield [self.times[k], *self.q[k], *self.p[k], *self.xi[k],
                   self.H[k], self.casimir[k], self.xi_k_norm[k]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.header())
            for row in self.rows():
                w.writerow([format(float(v), ".17g") for v in row])


def _pack(state: ReducedState, model: PolarActionModel) -> np.ndarray:
    return np.concatenate([state.q, state.p, state.xi @ model.isotropy_split.kperp_basis])


def _rhs(model: PolarActionModel, z: np.ndarray, r: int) -> np.ndarray:
    q, p, xi = z[:r], z[r:2 * r], z[2 * r:]
    xi_perp = model.isotropy_split.kperp_basis @ xi
    return np.concatenate([
        np.linalg.solve(section_metric(model), p),
        spin_force(model, q, xi_perp),
        _xi_rate(model, q, xi),
    ])


def _rk4(f, z, dt):
    k1 = f(z)
    k2 = f(z + 0.5 * dt * k1)
    k3 = f(z + 0.5 * dt * k2)
    k4 = f(z + dt * k3)
    return z + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _strang(model: PolarActionModel, z, dt, r):
    def kick(zz, h):
        q = zz[:r]

        def f(w):
            xi = w[r:]
            return np.concatenate([
                spin_force(model, q, model.isotropy_split.kperp_basis @ xi),
                _xi_rate(model, q, xi),
            ])
        return np.concatenate([q, _rk4(f, zz[r:], h)])

    z = kick(z, 0.5 * dt)
    z = z.copy()
    z[:r] += dt * np.linalg.solve(section_metric(model), z[r:2 * r])
    return kick(z, 0.5 * dt)


def _observables(model: PolarActionModel, z: np.ndarray, r: int):
    split = model.isotropy_split
    xi = z[2 * r:]
    xi_perp = split.kperp_basis @ xi
    state = ReducedState(z[:r], z[r:2 * r], xi_perp)
    return (xi_perp, reduced_hamiltonian(model, state), float(xi @ xi),
            float(np.linalg.norm(split.k_basis @ xi)))


def integrate_reduced(model: PolarActionModel, state0: ReducedState, t_end: float,
                      dt: float, scheme: str = "rk4", samples: int = 101) -> Trajectory:
    """Integrate the reduced equations, recording ``samples`` evenly spaced states."""
    if dt <= 0 or t_end <= 0:
        raise ValueError("t_end and dt must be positive")
    if scheme not in ("rk4", "strang_split"):
        raise ValueError(f"unknown scheme {scheme!r}")
    r = model.section.rank
    nsteps = max(1, int(round(t_end / dt)))
    h = t_end / nsteps
    samples = max(2, min(samples, nsteps + 1))
    record_at = set(np.rint(np.linspace(0, nsteps, samples)).astype(int).tolist())
    z = _pack(state0, model)
    rec = {k: [] for k in ("t", "q", "p", "xi", "H", "c", "xk")}

    def record(step, z):
        xi_perp, hval, cas, xk = _observables(model, z, r)
        rec["t"].append(step * h)
        rec["q"].append(z[:r].copy())
        rec["p"].append(z[r:2 * r].copy())
        rec["xi"].append(xi_perp)
        rec["H"].append(hval)
        rec["c"].append(cas)
        rec["xk"].append(xk)

    f = lambda zz: _rhs(model, zz, r)  # noqa: E731
    collided = False
    record(0, z)
    for step in range(1, nsteps + 1):
        try:
            znew = _rk4(f, z, h) if scheme == "rk4" else _strang(model, z, h, r)
            if not model.section.contains(znew[:r]):
                raise RegularityError("left the open alcove")
            spin_potential(model, znew[:r], model.isotropy_split.kperp_basis @ znew[2 * r:])
        except RegularityError:
            collided = True
            if rec["t"][-1] != (step - 1) * h:
                record(step - 1, z)
            break
        z = znew
        if step in record_at:
            record(step, z)
    return Trajectory(np.array(rec["t"]), np.array(rec["q"]), np.array(rec["p"]),
                      np.array(rec["xi"]), np.array(rec["H"]), np.array(rec["c"]),
                      np.array(rec["xk"]), scheme, collided)


# --- unreduced oracle ----------------------------------------------------------------

def geodesic(model: PolarActionModel, y0: np.ndarray, v0, t: float) -> np.ndarray:
    """Bi-invariant geodesic exp(t U) y0 with right-trivialized velocity U = v0."""
    return exp_map(model.group_model, v0, t) @ y0


def gauge_fix(model: PolarActionModel, xi) -> np.ndarray:
    """Deterministic K-representative of xi (conjugation models only).

    The torus is used to rotate each simple-root component xi_{k,k+1} onto the
    first generator of its root plane; other kinds are returned unchanged.
    """
    xi = np.asarray(xi, dtype=float)
    if not _has_root_formula(model):
        return xi
    split = model.isotropy_split
    alg = model.symmetry_model
    x = alg.matrix(xi @ split.kperp_basis)
    n = x.shape[0]
    phi = np.zeros(n)
    for k in range(n - 1):
        z = x[k, k + 1]
        phi[k + 1] = phi[k] + (np.angle(z) + np.pi / 2 if abs(z) > 1e-9 else 0.0)
    t = np.diag(np.exp(1j * phi))
    return split.kperp_basis @ (adjoint_matrix(alg, t) @ (xi @ split.kperp_basis))


def pullback_state(model: PolarActionModel, y: np.ndarray, ydot, fix_gauge: bool = True) -> ReducedState:
    """Reduced state of the point (y, ydot) on the zero momentum level."""
    q, g = project_to_section(model, y)
    a, _ = model.pair(g)
    u = adjoint_matrix(model.group_model, a.conj().T) @ np.asarray(ydot, dtype=float)
    s = section_point(model.section, q)
    p = model.section.abelian_basis @ model.group_model.bform @ u
    xi_full = -(generator_matrix(model, s).T @ model.group_model.bform @ u)
    xi = model.isotropy_split.kperp_basis @ xi_full
    if fix_gauge:
        xi = gauge_fix(model, xi)
    return ReducedState(q, p, xi)


def compare_flows(model: PolarActionModel, state0: ReducedState, t_end: float, dt: float,
                  samples: int = 101, scheme: str = "rk4") -> dict:
    """Max discrepancy of gauge-invariant observables: reduced flow vs geodesic."""
    point = solve_constraint(model, state0)
    traj = integrate_reduced(model, state0, t_end, dt, scheme=scheme, samples=samples)
    dev = {"q": 0.0, "p": 0.0, "H": 0.0, "casimir": 0.0, "spin_potential": 0.0}
    for k, t in enumerate(traj.times):
        y = geodesic(model, point.y, point.alpha, t)
        try:
            st = pullback_state(model, y, point.alpha, fix_gauge=False)
        except RegularityError:
            break
        red = traj.state(k)
        dev["q"] = max(dev["q"], float(np.max(np.abs(st.q - red.q))))
        dev["p"] = max(dev["p"], float(np.max(np.abs(st.p - red.p))))
        dev["H"] = max(dev["H"], abs(reduced_hamiltonian(model, st) - traj.H[k]))
        dev["casimir"] = max(dev["casimir"], abs(float(st.xi @ st.xi) - traj.casimir[k]))
        dev["spin_potential"] = max(
            dev["spin_potential"],
            abs(spin_potential(model, st.q, st.xi) - spin_potential(model, red.q, red.xi)))
    return {
        "model": model.name,
        "t_end": float(traj.times[-1]),
        "dt": dt,
        "samples": len(traj.times),
        "wall_collision": traj.wall_collision,
        "deviations": dev,
        "max_deviation": max(dev.values()),
        "energy_drift": traj.energy_drift,
        "casimir_drift": traj.casimir_drift,
        "max_xi_k_norm": float(np.max(traj.xi_k_norm)),
    }
