import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polarred import catalog, classical
from polarred.classical import (
    ExtendedPoint,
    ReducedState,
    compare_flows,
    constraint_residual,
    extended_hamiltonian,
    gauge_fix,
    geodesic,
    inertia_gram,
    integrate_reduced,
    kinetic_identity_residual,
    momentum_map,
    orbit_kks,
    orbit_kperp,
    orbit_su2_equator,
    pullback_state,
    reduced_hamiltonian,
    reduced_vector_field,
    solve_constraint,
    spin_force,
    spin_potential,
)
from polarred.lie import adjoint_matrix, exp_map, haar_batch
from polarred.polar import RegularityError, generator, section_point

MODELS = sorted(catalog.CATALOG)
seeds = st.integers(0, 2**31 - 1)


def random_state(model, seed, xi_scale=1.0):
    rng = np.random.default_rng(seed)
    q = model.section.sample(rng, 1, margin=0.1)[0]
    p = rng.standard_normal(model.section.rank)
    xi = xi_scale * rng.standard_normal(model.isotropy_split.dim_kperp)
    return ReducedState(q, p, xi)


def torus_element(n, rng):
    ph = rng.uniform(0, 2 * np.pi, n)
    ph[-1] = -ph[:-1].sum()
    return np.diag(np.exp(1j * ph))


# --- inertia --------------------------------------------------------------------------

def test_su2_gram_closed_form(su2):
    for q in (0.3, 1.0, 2.5, 5.9):
        ev = inertia_gram(su2, [q])
        assert np.allclose(ev.b, 4 * np.sin(q / 2) ** 2 * np.eye(2), atol=1e-14)
        assert abs(ev.delta - 4 * np.sin(q / 2) ** 2) < 1e-14


def test_su3_gram_is_root_diagonal(su3, rng):
    q = su3.section.sample(rng, 1)[0]
    alpha = su3.roots.values(q)
    assert np.allclose(inertia_gram(su3, q).b, np.diag(np.repeat(4 * np.sin(alpha / 2) ** 2, 2)),
                       atol=1e-13)


def test_twisted_gram_spectrum(models):
    model = models["su3-twisted"]
    q = 1.1
    expected = np.sort([4 * np.sin(q / 4) ** 2] * 2 + [4.0] + [4 * np.cos(q / 4) ** 2] * 2
                       + [4 * np.cos(q / 2) ** 2] * 2)
    assert np.allclose(np.linalg.eigvalsh(inertia_gram(model, [q]).b), expected, atol=1e-13)


def test_hermann_gram_closed_form(models):
    q = 0.8
    b = inertia_gram(models["su2-hermann-so2"], [q]).b
    assert np.allclose(b, [[1, -np.cos(q)], [-np.cos(q), 1]], atol=1e-14)


@pytest.mark.parametrize("name", MODELS)
def test_gram_weyl_invariant_determinant(name, models, rng):
    model = models[name]
    q = model.section.sample(rng, 1)[0]
    d = inertia_gram(model, q).delta
    for w in model.section.weyl_action:
        assert abs(inertia_gram(model, w(q)).delta - d) < 1e-12 * max(1, d)


def test_gram_commutes_with_isotropy(su3, rng):
    q = su3.section.sample(rng, 1)[0]
    b = inertia_gram(su3, q).b
    kp = su3.isotropy_split.kperp_basis
    for _ in range(3):
        ad = kp @ adjoint_matrix(su3.symmetry_model, torus_element(3, rng)) @ kp.T
        assert np.max(np.abs(ad @ b - b @ ad)) < 1e-12


def test_gram_rejects_walls(su2):
    with pytest.raises(RegularityError):
        inertia_gram(su2, [1e-6])


# --- momentum map and constraint ----------------------------------------------------

def test_momentum_map_examples(su2):
    y = section_point(su2.section, [1.2])
    horizontal = ExtendedPoint(y, np.array([0, 0, 1.0]), np.zeros(3))
    assert np.allclose(momentum_map(su2, horizontal), 0, atol=1e-15)
    zeta = np.array([0.3, -0.7, 0.0])
    pt = ExtendedPoint(y, generator(su2, zeta, y), np.zeros(3))
    psi = momentum_map(su2, pt)
    kp = su2.isotropy_split.kperp_basis
    assert np.allclose(kp @ psi, inertia_gram(su2, [1.2]).b @ (kp @ zeta), atol=1e-14)
    # annihilates the isotropy algebra
    assert abs(psi[2]) < 1e-14


@pytest.mark.parametrize("name", MODELS)
@given(seed=seeds)
def test_constraint_solution(name, seed):
    model = catalog.build(name)
    s = random_state(model, seed)
    pt = solve_constraint(model, s)
    assert constraint_residual(model, pt) < 1e-10
    assert abs(reduced_hamiltonian(model, s) - extended_hamiltonian(model, pt)) < 1e-12 * max(
        1, reduced_hamiltonian(model, s))


def test_constraint_examples(su2):
    s = ReducedState([np.pi / 2], [0.4], [0.0, 0.0])
    pt = solve_constraint(su2, s)
    assert np.allclose(pt.alpha, [0, 0, 0.4]) and constraint_residual(su2, pt) == 0.0
    pt = solve_constraint(su2, ReducedState([np.pi / 2], [0.0], [1.0, 0.0]))
    assert constraint_residual(su2, pt) < 1e-12
    with pytest.raises(ValueError):
        solve_constraint(su2, ReducedState([1.0], [0.0], [1.0, 0.0, 0.0]))


def test_wrong_vertical_sign_breaks_constraint(su2):
    pt = solve_constraint(su2, ReducedState([1.0], [0.2], [1.0, 0.5]), vertical_sign=+1.0)
    assert constraint_residual(su2, pt) > 1e-3


# --- hamiltonian -------------------------------------------------------------------

def test_su2_spin_term(su2):
    r, q = 1.7, 2.2
    s = ReducedState([q], [0.0], [r, 0.0])
    assert abs(reduced_hamiltonian(su2, s) - r ** 2 / (8 * np.sin(q / 2) ** 2)) < 1e-13
    assert reduced_hamiltonian(su2, ReducedState([q], [0.6], [0, 0])) == pytest.approx(0.18, abs=1e-15)


@pytest.mark.parametrize("name", MODELS)
@given(seed=seeds)
def test_kinetic_identity(name, seed):
    model = catalog.build(name)
    s = random_state(model, seed)
    assert kinetic_identity_residual(model, s.q, s.xi, scaled=True) < 1e-12
    assert kinetic_identity_residual(model, s.q, np.zeros_like(s.xi)) == 0.0


def test_kinetic_identity_su2_absolute(su2):
    rng = np.random.default_rng(0)
    for _ in range(100):
        s = random_state(su2, int(rng.integers(1 << 30)))
        assert kinetic_identity_residual(su2, s.q, s.xi) < 1e-12


def test_observables_gauge_invariant(su3, rng):
    s = random_state(su3, 3)
    kp = su3.isotropy_split.kperp_basis
    t = torus_element(3, rng)
    xi2 = kp @ adjoint_matrix(su3.symmetry_model, t) @ (s.xi @ kp)
    assert abs(spin_potential(su3, s.q, xi2) - spin_potential(su3, s.q, s.xi)) < 1e-10
    assert abs(kinetic_identity_residual(su3, s.q, xi2) - kinetic_identity_residual(su3, s.q, s.xi)) < 1e-12


def test_spin_potential_weyl_invariant(su3, rng):
    s = random_state(su3, 11)
    kp = su3.isotropy_split.kperp_basis
    v = spin_potential(su3, s.q, s.xi)
    for w in su3.section.weyl_action:
        xi_w = kp @ adjoint_matrix(su3.symmetry_model, w.g) @ (s.xi @ kp)
        assert abs(spin_potential(su3, w(s.q), xi_w) - v) < 1e-10


def test_root_formula_matches_gram(models):
    for name in ("su2-conj", "su3-conj", "su4-conj"):
        model = models[name]
        s = random_state(model, 5)
        gram = 0.5 * s.xi @ inertia_gram(model, s.q).b_inv @ s.xi
        assert abs(spin_potential(model, s.q, s.xi) - gram) < 1e-12 * max(1, gram)


# --- equations of motion ----------------------------------------------------------

def test_free_motion(su3):
    s = ReducedState(su3.section.centroid, [0.3, -0.2], np.zeros(6))
    qd, pd, xd = reduced_vector_field(su3, s)
    assert np.allclose(qd, s.p) and np.allclose(pd, 0) and np.allclose(xd, 0)
    traj = integrate_reduced(su3, s, 1.0, 1e-2)
    assert np.allclose(traj.q[-1], s.q + s.p, atol=1e-10)


def test_su2_force_law(su2):
    r = 1.3
    for q in (0.7, 2.0, 4.4):
        f = spin_force(su2, [q], [r, 0])
        assert abs(f[0] - r ** 2 * np.cos(q / 2) / (8 * np.sin(q / 2) ** 3)) < 1e-12
        h = 1e-6
        fd = -(spin_potential(su2, [q + h], [r, 0]) - spin_potential(su2, [q - h], [r, 0])) / (2 * h)
        assert abs(f[0] - fd) < 1e-7


@pytest.mark.parametrize("name", ["su3-conj", "su4-conj"])
def test_analytic_force_matches_central_differences(name, models):
    model = models[name]
    s = random_state(model, 8)
    f = spin_force(model, s.q, s.xi)
    h = 1e-6
    for i in range(len(s.q)):
        e = np.zeros(len(s.q))
        e[i] = h
        fd = -(spin_potential(model, s.q + e, s.xi) - spin_potential(model, s.q - e, s.xi)) / (2 * h)
        assert abs(f[i] - fd) < 1e-6 * max(1, abs(fd))


@given(seed=seeds)
def test_spin_rate_is_casimir_preserving(seed):
    model = catalog.build("su3-conj")
    s = random_state(model, seed)
    _, _, xd = reduced_vector_field(model, s)
    assert abs(xd @ s.xi) < 1e-10 * max(1, np.abs(xd).max())


@pytest.mark.parametrize("scheme", ["rk4", "strang_split"])
def test_su2_sutherland_conservation(su2, scheme):
    s = ReducedState([np.pi], [0.4], orbit_kperp(su2, orbit_su2_equator(su2, 1.0)))
    traj = integrate_reduced(su2, s, 1.0, 1e-4, scheme=scheme)
    assert not traj.wall_collision
    assert traj.energy_drift < 1e-8 and traj.casimir_drift < 1e-8
    assert np.max(traj.xi_k_norm) < 1e-9


def test_wall_collision_truncates(su2):
    s = ReducedState([0.5], [-5.0], [0.0, 0.0])
    traj = integrate_reduced(su2, s, 1.0, 1e-3)
    assert traj.wall_collision
    assert traj.times[-1] < 0.11
    assert np.all(traj.q > 0)


def test_integrator_rejects_bad_step(su2):
    s = ReducedState([1.0], [0.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        integrate_reduced(su2, s, 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate_reduced(su2, s, 1.0, 0.1, scheme="euler")


def test_trajectory_csv(su2, tmp_path):
    s = ReducedState([2.0], [0.3], [1.0, 0.0])
    traj = integrate_reduced(su2, s, 0.1, 1e-3, samples=11)
    path = tmp_path / "t.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,q_1,p_1,xi_1,xi_2,H,casimir,xi_k_norm"
    assert len(lines) == 12
    back = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(back[:, 1], traj.q[:, 0])


# --- unreduced oracle ------------------------------------------------------------

def test_geodesic_examples(su2):
    y0 = haar_batch(2, 1, np.random.default_rng(1))[0]
    assert np.allclose(geodesic(su2, y0, [0.2, 0.1, 0.3], 0.0), y0)
    assert np.allclose(geodesic(su2, np.eye(2), [0, 0, 1], 0.6), exp_map(su2.group_model, [0, 0, 1], 0.6))
    y = geodesic(su2, y0, [0.2, 0.1, 0.3], 5.0)
    assert np.allclose(y.conj().T @ y, np.eye(2), atol=1e-10)


@pytest.mark.parametrize("name", MODELS)
def test_pullback_round_trip(name, models):
    model = models[name]
    s = random_state(model, 21)
    pt = solve_constraint(model, s)
    back = pullback_state(model, pt.y, pt.alpha)
    assert np.allclose(back.q, s.q, atol=1e-10)
    assert np.allclose(back.p, s.p, atol=1e-10)
    assert np.allclose(back.xi, gauge_fix(model, s.xi), atol=1e-10)


def test_pullback_horizontal(su2):
    y = section_point(su2.section, [1.5])
    s = pullback_state(su2, y, [0, 0, 0.7])
    assert np.allclose(s.q, [1.5]) and np.allclose(s.p, [0.7]) and np.allclose(s.xi, 0)


def test_pullback_gauge_invariant_q(su3, rng):
    s = random_state(su3, 4)
    pt = solve_constraint(su3, s)
    g = haar_batch(3, 1, rng)[0]
    from polarred.polar import act, pushforward
    moved = pullback_state(su3, act(su3, g, pt.y), pushforward(su3, g, pt.alpha))
    assert np.allclose(moved.q, s.q, atol=1e-10)
    assert np.allclose(moved.p, s.p, atol=1e-10)
    assert np.allclose(moved.xi, gauge_fix(su3, s.xi), atol=1e-10)


def test_gauge_fix_is_deterministic_representative(su3, rng):
    s = random_state(su3, 9)
    kp = su3.isotropy_split.kperp_basis
    xi2 = kp @ adjoint_matrix(su3.symmetry_model, torus_element(3, rng)) @ (s.xi @ kp)
    assert np.allclose(gauge_fix(su3, xi2), gauge_fix(su3, s.xi), atol=1e-12)
    fixed = su3.symmetry_model.matrix(gauge_fix(su3, s.xi) @ kp)
    assert abs(fixed[0, 1].real) < 1e-12 and fixed[0, 1].imag < 0


def test_compare_flows_free(su2):
    rep = compare_flows(su2, ReducedState([2.0], [0.5], [0.0, 0.0]), 1.0, 1e-3)
    assert rep["max_deviation"] < 1e-10


def test_compare_flows_detects_wrong_dynamics(su2, monkeypatch):
    s = ReducedState([np.pi], [0.4], [1.0, 0.0])
    monkeypatch.setattr(classical, "spin_force", lambda m, q, xi: np.zeros_like(q))
    rep = compare_flows(su2, s, 1.0, 1e-3)
    assert rep["max_deviation"] > 1e-3


def test_kks_orbit_base_point(su3):
    orbit = orbit_kks(su3, 2.0)
    xi = orbit_kperp(su3, orbit)
    m = su3.symmetry_model.matrix(xi @ su3.isotropy_split.kperp_basis)
    off = m - np.diag(np.diag(m))
    assert np.allclose(off, 2j / 3 * (np.ones((3, 3)) - np.eye(3)), atol=1e-14)
    with pytest.raises(ValueError, match="moment condition"):
        orbit_kperp(su3, classical.orbit_generic(su3, np.eye(8)[6]))
