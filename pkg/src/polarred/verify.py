"""Seeded verification suite covering every module's invariants.

Each check returns a :class:`CheckResult`; the suite report is a plain dict
that serializes deterministically (no timings, no host data).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from . import catalog, classical, quantum
from .lie import adjoint, adjoint_matrix, exp_map, haar_batch, haar_sample, so, su
from .polar import act, project_to_section, section_point, validate_section


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: dict = field(default_factory=dict)
    informational: bool = False

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "value": float(self.value),
                "tolerance": float(self.tolerance), "informational": self.informational,
                "detail": self.detail}


def _result(name, value, tol, **detail) -> CheckResult:
    return CheckResult(name, bool(value < tol), float(value), tol, detail)


def _reduced_samples(model, count, rng, p_scale=0.7, xi_scale=1.0):
    qs = model.section.sample(rng, count)
    out = []
    for q in qs:
        p = p_scale * rng.standard_normal(model.section.rank)
        xi = xi_scale * rng.standard_normal(model.isotropy_split.dim_kperp)
        out.append(classical.ReducedState(q, p, xi))
    return out


# --- lie-core ----------------------------------------------------------------------

def check_lie_structure(seed: int) -> CheckResult:
    worst = 0.0
    for alg in (su(2), su(3), su(4), so(3)):
        b = alg.basis
        comm = np.einsum("iab,jbc->ijac", b, b) - np.einsum("jab,ibc->ijac", b, b)
        recon = np.einsum("ijk,kab->ijab", alg.structure_constants, b)
        worst = max(worst, float(np.max(np.abs(comm - recon))))
        c = alg.structure_constants
        jac = (np.einsum("ijm,mkl->ijkl", c, c) + np.einsum("jkm,mil->ijkl", c, c)
               + np.einsum("kim,mjl->ijkl", c, c))
        worst = max(worst, float(np.max(np.abs(jac))))
        ads = alg.ad_basis
        inv = np.einsum("zab,bc->zac", ads.transpose(0, 2, 1), alg.bform) + alg.bform @ ads
        worst = max(worst, float(np.max(np.abs(inv))))
        worst = max(worst, float(np.max(np.abs(b + b.conj().transpose(0, 2, 1)))))
        worst = max(worst, float(np.max(np.abs(np.trace(b, axis1=1, axis2=2)))))
    return _result("lie.structure", worst, 1e-12)


def check_lie_exponential(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    alg = su(3)
    worst = 0.0
    s2 = su(2)
    q = 0.7
    worst = max(worst, float(np.max(np.abs(
        exp_map(s2, [0, 0, 1], q) - np.diag([np.exp(-0.5j * q), np.exp(0.5j * q)])))))
    worst = max(worst, float(np.max(np.abs(
        adjoint(s2, exp_map(s2, [0, 0, 1], q), [1, 0, 0]) - [np.cos(q), np.sin(q), 0]))))
    for _ in range(10):
        x = rng.standard_normal(alg.dimension)
        t, s = rng.uniform(-2, 2, 2)
        worst = max(worst, float(np.max(np.abs(
            exp_map(alg, x, t) @ exp_map(alg, x, s) - exp_map(alg, x, t + s)))))
        worst = max(worst, float(np.max(np.abs(
            adjoint_matrix(alg, exp_map(alg, x, t)) - expm(t * alg.ad(x))))))
        worst = max(worst, float(np.max(np.abs(np.abs(np.linalg.eigvals(exp_map(alg, x, t))) - 1))))
        g = haar_sample(3, int(rng.integers(1 << 30)))
        y = rng.standard_normal(alg.dimension)
        worst = max(worst, abs(alg.B(adjoint(alg, g, x), adjoint(alg, g, y)) - alg.B(x, y)))
    return _result("lie.exponential_adjoint", worst, 1e-10)


# --- polar-action ------------------------------------------------------------------

def check_section(name: str) -> Callable[[int], CheckResult]:
    def run(seed: int) -> CheckResult:
        model = catalog.build(name)
        rep = validate_section(model, samples=100, seed=seed)
        tol = rep.tolerances
        worst = max(rep.max_orthogonality / tol["orthogonality"],
                    rep.max_isotropy / tol["isotropy"],
                    rep.max_flatness / tol["flatness"])
        return CheckResult(f"polar.section[{name}]", rep.passed, worst, 1.0, rep.as_dict())
    return run


def check_projection(name: str) -> Callable[[int], CheckResult]:
    def run(seed: int) -> CheckResult:
        model = catalog.build(name)
        rng = np.random.default_rng(seed)
        worst = 0.0
        for q0 in model.section.sample(rng, 20):
            g = _random_symmetry(model, rng)
            y = act(model, g, section_point(model.section, q0))
            q, h = project_to_section(model, y)
            worst = max(worst, float(np.max(np.abs(act(model, h, section_point(model.section, q)) - y))))
            worst = max(worst, float(np.max(np.abs(q - q0))))
        return _result(f"polar.projection[{name}]", worst, 1e-10)
    return run


def _random_symmetry(model, rng) -> np.ndarray:
    alg = model.symmetry_model
    if model.kind == "hermann":
        return exp_map(alg, rng.standard_normal(alg.dimension), 3.0)
    return haar_batch(alg.matrix_size, 1, rng)[0]


# --- classical-reduction -----------------------------------------------------------

def check_constraint(seed: int, vertical_sign: float = -1.0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in ("su2-conj", "su3-conj"):
        model = catalog.build(name)
        for st in _reduced_samples(model, 200, rng):
            pt = classical.solve_constraint(model, st, vertical_sign=vertical_sign)
            worst = max(worst, classical.constraint_residual(model, pt))
    return _result("classical.constraint_residual", worst, 1e-10, states_per_model=200)


def check_kinetic_identity(seed: int) -> CheckResult:
    """Residual relative to max(1, value): near walls the value reaches 1e4,
    where one ulp already exceeds 1e-12."""
    rng = np.random.default_rng(seed)
    worst, per, absolute = 0.0, {}, {}
    for name in catalog.CATALOG:
        model = catalog.build(name)
        m = a = 0.0
        for st in _reduced_samples(model, 100, rng):
            m = max(m, classical.kinetic_identity_residual(model, st.q, st.xi, scaled=True))
            a = max(a, classical.kinetic_identity_residual(model, st.q, st.xi))
        per[name], absolute[name] = m, a
        worst = max(worst, m)
    return _result("classical.kinetic_identity", worst, 1e-12, per_model_scaled=per,
                   per_model_absolute=absolute)


def check_extended_hamiltonian(seed: int) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in catalog.CATALOG:
        model = catalog.build(name)
        for st in _reduced_samples(model, 50, rng):
            h = classical.reduced_hamiltonian(model, st)
            hx = classical.extended_hamiltonian(model, classical.solve_constraint(model, st))
            worst = max(worst, abs(h - hx) / max(1.0, abs(h)))
    return _result("classical.extended_hamiltonian", worst, 1e-12)


def flow_initial_state(model, orbit, seed: int) -> classical.ReducedState:
    rng = np.random.default_rng(seed)
    xi = classical.orbit_kperp(model, orbit)
    p = 0.5 * rng.standard_normal(model.section.rank)
    return classical.ReducedState(model.section.centroid, p, xi)


def check_flow(name: str, orbit_fn, label: str) -> Callable[[int], CheckResult]:
    def run(seed: int) -> CheckResult:
        model = catalog.build(name)
        st = flow_initial_state(model, orbit_fn(model), seed)
        rep = classical.compare_flows(model, st, 1.0, 1e-4)
        worst = max(rep["max_deviation"] / 1e-6, rep["energy_drift"] / 1e-8,
                    rep["casimir_drift"] / 1e-8, rep["max_xi_k_norm"] / 1e-9)
        ok = worst < 1.0 and not rep["wall_collision"]
        return CheckResult(f"classical.flow_equivalence[{label}]", ok, worst, 1.0, rep)
    return run


def check_kperp_monitor(seed: int) -> CheckResult:
    """xi_K leakage on the twisted model; reported, not asserted."""
    model = catalog.build("su3-twisted")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(model.isotropy_split.dim_kperp)
    st = classical.ReducedState(model.section.centroid, [0.3], 0.5 * x / np.linalg.norm(x))
    traj = classical.integrate_reduced(model, st, 1.0, 1e-3)
    v = float(np.max(traj.xi_k_norm))
    return CheckResult("classical.kperp_monitor[su3-twisted]", True, v, 1e-9,
                       {"max_xi_k_norm": v, "below_1e-9": v < 1e-9}, informational=True)


# --- model-catalog -----------------------------------------------------------------

def check_sutherland(seed: int) -> CheckResult:
    fits = {n: catalog.derive_sutherland(n, q_samples=50, seed=seed) for n in (2, 3, 4)}
    worst = max(f.max_residual for f in fits.values())
    return _result("catalog.sutherland_fit", worst, 1e-10,
                   fits={str(n): f.as_dict() for n, f in fits.items()})


# --- quantum-reduction -------------------------------------------------------------

def su2_spectrum_errors(ns=(500, 1000, 2000, 4000), k: int = 5):
    model = catalog.build("su2-conj")
    rep = quantum.make_rep(model, "trivial")
    ladder = quantum.casimir_ladder(model, k)
    hs, errs = [], []
    for n in ns:
        grid = quantum.make_grid(model, n)
        ev = quantum.spectrum(quantum.assemble_reduced_operator(model, rep, grid), k)
        hs.append(grid.spacing)
        errs.append(np.abs(ev - ladder))
    return np.array(hs), np.array(errs), ladder


def convergence_slopes(hs, errs) -> np.ndarray:
    lh = np.log(hs)
    return np.array([np.polyfit(lh, np.log(errs[:, i]), 1)[0] for i in range(errs.shape[1])])


def check_spectrum_su2(seed: int) -> CheckResult:
    hs, errs, ladder = su2_spectrum_errors()
    slopes = convergence_slopes(hs, errs)
    at2000 = float(np.max(errs[2]))
    slope_dev = float(np.max(np.abs(slopes - 2.0)))
    ok = at2000 < 1e-4 and slope_dev < 0.1
    return CheckResult("quantum.spectrum[su2-conj,trivial]", ok, at2000, 1e-4,
                       {"ladder": ladder, "errors_n2000": errs[2], "slopes": slopes,
                        "max_slope_deviation": slope_dev})


def check_spectrum_su2_adjoint(seed: int) -> CheckResult:
    model = catalog.build("su2-conj")
    rep = quantum.make_rep(model, "adjoint")
    ev = quantum.spectrum(quantum.assemble_reduced_operator(model, rep, quantum.make_grid(model, 2000)), 5)
    ladder = quantum.su2_branching_ladder(1, 5)
    return _result("quantum.spectrum[su2-conj,adjoint]", float(np.max(np.abs(ev - ladder))), 1e-4,
                   eigenvalues=ev, ladder=ladder)


def check_measure_term(seed: int) -> CheckResult:
    model = catalog.build("su2-conj")
    qs = model.section.sample(np.random.default_rng(seed), 100)
    const = max(abs(quantum.measure_term(model, q) + 0.25) for q in qs)
    fd = max(abs(quantum.measure_term(model, q) - quantum.measure_term(model, q, "fd")) for q in qs)
    ok = const < 1e-10 and fd < 1e-8
    return CheckResult("quantum.measure_term[su2-conj]", ok, max(const / 1e-10, fd / 1e-8), 1.0,
                       {"max_deviation_from_-1/4": const, "max_analytic_vs_fd": fd})


def check_weyl_integration(seed: int) -> CheckResult:
    model = catalog.build("su2-conj")
    js = (0.0, 0.5, 1.0, 1.5, 2.0)
    ortho = max(abs(quantum.radial_inner_product(model, quantum.su2_character(a),
                                                 quantum.su2_character(b)) - (a == b))
                for a in js for b in js)
    mc = {}
    ok_mc = True
    for k, (a, b) in enumerate(((0.5, 0.5), (0.5, 1.0))):
        r = quantum.weyl_quadrature_check(model, quantum.su2_character(a), quantum.su2_character(b),
                                          samples=1_000_000, seed=seed + k)
        mc[f"{a},{b}"] = r.as_dict()
        ok_mc &= r.within_3sigma
    return CheckResult("quantum.weyl_integration[su2-conj]", ortho < 1e-10 and ok_mc, ortho, 1e-10,
                       {"orthonormality_residual": ortho, "monte_carlo": mc})


def check_c_invariance(seed: int) -> CheckResult:
    # grids are kept coarse enough that entries (~1/h^2) stay below ~1e3,
    # otherwise one ulp of an entry alone exceeds the 1e-12 tolerance
    worst = scale = 0.0
    for name, n in (("su2-conj", 100), ("su3-conj", 24)):
        model = catalog.build(name)
        rep = quantum.make_rep(model, "trivial")
        grid = quantum.make_grid(model, n)
        for scheme in ("direct", "conjugated"):
            a = quantum.assemble_reduced_operator(model, rep, grid, scheme, density_scale=1.0)
            b = quantum.assemble_reduced_operator(model, rep, grid, scheme, density_scale=7.3)
            d = a.matrix - b.matrix
            worst = max(worst, float(abs(d).max()) if d.nnz else 0.0)
            scale = max(scale, float(abs(a.matrix).max()))
    return _result("quantum.c_invariance", worst, 1e-12, max_entry=scale,
                   grids={"su2-conj": 100, "su3-conj": 24})


def check_hermiticity(seed: int) -> CheckResult:
    worst = 0.0
    cases = (("su2-conj", "trivial", 200), ("su2-conj", "adjoint", 200), ("su3-conj", "trivial", 20),
             ("su3-conj", "adjoint", 20), ("su3-twisted", "trivial", 200),
             ("su3-twisted", "adjoint", 200), ("su2-hermann-so2", "trivial", 200))
    for name, rep_name, n in cases:
        model = catalog.build(name)
        op = quantum.assemble_reduced_operator(model, quantum.make_rep(model, rep_name),
                                               quantum.make_grid(model, n))
        worst = max(worst, op.hermiticity_residual())
    return _result("quantum.hermiticity", worst, 1e-12)


def checks() -> list[tuple[str, Callable[[int], CheckResult]]]:
    out = [("lie.structure", check_lie_structure), ("lie.exponential_adjoint", check_lie_exponential)]
    for name, entry in catalog.CATALOG.items():
        if entry.enabled:
            out.append((f"polar.section[{name}]", check_section(name)))
            out.append((f"polar.projection[{name}]", check_projection(name)))
    out += [
        ("classical.constraint_residual", check_constraint),
        ("classical.kinetic_identity", check_kinetic_identity),
        ("classical.extended_hamiltonian", check_extended_hamiltonian),
        ("classical.flow_equivalence[su2]",
         check_flow("su2-conj", lambda m: classical.orbit_su2_equator(m, 1.0), "su2")),
        ("classical.flow_equivalence[su3-kks]",
         check_flow("su3-conj", lambda m: classical.orbit_kks(m, 1.0), "su3-kks")),
        ("classical.kperp_monitor[su3-twisted]", check_kperp_monitor),
        ("catalog.sutherland_fit", check_sutherland),
        ("quantum.spectrum[su2-conj,trivial]", check_spectrum_su2),
        ("quantum.spectrum[su2-conj,adjoint]", check_spectrum_su2_adjoint),
        ("quantum.measure_term[su2-conj]", check_measure_term),
        ("quantum.weyl_integration[su2-conj]", check_weyl_integration),
        ("quantum.c_invariance", check_c_invariance),
        ("quantum.hermiticity", check_hermiticity),
    ]
    return out


def run_suite(seed: int = 0, only=None, progress=None) -> dict:
    """Run the checks (optionally a name subset) and return the JSON-ready report."""
    results = []
    for name, fn in checks():
        if only is not None and name not in only:
            continue
        res = fn(seed)
        if progress is not None:
            progress(res)
        results.append(res)
    failed = [r.name for r in results if not r.passed and not r.informational]
    return {"seed": seed, "passed": not failed, "failed": failed,
            "checks": [r.as_dict() for r in results]}
