"""Acceptance criteria 1-10, each at its stated tolerance and runtime budget.

Every test prints one ``CRITERION k: PASS|FAIL`` line (visible with ``-s``)
and the lines are repeated in the terminal summary.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import CRITERIA_LINES
from polarred import catalog, classical, quantum, verify
from polarred.polar import validate_section


def record(k: int, ok: bool, elapsed: float, budget: float | None, detail: str) -> None:
    within = budget is None or elapsed < budget
    status = "PASS" if ok and within else "FAIL"
    limit = f" (budget {budget:g}s)" if budget is not None else ""
    line = f"CRITERION {k}: {status} {detail}; {elapsed:.2f}s{limit}"
    print(line)
    CRITERIA_LINES.append(line)
    assert ok, line
    assert within, line


def test_criterion_1_constraint_solution():
    t0 = time.perf_counter()
    res = verify.check_constraint(seed=0)
    record(1, res.value < 1e-10, time.perf_counter() - t0, 5,
           f"max |Psi| = {res.value:.2e} over 200 states each on su2/su3 (tol 1e-10)")


def test_criterion_2_kinetic_identity():
    t0 = time.perf_counter()
    res = verify.check_kinetic_identity(seed=0)
    record(2, res.value < 1e-12, time.perf_counter() - t0, 5,
           f"max residual / max(1,|value|) = {res.value:.2e} at 100 points per model (tol 1e-12)")


def test_criterion_3_flow_equivalence():
    t0 = time.perf_counter()
    devs, drifts = [], []
    for name, orbit_fn in (("su2-conj", lambda m: classical.orbit_su2_equator(m, 1.0)),
                           ("su3-conj", lambda m: classical.orbit_kks(m, 1.0))):
        model = catalog.build(name)
        st = verify.flow_initial_state(model, orbit_fn(model), 0)
        rep = classical.compare_flows(model, st, 1.0, 1e-4)
        assert not rep["wall_collision"]
        devs.append(rep["max_deviation"])
        drifts.append(max(rep["energy_drift"], rep["casimir_drift"]))
    ok = max(devs) < 1e-6 and max(drifts) < 1e-8
    record(3, ok, time.perf_counter() - t0, 60,
           f"max deviation {max(devs):.2e} (tol 1e-6), max drift {max(drifts):.2e} (tol 1e-8)")


def test_criterion_4_sutherland():
    t0 = time.perf_counter()
    fits = [catalog.derive_sutherland(n, q_samples=50, seed=0) for n in (2, 3, 4)]
    worst = max(f.max_residual for f in fits)
    coeffs = ", ".join(f"n={f.n}: c={f.coefficient:.12g}" for f in fits)
    record(4, worst < 1e-10 and all(f.passed for f in fits), time.perf_counter() - t0, 10,
           f"max relative residual {worst:.2e} (tol 1e-10); {coeffs}")


def test_criterion_5_quantum_spectrum():
    t0 = time.perf_counter()
    hs, errs, ladder = verify.su2_spectrum_errors((500, 1000, 2000, 4000), k=5)
    slopes = verify.convergence_slopes(hs, errs)
    at2000 = float(np.max(errs[2]))
    ok = at2000 < 1e-4 and np.all(np.abs(slopes - 2) < 0.1)
    record(5, ok, time.perf_counter() - t0, 30,
           f"max |E - ladder| at N=2000 = {at2000:.2e} (tol 1e-4); slopes {np.round(slopes, 3).tolist()}")


def test_criterion_6_measure_term():
    t0 = time.perf_counter()
    model = catalog.build("su2-conj")
    qs = model.section.sample(np.random.default_rng(0), 200, margin=0.01)
    const = max(abs(quantum.measure_term(model, q) + 0.25) for q in qs)
    fd = max(abs(quantum.measure_term(model, q) - quantum.measure_term(model, q, "fd")) for q in qs)
    record(6, const < 1e-10 and fd < 1e-8, time.perf_counter() - t0, 2,
           f"|m + 1/4| max {const:.2e} (tol 1e-10); analytic vs FD {fd:.2e} (tol 1e-8)")


def test_criterion_7_integration_formula():
    t0 = time.perf_counter()
    res = verify.check_weyl_integration(seed=0)
    mc = res.detail["monte_carlo"]
    z = max(r["residual"] / r["mc_stderr"] for r in mc.values())
    record(7, res.passed, time.perf_counter() - t0, 60,
           f"orthonormality {res.value:.2e} (tol 1e-10); Monte Carlo at 1e6 samples, "
           f"worst {z:.2f} sigma (tol 3)")


def test_criterion_8_normalization_invariance():
    t0 = time.perf_counter()
    res = verify.check_c_invariance(seed=0)
    record(8, res.value < 1e-12, time.perf_counter() - t0, None,
           f"max entry difference {res.value:.2e} under delta -> 7.3 delta, both schemes (tol 1e-12)")


def test_criterion_9_section_axioms():
    t0 = time.perf_counter()
    enabled = [name for name, e in catalog.CATALOG.items() if e.enabled]
    reports = {name: validate_section(catalog.build(name), samples=100, seed=0) for name in enabled}
    bad = [name for name, r in reports.items() if not r.passed]
    worst_flat = max(r.max_flatness for r in reports.values())
    worst_orth = max(r.max_orthogonality for r in reports.values())
    record(9, not bad, time.perf_counter() - t0, None,
           f"{len(enabled)} models, orthogonality {worst_orth:.2e}, flatness {worst_flat:.2e}"
           + (f"; failing {bad}" if bad else ""))


@pytest.mark.slow
def test_criterion_10_verify_suite(tmp_path):
    t0 = time.perf_counter()
    outputs, codes = [], []
    for i in range(2):
        path = tmp_path / f"verify{i}.json"
        proc = subprocess.run([sys.executable, "-m", "polarred.cli", "verify", "--output", str(path)],
                              cwd=tmp_path, capture_output=True, text=True)
        codes.append(proc.returncode)
        outputs.append(path.read_bytes() if path.exists() else b"")
    elapsed = (time.perf_counter() - t0) / 2
    report = json.loads(outputs[0]) if outputs[0] else {"passed": False, "checks": []}
    ok = codes == [0, 0] and report["passed"] and outputs[0] == outputs[1]
    record(10, ok, elapsed, 300,
           f"{len(report['checks'])} checks, exit codes {codes}, "
           f"byte-identical reports: {outputs[0] == outputs[1]}")
