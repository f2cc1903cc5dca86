"""Command-line entry point: derive, simulate, spectrum, verify.

Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import catalog, classical, quantum, serialize, verify
from .config import ConfigError, RunConfig, load, merge, parse_orbit
from .polar import RegularityError, validate_section

FLOW_DEVIATION_TOL = 1e-6
DRIFT_TOL = 1e-8


def _emit(obj, path) -> None:
    text = serialize.dumps(obj)
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _setup(cfg: RunConfig):
    model = catalog.build(cfg.model)
    orbit = parse_orbit(cfg.orbit, model, cfg.seed)
    return model, orbit


def cmd_derive(cfg: RunConfig) -> int:
    model, orbit = _setup(cfg)
    try:
        xi = classical.orbit_kperp(model, orbit)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rep = quantum.make_rep(model, cfg.rep)
    section = validate_section(model, samples=100, seed=cfg.seed)
    qs = model.section.sample(np.random.default_rng(cfg.seed), cfg.q_samples)
    samples = []
    for q in qs:
        ev = classical.inertia_gram(model, q)
        samples.append({
            "q": q, "b": ev.b, "delta": ev.delta,
            "measure_term": quantum.measure_term(model, q),
            "spin_potential": classical.spin_potential(model, q, xi),
        })
    out = {
        "model": model.name,
        "kind": model.kind,
        "orbit": {"description": orbit.description, "base_point": orbit.base_point,
                  "params": orbit.params},
        "rep": cfg.rep,
        "dimensions": {"rank": model.section.rank, "K": model.isotropy_split.dim_k,
                       "K_perp": model.isotropy_split.dim_kperp, "V": rep.dim, "V_K": rep.dim_vk},
        "zero_potential": bool(not np.any(xi)),
        "section_validation": section.as_dict(),
        "samples": samples,
    }
    if model.kind == "conjugation":
        out["sutherland_fit"] = catalog.derive_sutherland(
            model.roots.n, orbit, cfg.q_samples, cfg.seed, model=model).as_dict()
    _emit(out, cfg.output)
    return 0 if section.passed else 1


def initial_state(cfg: RunConfig, model, orbit) -> classical.ReducedState:
    try:
        xi = classical.orbit_kperp(model, orbit)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    r = model.section.rank
    q = np.asarray(cfg.q0, dtype=float) if cfg.q0 is not None else model.section.centroid
    if cfg.p0 is not None:
        p = np.asarray(cfg.p0, dtype=float)
    else:
        p = 0.5 * np.random.default_rng(cfg.seed).standard_normal(r)
    if q.shape != (r,) or p.shape != (r,):
        raise ConfigError(f"q0 and p0 must have {r} components")
    if not model.section.contains(q):
        raise ConfigError(f"q0 = {q.tolist()} is not inside the open alcove")
    return classical.ReducedState(q, p, xi)


def cmd_simulate(cfg: RunConfig) -> int:
    model, orbit = _setup(cfg)
    st = initial_state(cfg, model, orbit)
    traj = classical.integrate_reduced(model, st, cfg.t_end, cfg.dt, cfg.scheme)
    if cfg.csv:
        traj.to_csv(cfg.csv)
    summary = {
        "model": model.name,
        "orbit": orbit.description,
        "scheme": cfg.scheme,
        "t_end": cfg.t_end,
        "dt": cfg.dt,
        "samples": len(traj.times),
        "wall_collision": traj.wall_collision,
        "t_reached": float(traj.times[-1]),
        "energy_drift": traj.energy_drift,
        "casimir_drift": traj.casimir_drift,
        "max_xi_k_norm": float(np.max(traj.xi_k_norm)),
        "drift_below_threshold": traj.energy_drift < DRIFT_TOL and traj.casimir_drift < DRIFT_TOL,
        "final_state": {"q": traj.q[-1], "p": traj.p[-1], "xi": traj.xi[-1]},
    }
    code = 0
    if cfg.oracle:
        rep = classical.compare_flows(model, st, cfg.t_end, cfg.dt, scheme=cfg.scheme)
        rep["passed"] = rep["max_deviation"] < FLOW_DEVIATION_TOL
        summary["oracle"] = rep
        code = 0 if rep["passed"] else 1
    _emit(summary, cfg.output)
    return code


def cmd_spectrum(cfg: RunConfig) -> int:
    model = catalog.build(cfg.model)
    rep = quantum.make_rep(model, cfg.rep)
    try:
        grid = quantum.make_grid(model, cfg.grid_n)
    except (ValueError, NotImplementedError) as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.k > grid.size * rep.dim_vk:
        raise ConfigError(f"k = {cfg.k} exceeds the operator size {grid.size * rep.dim_vk}")
    op = quantum.assemble_reduced_operator(model, rep, grid, scheme=cfg.assembly)
    ev = quantum.spectrum(op, cfg.k)
    out = {"model": model.name, "rep": cfg.rep, "grid_n": cfg.grid_n, "eigenvalues": ev,
           "assembly": cfg.assembly, "grid_nodes": grid.size, "spacing": grid.spacing,
           "dim_vk": rep.dim_vk, "hermiticity_residual": op.hermiticity_residual()}
    ladder = quantum.oracle_ladder(model, rep, cfg.k)
    if ladder is not None:
        out["oracle"] = ladder
        out["deviations"] = np.abs(ev - ladder)
    if rep.dim_vk > 1 and model.section.rank > 1:
        out["wall_note"] = "Dirichlet walls imposed for dim V^K > 1 on a rank > 1 alcove; not verified"
    if cfg.dump_operator:
        quantum.write_operator(op, cfg.dump_operator)
    _emit(out, cfg.output)
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    def progress(res):
        flag = "pass" if res.passed else ("info" if res.informational else "FAIL")
        print(f"[{flag}] {res.name}: {res.value:.3e} (tol {res.tolerance:.0e})", file=sys.stderr)

    report = verify.run_suite(cfg.seed, progress=progress)
    _emit(report, cfg.output)
    for name in report["failed"]:
        print(f"verification failed: {name}", file=sys.stderr)
    return 0 if report["passed"] else 1


COMMANDS = {"derive": cmd_derive, "simulate": cmd_simulate, "spectrum": cmd_spectrum,
            "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarred", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--model", choices=sorted(catalog.CATALOG))
        p.add_argument("--orbit", help="zero | auto | su2:r=R | kks:nu=NU | random:scale=S | generic:x1,..")
        p.add_argument("--rep", choices=("trivial", "adjoint"))
        p.add_argument("--t-end", dest="t_end", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--scheme", choices=("rk4", "strang_split"))
        p.add_argument("--grid-n", dest="grid_n", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--assembly", choices=("direct", "conjugated"))
        p.add_argument("--q-samples", dest="q_samples", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--q0", type=lambda s: [float(v) for v in s.split(",")])
        p.add_argument("--p0", type=lambda s: [float(v) for v in s.split(",")])
        p.add_argument("--oracle", action="store_true", default=None)
        p.add_argument("--output", help="JSON output path (stdout if omitted)")
        p.add_argument("--csv", help="trajectory CSV path (simulate)")
        p.add_argument("--dump-operator", dest="dump_operator", help="binary operator dump (spectrum)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    opts = vars(args)
    command = opts.pop("command")
    path = opts.pop("config")
    try:
        base = load(path) if path else RunConfig()
        cfg = merge(base, opts)
        return COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RegularityError as exc:
        print(f"regularity error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
