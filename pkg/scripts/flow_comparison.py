"""Reduced flow against the projected unreduced geodesic, across step sizes.

    python3 scripts/flow_comparison.py --model su3-conj --orbit kks:nu=1
"""

import argparse

from polarred import catalog, classical, serialize
from polarred.config import parse_orbit
from polarred.verify import flow_initial_state


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="su2-conj", choices=sorted(catalog.CATALOG))
    ap.add_argument("--orbit", default="auto")
    ap.add_argument("--t-end", type=float, default=1.0)
    ap.add_argument("--dts", default="1e-2,3e-3,1e-3,1e-4")
    ap.add_argument("--scheme", default="rk4", choices=("rk4", "strang_split"))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output")
    args = ap.parse_args()

    model = catalog.build(args.model)
    state = flow_initial_state(model, parse_orbit(args.orbit, model, args.seed), args.seed)
    rows = []
    print(f"{'dt':>8} {'max dev':>10} {'dE':>10} {'dC':>10} {'|xi_K|':>10}")
    for dt in (float(v) for v in args.dts.split(",")):
        rep = classical.compare_flows(model, state, args.t_end, dt, scheme=args.scheme)
        rows.append(rep)
        print(f"{dt:8.0e} {rep['max_deviation']:10.2e} {rep['energy_drift']:10.2e} "
              f"{rep['casimir_drift']:10.2e} {rep['max_xi_k_norm']:10.2e}")
    if args.output:
        serialize.write_json({"model": args.model, "orbit": args.orbit, "runs": rows}, args.output)


if __name__ == "__main__":
    main()
