"""Grid convergence of the reduced spectrum against the character ladder.

    python3 scripts/spectrum_convergence.py --model su3-conj --ns 20,40,80 --scheme conjugated
"""

import argparse

import numpy as np

from polarred import catalog, quantum, serialize
from polarred.verify import convergence_slopes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="su2-conj", choices=sorted(catalog.CATALOG))
    ap.add_argument("--rep", default="trivial", choices=("trivial", "adjoint"))
    ap.add_argument("--ns", default="500,1000,2000,4000")
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--scheme", default="direct", choices=("direct", "conjugated"))
    ap.add_argument("--output")
    args = ap.parse_args()

    model = catalog.build(args.model)
    rep = quantum.make_rep(model, args.rep)
    ladder = quantum.oracle_ladder(model, rep, args.k)
    if ladder is None:
        ap.error(f"no closed-form ladder for {args.model} with the {args.rep} representation")
    hs, errs = [], []
    for n in (int(v) for v in args.ns.split(",")):
        grid = quantum.make_grid(model, n)
        op = quantum.assemble_reduced_operator(model, rep, grid, args.scheme)
        ev = quantum.spectrum(op, args.k)
        hs.append(grid.spacing)
        errs.append(np.abs(ev - ladder))
        print(f"N={n:5d} h={grid.spacing:.3e} max err={errs[-1].max():.3e}")
    hs, errs = np.array(hs), np.array(errs)
    slopes = convergence_slopes(hs, errs) if len(hs) > 1 else np.array([])
    print("ladder:", np.round(ladder, 6).tolist())
    print("slopes:", np.round(slopes, 3).tolist())
    if args.output:
        serialize.write_json({"model": args.model, "rep": args.rep, "scheme": args.scheme,
                              "h": hs, "errors": errs, "ladder": ladder, "slopes": slopes},
                             args.output)


if __name__ == "__main__":
    main()
