"""Sutherland coefficient of the KKS orbit as a function of nu and n.

The fitted coefficient is compared with nu^2 / (2 n^2).
"""

import argparse

from polarred import catalog, classical, serialize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ns", default="2,3,4")
    ap.add_argument("--nus", default="0.5,1,2,3")
    ap.add_argument("--q-samples", type=int, default=50)
    ap.add_argument("--output")
    args = ap.parse_args()

    rows = []
    print(f"{'n':>2} {'nu':>5} {'c':>14} {'nu^2/2n^2':>14} {'residual':>10}")
    for n in (int(v) for v in args.ns.split(",")):
        model = catalog.build_conjugation(n)
        for nu in (float(v) for v in args.nus.split(",")):
            fit = catalog.derive_sutherland(n, classical.orbit_kks(model, nu), args.q_samples, model=model)
            pred = nu ** 2 / (2 * n ** 2)
            rows.append({**fit.as_dict(), "nu": nu, "predicted": pred})
            print(f"{n:2d} {nu:5.2f} {fit.coefficient:14.10f} {pred:14.10f} {fit.max_residual:10.2e}")
    if args.output:
        serialize.write_json(rows, args.output)


if __name__ == "__main__":
    main()
