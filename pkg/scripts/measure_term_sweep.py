"""Measure term along a line through the alcove, by all three evaluation paths."""

import argparse

import numpy as np

from polarred import catalog, quantum, serialize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="su3-twisted", choices=sorted(catalog.CATALOG))
    ap.add_argument("--points", type=int, default=25)
    ap.add_argument("--output")
    args = ap.parse_args()

    model = catalog.build(args.model)
    v = model.section.vertices
    # segment from near one vertex to near the opposite face, through the centroid
    a = v[0] + 0.02 * (model.section.centroid - v[0])
    b = model.section.centroid + 0.98 * (model.section.centroid - v[0])
    rows = []
    for t in np.linspace(0, 1, args.points):
        q = a + t * (b - a)
        if not model.section.contains(q):
            continue
        vals = {m: quantum.measure_term(model, q, m) for m in ("analytic", "gram", "fd")}
        rows.append({"q": q, **vals})
        print(f"q={np.array2string(q, precision=4)}  " +
              "  ".join(f"{k}={val:+.10f}" for k, val in vals.items()))
    if args.output:
        serialize.write_json({"model": args.model, "samples": rows}, args.output)


if __name__ == "__main__":
    main()
