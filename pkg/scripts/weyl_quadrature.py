"""Haar Monte Carlo against radial quadrature for su(2) character products."""

import argparse

from polarred import catalog, quantum, serialize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=1_000_000)
    ap.add_argument("--js", default="0,0.5,1,1.5")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output")
    args = ap.parse_args()

    model = catalog.build("su2-conj")
    js = [float(v) for v in args.js.split(",")]
    rows = []
    for i, a in enumerate(js):
        for b in js[i:]:
            r = quantum.weyl_quadrature_check(model, quantum.su2_character(a), quantum.su2_character(b),
                                              samples=args.samples, seed=args.seed)
            rows.append({"j1": a, "j2": b, **r.as_dict()})
            print(f"<chi_{a:g}, chi_{b:g}>  quad={r.quadrature.real:+.12f}  mc={r.monte_carlo.real:+.5f}"
                  f"  +-{r.mc_stderr:.1e}  z={r.residual / max(r.mc_stderr, 1e-300):.2f}")
    if args.output:
        serialize.write_json(rows, args.output)


if __name__ == "__main__":
    main()
