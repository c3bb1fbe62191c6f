"""Tabulate Laplace eigenvalues against the -2D² - 2nD envelope, family by family.

For each family the script reports how many weights fall below the envelope
when n is the rank parameter and when n is the size of the defining matrices
(2n for Sp), and prints the tightest weights.
"""

import argparse
from fractions import Fraction

from grouplab.laplacian import eigenvalue_envelope, laplacian_audit


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n-max", type=int, default=12)
    parser.add_argument("--dmax", type=int, default=8)
    parser.add_argument("--show", type=int, default=5, help="tightest rows to print per family")
    args = parser.parse_args()

    rows = laplacian_audit(n_max=args.n_max, dmax=args.dmax)
    for fam in ("SO", "SU", "Sp", "Spin"):
        fam_rows = [r for r in rows if r.family == fam and r.D > 0]
        size = 2 if fam == "Sp" else 1
        below_rank = sum(r.eigenvalue < eigenvalue_envelope(r.D, r.n) for r in fam_rows)
        below_size = sum(r.eigenvalue < eigenvalue_envelope(r.D, size * r.n) for r in fam_rows)
        print(f"{fam:<5} weights {len(fam_rows):5d}  below envelope(n) {below_rank:4d}"
              f"  below envelope(matrix size) {below_size:4d}")
        ratio = lambda r: Fraction(r.eigenvalue) / eigenvalue_envelope(r.D, r.n)
        for r in sorted(fam_rows, key=ratio, reverse=True)[: args.show]:
            print(f"      n={r.n:<3} {r.partition:<14} D={r.D}  λ={str(r.eigenvalue):<8}"
                  f" envelope={r.bound}  ratio={float(ratio(r)):.3f}")


if __name__ == "__main__":
    main()
