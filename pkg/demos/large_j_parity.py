"""How Gamma^2 scales with J for odd and even unit cells.

For K = 3 the leakage falls faster than any power of 1/J along the sequence.
For K = 2 it does not: the table also shows the ratio of 2J Gamma^2 to the
large-J limit formula, which stays far from 1 at these angles.
"""

import argparse

from zktdvp import ModelParams, VariationalState, derive_sites, leakage_large_j, leakage_rate

CELLS = {
    "odd": (3, (0.5, 0.7, 0.6), (0.3, 0.5, -0.4), (1.0, 0.8, 0.6)),
    "even": (2, (0.5, 0.7), (0.3, 0.5), (1.0, 0.8)),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--spins", type=float, nargs="+", default=[5, 10, 25, 50, 100, 200])
    args = parser.parse_args()

    for label, (K, theta, phi, omega) in CELLS.items():
        print(f"{label} cell, K = {K}")
        print(f"{'J':>6} {'gamma2':>12} {'J*gamma2':>12} {'limit':>12} {'ratio':>10} {'max|eta-1/2|':>13}")
        for J in args.spins:
            params = ModelParams(K, J, omega, [0.0] * K)
            state = VariationalState(theta, phi)
            g2 = leakage_rate(params, state, cross_check=False).gamma2
            lim = leakage_large_j(params, state)
            eta = derive_sites(params, state).eta
            ratio = g2 / lim if lim else float("nan")
            print(f"{J:6g} {g2:12.4e} {J * g2:12.4e} {lim:12.4e} {ratio:10.3e} "
                  f"{max(abs(eta - 0.5)):13.3e}")
        print()


if __name__ == "__main__":
    main()
