"""Leakage of the J = 1/2, K = 2 ansatz across the (theta_1, theta_2) plane.

Prints Gamma^2 from the general closed form next to the compact spin-1/2
expression and the defining expression, at a few points along the diagonal
and off it.
"""

import argparse

import numpy as np

from zktdvp import ModelParams, VariationalState, leakage_rate, leakage_spin_half


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--omega", type=float, default=1.0)
    parser.add_argument("--points", type=int, default=6)
    args = parser.parse_args()

    params = ModelParams(2, 0.5, [args.omega] * 2, [0.0, 0.0])
    grid = np.linspace(0.3, np.pi - 0.3, args.points)
    print(f"{'theta_1':>8} {'theta_2':>8} {'general':>12} {'compact':>12} {'definition':>12}")
    for t1 in grid:
        for t2 in (t1, np.pi / 2):
            state = VariationalState([t1, t2], [0.0, 0.0])
            rep = leakage_rate(params, state)
            print(f"{t1:8.4f} {t2:8.4f} {rep.gamma2:12.6e} "
                  f"{leakage_spin_half(params, state):12.6e} {rep.gamma2_definition:12.6e}")


if __name__ == "__main__":
    main()
