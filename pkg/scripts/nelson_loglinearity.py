#!/usr/bin/env python3
"""Log-linearity of the sharp-cutoff self-interaction bound.

The coupling gamma chi_[0,tau] with 1 < theta < 2 produces a bound whose
log grows linearly in T once T clears tau; the per-T slope converges and
obeys slope(gamma) <= c (1 + gamma^(2/(2-theta))) with the computed c.

Usage: python scripts/nelson_loglinearity.py [gamma] [tau] [theta]
"""

import sys

from fkbound import models


def main() -> None:
    gamma = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
    tau = float(sys.argv[2]) if len(sys.argv) > 2 else 1.0
    theta = float(sys.argv[3]) if len(sys.argv) > 3 else 1.5
    model = models.build("nelson_q", gamma=gamma, tau=tau, theta=theta)
    print(f"# {model.note}")
    print(f"{'T':>6} {'log_bound/T':>12} {'|delta to 2T|':>14}")
    for T in (2.0, 4.0, 8.0, 16.0, 32.0):
        g1 = models.composed_bound(model, T)["log_bound"] / T
        g2 = models.composed_bound(model, 2 * T)["log_bound"] / (2 * T)
        print(f"{T:6.1f} {g1:12.6f} {abs(g2 - g1):14.6f}")


if __name__ == "__main__":
    main()
