#!/usr/bin/env python3
"""Critical-coupling dichotomy table for the inverse-power potential.

For couplings on either side of alpha_c = (d-2)^2/8 the energy-bound
magnitude collapses to zero or blows up as the exponent approaches 2.
Emits CSV to stdout.

Usage: python scripts/inverse_square_sweep.py [d]
"""

import math
import sys

from fkbound import bounds as B


def main() -> None:
    d = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    alpha_c = B.critical_coupling(d)
    alphas = (0.8 * alpha_c, 1.6 * alpha_c)
    thetas = (1.5, 1.8, 1.9, 1.95, 1.99, 1.999)
    print("alpha,theta,log10_magnitude,energy_lower_bound")
    for alpha in alphas:
        for theta in thetas:
            log10_mag = B.inverse_square_log_magnitude(alpha, theta, d) / math.log(10.0)
            print(f"{alpha:.6g},{theta},{log10_mag:.6g},"
                  f"{B.inverse_square_energy(alpha, theta, d):.6g}")
    print(f"# critical coupling alpha_c = {alpha_c} at d = {d}", file=sys.stderr)


if __name__ == "__main__":
    main()
