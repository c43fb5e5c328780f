"""Package-wide numerical constants.

The tolerances are deliberately fixed so that bound audits reproduce digit
for digit; override per call via the ``tolerances`` keyword the consuming
functions expose, or globally by replacing :data:`DEFAULT_TOLERANCES`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gammaln


@dataclass(frozen=True)
class Tolerances:
    """Quadrature and extrapolation targets used throughout the package."""

    quad_abs: float = 1e-10     # inner (single) quadratures, absolute
    quad_rel: float = 1e-8      # iterated/outer quadratures, relative
    slope_rel: float = 1e-6     # T-ladder slope extrapolation
    ode_residual: float = 1e-8  # integral-equation residual for the ODE solver


DEFAULT_TOLERANCES = Tolerances()


def sharp_hls_constant(d: int, theta: float) -> float:
    """Sharp diagonal Hardy-Littlewood-Sobolev constant.

    For the bilinear form iint f(x) |x-y|^(-theta) g(y) dx dy with
    ||f||_p ||g||_p on the right and p = 2d/(2d - theta), the optimal
    constant (Lieb's sharp form, attained by conformal factors) is

        pi^(theta/2) * Gamma(d/2 - theta/2) / Gamma(d - theta/2)
                     * (Gamma(d/2) / Gamma(d))^(theta/d - 1).

    Used as the default config value where a cross-pair expectation is
    reported as an HLS upper bound; callers may override with any
    conservative constant of their choosing.
    """
    if not 0 < theta < d:
        raise ValueError(f"HLS constant needs 0 < theta < d, got theta={theta}, d={d}")
    log_c = (theta / 2) * math.log(math.pi)
    log_c += gammaln(d / 2 - theta / 2) - gammaln(d - theta / 2)
    log_c += (theta / d - 1) * (gammaln(d / 2) - gammaln(d))
    return math.exp(log_c)
