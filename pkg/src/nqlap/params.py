"""Equation parameters, derived critical exponents, and regime classification.

The stationary equation is

    -lap(u) - lap_q(u) = lam*u + |u|^(p-2)*u / |x|^b      on R^N,

with q >= 2, 2 < p, and 0 < b < min(2, N).  Everything downstream is driven
by four derived exponents:

* ``sigma_pq``   -- gradient exponent in the sharp interpolation inequality,
* ``p2_star``    -- 2(2-b)/N + 2, below which the constrained energy is
                    negative for every mass,
* ``pq_star``    -- 2(q-b)/N + q, the mass-critical exponent,
* ``two_b_star`` -- 2(N-b)/(N-2) for N >= 3 (undefined otherwise),
* ``qb_star``    -- q(N-b)/(N-q) for q < N, +inf sentinel for q >= N; the
                    admissible range is 2 < p < qb_star.

``q = 2`` is accepted here because the sharp-constant machinery covers it,
but the equation solvers require q > 2 and reject such parameter sets.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

from .errors import BOutOfRange, ParameterError, POutOfRange, QTooSmall

# Relative tolerance for deciding p == p2_star or p == pq_star.  The
# boundaries are exact rational formulas of the inputs, so only float
# representation error needs absorbing.
BOUNDARY_RTOL = 1e-12


class RegimeTag(str, Enum):
    SUBCRITICAL_LOW = "SubcriticalLow"
    SUBCRITICAL_THRESHOLD = "SubcriticalThreshold"
    SUBCRITICAL_HIGH = "SubcriticalHigh"
    MASS_CRITICAL = "MassCritical"
    SUPERCRITICAL = "Supercritical"


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    compactness_ok: bool


@dataclass(frozen=True)
class ParameterSet:
    N: int
    q: float
    p: float
    b: float
    sigma_pq: float
    p2_star: float
    pq_star: float
    two_b_star: float | None
    qb_star: float

    # Fiber-map exponents: under the mass-preserving dilation
    # u_t(x) = t^(N/2) u(tx) the three energy integrals scale like
    # t^2, t^grad_q_rate, t^nonlin_rate.
    @property
    def grad_q_rate(self) -> float:
        return 0.5 * (self.N * (self.q - 2.0) + 2.0 * self.q)

    @property
    def nonlin_rate(self) -> float:
        return 0.5 * (self.N * (self.p - 2.0) + 2.0 * self.b)

    def to_json(self) -> str:
        return json.dumps({"N": self.N, "q": self.q, "p": self.p, "b": self.b})

    def require_strict_q(self) -> None:
        """Equation solvers need q > 2; q = 2 is only for the sharp constant."""
        if self.q <= 2.0:
            raise QTooSmall(f"equation solvers require q > 2, got q={self.q}")


def sigma_exponent(N: int, q: float, p: float, b: float) -> float:
    """Gradient exponent sigma_{p,q} = q[N(p-2)+2b] / [N(q-2)+2q]."""
    return q * (N * (p - 2.0) + 2.0 * b) / (N * (q - 2.0) + 2.0 * q)


def validate(N: int, q: float, p: float, b: float) -> ParameterSet:
    """Check (N, q, p, b) and compute the derived exponents.

    Raises
    ------
    BOutOfRange, QTooSmall, POutOfRange
        Naming the violated constraint.  Bad N raises ParameterError.
    """
    if int(N) != N or N < 1:
        raise ParameterError(f"N must be an integer >= 1, got {N}")
    N = int(N)
    q, p, b = float(q), float(p), float(b)
    if not all(math.isfinite(v) for v in (q, p, b)):
        raise ParameterError("q, p, b must be finite")
    if q < 2.0:
        raise QTooSmall(f"q must be >= 2, got {q}")
    if not (0.0 < b < min(2.0, N)):
        raise BOutOfRange(f"b must satisfy 0 < b < min(2, N)={min(2, N)}, got {b}")

    qb_star = q * (N - b) / (N - q) if q < N else math.inf
    if not (2.0 < p < qb_star):
        raise POutOfRange(f"p must satisfy 2 < p < qb_star={qb_star}, got {p}")

    sigma = sigma_exponent(N, q, p, b)
    if not p - sigma > 0.0:
        # Cannot happen for p < qb_star; kept as a guard on the algebra.
        raise POutOfRange(f"p - sigma_pq = {p - sigma} must be positive")

    return ParameterSet(
        N=N,
        q=q,
        p=p,
        b=b,
        sigma_pq=sigma,
        p2_star=2.0 * (2.0 - b) / N + 2.0,
        pq_star=2.0 * (q - b) / N + q,
        two_b_star=2.0 * (N - b) / (N - 2.0) if N >= 3 else None,
        qb_star=qb_star,
    )


def from_json(text: str) -> ParameterSet:
    """Parse {"N":..., "q":..., "p":..., "b":...}; derived fields are recomputed."""
    obj = json.loads(text)
    return validate(obj["N"], obj["q"], obj["p"], obj["b"])


def sigma(params: ParameterSet) -> float:
    return params.sigma_pq


def _close(x: float, y: float) -> bool:
    return abs(x - y) <= BOUNDARY_RTOL * max(abs(x), abs(y))


def classify(params: ParameterSet) -> Regime:
    """Regime tag from p against p2_star / pq_star, plus the compactness flag.

    The flag records whether (N, q, p, b) satisfy the hypotheses under which
    the supercritical minimization is known to be attained: always for
    N <= 2; for N >= 3 it needs q < 2(N^2-2b)/(N^2-4) and p < two_b_star.
    """
    p = params.p
    if _close(p, params.pq_star):
        tag = RegimeTag.MASS_CRITICAL
    elif _close(p, params.p2_star):
        tag = RegimeTag.SUBCRITICAL_THRESHOLD
    elif p < params.p2_star:
        tag = RegimeTag.SUBCRITICAL_LOW
    elif p < params.pq_star:
        tag = RegimeTag.SUBCRITICAL_HIGH
    else:
        tag = RegimeTag.SUPERCRITICAL

    if params.N <= 2:
        ok = True
    else:
        q_bound = 2.0 * (params.N**2 - 2.0 * params.b) / (params.N**2 - 4.0)
        ok = params.q < q_bound and params.p < params.two_b_star
    return Regime(tag=tag, compactness_ok=ok)
