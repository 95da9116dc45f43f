"""Performance machinery: rate function, scaling function, and funnel bounds.

The funnel on each tracking-error channel j is the open interval

    ( -H_j(dlo_j * phi_j(t)),  H_j(dhi_j * phi_j(t)) )

where H_j is an odd, unbounded boundary map, phi_j is a non-monotone
scaling function built from the rate function beta, and dlo/dhi in (0, 1]
select symmetric, asymmetric, or globally unconstrained behavior.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ValidationError

# Highest time-derivative order supported for beta/phi. Covers plants of
# strict-feedback depth up to 3.
N_MAX = 3

# Boundary-map arguments within this distance of 1 are treated as the
# unbounded case (the bound diverges); see funnel_bounds.
H_DOMAIN_GUARD = 1e-12

# Sentinel for a funnel bound that imposes no constraint at an instant.
UNBOUNDED = math.inf


@dataclass(frozen=True)
class RateFunction:
    """beta(t) = exp(-gamma*t) * cos(t)^2 with exact derivatives.

    beta(0) = 1, beta stays in [0, 1) for t > 0, and every derivative up to
    N_MAX is available in closed form: writing cos^2 as (1 + cos 2t)/2, the
    k-th derivative is

        0.5*(-gamma)^k*exp(-gamma*t) + 0.5*Re[(-gamma + 2i)^k * e^((-gamma+2i)t)]
    """

    gamma: float

    def __post_init__(self):
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ValidationError("rate parameter gamma must be positive and finite")

    def eval(self, t, order=0):
        if t < 0.0:
            raise ValidationError(f"time must be nonnegative, got {t}")
        if not (0 <= order <= N_MAX):
            raise ValidationError(f"derivative order {order} outside 0..{N_MAX}")
        g = self.gamma
        real = 0.5 * (-g) ** order * math.exp(-g * t)
        osc = 0.5 * ((-g + 2j) ** order * cmath_exp((-g + 2j) * t)).real
        return real + osc


def cmath_exp(z):
    # math.exp for complex arguments without importing cmath at call sites
    return math.exp(z.real) * complex(math.cos(z.imag), math.sin(z.imag))


@dataclass(frozen=True)
class ScalingFunction:
    """phi(t) = (phi0 - phif) * beta(t) + phif, with derivatives from beta."""

    phi0: float
    phif: float
    rate: RateFunction

    def __post_init__(self):
        if not (0.0 < self.phif < self.phi0 <= 1.0):
            raise ValidationError(
                f"need 0 < phif < phi0 <= 1, got phif={self.phif}, phi0={self.phi0}"
            )

    def eval(self, t, order=0):
        b = self.rate.eval(t, order)
        span = self.phi0 - self.phif
        if order == 0:
            return span * b + self.phif
        return span * b


@dataclass(frozen=True)
class IntermediateFunction:
    """Odd unbounded boundary map H(s) = l*s / sqrt(1 - s^2) on (-1, 1).

    Any replacement family must provide the same eval/deriv surface and the
    same qualitative properties (odd, H(0) = 0, dH/ds >= l > 0, divergence
    at the domain ends).
    """

    l: float

    def __post_init__(self):
        if not (self.l > 0.0 and math.isfinite(self.l)):
            raise ValidationError("shape parameter l must be positive and finite")

    def eval(self, sigma):
        if abs(sigma) >= 1.0 - H_DOMAIN_GUARD:
            raise DomainError(f"boundary-map argument {sigma} outside (-1, 1)")
        return self.l * sigma / math.sqrt(1.0 - sigma * sigma)

    def deriv(self, sigma):
        if abs(sigma) >= 1.0 - H_DOMAIN_GUARD:
            raise DomainError(f"boundary-map argument {sigma} outside (-1, 1)")
        return self.l / (1.0 - sigma * sigma) ** 1.5


@dataclass(frozen=True)
class PerformanceSpec:
    """Per-channel funnel parameters.

    delta_lo/delta_hi in (0, 1] set the lower/upper funnel asymmetry, l is
    the boundary-map shape per channel, phi0/phif the initial and floor
    scaling values, and gamma the shared decay rate.
    """

    delta_lo: np.ndarray
    delta_hi: np.ndarray
    l: np.ndarray
    phi0: np.ndarray
    phif: np.ndarray
    gamma: float
    rate: RateFunction = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("delta_lo", "delta_hi", "l", "phi0", "phif"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float))
            object.__setattr__(self, name, arr)
        n = self.delta_lo.shape[0]
        for name in ("delta_hi", "l", "phi0", "phif"):
            if getattr(self, name).shape != (n,):
                raise ValidationError("performance parameters must share one length")
        if np.any(self.delta_lo <= 0) or np.any(self.delta_lo > 1):
            raise ValidationError("delta_lo entries must lie in (0, 1]")
        if np.any(self.delta_hi <= 0) or np.any(self.delta_hi > 1):
            raise ValidationError("delta_hi entries must lie in (0, 1]")
        if np.any(self.l <= 0):
            raise ValidationError("l entries must be positive")
        if np.any(self.phif <= 0) or np.any(self.phif >= self.phi0) or np.any(self.phi0 > 1):
            raise ValidationError("need 0 < phif < phi0 <= 1 per channel")
        object.__setattr__(self, "rate", RateFunction(self.gamma))

    @property
    def n(self):
        return self.delta_lo.shape[0]

    @classmethod
    def uniform(cls, n, delta_lo=1.0, delta_hi=1.0, l=0.9936, phi0=1.0,
                phif=0.1, gamma=0.9):
        ones = np.ones(n)
        return cls(delta_lo=ones * delta_lo, delta_hi=ones * delta_hi,
                   l=ones * l, phi0=ones * phi0, phif=ones * phif,
                   gamma=float(gamma))

    def phi(self, t, order=0):
        """Per-channel scaling value or derivative, shape (n,)."""
        b = self.rate.eval(t, order)
        span = self.phi0 - self.phif
        if order == 0:
            return span * b + self.phif
        return span * b

    def scaling(self, j):
        return ScalingFunction(float(self.phi0[j]), float(self.phif[j]), self.rate)

    def boundary_map(self, j):
        return IntermediateFunction(float(self.l[j]))


def funnel_bounds(spec, t):
    """Funnel interval per channel at time t.

    Returns (lower, upper) arrays with lower < 0 < upper. Where the map
    argument delta*phi reaches 1 (the global case at t = 0) the bound is
    the UNBOUNDED sentinel: no constraint is imposed at that instant, so
    any finite error counts as inside.
    """
    phi = spec.phi(t, 0)
    sig_lo = spec.delta_lo * phi
    sig_hi = spec.delta_hi * phi
    if np.any(sig_lo > 1.0 + H_DOMAIN_GUARD) or np.any(sig_hi > 1.0 + H_DOMAIN_GUARD):
        raise DomainError("delta*phi exceeded 1; spec validation should prevent this")
    lower = np.empty(spec.n)
    upper = np.empty(spec.n)
    for j in range(spec.n):
        if sig_lo[j] >= 1.0 - H_DOMAIN_GUARD:
            lower[j] = -UNBOUNDED
        else:
            lower[j] = -spec.l[j] * sig_lo[j] / math.sqrt(1.0 - sig_lo[j] ** 2)
        if sig_hi[j] >= 1.0 - H_DOMAIN_GUARD:
            upper[j] = UNBOUNDED
        else:
            upper[j] = spec.l[j] * sig_hi[j] / math.sqrt(1.0 - sig_hi[j] ** 2)
    return lower, upper
