"""Error transformation mapping funnel-constrained errors onto the real line.

Per channel j the tracking error e_j is squashed to eta_j = e_j /
sqrt(e_j^2 + l_j^2), normalized by the scaling value to zeta_j =
eta_j / phi_j, and mapped through

    s_j = zeta_j / ((dlo_j + zeta_j) * (dhi_j - zeta_j))

which diverges as zeta_j approaches the funnel boundary. Keeping s bounded
is therefore equivalent to keeping the error inside the funnel. The time
derivative factors as sdot_j = w_j * (edot_j + v_j), and the controller
consumes the diagonal matrix W = diag(w) and vector V = (v_j).
"""

from dataclasses import dataclass

import numpy as np

from .errors import FunnelViolation
from .perf import PerformanceSpec  # noqa: F401  (re-exported surface)

# Distance from the funnel boundary (in zeta) treated as contact; keeps the
# pole of s out of floating-point range.
BOUNDARY_GUARD = 1e-9


def factors(e, phi, dphi, dlo, dhi, l, t=None):
    """Transformation factors, broadcasting over leading axes of `e`.

    e, phi, dphi have shape (..., n); dlo, dhi, l are (n,). Returns a dict
    of arrays eta, zeta, s, mu, r, w, v. Raises FunnelViolation when any
    zeta is within BOUNDARY_GUARD of its boundary or beyond.
    """
    q = e * e + l * l
    root_q = np.sqrt(q)
    eta = e / root_q
    zeta = eta / phi
    bad = (zeta >= dhi - BOUNDARY_GUARD) | (zeta <= -dlo + BOUNDARY_GUARD)
    if bad.any():
        flat = bad.reshape(-1, bad.shape[-1]).any(axis=0)
        raise FunnelViolation(t if t is not None else np.nan,
                              np.nonzero(flat)[0], zeta)
    den = (dlo + zeta) * (dhi - zeta)
    s = zeta / den
    mu = (dlo * dhi + zeta * zeta) / (den * den)
    r = (l * l) / (q * root_q)
    w = mu * r / phi
    v = -dphi * eta / (phi * r)
    return {"eta": eta, "zeta": zeta, "s": s, "mu": mu, "r": r, "w": w, "v": v}


@dataclass
class TransformState:
    """Transformation factors for one error vector at one instant."""

    t: float
    e: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    s: np.ndarray
    mu: np.ndarray
    r: np.ndarray
    w: np.ndarray
    v: np.ndarray


def transform(e, t, spec):
    """Evaluate the error transformation at time t under `spec`."""
    e = np.asarray(e, dtype=float)
    f = factors(e, spec.phi(t, 0), spec.phi(t, 1),
                spec.delta_lo, spec.delta_hi, spec.l, t=t)
    return TransformState(t=float(t), e=e, **f)


def build_W_V(ts):
    """Compact form (W, V) with W = diag(w) > 0 and V = (v_j)."""
    return np.diag(ts.w), ts.v.copy()


@dataclass
class InitialCheck:
    ok: bool
    zeta0: np.ndarray
    bad_channels: list
    message: str


def validate_initial(e0, spec):
    """Accept e(0) iff every zeta_j(0) lies strictly inside its funnel."""
    e0 = np.asarray(e0, dtype=float)
    phi0 = spec.phi(0.0, 0)
    eta0 = e0 / np.sqrt(e0 * e0 + spec.l * spec.l)
    zeta0 = eta0 / phi0
    bad = (zeta0 >= spec.delta_hi - BOUNDARY_GUARD) | (
        zeta0 <= -spec.delta_lo + BOUNDARY_GUARD)
    bad_channels = list(np.nonzero(bad)[0])
    if bad_channels:
        parts = [
            f"channel {j + 1}: zeta(0)={zeta0[j]:.6g} outside "
            f"({-spec.delta_lo[j]:.4g}, {spec.delta_hi[j]:.4g})"
            for j in bad_channels
        ]
        return InitialCheck(False, zeta0, bad_channels,
                            "initial error outside funnel: " + "; ".join(parts))
    return InitialCheck(True, zeta0, [], "initial error inside funnel")


def bounded_s_zeta_interval(s_bound, dlo, dhi):
    """Zeta interval implied by |s| <= s_bound, strictly inside (-dlo, dhi).

    Inverts the strictly increasing map zeta -> s at -s_bound and +s_bound.
    """

    def invert(val):
        if val == 0.0:
            return 0.0
        b = 1.0 - val * (dhi - dlo)
        return (-b + np.sqrt(b * b + 4.0 * val * val * dlo * dhi)) / (2.0 * val)

    return invert(-abs(s_bound)), invert(abs(s_bound))
