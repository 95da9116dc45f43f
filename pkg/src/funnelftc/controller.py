"""Adaptive backstepping controller stack.

Step 1 feeds back the transformed error through W:

    a_1 = -(kappa_1 + th1*Phi_1) * W @ eps_1,   eps_1 = s

Steps i = 2..N-1 use eps_i = x_i - a_{i-1}:

    a_i = -(kappa_i + thi*Phi_i) * eps_i

and the final step maps through the allocation matrix:

    u = -(A^T / ||A||) * (kappa_N + thN*Phi_N) * eps_N

Each adaptive gain follows  thdot_i = sigma_i*||fb_i||^2*Phi_i - mu_i*th_i
with fb_1 = W@eps_1 and fb_i = eps_i otherwise. The scalar aggregates Phi_i
collect core-function bounds together with the partial derivatives of the
previous virtual controller, which are obtained by central finite
differences of the whole sub-stack (relative-scaled step). For N = 1 the
first and final steps coincide: the W-weighted feedback keeps its form and
Phi_1 picks up the bias-fault floor term of the final step.

All internal evaluations broadcast over a leading batch axis so that the
finite-difference probes of one step run as a single vectorized call.
"""

from dataclasses import dataclass, field

import numpy as np

from . import matcore, transform
from .errors import ValidationError
from .perf import N_MAX


@dataclass(frozen=True)
class ControllerConfig:
    """Backstepping gains, the allocation matrix, and the probe step."""

    kappa: np.ndarray
    sigma: np.ndarray
    mu: np.ndarray
    allocation: np.ndarray
    fd_step: float = 1e-6

    def __post_init__(self):
        for name in ("kappa", "sigma", "mu"):
            object.__setattr__(self, name,
                               np.atleast_1d(np.asarray(getattr(self, name), float)))
        object.__setattr__(self, "allocation",
                           matcore.as_matrix(self.allocation))

    @property
    def depth(self):
        return self.kappa.shape[0]

    def validate(self, n, m):
        N = self.depth
        if N < 1 or N > N_MAX:
            raise ValidationError(f"backstepping depth {N} outside 1..{N_MAX}")
        for name in ("kappa", "sigma", "mu"):
            arr = getattr(self, name)
            if arr.shape != (N,):
                raise ValidationError(f"{name} must have one entry per step")
            if np.any(arr <= 0):
                raise ValidationError(f"{name} entries must be positive")
        A = self.allocation
        if A.shape != (n, m):
            raise ValidationError(f"allocation must be {n}x{m}, got {A.shape}")
        if m < n:
            raise ValidationError("allocation needs at least as many inputs as outputs")
        if not np.allclose(A[:, :n], np.eye(n), atol=1e-12):
            raise ValidationError("allocation must start with the identity block")
        extra = A[:, n:]
        if extra.size:
            if np.any(extra < -1e-15):
                raise ValidationError("allocation extra columns must be nonnegative")
            if np.any(np.all(extra <= 0, axis=0)):
                raise ValidationError("allocation extra columns must be nonzero")
        if matcore.min_singular(A) <= 1e-12:
            raise ValidationError("allocation must have full row rank")
        if not (self.fd_step > 0):
            raise ValidationError("fd_step must be positive")


@dataclass(frozen=True)
class Context:
    """Immutable per-scenario bundle consumed by the evaluation core."""

    n: int
    m: int
    N: int
    dlo: np.ndarray
    dhi: np.ndarray
    l: np.ndarray
    kappa: np.ndarray
    sigma: np.ndarray
    mu: np.ndarray
    At_over_norm: np.ndarray
    fd_step: float
    phi_f: callable = field(repr=False)
    phi_1: callable = field(repr=False)
    phi_2: callable = field(repr=False)


def make_context(plant, cfg, spec):
    cfg.validate(plant.n, plant.m)
    if cfg.depth != plant.N:
        raise ValidationError(
            f"controller depth {cfg.depth} does not match plant depth {plant.N}")
    if spec.n != plant.n:
        raise ValidationError("performance spec channel count mismatch")
    A = cfg.allocation
    return Context(
        n=plant.n, m=plant.m, N=plant.N,
        dlo=spec.delta_lo, dhi=spec.delta_hi, l=spec.l,
        kappa=cfg.kappa, sigma=cfg.sigma, mu=cfg.mu,
        At_over_norm=A.T / matcore.spectral_norm(A),
        fd_step=cfg.fd_step,
        phi_f=plant.core_phi_f, phi_1=plant.core_phi_1, phi_2=plant.core_phi_2,
    )


def _stack(level, x, yds, phis, ths, ctx, t):
    """Evaluate levels 1..level of the stack, batched over the first axis.

    x: (B, level, n), yds/phis: (B, level+1, n), ths: (B, level).
    Returns {i: {eps, fb, Phi, a, thd, ...}} keyed by step index.
    """
    if level == 1:
        tf = transform.factors(x[:, 0, :] - yds[:, 0, :], phis[:, 0, :],
                               phis[:, 1, :], ctx.dlo, ctx.dhi, ctx.l, t=t)
        s, w, v = tf["s"], tf["w"], tf["v"]
        fb = w * s
        lam = w.min(axis=-1)
        x1 = x[:, :1, :]
        cf = ctx.phi_f(1, x1)
        c1 = ctx.phi_1(1, x1)
        c2 = ctx.phi_2(1, x1)
        ydn = np.sqrt(np.sum(yds[:, 1, :] ** 2, axis=-1))
        vn = np.sqrt(np.sum(v * v, axis=-1))
        c1sq = c1 * c1
        Phi = c1sq * cf * cf + c1sq * (ydn + vn) ** 2 + 0.5 * c2 / (lam * lam)
        if ctx.N == 1:
            Phi = Phi + c1sq
        gain = ctx.kappa[0] + ths[:, 0] * Phi
        a = -gain[:, None] * fb
        thd = ctx.sigma[0] * np.sum(fb * fb, axis=-1) * Phi - ctx.mu[0] * ths[:, 0]
        return {1: {"eps": s, "fb": fb, "Phi": Phi, "a": a, "thd": thd,
                    "factors": tf, "lam": lam}}

    prev = level - 1
    res = _stack(prev, x[:, :prev, :], yds[:, :level, :], phis[:, :level, :],
                 ths[:, :prev], ctx, t)
    jac = _a_partials(prev, x[:, :prev, :], yds[:, :level, :],
                      phis[:, :level, :], ths[:, :prev], ctx, t)
    thd_prev = np.stack([res[k]["thd"] for k in range(1, level)], axis=1)
    omega = (np.einsum("bnkj,bkj->bn", jac["yd"], yds[:, 1:level + 1, :])
             + np.einsum("bnkj,bkj->bn", jac["phi"], phis[:, 1:level + 1, :])
             + np.einsum("bnk,bk->bn", jac["th"], thd_prev))
    eps = x[:, prev, :] - res[prev]["a"]
    jn2 = np.sum(jac["x"][:, :, prev - 1, :] ** 2, axis=(1, 2))
    on2 = np.sum(omega * omega, axis=-1)
    fb_prev2 = np.sum(res[prev]["fb"] ** 2, axis=-1)
    cf = ctx.phi_f(level, x[:, :level, :])
    cfp = ctx.phi_f(prev, x[:, :prev, :])
    c1 = ctx.phi_1(level, x[:, :prev, :])
    c1p = ctx.phi_1(prev, x[:, :max(prev - 1, 1), :])
    c2 = ctx.phi_2(level, x[:, :level, :])
    c1sq = c1 * c1
    Phi = (c1sq * (cf * cf + (cfp * cfp + 1.0) * jn2 + on2)
           + c1p * c1p * fb_prev2 + 0.5 * c2)
    if level == ctx.N:
        Phi = Phi + c1sq
    gain = ctx.kappa[level - 1] + ths[:, level - 1] * Phi
    a = -gain[:, None] * eps
    thd = (ctx.sigma[level - 1] * np.sum(eps * eps, axis=-1) * Phi
           - ctx.mu[level - 1] * ths[:, level - 1])
    res[level] = {"eps": eps, "fb": eps, "Phi": Phi, "a": a, "thd": thd,
                  "omega": omega, "jac": jac}
    return res


def _a_partials(level, x, yds, phis, ths, ctx, t):
    """Central-difference partials of a_level w.r.t. every scalar input.

    Probe steps are relative-scaled: h_d = fd_step * (1 + |z_d|). All
    2*D probes evaluate in one batched sub-stack call.
    """
    B = x.shape[0]
    n = ctx.n
    flat = np.concatenate([x.reshape(B, -1), yds.reshape(B, -1),
                           phis.reshape(B, -1), ths], axis=1)
    D = flat.shape[1]
    h = ctx.fd_step * (1.0 + np.abs(flat))
    pert = np.repeat(flat[:, None, :], 2 * D, axis=1)
    idx = np.arange(D)
    pert[:, 2 * idx, idx] += h
    pert[:, 2 * idx + 1, idx] -= h
    pz = pert.reshape(B * 2 * D, D)
    o0 = level * n
    o1 = o0 + (level + 1) * n
    o2 = o1 + (level + 1) * n
    sub = _stack(level,
                 pz[:, :o0].reshape(-1, level, n),
                 pz[:, o0:o1].reshape(-1, level + 1, n),
                 pz[:, o1:o2].reshape(-1, level + 1, n),
                 pz[:, o2:], ctx, t)
    ap = sub[level]["a"].reshape(B, D, 2, n)
    jac = (ap[:, :, 0, :] - ap[:, :, 1, :]) / (2.0 * h[:, :, None])
    jac = np.moveaxis(jac, 1, 2)  # (B, n, D)
    return {
        "x": jac[:, :, :o0].reshape(B, n, level, n),
        "yd": jac[:, :, o0:o1].reshape(B, n, level + 1, n),
        "phi": jac[:, :, o1:o2].reshape(B, n, level + 1, n),
        "th": jac[:, :, o2:],
    }


@dataclass
class ControllerEval:
    """Cached quantities from one controller evaluation."""

    t: float
    e: np.ndarray
    s: np.ndarray
    w: np.ndarray
    v: np.ndarray
    eps: list
    Phi: np.ndarray
    a: list
    omega: list
    th_dot: np.ndarray
    u: np.ndarray
    u_a: np.ndarray = None


def evaluate(t, x, theta_hat, plant, cfg, spec, ref, ctx=None):
    """Run the full stack at one state; returns the control and the cache.

    x is the stacked state (N, n); theta_hat the adaptive estimates (N,).
    """
    if ctx is None:
        ctx = make_context(plant, cfg, spec)
    N = ctx.N
    x = np.asarray(x, float).reshape(N, ctx.n)
    theta = np.asarray(theta_hat, float).reshape(N)
    yds = ref.stack(t, N)
    phis = np.stack([spec.phi(t, k) for k in range(N + 1)])
    res = _stack(N, x[None], yds[None], phis[None], theta[None], ctx, t)
    u = ctx.At_over_norm @ res[N]["a"][0]
    tf = res[1]["factors"]
    return ControllerEval(
        t=float(t),
        e=(x[0] - yds[0]),
        s=tf["s"][0], w=tf["w"][0], v=tf["v"][0],
        eps=[res[i]["eps"][0] for i in range(1, N + 1)],
        Phi=np.array([res[i]["Phi"][0] for i in range(1, N + 1)]),
        a=[res[i]["a"][0] for i in range(1, N + 1)],
        omega=[None] + [res[i]["omega"][0] for i in range(2, N + 1)],
        th_dot=np.array([res[i]["thd"][0] for i in range(1, N + 1)]),
        u=u,
    )


def closed_loop_derivative(t, z, plant, cfg, spec, ref, fault, ctx=None):
    """Time derivative of the augmented state [x_1..x_N; theta_hat].

    Composes controller evaluation, the actuator fault map, and the plant
    dynamics. Returns (dz, ControllerEval); fully deterministic.
    """
    if ctx is None:
        ctx = make_context(plant, cfg, spec)
    N, n = ctx.N, ctx.n
    x = z[: N * n].reshape(N, n)
    theta = z[N * n:]
    ev = evaluate(t, x, theta, plant, cfg, spec, ref, ctx=ctx)
    u_a = fault.rho(t) * ev.u + fault.upsilon(t)
    dx = plant.derivatives(x, t, u_a)
    ev.u_a = u_a
    return np.concatenate([dx.reshape(-1), ev.th_dot]), ev


# ---------------------------------------------------------------------------
# Spec-level operation surface; thin wrappers over the evaluation core.

def epsilon_coords(x, a_prev, ts):
    """[eps_1, ..., eps_N] with eps_1 = s and eps_i = x_i - a_{i-1}."""
    x = np.asarray(x, float)
    eps = [np.asarray(ts.s, float)]
    for i in range(1, x.shape[0]):
        eps.append(x[i] - a_prev[i - 1])
    return eps


def phi1(ts, yd_dot, phi_f1=1.0, phi_11=1.0, phi_12=1.0, bias_floor=False):
    """Step-1 aggregate from a transform state and reference velocity."""
    lam = float(np.min(ts.w))
    vn = float(np.linalg.norm(ts.v))
    ydn = float(np.linalg.norm(yd_dot))
    val = (phi_11 ** 2 * phi_f1 ** 2 + phi_11 ** 2 * (ydn + vn) ** 2
           + 0.5 * phi_12 / lam ** 2)
    if bias_floor:
        val += phi_11 ** 2
    return val


def phi_step(phi_f_i, phi_f_prev, phi_1_i, phi_1_prev, phi_2_i,
             jac_norm, omega_norm, fb_prev_norm, bias_floor=False):
    """Step-i aggregate (i >= 2); bias_floor adds the final-step term."""
    c1sq = phi_1_i ** 2
    val = (c1sq * (phi_f_i ** 2 + (phi_f_prev ** 2 + 1.0) * jac_norm ** 2
                   + omega_norm ** 2)
           + phi_1_prev ** 2 * fb_prev_norm ** 2 + 0.5 * phi_2_i)
    if bias_floor:
        val += c1sq
    return val


def virtual_a1(ts, theta1, Phi1, kappa1):
    """a_1 = -(kappa_1 + th1*Phi_1) * W @ eps_1."""
    return -(kappa1 + theta1 * Phi1) * (ts.w * ts.s)


def adapt_rate(eps_or_weps, Phi_i, theta_i, sigma_i, mu_i):
    """sigma*||.||^2*Phi - mu*theta (pass W@eps_1 for step 1)."""
    v = np.asarray(eps_or_weps, float)
    return sigma_i * float(v @ v) * Phi_i - mu_i * theta_i


def control_u(eps_N, theta_N, Phi_N, kappa_N, A):
    """u = -(A^T/||A||) * (kappa_N + thN*Phi_N) * eps_N."""
    A = matcore.as_matrix(A)
    return -(A.T / matcore.spectral_norm(A)) @ (
        (kappa_N + theta_N * Phi_N) * np.asarray(eps_N, float))


@dataclass
class VirtualJacobians:
    """Partials of a_level w.r.t. its primitive inputs (central differences)."""

    d_x: list      # per block k = 1..level, each (n, n)
    d_yd: list     # per order k = 0..level, each (n, n)
    d_phi: list    # per order k = 0..level, each (n, n)
    d_th: list     # per step k = 1..level, each (n,)


def jacobians_of_virtual(level, t, x, theta_hat, plant, cfg, spec, ref, ctx=None):
    """All partials of a_level needed by Phi_{level+1} and omega_level."""
    if ctx is None:
        ctx = make_context(plant, cfg, spec)
    x = np.asarray(x, float).reshape(-1, ctx.n)[:level]
    theta = np.asarray(theta_hat, float).reshape(-1)[:level]
    yds = ref.stack(t, level)
    phis = np.stack([spec.phi(t, k) for k in range(level + 1)])
    jac = _a_partials(level, x[None], yds[None], phis[None], theta[None], ctx, t)
    return VirtualJacobians(
        d_x=[jac["x"][0, :, k, :] for k in range(level)],
        d_yd=[jac["yd"][0, :, k, :] for k in range(level + 1)],
        d_phi=[jac["phi"][0, :, k, :] for k in range(level + 1)],
        d_th=[jac["th"][0, :, k] for k in range(level)],
    )
