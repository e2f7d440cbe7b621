"""Hypocoercivity apparatus: twisted-norm constants, weight matrices,
dissipation-matrix negativity checks, and Monte Carlo evaluation of the
modified functional along the semigroup.

The weight couples position and velocity gradients through a time-ramped
matrix G_t, which is what buys exponential decay despite noise acting on
the velocity alone.
"""
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .errors import SolverInputError, UnderdeclaredBoundError
from .model import Ensemble, jacobian_blocks_many
from .sde import IntegratorConfig, tangent_flow


@dataclass
class HypoConstants:
    K_b: float
    delta1: float   # minimum eigenvalue of sigma sigma^T in this construction
    C_PI: float
    M: float = field(init=False)
    eps: float = field(init=False)

    def __post_init__(self):
        if self.K_b < 0:
            raise SolverInputError("K_b must be nonnegative")
        if self.delta1 <= 0 or self.C_PI <= 0:
            raise SolverInputError("delta1 and C_PI must be positive")
        q = 2 * self.K_b + 1
        self.M = 2 * q**2 + q
        self.eps = self.delta1 / (self.M + 0.5)

    @property
    def velocity_margin(self):
        """eps*M - delta1, equal to -delta1/(2M+1), always negative."""
        return self.eps * self.M - self.delta1


@dataclass
class HypoWeight:
    t: float
    alpha: float
    G: np.ndarray


@dataclass
class HypoFunctional:
    t: float
    value: float
    l2_sq: float        # ||f_t||^2 component
    grad_term: float    # mu(<G grad f_t, grad f_t>) component
    se_l2: float
    se_grad: float

    @property
    def se(self):
        return float(np.hypot(self.se_l2, self.se_grad))


@dataclass
class RtReport:
    holds: bool
    worst_margin: float
    worst_t: float
    t_grid: np.ndarray


def build_constants(K_b, delta1, C_PI=1.0):
    return HypoConstants(K_b=K_b, delta1=delta1, C_PI=C_PI)


def alpha_of(t):
    return 1.0 - np.exp(-t / 3.0)


def alpha_sq_integral(t):
    """Closed form of the ramp integral int_0^t alpha(s)^2 ds."""
    return t - 6.0 * (1.0 - np.exp(-t / 3.0)) + 1.5 * (1.0 - np.exp(-2.0 * t / 3.0))


def decay_factor(consts, t):
    """Upper bound exp{-eps/(2 C_PI + 4 eps) * int_0^t alpha^2} on N_t / N_0."""
    rate = consts.eps / (2 * consts.C_PI + 4 * consts.eps)
    return float(np.exp(-rate * alpha_sq_integral(t)))


def build_weight(consts, t, d=1):
    """Weight matrix G_t = eps [[a^3 I, -a^2 I], [-a^2 I, a I]], a = alpha(t)."""
    if t < 0:
        raise SolverInputError("t must be nonnegative")
    a = float(alpha_of(t))
    I = np.eye(d)
    G = consts.eps * np.block([[a**3 * I, -(a**2) * I], [-(a**2) * I, a * I]])
    return HypoWeight(t=t, alpha=a, G=G)


def _weight_derivative(consts, t, d):
    a = float(alpha_of(t))
    ap = np.exp(-t / 3.0) / 3.0
    I = np.eye(d)
    return consts.eps * np.block(
        [[3 * a**2 * ap * I, -2 * a * ap * I], [-2 * a * ap * I, ap * I]]
    )


def _probe_jacobian_bound(spec, K_b, seed, n_probe=256):
    gen = _rng.substream(seed, 31)
    Z = 5.0 * gen.standard_normal((n_probe, 2 * spec.d))
    mu = Ensemble(gen.standard_normal((32, 2 * spec.d))) if spec.interaction is not None else None
    Jx, Jy = jacobian_blocks_many(spec, Z, mu)
    worst = max(
        max(np.linalg.norm(Jx[i], 2) for i in range(n_probe)),
        max(np.linalg.norm(Jy[i], 2) for i in range(n_probe)),
    )
    if worst > K_b * (1 + 1e-9):
        raise UnderdeclaredBoundError(
            f"K_b underdeclared: probed Jacobian norm {worst:.6g} exceeds declared {K_b}"
        )


def check_rt_negativity(spec, consts, diff, t_grid, z_trials=1000, seed=0):
    """Verify the dissipation-matrix bound at sampled states and directions.

    Assembles R_t = -diag(0, sigma sigma^T) + dG_t/dt + 2 G_t J(z) with
    J(z) = [[0, grad_x b], [I, grad_y b]] and checks the quadratic form
    against -(eps a^2 / 2)|x|^2 + (eps M - delta1)|y|^2 for unit
    directions z = (x, y).
    """
    _probe_jacobian_bound(spec, consts.K_b, seed)
    d = spec.d
    ssT = diff.sigma @ diff.sigma.T
    top = np.zeros((2 * d, 2 * d))
    top[d:, d:] = ssT
    worst_margin = -np.inf
    worst_t = None
    gen = _rng.substream(seed, 32)
    mu = Ensemble(gen.standard_normal((32, 2 * d))) if spec.interaction is not None else None
    for t in t_grid:
        G = build_weight(consts, t, d).G
        dG = _weight_derivative(consts, t, d)
        a = float(alpha_of(t))
        states = 3.0 * gen.standard_normal((z_trials, 2 * d))
        Jx, Jy = jacobian_blocks_many(spec, states, mu)
        J = np.zeros((z_trials, 2 * d, 2 * d))
        J[:, :d, d:] = Jx
        J[:, d:, :d] = np.eye(d)
        J[:, d:, d:] = Jy
        R = -top + dG + 2.0 * np.einsum("ij,njk->nik", G, J)
        dirs = gen.standard_normal((z_trials, 2 * d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        qform = np.einsum("ni,nij,nj->n", dirs, R, dirs)
        bound = (
            -(consts.eps * a**2 / 2) * np.sum(dirs[:, :d] ** 2, axis=1)
            + consts.velocity_margin * np.sum(dirs[:, d:] ** 2, axis=1)
        )
        margin = float(np.max(qform - bound))
        if margin > worst_margin:
            worst_margin = margin
            worst_t = float(t)
    return RtReport(
        holds=worst_margin <= 1e-9,
        worst_margin=worst_margin,
        worst_t=worst_t,
        t_grid=np.asarray(t_grid, dtype=float),
    )


# ---------------------------------------------------------------------------
# test-function catalogue

class LinearTest:
    """f(z) = <v, z>."""

    def __init__(self, v):
        self.v = np.asarray(v, dtype=float)

    def value(self, Z):
        return Z @ self.v

    def grad(self, Z):
        return np.broadcast_to(self.v, Z.shape).copy()


class QuadraticTest:
    """f(z) = <z, S z> / 2 for symmetric S."""

    def __init__(self, S):
        S = np.asarray(S, dtype=float)
        self.S = 0.5 * (S + S.T)

    def value(self, Z):
        return 0.5 * np.einsum("ni,ij,nj->n", Z, self.S, Z)

    def grad(self, Z):
        return Z @ self.S


class TanhTest:
    """Bounded smooth f(z) = tanh(<v, z>), standing in for C_0^infty."""

    def __init__(self, v):
        self.v = np.asarray(v, dtype=float)

    def value(self, Z):
        return np.tanh(Z @ self.v)

    def grad(self, Z):
        sech2 = 1.0 - np.tanh(Z @ self.v) ** 2
        return sech2[:, None] * self.v


@dataclass
class McConfig:
    inner: int = 256
    outer: int = 1024
    dt: float = 1e-2
    seed: int = 0
    scheme: str = "kinetic-splitting"


def eval_functional(spec, diff, stationary, f, t, consts, mc_cfg=None, frozen_mu=None):
    """Monte Carlo estimate of N_t = ||f_t||^2 + mu(<G_t grad f_t, grad f_t>).

    f_t(z) = E[f(Z_t^z)] - mu(f) and grad f_t(z) = E[D_t^T grad f(Z_t^z)]
    via tangent flows; outer average over the stationary ensemble, inner
    replicas sharing the start point but not the noise.
    """
    if mc_cfg is None:
        mc_cfg = McConfig()
    d = spec.d
    outer = stationary.subsample(mc_cfg.outer).points
    n_out = outer.shape[0]
    mu_f = float(np.mean(f.value(stationary.points)))
    G = build_weight(consts, t, d).G
    if t == 0:
        ft = f.value(outer) - mu_f
        comp1 = float(np.mean(ft**2))
        se1 = float(np.std(ft**2, ddof=1) / np.sqrt(n_out))
        return HypoFunctional(t=0.0, value=comp1, l2_sq=comp1, grad_term=0.0,
                              se_l2=se1, se_grad=0.0)
    z0 = np.repeat(outer, mc_cfg.inner, axis=0)
    cfg = IntegratorConfig(scheme=mc_cfg.scheme, dt=mc_cfg.dt, T=t,
                           seed=mc_cfg.seed, snapshot_times=[t])
    path, flow = tangent_flow(spec, diff, z0, cfg, frozen_mu=frozen_mu)
    ZT = path.states[-1]
    D = flow.final
    fv = f.value(ZT).reshape(n_out, mc_cfg.inner)
    gv = np.einsum("nji,nj->ni", D, f.grad(ZT)).reshape(n_out, mc_cfg.inner, 2 * d)
    ft = fv.mean(axis=1) - mu_f
    gft = gv.mean(axis=1)
    sq = ft**2
    comp1 = float(np.mean(sq))
    se1 = float(np.std(sq, ddof=1) / np.sqrt(n_out))
    quad = np.einsum("ni,ij,nj->n", gft, G, gft)
    comp2 = float(np.mean(quad))
    se2 = float(np.std(quad, ddof=1) / np.sqrt(n_out))
    return HypoFunctional(t=float(t), value=comp1 + comp2, l2_sq=comp1,
                          grad_term=comp2, se_l2=se1, se_grad=se2)
