"""Closed-form Gaussian oracle for linear kinetic drifts.

For b(x, y) = -A x - gamma y with constant noise on the velocities, the
full phase-space generator is linear with drift matrix

    B = [[0, I], [-A, -gamma I]]

and diffusion Q = diag(0, sigma sigma*).  Everything downstream (invariant
law, transition laws, W2, KL, Poincare constant) is then exact, which makes
this module the reference oracle for the sampling-based estimators.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .errors import SolverInputError

LYAPUNOV_RESIDUAL_TOL = 1e-10


@dataclass
class LinearModel:
    """Phase-space drift matrix B (Hurwitz) and diffusion matrix Q."""

    B: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        if B.shape != Q.shape or B.shape[0] != B.shape[1]:
            raise SolverInputError(f"B and Q must be square and equal-shaped, got {B.shape}, {Q.shape}")
        if np.max(np.real(np.linalg.eigvals(B))) >= 0:
            raise SolverInputError("drift matrix is not Hurwitz")
        self.B = B
        self.Q = Q

    @classmethod
    def from_kinetic(cls, A, gamma, sigma_sigma_t):
        """Assemble B, Q from the kinetic pieces (-A x - gamma y, noise on y)."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        S = np.atleast_2d(np.asarray(sigma_sigma_t, dtype=float))
        d = A.shape[0]
        B = np.block([[np.zeros((d, d)), np.eye(d)], [-A, -gamma * np.eye(d)]])
        Q = np.block([[np.zeros((d, d)), np.zeros((d, d))], [np.zeros((d, d)), S]])
        return cls(B=B, Q=Q)

    @property
    def dim(self):
        return self.B.shape[0]

    @property
    def spectral_rate(self):
        """Asymptotic exponential decay rate: -max Re eig(B)."""
        return float(-np.max(np.real(np.linalg.eigvals(self.B))))


@dataclass
class GaussianLaw:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.mean, dtype=float))
        C = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if C.shape != (m.shape[0], m.shape[0]):
            raise SolverInputError(f"cov must be {m.shape[0]}x{m.shape[0]}, got {C.shape}")
        if np.max(np.abs(C - C.T)) > 1e-12 * max(1.0, np.max(np.abs(C))):
            raise SolverInputError("covariance is not symmetric")
        C = 0.5 * (C + C.T)
        w, V = np.linalg.eigh(C)
        if w.min() < -1e-12 * max(1.0, w.max()):
            raise SolverInputError(f"covariance has negative eigenvalue {w.min():.3g}")
        # clamp numerical noise so downstream square roots stay real
        C = (V * np.clip(w, 0.0, None)) @ V.T
        self.mean = m
        self.cov = 0.5 * (C + C.T)

    @property
    def dim(self):
        return self.mean.shape[0]

    def sample(self, n, gen):
        return gen.multivariate_normal(self.mean, self.cov, size=n, method="eigh")


def _psd_sqrt(C):
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def invariant_law(model):
    """Invariant Gaussian law N(0, Sigma) with B Sigma + Sigma B^T + Q = 0."""
    Sigma = solve_continuous_lyapunov(model.B, -model.Q)
    Sigma = 0.5 * (Sigma + Sigma.T)
    resid = np.linalg.norm(model.B @ Sigma + Sigma @ model.B.T + model.Q)
    if resid >= LYAPUNOV_RESIDUAL_TOL:
        raise SolverInputError(f"Lyapunov residual {resid:.3g} above tolerance")
    return GaussianLaw(mean=np.zeros(model.dim), cov=Sigma)


def transition_law(model, mu0, t):
    """Law of the linear SDE at time t from Gaussian start mu0.

    The covariance integral int_0^t e^{sB} Q e^{sB^T} ds is computed by the
    Van Loan block-exponential construction, exact to machine precision.
    """
    if t < 0:
        raise SolverInputError("time must be nonnegative")
    if t == 0:
        return GaussianLaw(mean=mu0.mean.copy(), cov=mu0.cov.copy())
    m = model.dim
    blk = np.zeros((2 * m, 2 * m))
    blk[:m, :m] = model.B
    blk[:m, m:] = model.Q
    blk[m:, m:] = -model.B.T
    E = expm(blk * t)
    E11 = E[:m, :m]           # e^{tB}
    E12 = E[:m, m:]
    cov_noise = E12 @ E11.T
    mean = E11 @ mu0.mean
    cov = E11 @ mu0.cov @ E11.T + cov_noise
    return GaussianLaw(mean=mean, cov=0.5 * (cov + cov.T))


def w2_gaussian(p, q):
    """Exact Wasserstein-2 distance between Gaussian laws."""
    if p.dim != q.dim:
        raise SolverInputError("dimension mismatch")
    rq = _psd_sqrt(q.cov)
    cross = _psd_sqrt(rq @ p.cov @ rq)
    val = np.sum((p.mean - q.mean) ** 2) + np.trace(p.cov + q.cov - 2 * cross)
    return float(np.sqrt(max(val, 0.0)))


def kl_gaussian(p, q):
    """KL(p || q) between Gaussian laws; raises on singular reference."""
    if p.dim != q.dim:
        raise SolverInputError("dimension mismatch")
    sign, logdet_q = np.linalg.slogdet(q.cov)
    if sign <= 0:
        raise SolverInputError("reference covariance is singular (relative entropy infinite)")
    sign_p, logdet_p = np.linalg.slogdet(p.cov)
    if sign_p <= 0:
        raise SolverInputError("first covariance is singular")
    Qi = np.linalg.inv(q.cov)
    dm = q.mean - p.mean
    k = p.dim
    val = 0.5 * (np.trace(Qi @ p.cov) + dm @ Qi @ dm - k + logdet_q - logdet_p)
    return float(max(val, 0.0))


def poincare_constant(law):
    """Exact Gaussian Poincare constant: largest covariance eigenvalue."""
    return float(np.linalg.eigvalsh(law.cov).max())


def fit_gaussian(points):
    """Moment-matched Gaussian law of a sample array (n, k)."""
    pts = np.asarray(points, dtype=float)
    mean = pts.mean(axis=0)
    cov = np.cov(pts.T, bias=False)
    cov = np.atleast_2d(cov)
    return GaussianLaw(mean=mean, cov=0.5 * (cov + cov.T))
