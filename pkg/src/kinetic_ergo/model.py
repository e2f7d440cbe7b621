"""Drift and diffusion specifications for kinetic phase-space dynamics.

The state is z = (x, y) with position x and velocity y in R^d.  Drifts are
kept in decomposed form

    b(z, mu) = -A x - gamma y + F(z) + (1/n) sum_i F2(z, z_i),

because the dissipativity and hypocoercivity checks need the pieces (and
their Jacobians) separately, not an opaque callable.  Perturbations F and
interaction kernels F2 come from small registered catalogues so that specs
round-trip through JSON configs.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatchError,
    MeasureArgumentError,
    UnderdeclaredBoundError,
)


# ---------------------------------------------------------------------------
# state containers

@dataclass(frozen=True)
class PhasePoint:
    """A single point z = (x, y) of phase space."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
            raise DimensionMismatchError(
                f"position and velocity must be 1-d with equal length, got {x.shape} and {y.shape}"
            )
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def d(self):
        return self.x.shape[0]

    def as_array(self):
        return np.concatenate([self.x, self.y])


class Ensemble:
    """Uniformly weighted empirical measure on R^{2d}.

    Stored as an (n, 2d) array; the first d columns are positions.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] % 2 != 0:
            raise DimensionMismatchError(
                f"ensemble needs an (n, 2d) array with n >= 1, got shape {pts.shape}"
            )
        self.points = pts

    @classmethod
    def from_phase_points(cls, phase_points):
        return cls(np.stack([p.as_array() for p in phase_points]))

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1] // 2

    @property
    def x(self):
        return self.points[:, : self.d]

    @property
    def y(self):
        return self.points[:, self.d :]

    @property
    def weights(self):
        return np.full(self.n, 1.0 / self.n)

    def subsample(self, max_n):
        """Deterministic stride subsample (repeatable across runs)."""
        if self.n <= max_n:
            return self
        idx = np.linspace(0, self.n - 1, max_n).round().astype(int)
        return Ensemble(self.points[idx])

    def __repr__(self):
        return f"Ensemble(n={self.n}, d={self.d})"


# ---------------------------------------------------------------------------
# perturbation catalogue

class Perturbation:
    """Elementwise-in-position perturbation F(z) = f(x) with f' available.

    Subclasses define scalar maps applied componentwise to x; velocities do
    not enter, so the y-Jacobian vanishes.
    """

    name = None

    def __init__(self, **params):
        self.params = dict(params)

    def f(self, x):
        raise NotImplementedError

    def fprime(self, x):
        raise NotImplementedError

    @property
    def grad_bound(self):
        """Declared bound on |f'| (the kappa of the drift family)."""
        raise NotImplementedError

    def value(self, X, Y):
        return self.f(X)

    def jac_x_diag(self, X, Y):
        return self.fprime(X)

    def to_config(self):
        return {"name": self.name, "params": dict(self.params)}


class ZeroPerturbation(Perturbation):
    name = "zero"

    def f(self, x):
        return np.zeros_like(x)

    def fprime(self, x):
        return np.zeros_like(x)

    grad_bound = 0.0


class SinePerturbation(Perturbation):
    """a * sin(w x), componentwise."""

    name = "sine"

    def __init__(self, amplitude=0.5, frequency=1.0):
        super().__init__(amplitude=amplitude, frequency=frequency)
        self.a = float(amplitude)
        self.w = float(frequency)

    def f(self, x):
        return self.a * np.sin(self.w * x)

    def fprime(self, x):
        return self.a * self.w * np.cos(self.w * x)

    @property
    def grad_bound(self):
        return abs(self.a * self.w)


class BumpPerturbation(Perturbation):
    """a * x * exp(-x^2 / (2 s^2)): smooth, vanishing at infinity."""

    name = "bump"

    def __init__(self, amplitude=0.5, scale=1.0):
        super().__init__(amplitude=amplitude, scale=scale)
        self.a = float(amplitude)
        self.s = float(scale)

    def f(self, x):
        return self.a * x * np.exp(-(x**2) / (2 * self.s**2))

    def fprime(self, x):
        u = x**2 / self.s**2
        return self.a * (1.0 - u) * np.exp(-u / 2)

    @property
    def grad_bound(self):
        return abs(self.a)


class TanhPerturbation(Perturbation):
    """a * tanh(b x): saturating force."""

    name = "tanh"

    def __init__(self, amplitude=0.5, slope=1.0):
        super().__init__(amplitude=amplitude, slope=slope)
        self.a = float(amplitude)
        self.b = float(slope)

    def f(self, x):
        return self.a * np.tanh(self.b * x)

    def fprime(self, x):
        return self.a * self.b / np.cosh(self.b * x) ** 2

    @property
    def grad_bound(self):
        return abs(self.a * self.b)


PERTURBATIONS = {
    cls.name: cls
    for cls in (ZeroPerturbation, SinePerturbation, BumpPerturbation, TanhPerturbation)
}


def make_perturbation(name, **params):
    try:
        return PERTURBATIONS[name](**params)
    except KeyError:
        raise KeyError(f"unknown perturbation {name!r}; catalogue: {sorted(PERTURBATIONS)}")


# ---------------------------------------------------------------------------
# interaction kernels

class InteractionKernel:
    """Pairwise kernel F2(z, zbar) averaged over an empirical measure."""

    name = None

    def __init__(self, **params):
        self.params = dict(params)

    @property
    def lipschitz_measure(self):
        """Bound K_I on the Lipschitz constant in the measure argument (W2)."""
        raise NotImplementedError

    @property
    def lipschitz_state(self):
        """Bound on the Lipschitz constant of z -> mean F2(z, .)."""
        raise NotImplementedError

    def mean_value(self, X, Y, mu_points):
        """(1/m) sum_j F2((X, Y), z_j) for each row of (X, Y)."""
        raise NotImplementedError

    def jac1_x(self, x, y, mu_points):
        raise NotImplementedError

    def jac1_y(self, x, y, mu_points):
        raise NotImplementedError

    def to_config(self):
        return {"name": self.name, "params": dict(self.params)}


class LinearAttraction(InteractionKernel):
    """F2(z, zbar) = kappa (xbar - x): attraction to the measure's mean position."""

    name = "linear_attraction"

    def __init__(self, kappa=0.1):
        super().__init__(kappa=kappa)
        self.kappa = float(kappa)

    @property
    def lipschitz_measure(self):
        return abs(self.kappa)

    @property
    def lipschitz_state(self):
        return abs(self.kappa)

    def mean_value(self, X, Y, mu_points):
        d = X.shape[-1]
        mean_x = np.mean(np.asarray(mu_points)[:, :d], axis=0)
        return self.kappa * (mean_x - X)

    def jac1_x(self, x, y, mu_points):
        return -self.kappa * np.eye(x.shape[-1])

    def jac1_y(self, x, y, mu_points):
        return np.zeros((y.shape[-1], y.shape[-1]))


INTERACTIONS = {cls.name: cls for cls in (LinearAttraction,)}


def make_interaction(name, **params):
    try:
        return INTERACTIONS[name](**params)
    except KeyError:
        raise KeyError(f"unknown interaction {name!r}; catalogue: {sorted(INTERACTIONS)}")


# ---------------------------------------------------------------------------
# drift / diffusion specs

_PROBE_PAIRS = 200


@dataclass
class DriftSpec:
    """b(z, mu) = -A x - gamma y + F(z) + mean_mu F2(z, .)."""

    d: int
    linear_position: np.ndarray
    friction: float
    perturbation: Perturbation = field(default_factory=ZeroPerturbation)
    interaction: InteractionKernel = None
    K_b: float = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.linear_position, dtype=float))
        if A.shape != (self.d, self.d):
            raise DimensionMismatchError(
                f"linear part must be {self.d}x{self.d}, got {A.shape}"
            )
        if self.friction <= 0:
            raise ValueError("friction must be positive")
        self.linear_position = A
        if self.K_b is None:
            self.K_b = self._default_lipschitz()
        self._probe_lipschitz()

    # -- declared constants -------------------------------------------------

    @property
    def kappa_F(self):
        return self.perturbation.grad_bound

    @property
    def K_I(self):
        return self.interaction.lipschitz_measure if self.interaction else 0.0

    def _default_lipschitz(self):
        lin = np.linalg.norm(
            np.hstack([self.linear_position, self.friction * np.eye(self.d)]), 2
        )
        extra = self.interaction.lipschitz_state if self.interaction else 0.0
        return float(lin + self.kappa_F + extra)

    def _probe_lipschitz(self, seed=20260823):
        gen = np.random.default_rng(seed)
        Z = gen.standard_normal((_PROBE_PAIRS, 2 * self.d)) * 3.0
        Zb = Z + gen.standard_normal((_PROBE_PAIRS, 2 * self.d)) * 0.5
        mu = Ensemble(gen.standard_normal((8, 2 * self.d))) if self.interaction else None
        num = np.linalg.norm(
            self.eval_many(Z, mu) - self.eval_many(Zb, mu), axis=1
        )
        den = np.linalg.norm(Z - Zb, axis=1)
        ratio = np.max(num / np.maximum(den, 1e-300))
        if ratio > self.K_b * (1 + 1e-9):
            raise UnderdeclaredBoundError(
                f"declared K_b={self.K_b:.6g} but probe found ratio {ratio:.6g}"
            )

    # -- evaluation ---------------------------------------------------------

    def eval_many(self, Z, mu=None):
        """Drift at each row of Z (n, 2d); vectorized."""
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if Z.shape[1] != 2 * self.d:
            raise DimensionMismatchError(
                f"state rows must have length {2 * self.d}, got {Z.shape[1]}"
            )
        X, Y = Z[:, : self.d], Z[:, self.d :]
        out = -X @ self.linear_position.T - self.friction * Y
        out += self.perturbation.value(X, Y)
        if self.interaction is not None:
            if mu is None:
                raise MeasureArgumentError("drift has an interaction kernel; a measure is required")
            pts = mu.points if isinstance(mu, Ensemble) else np.asarray(mu, float)
            if pts.shape[1] != 2 * self.d:
                raise DimensionMismatchError("measure dimension does not match the drift")
            out += self.interaction.mean_value(X, Y, pts)
        return out

    # -- serialization ------------------------------------------------------

    def to_config(self):
        cfg = {
            "d": self.d,
            "linear_position": self.linear_position.tolist(),
            "friction": self.friction,
            "perturbation": self.perturbation.to_config(),
            "K_b": self.K_b,
        }
        if self.interaction is not None:
            cfg["interaction"] = self.interaction.to_config()
        return cfg

    @classmethod
    def from_config(cls, cfg):
        pert_cfg = cfg.get("perturbation", {"name": "zero", "params": {}})
        pert = make_perturbation(pert_cfg["name"], **pert_cfg.get("params", {}))
        inter = None
        if cfg.get("interaction"):
            icfg = cfg["interaction"]
            inter = make_interaction(icfg["name"], **icfg.get("params", {}))
        return cls(
            d=int(cfg["d"]),
            linear_position=np.asarray(cfg["linear_position"], float),
            friction=float(cfg["friction"]),
            perturbation=pert,
            interaction=inter,
            K_b=cfg.get("K_b"),
        )

    def to_json(self):
        return json.dumps(self.to_config(), indent=2)

    @classmethod
    def from_json(cls, text):
        return cls.from_config(json.loads(text))


@dataclass
class DiffusionSpec:
    """Constant d x n noise matrix acting on velocities, with ellipticity bounds."""

    sigma: np.ndarray
    delta1: float = None
    delta2: float = None

    def __post_init__(self):
        sig = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        self.sigma = sig
        eigs = np.linalg.eigvalsh(sig @ sig.T)
        lo, hi = float(eigs.min()), float(eigs.max())
        if self.delta1 is None:
            self.delta1 = hi
        if self.delta2 is None:
            self.delta2 = lo
        if not (0 < self.delta2 <= self.delta1):
            raise ValueError(f"need 0 < delta2 <= delta1, got ({self.delta2}, {self.delta1})")
        if lo < self.delta2 * (1 - 1e-9) or hi > self.delta1 * (1 + 1e-9):
            raise ValueError(
                f"sigma sigma* spectrum [{lo:.6g}, {hi:.6g}] violates declared "
                f"bounds [{self.delta2}, {self.delta1}]"
            )

    @property
    def d(self):
        return self.sigma.shape[0]

    @property
    def sigma_sigma_t(self):
        return self.sigma @ self.sigma.T

    def to_config(self):
        return {"sigma": self.sigma.tolist(), "delta1": self.delta1, "delta2": self.delta2}

    @classmethod
    def from_config(cls, cfg):
        return cls(
            sigma=np.asarray(cfg["sigma"], float),
            delta1=cfg.get("delta1"),
            delta2=cfg.get("delta2"),
        )


# ---------------------------------------------------------------------------
# operations

def _as_state(z, d):
    if isinstance(z, PhasePoint):
        if z.d != d:
            raise DimensionMismatchError(f"point has d={z.d}, drift has d={d}")
        return z.as_array()
    z = np.asarray(z, dtype=float).ravel()
    if z.shape[0] != 2 * d:
        raise DimensionMismatchError(f"state must have length {2 * d}, got {z.shape[0]}")
    return z


def eval_drift(spec, z, mu=None):
    """Velocity drift b(z, mu) as a vector in R^d."""
    state = _as_state(z, spec.d)
    return spec.eval_many(state[None, :], mu)[0]


def eval_jacobian(spec, z, mu=None):
    """Analytic (grad_x b, grad_y b) at z, each d x d.

    The interaction Jacobian is taken in the first argument, with the
    measure held fixed.
    """
    state = _as_state(z, spec.d)
    x, y = state[: spec.d], state[spec.d :]
    Jx = -spec.linear_position + np.diagflat(spec.perturbation.jac_x_diag(x, y))
    Jy = -spec.friction * np.eye(spec.d)
    if spec.interaction is not None:
        if mu is None:
            raise MeasureArgumentError("drift has an interaction kernel; a measure is required")
        pts = mu.points if isinstance(mu, Ensemble) else np.asarray(mu, float)
        Jx = Jx + spec.interaction.jac1_x(x, y, pts)
        Jy = Jy + spec.interaction.jac1_y(x, y, pts)
    return Jx, Jy


def jacobian_blocks_many(spec, Z, mu=None):
    """Batched (grad_x b, grad_y b) at each row of Z: two (n, d, d) arrays."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    n, d = Z.shape[0], spec.d
    X, Y = Z[:, :d], Z[:, d:]
    Jx = np.broadcast_to(-spec.linear_position, (n, d, d)).copy()
    diag = spec.perturbation.jac_x_diag(X, Y)
    idx = np.arange(d)
    Jx[:, idx, idx] += diag
    Jy = np.broadcast_to(-spec.friction * np.eye(d), (n, d, d)).copy()
    if spec.interaction is not None:
        if mu is None:
            raise MeasureArgumentError("drift has an interaction kernel; a measure is required")
        pts = mu.points if isinstance(mu, Ensemble) else np.asarray(mu, float)
        # catalogue kernels have state-independent first-argument Jacobians
        Jx = Jx + spec.interaction.jac1_x(X[0], Y[0], pts)
        Jy = Jy + spec.interaction.jac1_y(X[0], Y[0], pts)
    return Jx, Jy


@dataclass
class SystemDriftSpec:
    """Drift of the N-particle system on (R^{2d})^N.

    Each particle feels the instantaneous empirical measure of all N
    particles (including itself).
    """

    base: DriftSpec
    N: int

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")

    @property
    def lipschitz_bound(self):
        return float(np.sqrt(2 * self.base.K_b**2 + 2 * self.base.K_I**2))

    def split(self, stacked):
        stacked = np.asarray(stacked, dtype=float).ravel()
        if stacked.shape[0] != self.N * 2 * self.base.d:
            raise DimensionMismatchError(
                f"stacked state must have length {self.N * 2 * self.base.d}"
            )
        return stacked.reshape(self.N, 2 * self.base.d)

    def eval(self, stacked):
        """Per-particle velocity drifts, returned as an (N, d) array."""
        Z = self.split(stacked)
        mu = Ensemble(Z) if self.base.interaction is not None else None
        return self.base.eval_many(Z, mu)


def lift_to_system(spec, N):
    return SystemDriftSpec(base=spec, N=N)
