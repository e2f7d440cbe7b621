"""Trajectory and ensemble integrators for kinetic SDEs.

Only the velocity receives noise, so the default scheme is a kinetic
splitting (half-kick / free flight / additive noise / half-kick) that
respects the degenerate structure; Euler-Maruyama is kept as a cross
check.  All noise comes from counter-based streams keyed by
(seed, step), which makes synchronous couplings exact by construction and
runs reproducible regardless of parallelism.
"""
import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .backend import kernels
from .errors import DivergenceError, MeasureArgumentError
from .model import DriftSpec, Ensemble, PhasePoint, jacobian_blocks_many

STATE_NORM_CAP = 1e8

_PERT_KINDS = {"zero": kernels.PERT_ZERO, "sine": kernels.PERT_SINE,
               "bump": kernels.PERT_BUMP, "tanh": kernels.PERT_TANH}
_SCHEMES = {"euler-maruyama": kernels.SCHEME_EULER, "kinetic-splitting": kernels.SCHEME_SPLITTING}


@dataclass
class IntegratorConfig:
    scheme: str = "kinetic-splitting"
    dt: float = 1e-3
    T: float = 1.0
    seed: int = 0
    snapshot_times: list = None
    allow_large_dt: bool = False

    def __post_init__(self):
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {sorted(_SCHEMES)}")
        if not (0 < self.dt <= self.T):
            raise ValueError("need 0 < dt <= T")

    @property
    def n_steps(self):
        return int(round(self.T / self.dt))

    def check_dt(self, K_b):
        cap = 0.1 / max(1.0, K_b)
        if self.dt > cap * (1 + 1e-12):
            if self.allow_large_dt:
                warnings.warn(
                    f"dt={self.dt} above stability guideline {cap:.3g} for K_b={K_b}",
                    RuntimeWarning,
                )
            else:
                raise ValueError(
                    f"dt={self.dt} exceeds 0.1/max(1, K_b)={cap:.3g}; "
                    "set allow_large_dt=True to override"
                )


@dataclass
class EnsemblePath:
    """Snapshots (t, states) of an ensemble along a run."""

    times: np.ndarray
    states: list  # list of (n, 2d) arrays

    @property
    def final(self):
        return Ensemble(self.states[-1])

    def ensembles(self):
        return [Ensemble(s) for s in self.states]

    def dump_csv(self, fileobj):
        d = self.states[0].shape[1] // 2
        writer = csv.writer(fileobj)
        writer.writerow(
            ["traj_id", "t"]
            + [f"x_{j + 1}" for j in range(d)]
            + [f"y_{j + 1}" for j in range(d)]
        )
        for t, state in zip(self.times, self.states):
            for i, row in enumerate(state):
                writer.writerow([i, repr(float(t))] + [repr(v) for v in row])


@dataclass
class CoupledPath:
    """Two synchronously coupled runs sharing Brownian increments bit-exactly."""

    times: np.ndarray           # snapshot times
    z_states: list
    zb_states: list
    gap_times: np.ndarray       # every step
    gap: np.ndarray             # (n_steps + 1, n) squared gaps

    @property
    def mean_gap(self):
        return self.gap.mean(axis=1)


@dataclass
class TangentFlow:
    """Variational flow D_t = dZ_t / dz_0 along the realized path."""

    times: np.ndarray
    matrices: list  # list of (n, 2d, 2d) arrays

    @property
    def final(self):
        return self.matrices[-1]


# ---------------------------------------------------------------------------
# stepping plans

class _Stepper:
    """One-step advance for an (n, 2d) state block."""

    def __init__(self, spec, diff, cfg, measure_mode, frozen_mu=None):
        self.spec = spec
        self.diff = diff
        self.scheme = _SCHEMES[cfg.scheme]
        self.dt = cfg.dt
        self.measure_mode = measure_mode
        self.frozen_mu = frozen_mu
        d = spec.d
        self._sigma_T = diff.sigma.T * np.sqrt(cfg.dt)
        self.n_noise = diff.sigma.shape[1]
        pert_name = spec.perturbation.name
        inter = spec.interaction
        self.fast = (
            pert_name in _PERT_KINDS
            and (inter is None or inter.name == "linear_attraction")
        )
        if self.fast:
            self._A = np.ascontiguousarray(spec.linear_position)
            self._pert_kind = _PERT_KINDS[pert_name]
            p = spec.perturbation.params
            if pert_name == "sine":
                self._pa, self._pb = p["amplitude"], p["frequency"]
            elif pert_name == "bump":
                self._pa, self._pb = p["amplitude"], p["scale"]
            elif pert_name == "tanh":
                self._pa, self._pb = p["amplitude"], p["slope"]
            else:
                self._pa = self._pb = 0.0
            self._kappa = inter.kappa if inter is not None else 0.0
            if measure_mode == kernels.MEASURE_FROZEN:
                self._frozen_mean_x = np.ascontiguousarray(frozen_mu.x.mean(axis=0))
            else:
                self._frozen_mean_x = np.zeros(d)
        elif measure_mode == kernels.MEASURE_FROZEN:
            self._frozen_pts = frozen_mu

    def noise(self, seed, step, n):
        xi = _rng.step_normals(seed, step, (n, self.n_noise))
        return xi @ self._sigma_T

    def advance(self, X, Y, noise_inc):
        if self.fast:
            kernels.step_ensemble(
                X, Y, self._A, self.spec.friction, self._pert_kind,
                float(self._pa), float(self._pb), float(self._kappa),
                self.measure_mode, self._frozen_mean_x, noise_inc,
                self.dt, self.scheme,
            )
            return
        # generic path for drifts outside the compiled catalogue
        dt = self.dt

        def drift(X, Y):
            Z = np.hstack([X, Y])
            if self.measure_mode == kernels.MEASURE_EMPIRICAL:
                mu = Ensemble(Z)
            elif self.measure_mode == kernels.MEASURE_FROZEN:
                mu = self._frozen_pts
            else:
                mu = None
            return self.spec.eval_many(Z, mu)

        if self.scheme == kernels.SCHEME_EULER:
            b = drift(X, Y)
            X += Y * dt
            Y += b * dt + noise_inc
        else:
            Y += drift(X, Y) * (dt / 2)
            X += Y * dt
            Y += noise_inc
            Y += drift(X, Y) * (dt / 2)


def _initial_block(z0, d):
    if isinstance(z0, Ensemble):
        pts = z0.points
    elif isinstance(z0, PhasePoint):
        pts = z0.as_array()[None, :]
    else:
        pts = np.atleast_2d(np.asarray(z0, dtype=float))
    if pts.shape[1] != 2 * d:
        raise MeasureArgumentError(f"initial state must have 2d = {2 * d} columns")
    return np.ascontiguousarray(pts)


def _snapshot_steps(cfg):
    times = cfg.snapshot_times if cfg.snapshot_times is not None else [cfg.T]
    steps = sorted({min(int(round(t / cfg.dt)), cfg.n_steps) for t in times})
    return steps


def _check_state(X, Y, step, dt):
    m = max(np.max(np.abs(X)), np.max(np.abs(Y)))
    if not np.isfinite(m) or m > STATE_NORM_CAP:
        raise DivergenceError(step, step * dt)


def _measure_mode(spec, frozen_mu, particles):
    if particles:
        return kernels.MEASURE_EMPIRICAL if spec.interaction is not None else kernels.MEASURE_NONE
    if spec.interaction is not None:
        if frozen_mu is None:
            raise MeasureArgumentError(
                "drift has an interaction kernel; supply frozen_mu for the decoupled equation"
            )
        return kernels.MEASURE_FROZEN
    if frozen_mu is not None:
        raise MeasureArgumentError("frozen_mu given but the drift is measure-independent")
    return kernels.MEASURE_NONE


def simulate(spec, diff, z0, cfg, frozen_mu=None, particles=False):
    """Integrate the ensemble; returns snapshots at the requested times.

    With `particles=True` every row is one particle of the mean-field
    system and interactions use the instantaneous empirical measure of the
    block; otherwise rows are independent trajectories (frozen measure if
    the drift needs one).
    """
    cfg.check_dt(spec.K_b)
    Z = _initial_block(z0, spec.d)
    d = spec.d
    X = np.ascontiguousarray(Z[:, :d].copy())
    Y = np.ascontiguousarray(Z[:, d:].copy())
    mode = _measure_mode(spec, frozen_mu, particles)
    stepper = _Stepper(spec, diff, cfg, mode, frozen_mu)
    snap_steps = _snapshot_steps(cfg)
    times, states = [], []
    if 0 in snap_steps:
        times.append(0.0)
        states.append(np.hstack([X, Y]).copy())
    n = X.shape[0]
    for k in range(cfg.n_steps):
        stepper.advance(X, Y, stepper.noise(cfg.seed, k, n))
        _check_state(X, Y, k, cfg.dt)
        if (k + 1) in snap_steps:
            times.append((k + 1) * cfg.dt)
            states.append(np.hstack([X, Y]).copy())
    return EnsemblePath(times=np.asarray(times), states=states)


def simulate_coupled(spec, diff, z0, zb0, cfg, frozen_mu_pair=None):
    """Two copies driven by identical Brownian increments.

    The copies may carry different frozen measures (frozen_mu_pair is a
    (mu, nu) tuple) to probe the measure-discrepancy Gronwall bound.
    """
    cfg.check_dt(spec.K_b)
    mu = nu = None
    if frozen_mu_pair is not None:
        mu, nu = frozen_mu_pair
    d = spec.d
    Z = _initial_block(z0, d)
    Zb = _initial_block(zb0, d)
    if Z.shape != Zb.shape:
        raise MeasureArgumentError("coupled copies need equally many rows")
    X, Y = np.ascontiguousarray(Z[:, :d].copy()), np.ascontiguousarray(Z[:, d:].copy())
    Xb, Yb = np.ascontiguousarray(Zb[:, :d].copy()), np.ascontiguousarray(Zb[:, d:].copy())
    mode = _measure_mode(spec, mu, False)
    mode_b = _measure_mode(spec, nu, False)
    s1 = _Stepper(spec, diff, cfg, mode, mu)
    s2 = _Stepper(spec, diff, cfg, mode_b, nu)
    n = X.shape[0]
    n_steps = cfg.n_steps
    gap = np.empty((n_steps + 1, n))
    gap[0] = np.sum((X - Xb) ** 2 + (Y - Yb) ** 2, axis=1)
    snap_steps = _snapshot_steps(cfg)
    times, zs, zbs = [], [], []
    if 0 in snap_steps:
        times.append(0.0)
        zs.append(np.hstack([X, Y]).copy())
        zbs.append(np.hstack([Xb, Yb]).copy())
    for k in range(n_steps):
        inc = s1.noise(cfg.seed, k, n)
        s1.advance(X, Y, inc)
        s2.advance(Xb, Yb, inc)
        _check_state(X, Y, k, cfg.dt)
        _check_state(Xb, Yb, k, cfg.dt)
        gap[k + 1] = np.sum((X - Xb) ** 2 + (Y - Yb) ** 2, axis=1)
        if (k + 1) in snap_steps:
            times.append((k + 1) * cfg.dt)
            zs.append(np.hstack([X, Y]).copy())
            zbs.append(np.hstack([Xb, Yb]).copy())
    return CoupledPath(
        times=np.asarray(times),
        z_states=zs,
        zb_states=zbs,
        gap_times=np.arange(n_steps + 1) * cfg.dt,
        gap=gap,
    )


def _assemble_full_jacobian(spec, Z, mu):
    n, d = Z.shape[0], spec.d
    Jx, Jy = jacobian_blocks_many(spec, Z, mu)
    J = np.zeros((n, 2 * d, 2 * d))
    J[:, :d, d:] = np.eye(d)
    J[:, d:, :d] = Jx
    J[:, d:, d:] = Jy
    return J


def tangent_flow(spec, diff, z0, cfg, frozen_mu=None):
    """Base path plus the variational matrices D_t (Heun update along the path).

    For additive noise the variational equation dD = J(Z_t) D dt is
    deterministic given the realized path.
    """
    cfg.check_dt(spec.K_b)
    d = spec.d
    Z = _initial_block(z0, d)
    X, Y = np.ascontiguousarray(Z[:, :d].copy()), np.ascontiguousarray(Z[:, d:].copy())
    mode = _measure_mode(spec, frozen_mu, False)
    stepper = _Stepper(spec, diff, cfg, mode, frozen_mu)
    n = X.shape[0]
    D = np.broadcast_to(np.eye(2 * d), (n, 2 * d, 2 * d)).copy()
    snap_steps = _snapshot_steps(cfg)
    times, states, mats = [], [], []
    if 0 in snap_steps:
        times.append(0.0)
        states.append(np.hstack([X, Y]).copy())
        mats.append(D.copy())
    dt = cfg.dt
    Jk = _assemble_full_jacobian(spec, np.hstack([X, Y]), frozen_mu)
    for k in range(cfg.n_steps):
        stepper.advance(X, Y, stepper.noise(cfg.seed, k, n))
        _check_state(X, Y, k, dt)
        Jk1 = _assemble_full_jacobian(spec, np.hstack([X, Y]), frozen_mu)
        JD = Jk @ D
        D = D + (dt / 2) * (JD + Jk1 @ (D + dt * JD))
        Jk = Jk1
        if (k + 1) in snap_steps:
            times.append((k + 1) * dt)
            states.append(np.hstack([X, Y]).copy())
            mats.append(D.copy())
    path = EnsemblePath(times=np.asarray(times), states=states)
    return path, TangentFlow(times=np.asarray(times), matrices=mats)
