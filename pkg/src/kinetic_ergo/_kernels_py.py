"""NumPy reference implementation of the stepping kernels.

Mirrors the compiled module in `_kernels.pyx`; one of the two is selected
at import time by `backend.py`.  Both operate in place on (n, d) position
and velocity blocks and receive the already-scaled noise increment
sqrt(dt) * xi @ sigma^T for the step.
"""
import numpy as np

COMPILED = False

PERT_ZERO, PERT_SINE, PERT_BUMP, PERT_TANH = 0, 1, 2, 3
MEASURE_NONE, MEASURE_FROZEN, MEASURE_EMPIRICAL = 0, 1, 2
SCHEME_EULER, SCHEME_SPLITTING = 0, 1


def _pert(kind, pa, pb, X):
    if kind == PERT_ZERO:
        return 0.0
    if kind == PERT_SINE:
        return pa * np.sin(pb * X)
    if kind == PERT_BUMP:
        return pa * X * np.exp(-(X**2) / (2 * pb**2))
    if kind == PERT_TANH:
        return pa * np.tanh(pb * X)
    raise ValueError(f"unknown perturbation kind {kind}")


def _drift(X, Y, A, gamma, pert_kind, pa, pb, kappa, measure_mode, frozen_mean_x):
    out = -X @ A.T - gamma * Y
    out += _pert(pert_kind, pa, pb, X)
    if measure_mode == MEASURE_FROZEN:
        out += kappa * (frozen_mean_x - X)
    elif measure_mode == MEASURE_EMPIRICAL:
        out += kappa * (X.mean(axis=0) - X)
    return out


def step_ensemble(X, Y, A, gamma, pert_kind, pa, pb, kappa, measure_mode,
                  frozen_mean_x, noise_inc, dt, scheme):
    """Advance all rows by one step of the selected scheme, in place."""
    if scheme == SCHEME_EULER:
        b = _drift(X, Y, A, gamma, pert_kind, pa, pb, kappa, measure_mode, frozen_mean_x)
        X += Y * dt
        Y += b * dt + noise_inc
    elif scheme == SCHEME_SPLITTING:
        b = _drift(X, Y, A, gamma, pert_kind, pa, pb, kappa, measure_mode, frozen_mean_x)
        Y += b * (dt / 2)
        X += Y * dt
        Y += noise_inc
        b = _drift(X, Y, A, gamma, pert_kind, pa, pb, kappa, measure_mode, frozen_mean_x)
        Y += b * (dt / 2)
    else:
        raise ValueError(f"unknown scheme {scheme}")
